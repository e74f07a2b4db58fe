"""Groupwise nonparametric bootstrap calibration.

Scores are recentred within each group (so the resampling distribution
satisfies the null), resampled with replacement group by group, and the
standardized statistic W* is recomputed for every resample. The bootstrap
p-value is the fraction of resamples with W* >= W.

Every replicate b draws from its own Philox substream keyed by the seed with
the counter offset by b, so the multiset of W* values does not depend on the
order or grouping in which replicates are evaluated.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidConfig, ResampleDegenerate, TooFewObservations
from .flrt import GroupedScores, flrt_core, moments, standardize, t_flrt

# counter word used to separate independent families of streams
STREAM_BOOTSTRAP = 0
STREAM_SIMULATION = 1
STREAM_SPLIT = 2

MAX_DRAWS_PER_REPLICATE = 100
# resamples evaluated together; bounds memory at roughly CHUNK * n * p floats
_CHUNK = 256


def replicate_rng(seed: int, index: int, stream: int = STREAM_BOOTSTRAP) -> np.random.Generator:
    """Independent generator for replicate ``index`` of ``stream``."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidConfig("seed must be an unsigned 64-bit integer")
    key = seed | (int(stream) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, int(index), 0]))


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 1000
    seed: int = 0
    alpha: float = 0.05
    plus_one: bool = False

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise InvalidConfig(f"B must be a positive integer, got {self.B!r}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidConfig(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be an unsigned 64-bit integer")


@dataclass
class BootstrapResult:
    p_boot: float
    w_observed: float
    w_star: np.ndarray
    reject: bool
    seed: int
    B: int
    alpha: float
    redraws: int = 0

    def to_dict(self, include_w_star: bool = True) -> dict:
        d = asdict(self)
        d["w_star"] = [float(x) for x in self.w_star] if include_w_star else None
        return d


def resample_group(centered, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_j`` rows uniformly with replacement from ``centered``."""
    y = np.atleast_2d(np.asarray(centered, dtype=float))
    n = y.shape[0]
    if n < 2:
        raise TooFewObservations("resampling needs at least 2 rows")
    return y[rng.integers(0, n, size=n)]


def _draw_indices(rng, sizes):
    return [rng.integers(0, n, size=n) for n in sizes]


def _statistics(centered, idx_lists, sizes, jitter):
    """T* for a batch of index draws; idx_lists[j] has shape (batch, n_j)."""
    means, covs = [], []
    for y, idx in zip(centered, idx_lists):
        mu, cov = moments(y[idx])
        means.append(mu)
        covs.append(cov)
    T, ok, _, _ = flrt_core(np.stack(means, axis=1), np.stack(covs, axis=1), sizes, jitter)
    return T, ok


def bootstrap_statistics(scores: GroupedScores, B: int, seed: int, jitter: float = 0.0):
    """Bootstrap draws of T* under the recentred null.

    Returns
    -------
    T_star : ndarray, shape (B,)
    redraws : int
        Number of resamples discarded because a group covariance was singular.

    Raises
    ------
    ResampleDegenerate
        When more than ``MAX_DRAWS_PER_REPLICATE * B`` draws are needed.
    """
    if not isinstance(scores, GroupedScores):
        scores = GroupedScores(scores)
    sizes = scores.sizes
    if np.any(sizes < 2):
        raise TooFewObservations("every group needs at least 2 observations")
    centered = [m - m.mean(axis=0) for m in scores.matrices]
    T_star = np.empty(B)
    redraws = 0
    cap = MAX_DRAWS_PER_REPLICATE * B
    for start in range(0, B, _CHUNK):
        stop = min(start + _CHUNK, B)
        rngs = [replicate_rng(seed, b) for b in range(start, stop)]
        draws = [_draw_indices(r, sizes) for r in rngs]
        idx = [np.stack([d[j] for d in draws]) for j in range(scores.k)]
        T, ok = _statistics(centered, idx, sizes, jitter)
        # redraw degenerate resamples from the same substream
        for i in np.flatnonzero(~ok):
            while True:
                redraws += 1
                if B + redraws > cap:
                    raise ResampleDegenerate(
                        f"more than {cap} resamples needed to obtain {B} with "
                        "invertible group covariances; reduce p"
                    )
                d = _draw_indices(rngs[i], sizes)
                Ti, oki = _statistics(centered, [x[None] for x in d], sizes, jitter)
                if oki[0]:
                    T[i] = Ti[0]
                    break
        T_star[start:stop] = T
    return T_star, redraws


def bootstrap_test(scores: GroupedScores, config: BootstrapConfig, jitter: float = 0.0) -> BootstrapResult:
    """Bootstrap-calibrated test.

    Parameters
    ----------
    scores : GroupedScores
        Observed (uncentred) scores.
    config : BootstrapConfig
    jitter : float, default=0.0
        Ridge passed through to the statistic.

    Returns
    -------
    BootstrapResult
        ``p_boot = #{W* >= W} / B``, or ``(1 + #{W* >= W}) / (B + 1)`` when
        ``config.plus_one`` is set; reject iff ``p_boot < alpha``.
    """
    if not isinstance(config, BootstrapConfig):
        raise InvalidConfig("config must be a BootstrapConfig")
    if not isinstance(scores, GroupedScores):
        scores = GroupedScores(scores)
    observed = t_flrt(scores, jitter=jitter)
    T_star, redraws = bootstrap_statistics(scores, config.B, config.seed, jitter)
    w_star = standardize(T_star, scores.p, scores.k)
    w = observed.w
    exceed = int(np.count_nonzero(w_star >= w))
    if config.plus_one:
        p_boot = (exceed + 1) / (config.B + 1)
    else:
        p_boot = exceed / config.B
    return BootstrapResult(
        p_boot=p_boot,
        w_observed=w,
        w_star=w_star,
        reject=bool(p_boot < config.alpha),
        seed=int(config.seed),
        B=int(config.B),
        alpha=float(config.alpha),
        redraws=redraws,
    )
