"""Covariance-adapted k-sample statistic on basis scores.

For groups j = 1..k with score means ybar_j and covariance estimates S_j
(divisor n_j), the statistic is

    T = sum_j n_j (ybar_j - mu)' S_j^{-1} (ybar_j - mu),
    mu = (sum_j n_j S_j^{-1})^{-1} sum_j n_j S_j^{-1} ybar_j,

which is asymptotically chi-square with p(k-1) degrees of freedom for fixed
p, and whose standardization W = (T - p(k-1)) / sqrt(2 p (k-1)) is
asymptotically standard normal when p grows with n.

All inverses go through a symmetric eigendecomposition. A covariance whose
smallest eigenvalue is not positive, or whose condition number exceeds
``COND_LIMIT``, raises :class:`SingularCovariance`; there is no silent
regularization, only the explicit ``jitter`` argument.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import (
    DimensionMismatch,
    InvalidDataset,
    NotTwoGroups,
    SingularCovariance,
    TooFewObservations,
)

COND_LIMIT = 1e12
# p at or below which the chi-square calibration is the default p-value
CHISQ_MAX_P = 10


class SmallSampleWarning(UserWarning):
    pass


@dataclass
class GroupedScores:
    """Per-group score matrices, each ``(n_j, p)``."""

    matrices: list

    def __post_init__(self):
        mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in self.matrices]
        if len(mats) < 2:
            raise InvalidDataset("need at least 2 groups")
        p = mats[0].shape[1]
        for j, m in enumerate(mats):
            if m.ndim != 2 or m.shape[1] != p:
                raise DimensionMismatch(f"group {j} scores have shape {m.shape}, expected (n, {p})")
            if m.shape[0] < 1:
                raise InvalidDataset(f"group {j} is empty")
        self.matrices = mats

    @property
    def k(self) -> int:
        return len(self.matrices)

    @property
    def p(self) -> int:
        return self.matrices[0].shape[1]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([m.shape[0] for m in self.matrices])

    def columns(self, idx) -> "GroupedScores":
        """Keep only the score columns ``idx`` (0-based)."""
        idx = np.atleast_1d(idx)
        return GroupedScores([m[:, idx] for m in self.matrices])


@dataclass(frozen=True)
class GroupCovariance:
    sigma_hat: np.ndarray
    mean: np.ndarray
    n: int


@dataclass
class TestResult:
    """Outcome of the covariance-adapted test.

    ``p_normal`` uses the standard-normal limit of ``w``; ``p_chisq`` the
    chi-square limit of ``t_flrt`` with ``df`` degrees of freedom.
    """

    t_flrt: float
    df: int
    w: float
    p_normal: float
    p_chisq: float
    p: int
    k: int
    sizes: list
    condition_numbers: list
    min_eigenvalues: list

    __test__ = False  # not a pytest class

    @property
    def p_value(self) -> float:
        return self.p_chisq if self.p <= CHISQ_MAX_P else self.p_normal

    @property
    def p_value_method(self) -> str:
        return "chisq" if self.p <= CHISQ_MAX_P else "normal"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_value"] = self.p_value
        d["p_value_method"] = self.p_value_method
        return d


@dataclass
class HotellingResult:
    t2: float
    f_stat: float
    df1: int
    df2: int
    p_value: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ProjectionPair:
    """P = S B S' and Q = I - P for the stacked whitening matrix S."""

    P: np.ndarray
    Q: np.ndarray
    B: np.ndarray
    stacked: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# eigen-based linear algebra, vectorized over leading axes


def sym_eig(S, jitter=0.0):
    """Eigenvalues, eigenvectors and condition numbers of symmetric ``S``."""
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    if jitter:
        S = S + jitter * np.eye(S.shape[-1])
    lam, V = np.linalg.eigh(S)
    lo, hi = lam[..., 0], lam[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)
    return lam, V, cond


def _invertible(lam, cond):
    return (lam[..., 0] > 0) & (cond <= COND_LIMIT)


def _inv_from_eig(lam, V, power=-1.0):
    scaled = V * (np.maximum(lam, np.finfo(float).tiny) ** power)[..., None, :]
    return scaled @ np.swapaxes(V, -1, -2)


def sym_inv_sqrt(S, jitter=0.0):
    """Symmetric inverse square root; raises on singular input."""
    lam, V, cond = sym_eig(S, jitter)
    if not np.all(_invertible(lam, cond)):
        raise SingularCovariance(condition=float(np.max(cond)))
    return _inv_from_eig(lam, V, -0.5)


def moments(x, axis=-2):
    """Mean and divisor-n covariance along ``axis`` of ``(..., n, p)`` data."""
    mean = x.mean(axis=axis)
    xc = x - np.expand_dims(mean, axis)
    cov = np.einsum("...ni,...nj->...ij", xc, xc) / x.shape[axis]
    return mean, cov


def flrt_core(means, covs, sizes, jitter=0.0):
    """T for stacked group moments.

    Parameters
    ----------
    means : ndarray, shape (..., k, p)
    covs : ndarray, shape (..., k, p, p)
    sizes : array_like, shape (k,)

    Returns
    -------
    T : ndarray, shape (...)
        NaN where some group covariance fails the invertibility check.
    ok : ndarray of bool, shape (...)
    cond : ndarray, shape (..., k)
    lam_min : ndarray, shape (..., k)
    """
    n = np.asarray(sizes, dtype=float)
    lam, V, cond = sym_eig(covs, jitter)
    ok_group = _invertible(lam, cond)
    ok = np.all(ok_group, axis=-1)
    Sinv = _inv_from_eig(lam, V)
    nS = n[:, None, None] * Sinv
    A = nS.sum(axis=-3)
    b = np.einsum("...kij,...kj->...i", nS, means)
    # avoid LinAlgError on rejected batch members
    A = np.where(ok[..., None, None], A, np.eye(A.shape[-1]))
    mu = np.linalg.solve(A, b[..., None])[..., 0]
    diff = means - mu[..., None, :]
    T = np.einsum("...ki,...kij,...kj->...", diff, nS, diff)
    T = np.where(ok, np.maximum(T, 0.0), np.nan)
    return T, ok, cond, lam[..., 0]


def standardize(T, p, k):
    df = p * (k - 1)
    return (np.asarray(T) - df) / np.sqrt(2.0 * df)


# ---------------------------------------------------------------------------
# public operations


def group_covariance(scores) -> GroupCovariance:
    """Group mean and covariance with divisor ``n_j``."""
    y = np.atleast_2d(np.asarray(scores, dtype=float))
    if y.shape[0] < 2:
        raise TooFewObservations("a group covariance needs at least 2 observations")
    mean, cov = moments(y)
    return GroupCovariance(sigma_hat=0.5 * (cov + cov.T), mean=mean, n=y.shape[0])


def _covs(scores: GroupedScores) -> list:
    return [group_covariance(m) for m in scores.matrices]


def _check_invertible(covs: Sequence[GroupCovariance], jitter=0.0):
    lam, _, cond = sym_eig(np.stack([c.sigma_hat for c in covs]), jitter)
    bad = ~_invertible(lam, cond)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise SingularCovariance(group=j, condition=float(cond[j]))
    return lam[:, 0], cond


def pooled_mean(covs: Sequence[GroupCovariance], jitter=0.0) -> np.ndarray:
    """Precision-weighted pooled mean of the group means."""
    _check_invertible(covs, jitter)
    n = np.array([c.n for c in covs], dtype=float)
    lam, V, _ = sym_eig(np.stack([c.sigma_hat for c in covs]), jitter)
    nS = n[:, None, None] * _inv_from_eig(lam, V)
    b = np.einsum("kij,kj->i", nS, np.stack([c.mean for c in covs]))
    return np.linalg.solve(nS.sum(axis=0), b)


def _warn_small(sizes, p):
    if np.any(np.asarray(sizes) <= 2 * p):
        warnings.warn(
            f"some group has n_j <= 2p (sizes {list(map(int, sizes))}, p={p}); "
            "covariance estimates are ill-conditioned",
            SmallSampleWarning,
            stacklevel=3,
        )


def t_flrt(scores: GroupedScores, jitter: float = 0.0) -> TestResult:
    """Compute the test statistic and its asymptotic p-values.

    Parameters
    ----------
    scores : GroupedScores
    jitter : float, default=0.0
        Ridge added to every group covariance. Off by default.

    Raises
    ------
    SingularCovariance
        When a group covariance is singular or its condition number exceeds
        ``COND_LIMIT``; the exception names the group.
    """
    if not isinstance(scores, GroupedScores):
        scores = GroupedScores(scores)
    covs = _covs(scores)
    p, k = scores.p, scores.k
    _warn_small(scores.sizes, p)
    lam_min, cond = _check_invertible(covs, jitter)
    means = np.stack([c.mean for c in covs])
    S = np.stack([c.sigma_hat for c in covs])
    T, _, _, _ = flrt_core(means, S, scores.sizes, jitter)
    T = float(T)
    df = p * (k - 1)
    w = float(standardize(T, p, k))
    return TestResult(
        t_flrt=T,
        df=df,
        w=w,
        p_normal=float(stats.norm.sf(w)),
        p_chisq=float(stats.chi2.sf(T, df)),
        p=p,
        k=k,
        sizes=[int(n) for n in scores.sizes],
        condition_numbers=[float(c) for c in cond],
        min_eigenvalues=[float(x) for x in lam_min],
    )


def projection_pair(covs, sizes) -> ProjectionPair:
    """Build B, the stacked whitening matrix, P and Q from SPD covariances.

    Parameters
    ----------
    covs : sequence of (p, p) arrays
    sizes : sequence of int
    """
    covs = np.stack([np.asarray(c, dtype=float) for c in covs])
    n = np.asarray(sizes, dtype=float)
    if covs.shape[0] != n.size:
        raise DimensionMismatch("one size per covariance is required")
    lam, V, cond = sym_eig(covs)
    bad = ~_invertible(lam, cond)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise SingularCovariance(group=j, condition=float(cond[j]))
    inv_sqrt = _inv_from_eig(lam, V, -0.5)
    B = np.linalg.inv(np.einsum("k,kij->ij", n, _inv_from_eig(lam, V)))
    B = 0.5 * (B + B.T)
    stacked = np.concatenate(np.sqrt(n)[:, None, None] * inv_sqrt, axis=0)
    P = stacked @ B @ stacked.T
    P = 0.5 * (P + P.T)
    Q = np.eye(P.shape[0]) - P
    return ProjectionPair(P=P, Q=Q, B=B, stacked=stacked)


def noncentrality_core(means, covs, sizes):
    """Plug-in v_d' Q v_d from stacked moments, vectorized over leading axes.

    Uses v_d' Q v_d = |v_d|^2 - g' B g with g = sum_j sqrt(n_j) S_j^{-1} d_j,
    which avoids forming the pk x pk matrix Q. Returns (value, ok).
    """
    n = np.asarray(sizes, dtype=float)
    lam, V, cond = sym_eig(covs)
    ok = np.all(_invertible(lam, cond), axis=-1)
    Sinv = _inv_from_eig(lam, V)
    d = means[..., :1, :] - means
    vv = np.einsum("...ki,...kij,...kj->...", d, Sinv, d)
    g = np.einsum("k,...kij,...kj->...i", np.sqrt(n), Sinv, d)
    A = np.einsum("k,...kij->...ij", n, Sinv)
    A = np.where(ok[..., None, None], A, np.eye(A.shape[-1]))
    val = vv - np.einsum("...i,...i->...", g, np.linalg.solve(A, g[..., None])[..., 0])
    return np.where(ok, val, np.nan), ok


def noncentrality_estimate(scores: GroupedScores, return_raw: bool = False):
    """Sample plug-in of the noncentrality v_d' Q v_d.

    v_d stacks S_j^{-1/2} (ybar_1 - ybar_j) over groups and Q = I - P is built
    from the sample covariances. Rounding can make the raw value slightly
    negative; it is clamped to 0 (``return_raw=True`` also returns the raw
    value).
    """
    if not isinstance(scores, GroupedScores):
        scores = GroupedScores(scores)
    covs = _covs(scores)
    _check_invertible(covs)
    means = np.stack([c.mean for c in covs])
    S = np.stack([c.sigma_hat for c in covs])
    raw, _ = noncentrality_core(means, S, scores.sizes)
    raw = float(raw)
    value = max(raw, 0.0)
    return (value, raw) if return_raw else value


def hotelling_t2(scores: GroupedScores) -> HotellingResult:
    """Classical two-sample Hotelling T^2 with pooled covariance.

    The p-value uses (n1 + n2 - p - 1) / (p (n1 + n2 - 2)) T^2 ~ F(p, n1 + n2 - p - 1).
    """
    if not isinstance(scores, GroupedScores):
        scores = GroupedScores(scores)
    if scores.k != 2:
        raise NotTwoGroups(f"Hotelling T^2 needs exactly 2 groups, got {scores.k}")
    y1, y2 = scores.matrices
    n1, n2 = y1.shape[0], y2.shape[0]
    p = scores.p
    df2 = n1 + n2 - p - 1
    if df2 < 1:
        raise TooFewObservations("n1 + n2 must exceed p + 1")
    pooled = (
        np.cov(y1, rowvar=False, ddof=1).reshape(p, p) * (n1 - 1)
        + np.cov(y2, rowvar=False, ddof=1).reshape(p, p) * (n2 - 1)
    ) / (n1 + n2 - 2)
    lam, V, cond = sym_eig(pooled)
    if not _invertible(lam, cond):
        raise SingularCovariance(condition=float(cond), message="pooled covariance is singular")
    d = y1.mean(axis=0) - y2.mean(axis=0)
    t2 = float(n1 * n2 / (n1 + n2) * d @ _inv_from_eig(lam, V) @ d)
    f_stat = df2 / (p * (n1 + n2 - 2)) * t2
    return HotellingResult(
        t2=t2, f_stat=f_stat, df1=p, df2=df2, p_value=float(stats.f.sf(f_stat, p, df2))
    )


def condition_report(scores: GroupedScores) -> list:
    """Per-group condition number and smallest eigenvalue of the covariance."""
    out = []
    for j, m in enumerate(scores.matrices):
        lam, _, cond = sym_eig(group_covariance(m).sigma_hat)
        out.append({"group": j, "condition": float(cond), "min_eigenvalue": float(lam[0])})
    return out
