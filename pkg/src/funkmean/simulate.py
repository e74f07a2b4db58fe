"""Matérn Gaussian-process curves and Monte-Carlo size/power experiments."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import special

from ._parallel import map_chunks
from .basis import BasisSpec
from .bootstrap import STREAM_BOOTSTRAP, STREAM_SIMULATION, BootstrapConfig, bootstrap_test, replicate_rng
from .errors import DomainError, FactorizationFailed, InvalidConfig, SingularCovariance, UnknownPreset
from .flrt import GroupedScores, hotelling_t2, t_flrt
from .projection import DiscretizedCurve, project_values
from .svg import line_plot

TABLE_HEADER = ("nu_or_c", "basis", "p", "reject_rate", "R", "B", "seed")

JITTER_START = 1e-10
JITTER_MAX = 1e-6


# ---------------------------------------------------------------------------
# kernels


def bessel_k(nu, x):
    """Modified Bessel function of the second kind, K_nu(x), for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(np.isnan(x)):
        raise DomainError("bessel_k requires x > 0")
    out = special.kv(nu, x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MaternParams:
    sigma2: float
    ell: float
    nu: float

    def __post_init__(self):
        for name in ("sigma2", "ell", "nu"):
            v = float(getattr(self, name))
            if not (np.isfinite(v) and v > 0):
                raise InvalidConfig(f"Matérn {name} must be positive, got {v!r}")
            object.__setattr__(self, name, v)


def matern_kernel(d, params: MaternParams):
    """Matérn covariance as a function of distance ``d >= 0``."""
    d = np.abs(np.asarray(d, dtype=float))
    nu, s2 = params.nu, params.sigma2
    z = math.sqrt(2.0 * nu) * d / params.ell
    out = np.full(d.shape, s2, dtype=float)
    pos = z > 0
    zp = z[pos]
    # log-space: nu log z + log K_nu(z) + (1 - nu) log 2 - log Gamma(nu)
    with np.errstate(over="ignore", divide="ignore"):
        log_k = np.log(special.kve(nu, zp)) - zp
    logc = (1.0 - nu) * math.log(2.0) - special.gammaln(nu)
    val = s2 * np.exp(nu * np.log(zp) + log_k + logc)
    # kve overflows only for tiny z; the small-argument expansion is then exact to rounding
    bad = ~np.isfinite(val)
    if np.any(bad):
        zb = zp[bad]
        if nu > 1:
            val[bad] = s2 * (1.0 - zb**2 / (4.0 * (nu - 1.0)))
        else:
            val[bad] = s2
    out[pos] = np.minimum(val, s2)
    return out


def matern_cov(params: MaternParams, times) -> np.ndarray:
    """Covariance matrix of the Matérn kernel on ``times``; diagonal is sigma2."""
    t = np.asarray(times, dtype=float)
    K = matern_kernel(t[:, None] - t[None, :], params)
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, params.sigma2)
    return K


def gp_factor(cov) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter 1e-10 -> 1e-6 of the scale."""
    cov = np.asarray(cov, dtype=float)
    scale = float(np.mean(np.diag(cov)))
    if scale <= 0:
        scale = 1.0
    eye = np.eye(cov.shape[0])
    eps = JITTER_START
    while eps <= JITTER_MAX * (1 + 1e-9):
        try:
            return np.linalg.cholesky(cov + eps * scale * eye)
        except np.linalg.LinAlgError:
            eps *= 10.0
    raise FactorizationFailed(f"covariance not positive definite with jitter {JITTER_MAX:g}")


def gp_sample(mean, cov, rng: np.random.Generator, times=None, factor=None) -> DiscretizedCurve:
    """One draw mean + L z from N(mean, cov) as a curve."""
    mean = np.asarray(mean, dtype=float)
    L = gp_factor(cov) if factor is None else factor
    values = mean + L @ rng.standard_normal(mean.size)
    if times is None:
        times = np.linspace(0.0, 1.0, mean.size)
    return DiscretizedCurve(times, values)


def gp_sample_many(mean, factor, n: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, m)`` array of independent draws."""
    z = rng.standard_normal((n, factor.shape[0]))
    return np.asarray(mean, dtype=float) + z @ factor.T


# ---------------------------------------------------------------------------
# designs


MEAN_FAMILIES = ("zero", "linear", "neg_quadratic", "identity", "identity_plus_sine", "custom_table")


@dataclass(frozen=True)
class MeanSpec:
    """Mean function family. ``c=None`` takes the shift from the experiment sweep."""

    family: str = "zero"
    c: Optional[float] = None
    values: Optional[tuple] = None

    def __post_init__(self):
        if self.family not in MEAN_FAMILIES:
            raise InvalidConfig(f"unknown mean family {self.family!r}")
        if self.family == "custom_table" and self.values is None:
            raise InvalidConfig("custom_table needs values")

    def evaluate(self, x, c=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = self.c if self.c is not None else (0.0 if c is None else c)
        if self.family == "zero":
            return np.zeros_like(x)
        if self.family == "linear":
            return c * x
        if self.family == "neg_quadratic":
            return -c * x**2
        if self.family == "identity":
            return x.copy()
        if self.family == "identity_plus_sine":
            return x + c * math.sqrt(2.0) * np.sin(10.0 * np.pi * x)
        vals = np.asarray(self.values, dtype=float)
        if vals.size != x.size:
            raise InvalidConfig("custom_table length does not match the grid")
        return vals.copy()


@dataclass(frozen=True)
class GroupDesign:
    matern: MaternParams
    mean: MeanSpec = MeanSpec()


@dataclass
class ExperimentConfig:
    """Full Monte-Carlo design.

    ``bases`` holds basis labels (``'fourier'``, ``'haar'``, ``'haar1'``,
    ``'spline'``; see :attr:`BasisSpec.label`). ``nu_values`` (size experiments) overrides every group's smoothness in
    turn; ``c_values`` (power experiments) is the mean-shift sweep.
    """

    sizes: tuple
    groups: tuple
    bases: tuple = ("haar1", "fourier")
    p_list: tuple = (2,)
    grid_points: int = 100
    R: int = 1000
    B: int = 500
    alpha: float = 0.05
    seed: int = 0
    nu_values: Optional[tuple] = None
    c_values: Optional[tuple] = None
    calibration: str = "bootstrap"
    include_hotelling: bool = False
    name: str = "custom"

    def __post_init__(self):
        self.sizes = tuple(int(n) for n in self.sizes)
        self.groups = tuple(self.groups)
        self.bases = tuple(self.bases)
        for b in self.bases:
            BasisSpec.from_label(b, 1)
        self.p_list = tuple(int(p) for p in self.p_list)
        if len(self.sizes) != len(self.groups) or len(self.sizes) < 2:
            raise InvalidConfig("need one design per group and at least 2 groups")
        for g in self.groups:
            if g.mean.family == "custom_table" and len(g.mean.values) != self.grid_points:
                raise InvalidConfig("custom_table mean length must equal grid_points")
        if self.R < 1 or self.B < 1:
            raise InvalidConfig("R and B must be positive")
        if self.calibration not in ("bootstrap", "chisq", "normal"):
            raise InvalidConfig(f"unknown calibration {self.calibration!r}")
        if not 0 < self.alpha < 1:
            raise InvalidConfig("alpha must lie in (0, 1)")

    @property
    def k(self) -> int:
        return len(self.sizes)

    def scaled(self, R=None, B=None) -> "ExperimentConfig":
        return replace(self, R=self.R if R is None else int(R), B=self.B if B is None else int(B))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        groups = []
        for g in d.pop("groups"):
            mean = g.get("mean", {}) or {}
            if mean.get("values") is not None:
                mean = dict(mean, values=tuple(mean["values"]))
            groups.append(GroupDesign(MaternParams(**g["matern"]), MeanSpec(**mean)))
        for key in ("sizes", "bases", "p_list", "nu_values", "c_values"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(groups=tuple(groups), **d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ExperimentTable:
    """Rejection rates, one row per (nu or c, basis, p)."""

    kind: str
    rows: list = field(default_factory=list)

    def rate(self, x, basis, p) -> float:
        for r in self.rows:
            if math.isclose(r["nu_or_c"], x, rel_tol=1e-12, abs_tol=1e-12) and r["basis"] == basis and r["p"] == p:
                return r["reject_rate"]
        raise KeyError((x, basis, p))

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_HEADER)
            for r in self.rows:
                w.writerow([repr(float(r["nu_or_c"])), r["basis"], r["p"], repr(float(r["reject_rate"])), r["R"], r["B"], r["seed"]])
        return path

    def to_svg(self, path, title="") -> Path:
        series = {}
        for r in self.rows:
            series.setdefault(f"{r['basis']} p={r['p']}", []).append((r["nu_or_c"], r["reject_rate"]))
        data = [(lab, [a for a, _ in pts], [b for _, b in pts]) for lab, pts in series.items()]
        xlabel = "nu" if self.kind == "size" else "c"
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(line_plot(data, title=title, xlabel=xlabel, ylabel="rejection rate"))
        return path


SizeTable = PowerTable = ExperimentTable


# ---------------------------------------------------------------------------
# Monte-Carlo engine


def _group_factors(cfg: ExperimentConfig, times, nu=None):
    out = []
    for g in cfg.groups:
        params = g.matern if nu is None else replace(g.matern, nu=float(nu))
        out.append(gp_factor(matern_cov(params, times)))
    return out


def _rejects(scores: GroupedScores, cfg: ExperimentConfig, boot_seed: int) -> bool:
    if cfg.calibration == "bootstrap":
        res = bootstrap_test(scores, BootstrapConfig(B=cfg.B, seed=boot_seed, alpha=cfg.alpha))
        return res.reject
    res = t_flrt(scores)
    pval = res.p_chisq if cfg.calibration == "chisq" else res.p_normal
    return pval < cfg.alpha


def _score_sets(values, times, cfg: ExperimentConfig):
    """Yield (basis, p, GroupedScores) for every basis/p in the design."""
    for fam in cfg.bases:
        if fam == "spline":
            for p in cfg.p_list:
                spec = BasisSpec(fam, p)
                yield fam, p, GroupedScores([project_values(times, v, spec) for v in values])
        else:
            spec = BasisSpec.from_label(fam, max(cfg.p_list))
            full = [project_values(times, v, spec) for v in values]
            for p in cfg.p_list:
                yield fam, p, GroupedScores([s[:, :p] for s in full])


def _replicates(chunk, cfg: ExperimentConfig, sweep: str):
    """Rejection counts for replicate indices in ``chunk``."""
    times = np.linspace(0.0, 1.0, cfg.grid_points)
    xs = cfg.nu_values if sweep == "nu" else cfg.c_values
    counts = {}
    failures = {}
    factors_cache = {}
    for r in chunk:
        # one substream per replicate: the data for replicate r do not depend on chunking
        rng = replicate_rng(cfg.seed, r, STREAM_SIMULATION)
        z = [rng.standard_normal((n, cfg.grid_points)) for n in cfg.sizes]
        boot_seed = int(replicate_rng(cfg.seed, r, STREAM_BOOTSTRAP).integers(0, 2**63))
        for x in xs:
            if sweep == "nu":
                if x not in factors_cache:
                    factors_cache[x] = _group_factors(cfg, times, nu=x)
                factors = factors_cache[x]
                means = [g.mean.evaluate(times, 0.0) for g in cfg.groups]
            else:
                if None not in factors_cache:
                    factors_cache[None] = _group_factors(cfg, times)
                factors = factors_cache[None]
                means = [g.mean.evaluate(times, x) for g in cfg.groups]
            values = [mu + zj @ L.T for mu, zj, L in zip(means, z, factors)]
            for fam, p, scores in _score_sets(values, times, cfg):
                key = (x, fam, p)
                try:
                    hit = _rejects(scores, cfg, boot_seed)
                except SingularCovariance:
                    failures[key] = failures.get(key, 0) + 1
                    continue
                counts[key] = counts.get(key, 0) + int(hit)
                if cfg.include_hotelling and scores.k == 2:
                    hkey = (x, f"{fam}:T2", p)
                    counts[hkey] = counts.get(hkey, 0) + int(hotelling_t2(scores).p_value < cfg.alpha)
    return counts, failures


def _run(cfg: ExperimentConfig, sweep: str, workers=None) -> ExperimentTable:
    n_chunks = max(1, min(cfg.R, 64))
    chunks = [range(i, cfg.R, n_chunks) for i in range(n_chunks)]
    results = map_chunks(partial(_replicates, cfg=cfg, sweep=sweep), chunks, workers)
    counts, failures = {}, {}
    for c, f in results:
        for key, v in c.items():
            counts[key] = counts.get(key, 0) + v
        for key, v in f.items():
            failures[key] = failures.get(key, 0) + v
    xs = cfg.nu_values if sweep == "nu" else cfg.c_values
    rows = []
    labels = list(cfg.bases) + ([f"{b}:T2" for b in cfg.bases] if cfg.include_hotelling else [])
    for x in xs:
        for fam in labels:
            for p in cfg.p_list:
                key = (x, fam, p)
                if key not in counts and key not in failures:
                    continue
                bad = failures.get(key, 0)
                valid = cfg.R - bad
                rows.append(
                    dict(
                        nu_or_c=float(x),
                        basis=fam,
                        p=p,
                        reject_rate=counts.get(key, 0) / valid if valid else float("nan"),
                        R=cfg.R,
                        B=cfg.B,
                        seed=cfg.seed,
                        singular=bad,
                    )
                )
    return ExperimentTable(kind="size" if sweep == "nu" else "power", rows=rows)


def run_size_experiment(cfg: ExperimentConfig, workers=None) -> ExperimentTable:
    """Empirical size for every nu in ``cfg.nu_values`` (means must coincide).

    Replicates whose group covariance is singular are excluded from the
    denominator and counted in the row's ``singular`` field.
    """
    if cfg.nu_values is None:
        cfg = replace(cfg, nu_values=(cfg.groups[0].matern.nu,))
    times = np.linspace(0.0, 1.0, cfg.grid_points)
    ref = cfg.groups[0].mean.evaluate(times, 0.0)
    for g in cfg.groups[1:]:
        if not np.allclose(g.mean.evaluate(times, 0.0), ref):
            raise InvalidConfig("size experiments need equal group means")
    return _run(cfg, "nu", workers)


def run_power_experiment(cfg: ExperimentConfig, workers=None) -> ExperimentTable:
    """Rejection rate for every shift c in ``cfg.c_values``."""
    if cfg.c_values is None:
        raise InvalidConfig("power experiments need c_values")
    times = np.linspace(0.0, 1.0, cfg.grid_points)
    c_test = max(cfg.c_values, key=abs) or 1.0
    ref = cfg.groups[0].mean.evaluate(times, c_test)
    if all(np.allclose(g.mean.evaluate(times, c_test), ref) for g in cfg.groups[1:]):
        raise InvalidConfig("power experiments need at least one differing mean")
    return _run(cfg, "c", workers)


def simulate_dataset(cfg: ExperimentConfig, c: float = 0.0, seed: Optional[int] = None, nu=None):
    """One dataset from the design, as a FunctionalDataset."""
    from .projection import FunctionalDataset

    times = np.linspace(0.0, 1.0, cfg.grid_points)
    rng = replicate_rng(cfg.seed if seed is None else seed, 0, STREAM_SIMULATION)
    factors = _group_factors(cfg, times, nu)
    arrays = []
    for n, g, L in zip(cfg.sizes, cfg.groups, factors):
        arrays.append(gp_sample_many(g.mean.evaluate(times, c), L, n, rng))
    return FunctionalDataset.from_arrays(times, arrays)


# ---------------------------------------------------------------------------
# presets

NU_GRID = (0.5, 1.0, 1.5, 2.0, 5.0, 10.0, 50.0)
TABLE2_C = tuple(3.0 * i / 28.0 for i in range(13))
TABLE3_C = (0.0, 0.2, 0.4, 0.6)
TABLE3_P = (2, 3, 4, 5, 10, 11)


def table1_config(**kw) -> ExperimentConfig:
    base = dict(
        name="table1",
        sizes=(50, 30),
        groups=(GroupDesign(MaternParams(5.0, 1.0, 5.0)), GroupDesign(MaternParams(1.0, 4.0, 5.0))),
        p_list=(2,),
        nu_values=NU_GRID,
        include_hotelling=True,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def table2_config(**kw) -> ExperimentConfig:
    base = dict(
        name="table2",
        sizes=(50, 30),
        groups=(
            GroupDesign(MaternParams(5.0, 1.0, 5.0), MeanSpec("linear")),
            GroupDesign(MaternParams(1.0, 0.5, 5.0), MeanSpec("neg_quadratic")),
        ),
        p_list=(3,),
        c_values=TABLE2_C,
        include_hotelling=True,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def table3_config(**kw) -> ExperimentConfig:
    base = dict(
        name="table3",
        sizes=(500, 300),
        groups=(
            GroupDesign(MaternParams(5.0, 1.0, 5.0), MeanSpec("identity")),
            GroupDesign(MaternParams(1.0, 0.5, 5.0), MeanSpec("identity_plus_sine")),
        ),
        p_list=TABLE3_P,
        c_values=TABLE3_C,
    )
    base.update(kw)
    return ExperimentConfig(**base)


PRESETS = {
    "table1": table1_config,
    "table2": table2_config,
    "table3": table3_config,
    "fig1": table3_config,
    "fig2": table3_config,
}

FULL_SCALE = dict(R=5000, B=1000)


def preset(name: str, **kw) -> ExperimentConfig:
    try:
        return PRESETS[name](**kw)
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
