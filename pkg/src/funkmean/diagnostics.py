"""Power diagnostics built on the plug-in noncentrality v_d' Q v_d.

``multi_basis_diagnostic`` traces the noncentrality as a function of the
number of scores p for one or more bases; a sustained rise or a jump marks
the p at which a basis starts to separate the groups.
``reorder_diagnostic`` scores every basis function on its own, which exposes
single discriminative directions ("spikes") regardless of their position in
the basis ordering.

Selecting basis functions from a reorder profile and then testing on the
same data uses the data twice and can inflate the size; see
:func:`split_dataset`.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .basis import BasisSpec
from .bootstrap import STREAM_SPLIT, replicate_rng
from .errors import EmptyInput, FunkmeanError, InvalidInput, SingularCovariance
from .flrt import GroupedScores, moments, noncentrality_core
from .projection import FunctionalDataset, project_dataset
from .svg import line_plot

CSV_HEADER = ("index", "value", "basis")


class VolatilityWarning(UserWarning):
    pass


class IOFailure(FunkmeanError, OSError):
    pass


@dataclass
class DiagnosticCurve:
    """Noncentrality estimates for p = 1..p_max (``values[p - 1]``)."""

    basis_label: str
    values: np.ndarray

    @property
    def p_values(self) -> np.ndarray:
        return np.arange(1, len(self.values) + 1)

    def at(self, p: int) -> float:
        return float(self.values[p - 1])


@dataclass
class SpikeRule:
    """Flag l when u_l > median(u) + c * MAD(u) and values[l] > floor.

    With ``scale='log'`` (default) u = log(1 + v / floor), which tames the
    right-skew of the noncentrality under the null; ``scale='linear'`` uses
    u = v directly. At most ``max_count`` indices are returned, largest first.
    """

    c: float = 5.0
    floor: float = 1e-3
    max_count: Optional[int] = None
    scale: str = "log"

    def __post_init__(self):
        if self.scale not in ("log", "linear"):
            raise InvalidInput("scale must be 'log' or 'linear'")
        if self.c < 0 or self.floor < 0:
            raise InvalidInput("c and floor must be nonnegative")


@dataclass
class ReorderProfile:
    """Single-function noncentralities for l = 1..N and the flagged spikes (1-based)."""

    basis_label: str
    values: np.ndarray
    spikes: list = field(default_factory=list)

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.values)) + 1


def detect_spikes(values, rule: Optional[SpikeRule] = None) -> list:
    """1-based indices of spikes in ``values``, largest value first.

    Examples
    --------
    >>> detect_spikes([0.0] * 99 + [10.0])
    [100]
    """
    rule = rule or SpikeRule()
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return []
    if not np.all(np.isfinite(v)):
        raise InvalidInput("spike detection needs finite values")
    if rule.scale == "log":
        floor = rule.floor if rule.floor > 0 else np.finfo(float).tiny
        u = np.log1p(np.maximum(v, 0.0) / floor)
    else:
        u = v
    med = np.median(u)
    mad = np.median(np.abs(u - med))
    flagged = np.flatnonzero((u > med + rule.c * mad) & (v > rule.floor))
    order = flagged[np.argsort(-v[flagged], kind="stable")]
    if rule.max_count is not None:
        order = order[: rule.max_count]
    return [int(i) + 1 for i in order]


def _noncentrality_values(scores: GroupedScores, dims) -> np.ndarray:
    """Plug-in noncentrality on the leading ``p`` columns for each p in dims."""
    out = np.empty(len(dims))
    sizes = scores.sizes
    for i, p in enumerate(dims):
        means, covs = zip(*(moments(m[:, :p]) for m in scores.matrices))
        val, ok = noncentrality_core(np.stack(means), np.stack(covs), sizes)
        if not ok:
            raise SingularCovariance(message=f"singular group covariance at p={p}")
        out[i] = max(float(val), 0.0)
    return out


def noncentrality_profile(scores: GroupedScores, p_max: Optional[int] = None) -> np.ndarray:
    """Noncentrality for nested prefixes p = 1..p_max of the score columns."""
    p_max = scores.p if p_max is None else p_max
    return _noncentrality_values(scores, range(1, p_max + 1))


def single_function_profile(scores: GroupedScores) -> np.ndarray:
    """Noncentrality of every score column taken on its own."""
    # reduce each column as its own contiguous row so the result for a basis
    # function does not depend on where it sits among the others
    cols = [np.ascontiguousarray(m.T) for m in scores.matrices]
    means = np.stack([c.mean(axis=1) for c in cols], axis=1)  # (N, k)
    variances = np.stack([c.var(axis=1) for c in cols], axis=1)
    bad = np.any(variances <= 0, axis=1)
    if np.any(bad):
        l = int(np.argmax(bad)) + 1
        raise SingularCovariance(message=f"zero-variance scores for basis function {l}")
    val, ok = noncentrality_core(means[..., None], variances[..., None, None], scores.sizes)
    if not np.all(ok):
        l = int(np.argmax(~ok)) + 1
        raise SingularCovariance(message=f"degenerate scores for basis function {l}")
    return np.maximum(val, 0.0)


def default_p_max(data: FunctionalDataset) -> int:
    return int(max(1, min(20, min(data.sizes) // 3)))


def multi_basis_diagnostic(
    data: FunctionalDataset, specs: Sequence[BasisSpec], p_max: Optional[int] = None
) -> list:
    """Noncentrality curve over p = 1..p_max for every basis in ``specs``.

    Raises
    ------
    SingularCovariance
        With the offending basis and p in the message.
    """
    if p_max is None:
        p_max = default_p_max(data)
    if p_max < 1:
        raise InvalidInput("p_max must be positive")
    if min(data.sizes) < 5 * p_max:
        warnings.warn(
            f"smallest group has {min(data.sizes)} curves, fewer than 5 * p_max = "
            f"{5 * p_max}; the diagnostic will be volatile at large p",
            VolatilityWarning,
            stacklevel=2,
        )
    curves = []
    for spec in specs:
        try:
            if spec.family == "spline":
                vals = []
                for p in range(1, p_max + 1):
                    s = project_dataset(data, spec.with_p(p))
                    vals.append(_noncentrality_values(s, [p])[0])
                values = np.array(vals)
            else:
                values = noncentrality_profile(project_dataset(data, spec.with_p(p_max)), p_max)
        except SingularCovariance as exc:
            raise SingularCovariance(message=f"basis {spec.label}: {exc}") from exc
        curves.append(DiagnosticCurve(spec.label, values))
    return curves


def reorder_diagnostic(
    data: FunctionalDataset, spec: BasisSpec, N: int, rule: Optional[SpikeRule] = None
) -> ReorderProfile:
    """Single-function noncentrality for the first ``N`` basis functions."""
    if N < 1:
        raise InvalidInput("N must be positive")
    scores = project_dataset(data, spec.with_p(N))
    values = single_function_profile(scores)
    return ReorderProfile(spec.label, values, detect_spikes(values, rule))


def split_dataset(data: FunctionalDataset, ratio: float = 0.5, seed: int = 0):
    """Random within-group split into (train, test); ``ratio`` goes to train."""
    if not 0.0 < ratio < 1.0:
        raise InvalidInput("split ratio must lie in (0, 1)")
    train, test = [], []
    for j, g in enumerate(data.groups):
        rng = replicate_rng(seed, j, STREAM_SPLIT)
        perm = rng.permutation(len(g))
        cut = int(round(ratio * len(g)))
        cut = min(max(cut, 1), len(g) - 1) if len(g) > 1 else cut
        train.append([g[i] for i in sorted(perm[:cut])])
        test.append([g[i] for i in sorted(perm[cut:])])
    return FunctionalDataset(train, data.labels), FunctionalDataset(test, data.labels)


def _rows(obj):
    if isinstance(obj, (DiagnosticCurve, ReorderProfile)):
        obj = [obj]
    obj = list(obj)
    if not obj:
        raise EmptyInput("nothing to emit")
    return obj


def emit_diagnostic_artifacts(obj, out_path, title: str = "") -> tuple:
    """Write ``<out_path>.csv`` and ``<out_path>.svg`` for curves or profiles.

    Parameters
    ----------
    obj : DiagnosticCurve, ReorderProfile, or a list of either
    out_path : path-like
        Path stem; a ``.csv``/``.svg`` suffix is replaced.

    Returns
    -------
    (csv_path, svg_path)
    """
    items = _rows(obj)
    stem = Path(out_path)
    if stem.suffix in (".csv", ".svg"):
        stem = stem.with_suffix("")
    csv_path, svg_path = stem.with_suffix(".csv"), stem.with_suffix(".svg")
    is_profile = isinstance(items[0], ReorderProfile)
    series = [(it.basis_label, np.arange(1, len(it.values) + 1), it.values) for it in items]
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for label, idx, vals in series:
                for i, v in zip(idx, vals):
                    w.writerow([int(i), repr(float(v)), label])
        svg = line_plot(
            series,
            title=title or ("single-function noncentrality" if is_profile else "noncentrality vs p"),
            xlabel="basis function index" if is_profile else "p",
            ylabel="noncentrality estimate",
        )
        svg_path.write_text(svg)
    except OSError as exc:
        raise IOFailure(f"could not write diagnostics to {stem}: {exc}") from exc
    return csv_path, svg_path
