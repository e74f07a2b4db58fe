"""Turn discretized curves into basis scores by trapezium quadrature."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import BasisSpec, check_times, evaluate_basis, trapezoid_weights
from .errors import (
    DegenerateDomain,
    GridTooCoarse,
    InvalidDataset,
    InvalidInput,
    NonMonotoneTimes,
)


class MixedGridWarning(UserWarning):
    pass


class PartialDomainWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DiscretizedCurve:
    """One observed curve: values on a strictly increasing time grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or y.ndim != 1 or t.size != y.size:
            raise InvalidInput("times and values must be 1-d and of equal length")
        if t.size < 2:
            raise GridTooCoarse("a curve needs at least 2 observation points")
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneTimes("curve times must be strictly increasing")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(t))):
            raise InvalidInput("curve contains NaN or infinite entries")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", y)

    def __add__(self, other):
        if not isinstance(other, DiscretizedCurve):
            return DiscretizedCurve(self.times, self.values + other)
        if not np.array_equal(self.times, other.times):
            raise InvalidInput("curves live on different grids")
        return DiscretizedCurve(self.times, self.values + other.values)


@dataclass
class FunctionalDataset:
    """Curves grouped by population; ``groups[j]`` lists group j's curves."""

    groups: list
    labels: list = None

    def __post_init__(self):
        self.groups = [list(g) for g in self.groups]
        if len(self.groups) < 2:
            raise InvalidDataset("need at least 2 groups")
        for j, g in enumerate(self.groups):
            if len(g) == 0:
                raise InvalidDataset(f"group {j} is empty")
        if self.labels is None:
            self.labels = [str(j) for j in range(len(self.groups))]
        if len(self.labels) != len(self.groups):
            raise InvalidDataset("one label per group is required")

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> list:
        return [len(g) for g in self.groups]

    @property
    def shared_grid(self) -> bool:
        first = self.groups[0][0].times
        return all(np.array_equal(c.times, first) for g in self.groups for c in g)

    @classmethod
    def from_arrays(cls, times, arrays: Sequence, labels=None) -> "FunctionalDataset":
        """Build from one ``(n_j, m)`` value array per group on a shared grid."""
        t = np.asarray(times, dtype=float)
        groups = [
            [DiscretizedCurve(t, row) for row in np.atleast_2d(np.asarray(a, float))]
            for a in arrays
        ]
        return cls(groups, labels)

    def map_curves(self, fn) -> "FunctionalDataset":
        return FunctionalDataset([[fn(c) for c in g] for g in self.groups], self.labels)


def rescale_domain(curve: DiscretizedCurve) -> DiscretizedCurve:
    """Map the curve's time range affinely onto [0, 1]."""
    t = curve.times
    lo, hi = t[0], t[-1]
    if hi <= lo:
        raise DegenerateDomain("all observation times are equal")
    if lo == 0.0 and hi == 1.0:
        return curve
    scaled = (t - lo) / (hi - lo)
    scaled[0], scaled[-1] = 0.0, 1.0
    return DiscretizedCurve(scaled, curve.values)


def rescale_dataset(data: FunctionalDataset, lo=None, hi=None) -> FunctionalDataset:
    """Rescale every curve with one common affine map.

    The map sends ``lo`` (default: smallest time in the dataset) to 0 and
    ``hi`` (default: largest) to 1, so curves keep their relative placement.
    """
    all_t = [c.times for g in data.groups for c in g]
    lo = min(t[0] for t in all_t) if lo is None else lo
    hi = max(t[-1] for t in all_t) if hi is None else hi
    if hi <= lo:
        raise DegenerateDomain("all observation times are equal")
    if lo == 0.0 and hi == 1.0:
        return data
    return data.map_curves(
        lambda c: DiscretizedCurve(np.clip((c.times - lo) / (hi - lo), 0.0, 1.0), c.values)
    )


def _quadrature_matrix(times: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """(m, p) matrix whose product with a value vector gives the scores."""
    basis = evaluate_basis(spec, times).values
    return trapezoid_weights(times)[:, None] * basis


def _warn_partial(times: np.ndarray) -> None:
    if times[0] > 0.0 or times[-1] < 1.0:
        warnings.warn(
            f"curve grid covers [{times[0]:g}, {times[-1]:g}] only; integrating "
            "over the observed range without extrapolation",
            PartialDomainWarning,
            stacklevel=3,
        )


def project_curve(curve: DiscretizedCurve, spec: BasisSpec) -> np.ndarray:
    """Trapezium approximation of the first ``p`` scores of a curve.

    Entry q is sum_l (t_{l+1} - t_l) (Y_{l+1} b_q(t_{l+1}) + Y_l b_q(t_l)) / 2.
    """
    t = check_times(curve.times)
    _warn_partial(t)
    return curve.values @ _quadrature_matrix(t, spec)


def project_values(times, values, spec: BasisSpec) -> np.ndarray:
    """Score an ``(n, m)`` block of curves sharing the grid ``times``."""
    t = check_times(times)
    _warn_partial(t)
    y = np.atleast_2d(np.asarray(values, dtype=float))
    if y.shape[1] != t.size:
        raise InvalidInput("values must have one column per time point")
    return y @ _quadrature_matrix(t, spec)


def project_dataset(data: FunctionalDataset, spec: BasisSpec):
    """Score every curve; group structure and curve order are preserved.

    Returns
    -------
    GroupedScores
    """
    from .flrt import GroupedScores

    shared = data.shared_grid
    if not shared:
        warnings.warn(
            "curves are observed on different grids; quadrature error no longer "
            "averages out as under a common design",
            MixedGridWarning,
            stacklevel=2,
        )
    matrices = []
    if shared:
        t = data.groups[0][0].times
        for g in data.groups:
            matrices.append(project_values(t, np.vstack([c.values for c in g]), spec))
    else:
        cache = {}
        for g in data.groups:
            rows = []
            for c in g:
                key = c.times.tobytes()
                if key not in cache:
                    check_times(c.times)
                    _warn_partial(c.times)
                    cache[key] = _quadrature_matrix(c.times, spec)
                rows.append(c.values @ cache[key])
            matrices.append(np.vstack(rows))
    return GroupedScores(matrices)
