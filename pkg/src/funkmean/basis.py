"""Orthonormal bases of L2[0, 1] evaluated on arbitrary time grids.

Three families are available:

* ``fourier``: 1, sqrt(2) cos(2 pi m t), sqrt(2) sin(2 pi m t), m = 1, 2, ...
  with the cosine preceding the sine at each frequency, so column 11 is
  sqrt(2) sin(10 pi t).
* ``haar``: the constant function followed by the Haar wavelets, level by
  level, shifts left to right. ``haar_start_level=1`` drops the level-0
  wavelet, giving the sequence 1, psi_{1,0}, psi_{1,1}, psi_{2,0}, ...
  (orthonormal but not complete); this is the ordering under which the
  published Haar power tables are reproduced.
* ``spline``: B-splines of a given order, orthonormalized by modified
  Gram-Schmidt under the trapezium inner product of the evaluation grid
  (``spline_reference='grid'``, so the discrete Gram matrix is the identity)
  or of a dense uniform reference grid (``'dense'``, giving one fixed set of
  functions regardless of where they are evaluated).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.interpolate import BSpline

from .errors import (
    EmptyGrid,
    InvalidInput,
    NonMonotoneTimes,
    RankDeficient,
    SplineBasisTooSmall,
    TimesOutOfRange,
)

FAMILIES = ("fourier", "haar", "spline")
_ALIASES = {"spline_orthonormal": "spline", "bspline": "spline"}

# dense uniform grid on which spline bases are orthonormalized once
_SPLINE_REFERENCE_POINTS = 8193


@dataclass(frozen=True)
class BasisSpec:
    """Which basis to use and how many functions to keep.

    Parameters
    ----------
    family : {'fourier', 'haar', 'spline'}
    p : int
        Number of basis functions.
    spline_order : int, default=4
        B-spline order (degree + 1); only used by the spline family.
    spline_knots : tuple of float, optional
        Breakpoints in [0, 1], including both ends. When omitted, uniformly
        spaced breakpoints giving exactly ``max(p, spline_order)`` functions
        are used.
    haar_start_level : int, default=0
        Coarsest wavelet level included after the constant (haar only).
    spline_reference : {'grid', 'dense'}, default='grid'
        Grid whose trapezium inner product orthonormalizes the splines.
    """

    family: str
    p: int
    spline_order: int = 4
    spline_knots: Optional[tuple] = field(default=None)
    haar_start_level: int = 0
    spline_reference: str = "grid"

    def __post_init__(self):
        family = _ALIASES.get(self.family, self.family)
        if family not in FAMILIES:
            raise InvalidInput(f"unknown basis family {self.family!r}")
        object.__setattr__(self, "family", family)
        if int(self.p) != self.p or self.p < 1:
            raise InvalidInput(f"p must be a positive integer, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        if int(self.haar_start_level) != self.haar_start_level or self.haar_start_level < 0:
            raise InvalidInput("haar_start_level must be a nonnegative integer")
        object.__setattr__(self, "haar_start_level", int(self.haar_start_level))
        if self.spline_reference not in ("grid", "dense"):
            raise InvalidInput("spline_reference must be 'grid' or 'dense'")
        if self.spline_order < 1:
            raise InvalidInput("spline_order must be positive")
        if self.spline_knots is not None:
            knots = tuple(float(k) for k in self.spline_knots)
            if len(knots) < 2 or np.any(np.diff(knots) <= 0):
                raise InvalidInput("spline_knots must be strictly increasing")
            if knots[0] < 0.0 or knots[-1] > 1.0:
                raise InvalidInput("spline_knots must lie in [0, 1]")
            object.__setattr__(self, "spline_knots", knots)

    def with_p(self, p: int) -> "BasisSpec":
        return replace(self, p=p)

    @property
    def label(self) -> str:
        if self.family == "haar" and self.haar_start_level:
            return f"haar{self.haar_start_level}"
        return self.family

    @classmethod
    def from_label(cls, label: str, p: int, **kw) -> "BasisSpec":
        """Inverse of :attr:`label`: ``'haar1'`` means haar from level 1."""
        if label.startswith("haar") and label[4:].isdigit():
            return cls("haar", p, haar_start_level=int(label[4:]), **kw)
        return cls(label, p, **kw)


@dataclass(frozen=True)
class BasisMatrix:
    """Basis functions evaluated on a grid; column ``l`` holds b_{l+1}."""

    times: np.ndarray
    values: np.ndarray

    @property
    def p(self) -> int:
        return self.values.shape[1]


def check_times(times) -> np.ndarray:
    """Validate a time grid: at least two strictly increasing points in [0, 1]."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise EmptyGrid("a time grid needs at least 2 points")
    if not np.all(np.isfinite(t)):
        raise TimesOutOfRange("times must be finite")
    if t[0] < 0.0 or t[-1] > 1.0 or t.min() < 0.0 or t.max() > 1.0:
        raise TimesOutOfRange("times must lie in [0, 1]; rescale the domain first")
    if np.any(np.diff(t) <= 0):
        raise NonMonotoneTimes("times must be strictly increasing")
    return t


def fourier_basis(times: np.ndarray, p: int) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    out = np.empty((t.size, p))
    out[:, 0] = 1.0
    for col in range(1, p):
        freq = (col + 1) // 2
        arg = 2.0 * np.pi * freq * t
        # columns 2m (1-based) are cosines, 2m+1 sines
        out[:, col] = np.sqrt(2.0) * (np.cos(arg) if col % 2 == 1 else np.sin(arg))
    return out


def haar_index(col: int, start_level: int = 0) -> tuple[int, int]:
    """Map a 0-based column index >= 1 to its (level, shift) pair."""
    pos = col - 1 + 2**start_level  # position in the full level-ordered wavelet list
    level = pos.bit_length() - 1
    return level, pos - 2**level


def haar_basis(times: np.ndarray, p: int, start_level: int = 0) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    out = np.zeros((t.size, p))
    out[:, 0] = 1.0
    for col in range(1, p):
        level, shift = haar_index(col, start_level)
        scale = 2.0**level
        # half-open supports: a point on a jump takes the right-hand value
        u = t * scale - shift
        amp = np.sqrt(scale)
        out[(u >= 0.0) & (u < 0.5), col] = amp
        out[(u >= 0.5) & (u < 1.0), col] = -amp
    return out


def trapezoid_weights(times) -> np.ndarray:
    """Weights w with sum(w * f(times)) equal to the trapezium rule."""
    t = np.asarray(times, dtype=float)
    h = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += h / 2.0
    w[1:] += h / 2.0
    return w


def _gram_schmidt(raw: np.ndarray, weights: np.ndarray, rtol: float = 1e-10):
    """Weighted modified Gram-Schmidt. Returns (Q, R) with raw = Q @ R."""
    m, q = raw.shape
    Q = np.array(raw, dtype=float, copy=True)
    R = np.zeros((q, q))
    norms0 = np.sqrt(np.einsum("i,ij,ij->j", weights, raw, raw))
    for j in range(q):
        for i in range(j):
            r = np.dot(weights * Q[:, i], Q[:, j])
            R[i, j] = r
            Q[:, j] -= r * Q[:, i]
        norm = np.sqrt(np.dot(weights * Q[:, j], Q[:, j]))
        if norms0[j] == 0.0 or norm <= rtol * norms0[j]:
            raise RankDeficient(f"column {j} is linearly dependent on earlier columns")
        R[j, j] = norm
        Q[:, j] /= norm
    return Q, R


def orthonormalize_spline(raw_spline_values, times) -> np.ndarray:
    """Orthonormalize columns under the trapezium inner product on ``times``.

    Modified Gram-Schmidt keeps the span of the first ``j`` columns fixed for
    every ``j``; each output column has positive inner product with its raw
    counterpart.

    Raises
    ------
    RankDeficient
        If a column is numerically dependent on the preceding ones.
    """
    raw = np.asarray(raw_spline_values, dtype=float)
    t = np.asarray(times, dtype=float)
    if raw.ndim != 2 or raw.shape[0] != t.size:
        raise InvalidInput("raw_spline_values must be an m x q matrix matching times")
    Q, _ = _gram_schmidt(raw, trapezoid_weights(t))
    return Q


def spline_breakpoints(spec: BasisSpec) -> tuple:
    if spec.spline_knots is not None:
        knots = spec.spline_knots
        # the basis lives on [0, 1]; pad missing ends
        if knots[0] > 0.0:
            knots = (0.0,) + knots
        if knots[-1] < 1.0:
            knots = knots + (1.0,)
        return knots
    n_breaks = max(2, spec.p - spec.spline_order + 2)
    return tuple(np.linspace(0.0, 1.0, n_breaks))


def spline_dimension(spec: BasisSpec) -> int:
    return len(spline_breakpoints(spec)) - 2 + spec.spline_order


def _raw_bsplines(times: np.ndarray, breaks: tuple, order: int) -> np.ndarray:
    degree = order - 1
    knots = np.concatenate([[breaks[0]] * degree, breaks, [breaks[-1]] * degree])
    x = np.clip(times, breaks[0], breaks[-1])
    return BSpline.design_matrix(x, knots, degree, extrapolate=False).toarray()


@lru_cache(maxsize=64)
def _spline_transform(breaks: tuple, order: int) -> np.ndarray:
    """Upper-triangular C such that raw_bsplines @ C is L2-orthonormal."""
    ref = np.linspace(0.0, 1.0, _SPLINE_REFERENCE_POINTS)
    raw = _raw_bsplines(ref, breaks, order)
    _, R = _gram_schmidt(raw, trapezoid_weights(ref))
    C = np.linalg.solve(R, np.eye(R.shape[0]))
    C.setflags(write=False)
    return C


def spline_basis(times: np.ndarray, spec: BasisSpec) -> np.ndarray:
    breaks = spline_breakpoints(spec)
    dim = len(breaks) - 2 + spec.spline_order
    if spec.p > dim:
        raise SplineBasisTooSmall(
            f"spline basis has {dim} functions but p={spec.p} was requested"
        )
    t = np.asarray(times, dtype=float)
    raw = _raw_bsplines(t, breaks, spec.spline_order)
    if spec.spline_reference == "grid":
        # Gram-Schmidt keeps prefixes fixed, so only the first p columns are needed
        Q, _ = _gram_schmidt(raw[:, : spec.p], trapezoid_weights(t))
        return Q
    C = _spline_transform(breaks, spec.spline_order)
    return raw @ C[:, : spec.p]


def evaluate_basis(spec: BasisSpec, times) -> BasisMatrix:
    """Evaluate the first ``spec.p`` basis functions at ``times``.

    Parameters
    ----------
    spec : BasisSpec
    times : array_like
        Strictly increasing points in [0, 1], at least two of them.

    Returns
    -------
    BasisMatrix
        ``values[:, l]`` is the (l+1)-th basis function at ``times``.

    Examples
    --------
    >>> evaluate_basis(BasisSpec("haar", 2), [0.25, 0.75]).values
    array([[ 1.,  1.],
           [ 1., -1.]])
    """
    t = check_times(times)
    if spec.family == "fourier":
        values = fourier_basis(t, spec.p)
    elif spec.family == "haar":
        values = haar_basis(t, spec.p, spec.haar_start_level)
    else:
        values = spline_basis(t, spec)
    return BasisMatrix(times=t, values=values)
