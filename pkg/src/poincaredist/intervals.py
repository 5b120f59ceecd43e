"""Cross-ratio and Poincare-coordinate primitives on real intervals.

An open interval carries a hyperbolic metric in which it is isometric to
the whole real line; the isometry is -log of a cross-ratio anchored at the
midpoint.  All distortion measurements in this package are phrased in the
resulting line coordinate, so the primitives here are the foundation of
everything else.

Numerical conventions:

* every grid evaluation is guarded away from the endpoints, where the
  coordinate has a log singularity: normalized coordinates are restricted
  to [EPS_GUARD, 1 - EPS_GUARD];
* a quadruple is rejected as degenerate when any gap is smaller than
  DEGENERACY_REL times its total span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQuadrupleError, DomainError

EPS_GUARD = 1e-9
#: largest |line coordinate| kept by the guard: logit(1 - EPS_GUARD)
GUARD_LIMIT = math.log((1.0 - EPS_GUARD) / EPS_GUARD)
DEGENERACY_REL = 1e-13


def sigmoid(g):
    """Inverse of the (0,1) Poincare coordinate: g -> u in (0,1)."""
    return 1.0 / (1.0 + np.exp(-g))


def logit(u):
    """(0,1) Poincare coordinate of u."""
    return np.log(u) - np.log1p(-u)


def guarded_grid(n: int) -> np.ndarray:
    """n line coordinates covering the guarded range symmetrically."""
    if n < 2:
        raise ValueError("grid needs at least 2 points")
    return np.linspace(-GUARD_LIMIT, GUARD_LIMIT, n)


@dataclass(frozen=True)
class Interval:
    """Nonempty open interval (lo, hi) of the real line."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise DomainError(f"empty interval ({self.lo}, {self.hi})")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError("interval endpoints must be finite")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, strict: bool = False, tol: float = 0.0):
        pad = tol * self.length
        if strict:
            return (x > self.lo + pad) & (x < self.hi - pad)
        return (x >= self.lo - pad) & (x <= self.hi + pad)

    def contains_interval(self, other: "Interval", tol: float = 1e-12) -> bool:
        pad = tol * self.length
        return other.lo >= self.lo - pad and other.hi <= self.hi + pad

    def normalized(self, x):
        """Affine coordinate u in [0,1] of x."""
        return (x - self.lo) / self.length

    def denormalized(self, u):
        return self.lo + u * self.length


@dataclass(frozen=True)
class PointQuadruple:
    """Four strictly increasing collinear points."""

    p1: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self):
        span = self.p4 - self.p1
        if span <= 0:
            raise DegenerateQuadrupleError("quadruple not increasing")
        thr = DEGENERACY_REL * span
        for a, b in ((self.p1, self.p2), (self.p2, self.p3), (self.p3, self.p4)):
            if b - a < thr:
                raise DegenerateQuadrupleError(
                    f"gap {b - a:g} below degeneracy threshold {thr:g}"
                )

    def as_tuple(self):
        return (self.p1, self.p2, self.p3, self.p4)


def cross_ratio(q: PointQuadruple) -> float:
    """((p2-p1)(p4-p3)) / ((p3-p1)(p4-p2)); in (0,1) for increasing points."""
    a, b, c, d = q.as_tuple()
    return ((b - a) * (d - c)) / ((c - a) * (d - b))


def cross_ratio_alt(q: PointQuadruple) -> float:
    """((p4-p3)(p2-p1)) / ((p3-p2)(p4-p1)): flank gaps over middle-times-span."""
    a, b, c, d = q.as_tuple()
    return ((d - c) * (b - a)) / ((c - b) * (d - a))


def _require_interior(I: Interval, x) -> None:
    inside = (x > I.lo) & (x < I.hi)
    if not np.all(inside):
        raise DomainError(f"point {x} not strictly inside ({I.lo}, {I.hi})")


def poincare_coordinate(I: Interval, x):
    """Line coordinate of x in I: 0 at the midpoint, +-inf at the endpoints.

    Equals -log Cr(lo, midpoint, x, hi), which reduces to log(u/(1-u)) in
    the affine coordinate u.
    """
    _require_interior(I, x)
    u = I.normalized(x)
    return logit(u)


def poincare_inverse_coordinate(I: Interval, g):
    """Point of I whose line coordinate is g."""
    return I.denormalized(sigmoid(g))


def poincare_distance(I: Interval, x, y):
    """Hyperbolic distance |log Cr(lo, x, y, hi)| between interior points."""
    _require_interior(I, x)
    _require_interior(I, y)
    return np.abs(poincare_coordinate(I, y) - poincare_coordinate(I, x))
