"""Interval-map descriptors, the Poincare model operator and distortion norms.

Every descriptor is an orientation-preserving homeomorphism between two
intervals with evaluators for the value, derivatives up to order three,
nonlinearity f''/f', Schwarzian derivative, and the Poincare model map
(the conjugate homeomorphism of the real line).

Accuracy is dominated by how endpoint gaps f(x) - f(lo) and f(hi) - f(x)
are computed: plain subtraction loses ~7 digits at the guard boundary, so
each closed-form variant supplies a factored ``difference`` that never
subtracts nearby values.  Model displacements are then accurate to a few
ulps across the whole guarded line.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ChainingError,
    CriticalPointError,
    DomainError,
    GuardClampWarning,
    InverseConvergenceError,
)
from .intervals import (
    EPS_GUARD,
    GUARD_LIMIT,
    Interval,
    guarded_grid,
    logit,
    sigmoid,
)

ENDPOINT_REL_TOL = 1e-10
_INVERSE_TOL = 1e-12  # absolute, in normalized coordinates


def _as_float(x):
    return float(x) if np.ndim(x) == 0 else x


class MapDescriptor:
    """Base of all interval-map variants.

    Subclasses must set ``domain`` and ``image`` (both Interval) and
    implement ``value``.  Everything else has generic fallbacks that the
    closed-form variants override with stable formulas.
    """

    domain: Interval
    image: Interval

    # -- evaluation ----------------------------------------------------

    def value(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def difference(self, x, y, dxy):
        """f(x) - f(y) for x >= y, with dxy = x - y supplied exactly."""
        return self.value(x) - self.value(y)

    def derivative(self, x, order: int = 1):
        raise NotImplementedError

    def log_derivative(self, x):
        d = self.derivative(x, 1)
        if np.any(np.asarray(d) <= 0.0):
            raise CriticalPointError("derivative not positive")
        return np.log(d)

    def nonlinearity(self, x):
        d1 = self.derivative(x, 1)
        if np.any(np.asarray(d1) <= 0.0):
            raise CriticalPointError("derivative not positive")
        return self.derivative(x, 2) / d1

    def schwarzian(self, x):
        d1 = self.derivative(x, 1)
        if np.any(np.asarray(d1) <= 0.0):
            raise CriticalPointError("derivative not positive")
        n = self.derivative(x, 2) / d1
        return self.derivative(x, 3) / d1 - 1.5 * n * n

    # -- inversion -----------------------------------------------------

    def inverse(self, y):
        """Preimage of y, by monotone bisection unless overridden."""
        J, I = self.image, self.domain
        if np.ndim(y) != 0:
            return np.array([self.inverse(float(t)) for t in y])
        if not (J.lo - 1e-12 * J.length <= y <= J.hi + 1e-12 * J.length):
            raise DomainError(f"{y} outside image ({J.lo}, {J.hi})")
        lo, hi = I.lo, I.hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.value(mid) < y:
                lo = mid
            else:
                hi = mid
            if hi - lo <= _INVERSE_TOL * I.length:
                return 0.5 * (lo + hi)
        raise InverseConvergenceError("bisection did not reach tolerance")

    def inverse_map(self) -> "MapDescriptor | None":
        """Inverse as a descriptor, when a closed form exists."""
        return None

    # -- restriction ---------------------------------------------------

    def restrict(self, sub: Interval) -> "MapDescriptor":
        raise NotImplementedError

    def _restricted_image(self, sub: Interval) -> Interval:
        v_lo = float(self.value(sub.lo))
        d = float(self.difference(sub.hi, sub.lo, sub.length))
        return Interval(v_lo, v_lo + d)

    # -- Poincare model ------------------------------------------------

    def model_displacement(self, g):
        """P(f)(g) - g on the line, via factored endpoint gaps."""
        u = sigmoid(g)
        w = sigmoid(-g)
        L = self.domain.length
        dx_lo = u * L
        dx_hi = w * L
        x = np.where(u <= 0.5, self.domain.lo + dx_lo, self.domain.hi - dx_hi)
        x = _as_float(x)
        glo = self.difference(x, self.domain.lo, dx_lo)
        ghi = self.difference(self.domain.hi, x, dx_hi)
        return np.log(glo) - np.log(ghi) - g

    def model(self, g):
        return g + self.model_displacement(g)

    def model_inverse(self, g):
        inv = self.inverse_map()
        if inv is not None:
            return inv.model(g)
        return _invert_line_map(self.model, g, self._displacement_bound())

    _disp_bound_cache: float | None = None

    def _displacement_bound(self) -> float:
        if self._disp_bound_cache is None:
            grid = guarded_grid(257)
            b = float(np.max(np.abs(self.model_displacement(grid))))
            self._disp_bound_cache = 1.5 * b + 1e-3
        return self._disp_bound_cache


def _invert_line_map(fn, target, bound: float):
    if np.ndim(target) != 0:
        return np.array([_invert_line_map(fn, float(t), bound) for t in target])
    lo, hi = target - bound, target + bound
    flo, fhi = fn(lo), fn(hi)
    grow = 0
    while flo > target or fhi < target:
        lo -= bound + 1.0
        hi += bound + 1.0
        flo, fhi = fn(lo), fn(hi)
        grow += 1
        if grow > 60:
            raise InverseConvergenceError("cannot bracket line-map inverse")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, abs(target)):
            break
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------
# concrete variants
# ----------------------------------------------------------------------


class AffineMap(MapDescriptor):
    def __init__(self, slope: float, intercept: float, domain: Interval):
        if slope <= 0:
            raise DomainError("affine slope must be positive")
        self.slope = float(slope)
        self.intercept = float(intercept)
        self.domain = domain
        self.image = Interval(slope * domain.lo + intercept, slope * domain.hi + intercept)

    @classmethod
    def between(cls, I: Interval, J: Interval) -> "AffineMap":
        slope = J.length / I.length
        return cls(slope, J.lo - slope * I.lo, I)

    @classmethod
    def identity(cls, I: Interval) -> "AffineMap":
        return cls(1.0, 0.0, I)

    def value(self, x):
        return self.slope * x + self.intercept

    def difference(self, x, y, dxy):
        return self.slope * dxy

    def derivative(self, x, order: int = 1):
        if order == 1:
            return self.slope * np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else self.slope
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    def log_derivative(self, x):
        v = math.log(self.slope)
        return v * np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else v

    def nonlinearity(self, x):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    schwarzian = nonlinearity

    def inverse(self, y):
        return (y - self.intercept) / self.slope

    def inverse_map(self):
        return AffineMap(1.0 / self.slope, -self.intercept / self.slope, self.image)

    def restrict(self, sub: Interval):
        return AffineMap(self.slope, self.intercept, sub)


def affine_normalizer(I: Interval) -> AffineMap:
    """The affine map from I onto (0, 1)."""
    return AffineMap.between(I, Interval(0.0, 1.0))


class LinearFractionalMap(MapDescriptor):
    """x -> (a x + b) / (c x + d) restricted to an interval avoiding the pole."""

    def __init__(self, coeffs: Sequence[float], domain: Interval):
        a, b, c, d = (float(t) for t in coeffs)
        scale = max(abs(a), abs(b), abs(c), abs(d))
        if scale == 0:
            raise DomainError("zero linear-fractional matrix")
        a, b, c, d = a / scale, b / scale, c / scale, d / scale
        self.a, self.b, self.c, self.d = a, b, c, d
        self.det = a * d - b * c
        if self.det == 0:
            raise DomainError("singular linear-fractional matrix")
        self.domain = domain
        den_lo = self.c * domain.lo + self.d
        den_hi = self.c * domain.hi + self.d
        if den_lo * den_hi <= 0:
            raise DomainError("pole inside domain")
        if self.det <= 0:
            raise DomainError("orientation-reversing linear-fractional map")
        self.image = Interval(self.value(domain.lo), self.value(domain.hi))

    @classmethod
    def from_matrix(cls, m, domain: Interval) -> "LinearFractionalMap":
        return cls((m[0][0], m[0][1], m[1][0], m[1][1]), domain)

    @classmethod
    def from_three_points(cls, xs, ys, domain: Interval) -> "LinearFractionalMap":
        """Unique Moebius map sending xs[i] -> ys[i] (both increasing triples)."""
        x1, x2, x3 = xs
        y1, y2, y3 = ys
        mx = ((x2 - x3, -x1 * (x2 - x3)), (x2 - x1, -x3 * (x2 - x1)))
        my = ((y2 - y3, -y1 * (y2 - y3)), (y2 - y1, -y3 * (y2 - y1)))
        my_inv = ((my[1][1], -my[0][1]), (-my[1][0], my[0][0]))
        m = _matmul(my_inv, mx)
        return cls((m[0][0], m[0][1], m[1][0], m[1][1]), domain)

    @classmethod
    def from_displacement(cls, I: Interval, J: Interval, delta: float) -> "LinearFractionalMap":
        """Moebius map I -> J whose Poincare model is translation by delta."""
        e = math.exp(delta)
        n01 = ((e, 0.0), (e - 1.0, 1.0))
        a_in = ((1.0 / I.length, -I.lo / I.length), (0.0, 1.0))
        a_out = ((J.length, J.lo), (0.0, 1.0))
        return cls.from_matrix(_matmul(a_out, _matmul(n01, a_in)), I)

    def _den(self, x):
        return self.c * x + self.d

    def value(self, x):
        return (self.a * x + self.b) / self._den(x)

    def difference(self, x, y, dxy):
        return self.det * dxy / (self._den(x) * self._den(y))

    def derivative(self, x, order: int = 1):
        den = self._den(x)
        if order == 1:
            return self.det / den**2
        if order == 2:
            return -2.0 * self.c * self.det / den**3
        if order == 3:
            return 6.0 * self.c**2 * self.det / den**4
        raise ValueError("order must be 1, 2 or 3")

    def log_derivative(self, x):
        return math.log(self.det) - 2.0 * np.log(np.abs(self._den(x)))

    def nonlinearity(self, x):
        return -2.0 * self.c / self._den(x)

    def schwarzian(self, x):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    def inverse(self, y):
        return (self.d * y - self.b) / (-self.c * y + self.a)

    def inverse_map(self):
        return LinearFractionalMap((self.d, -self.b, -self.c, self.a), self.image)

    def restrict(self, sub: Interval):
        return LinearFractionalMap((self.a, self.b, self.c, self.d), sub)

    def model_displacement(self, g):
        u = sigmoid(g)
        w = sigmoid(-g)
        L = self.domain.length
        dx_lo = u * L
        dx_hi = w * L
        x = _as_float(np.where(u <= 0.5, self.domain.lo + dx_lo, self.domain.hi - dx_hi))
        den = self._den(x)
        glo = self.det * dx_lo / (den * self._den(self.domain.lo))
        ghi = self.det * dx_hi / (self._den(self.domain.hi) * den)
        return np.log(glo) - np.log(ghi) - g

    @property
    def translation_displacement(self) -> float:
        """The constant value of P(f) - id."""
        return float(self.model_displacement(0.0))


def _matmul(m, n):
    return (
        (m[0][0] * n[0][0] + m[0][1] * n[1][0], m[0][0] * n[0][1] + m[0][1] * n[1][1]),
        (m[1][0] * n[0][0] + m[1][1] * n[1][0], m[1][0] * n[0][1] + m[1][1] * n[1][1]),
    )


def _det(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


class ConstantNonlinearityMap(MapDescriptor):
    """The unique map domain -> image with f''/f' identically equal to n."""

    def __init__(self, n: float, domain: Interval, image: Interval):
        self.n = float(n)
        self.domain = domain
        self.image = image

    @property
    def _nhat(self) -> float:
        return self.n * self.domain.length

    def _ratio(self, dx):
        # expm1(n dx) / expm1(n L), the normalized image coordinate of lo+dx
        if self.n == 0.0:
            return dx / self.domain.length
        return np.expm1(self.n * dx) / math.expm1(self._nhat)

    def value(self, x):
        return self.image.lo + self.image.length * self._ratio(x - self.domain.lo)

    def difference(self, x, y, dxy):
        if self.n == 0.0:
            return self.image.length * dxy / self.domain.length
        return (
            self.image.length
            * np.exp(self.n * (y - self.domain.lo))
            * np.expm1(self.n * dxy)
            / math.expm1(self._nhat)
        )

    def _d1(self, x):
        if self.n == 0.0:
            return self.image.length / self.domain.length
        return (
            self.image.length
            * self.n
            * np.exp(self.n * (x - self.domain.lo))
            / math.expm1(self._nhat)
        )

    def derivative(self, x, order: int = 1):
        d1 = self._d1(x)
        if order == 1:
            return d1
        if order == 2:
            return self.n * d1
        if order == 3:
            return self.n * self.n * d1
        raise ValueError("order must be 1, 2 or 3")

    def log_derivative(self, x):
        if self.n == 0.0:
            return math.log(self.image.length / self.domain.length) + 0.0 * np.asarray(x)
        base = math.log(self.image.length * self.n / math.expm1(self._nhat))
        return base + self.n * (x - self.domain.lo)

    def nonlinearity(self, x):
        return self.n + 0.0 * np.asarray(x) if np.ndim(x) else self.n

    def schwarzian(self, x):
        s = -0.5 * self.n * self.n
        return s + 0.0 * np.asarray(x) if np.ndim(x) else s

    def inverse(self, y):
        if self.n == 0.0:
            return self.domain.lo + (y - self.image.lo) * self.domain.length / self.image.length
        t = (y - self.image.lo) * math.expm1(self._nhat) / self.image.length
        return self.domain.lo + np.log1p(t) / self.n

    def restrict(self, sub: Interval):
        return ConstantNonlinearityMap(self.n, sub, self._restricted_image(sub))

    def model_displacement(self, g):
        nh = self._nhat
        if nh == 0.0:
            return 0.0 * np.asarray(g) if np.ndim(g) else 0.0
        u = sigmoid(g)
        w = sigmoid(-g)
        return (
            np.log(np.abs(np.expm1(nh * u)))
            - nh * u
            - np.log(np.abs(np.expm1(nh * w)))
            - g
        )


class PowerLawMap(MapDescriptor):
    """x -> x**beta + offset on a domain with nonnegative left endpoint."""

    def __init__(self, beta: float, offset: float, domain: Interval):
        if domain.lo < 0:
            raise DomainError("power-law domain must lie in [0, inf)")
        if beta <= 0:
            raise DomainError("power-law exponent must be positive")
        self.beta = float(beta)
        self.offset = float(offset)
        self.domain = domain
        self.image = Interval(domain.lo**beta + offset, domain.hi**beta + offset)

    def value(self, x):
        return np.power(x, self.beta) + self.offset

    def difference(self, x, y, dxy):
        b = self.beta
        if np.ndim(y) == 0 and y == 0.0:
            return np.power(x, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            factored = np.power(y, b) * np.expm1(b * np.log1p(dxy / y))
            plain = np.power(x, b)
        return _as_float(np.where(np.asarray(y) > 0.0, factored, plain))

    def derivative(self, x, order: int = 1):
        b = self.beta
        if order == 1:
            return b * np.power(x, b - 1.0)
        if order == 2:
            return b * (b - 1.0) * np.power(x, b - 2.0)
        if order == 3:
            return b * (b - 1.0) * (b - 2.0) * np.power(x, b - 3.0)
        raise ValueError("order must be 1, 2 or 3")

    def log_derivative(self, x):
        if np.any(np.asarray(x) <= 0.0):
            raise CriticalPointError("power-law derivative vanishes at 0")
        return math.log(self.beta) + (self.beta - 1.0) * np.log(x)

    def nonlinearity(self, x):
        if np.any(np.asarray(x) <= 0.0):
            raise CriticalPointError("power-law nonlinearity undefined at 0")
        return (self.beta - 1.0) / x

    def schwarzian(self, x):
        if np.any(np.asarray(x) <= 0.0):
            raise CriticalPointError("power-law Schwarzian undefined at 0")
        return (1.0 - self.beta**2) / (2.0 * x * x)

    def inverse(self, y):
        return np.power(y - self.offset, 1.0 / self.beta)

    def restrict(self, sub: Interval):
        return PowerLawMap(self.beta, self.offset, sub)


class SmoothSampledMap(MapDescriptor):
    """Map given by callbacks; finite differences fill in missing derivatives.

    ``diff_fn(x, y, dxy)`` should return f(x) - f(y) using the exactly
    supplied gap dxy = x - y; it is what keeps Poincare-model evaluations
    accurate near the endpoints and it survives restriction.
    """

    FD_STEP = 1e-5
    FD_STEP3 = 1e-4  # third differences need a larger step

    def __init__(
        self,
        domain: Interval,
        value_fn: Callable,
        image: Interval | None = None,
        derivs: tuple | None = None,
        inverse_fn: Callable | None = None,
        diff_fn: Callable | None = None,
        inverse_descriptor: "MapDescriptor | None" = None,
        name: str = "",
    ):
        self.domain = domain
        self.value_fn = value_fn
        self.derivs = derivs
        self.inverse_fn = inverse_fn
        self.diff_fn = diff_fn
        self._inverse_descriptor = inverse_descriptor
        self.name = name
        if image is None:
            if diff_fn is not None:
                v_lo = float(value_fn(domain.lo))
                image = Interval(v_lo, v_lo + float(diff_fn(domain.hi, domain.lo, domain.length)))
            else:
                image = Interval(float(value_fn(domain.lo)), float(value_fn(domain.hi)))
        self.image = image

    def value(self, x):
        return self.value_fn(x)

    def difference(self, x, y, dxy):
        if self.diff_fn is not None:
            return self.diff_fn(x, y, dxy)
        return self.value_fn(x) - self.value_fn(y)

    def derivative(self, x, order: int = 1):
        if self.derivs is not None and self.derivs[order - 1] is not None:
            return self.derivs[order - 1](x)
        L = self.domain.length
        if order in (1, 2):
            h = self.FD_STEP * L
            xc = np.clip(x, self.domain.lo + h, self.domain.hi - h)
            if order == 1:
                return (self.value_fn(xc + h) - self.value_fn(xc - h)) / (2.0 * h)
            return (self.value_fn(xc + h) - 2.0 * self.value_fn(xc) + self.value_fn(xc - h)) / (h * h)
        if order == 3:
            h = self.FD_STEP3 * L
            xc = np.clip(x, self.domain.lo + 2 * h, self.domain.hi - 2 * h)
            return (
                self.value_fn(xc + 2 * h)
                - 2.0 * self.value_fn(xc + h)
                + 2.0 * self.value_fn(xc - h)
                - self.value_fn(xc - 2 * h)
            ) / (2.0 * h**3)
        raise ValueError("order must be 1, 2 or 3")

    def inverse(self, y):
        if self.inverse_fn is not None:
            return self.inverse_fn(y)
        return super().inverse(y)

    def inverse_map(self):
        if self._inverse_descriptor is not None:
            return self._inverse_descriptor
        if self.inverse_fn is None:
            return None
        return SmoothSampledMap(
            self.image,
            self.inverse_fn,
            image=self.domain,
            inverse_fn=self.value_fn,
            name=f"{self.name}^-1" if self.name else "",
        )

    def restrict(self, sub: Interval):
        if self.diff_fn is not None:
            v_lo = float(self.value_fn(sub.lo))
            image = Interval(v_lo, v_lo + float(self.diff_fn(sub.hi, sub.lo, sub.length)))
        else:
            image = Interval(float(self.value_fn(sub.lo)), float(self.value_fn(sub.hi)))
        return SmoothSampledMap(
            sub,
            self.value_fn,
            image=image,
            derivs=self.derivs,
            inverse_fn=self.inverse_fn,
            diff_fn=self.diff_fn,
            name=self.name,
        )


class CompositionMap(MapDescriptor):
    """stages[k-1] o ... o stages[0], with validated chaining."""

    def __init__(self, stages: Sequence[MapDescriptor]):
        if not stages:
            raise ChainingError("empty composition")
        for i in range(len(stages) - 1):
            im, dom = stages[i].image, stages[i + 1].domain
            tol = ENDPOINT_REL_TOL * max(im.length, dom.length)
            if abs(im.lo - dom.lo) > tol or abs(im.hi - dom.hi) > tol:
                raise ChainingError(
                    f"stage {i} image ({im.lo}, {im.hi}) != stage {i+1} domain ({dom.lo}, {dom.hi})"
                )
        self.stages = list(stages)
        self.domain = stages[0].domain
        self.image = stages[-1].image

    def value(self, x):
        for st in self.stages:
            x = st.value(x)
        return x

    def difference(self, x, y, dxy):
        for st in self.stages:
            dxy = st.difference(x, y, dxy)
            x, y = st.value(x), st.value(y)
        return dxy

    def derivative(self, x, order: int = 1):
        d1, nl, sw = self._chain_data(x)
        if order == 1:
            return d1
        if order == 2:
            return nl * d1
        if order == 3:
            return (sw + 1.5 * nl * nl) * d1
        raise ValueError("order must be 1, 2 or 3")

    def _chain_data(self, x):
        """(f', f''/f', Sf) accumulated along the orbit of x."""
        dprod = 1.0
        nl = 0.0
        sw = 0.0
        for st in self.stages:
            nl = nl + st.nonlinearity(x) * dprod
            sw = sw + st.schwarzian(x) * dprod * dprod
            dprod = dprod * st.derivative(x, 1)
            x = st.value(x)
        return dprod, nl, sw

    def log_derivative(self, x):
        total = 0.0
        for st in self.stages:
            total = total + st.log_derivative(x)
            x = st.value(x)
        return total

    def nonlinearity(self, x):
        return self._chain_data(x)[1]

    def schwarzian(self, x):
        return self._chain_data(x)[2]

    def inverse(self, y):
        for st in reversed(self.stages):
            y = st.inverse(y)
        return y

    def inverse_map(self):
        invs = []
        for st in reversed(self.stages):
            im = st.inverse_map()
            if im is None:
                return None
            invs.append(im)
        return CompositionMap(invs)

    def restrict(self, sub: Interval):
        pieces = []
        cur = sub
        for st in self.stages:
            r = st.restrict(cur)
            pieces.append(r)
            cur = r.image
        return CompositionMap(pieces)

    def model_displacement(self, g):
        g0 = g
        for st in self.stages:
            g = g + st.model_displacement(g)
        return g - g0

    def model_inverse(self, g):
        for st in reversed(self.stages):
            g = st.model_inverse(g)
        return g


def relocate(m: MapDescriptor, new_domain: Interval, new_image: Interval) -> CompositionMap:
    """Conjugate m by affine maps so it runs new_domain -> new_image."""
    pre = AffineMap.between(new_domain, m.domain)
    post = AffineMap.between(m.image, new_image)
    return CompositionMap([pre, m, post])


# ----------------------------------------------------------------------
# operators
# ----------------------------------------------------------------------


def evaluate(m: MapDescriptor, x):
    closed = (np.asarray(x) >= m.domain.lo) & (np.asarray(x) <= m.domain.hi)
    if not np.all(closed):
        raise DomainError(f"{x} outside closed domain ({m.domain.lo}, {m.domain.hi})")
    return m.value(x)


def nonlinearity(m: MapDescriptor, x):
    if not np.all((np.asarray(x) > m.domain.lo) & (np.asarray(x) < m.domain.hi)):
        raise DomainError("nonlinearity needs interior points")
    return m.nonlinearity(x)


def schwarzian(m: MapDescriptor, x):
    if not np.all((np.asarray(x) > m.domain.lo) & (np.asarray(x) < m.domain.hi)):
        raise DomainError("schwarzian needs interior points")
    return m.schwarzian(x)


def nonlinearity_integral(m: MapDescriptor, J: Interval):
    """Integral of f''/f' over J: telescopes to log f'(J.hi) - log f'(J.lo)."""
    if not m.domain.contains_interval(J, tol=1e-9):
        raise DomainError("integration interval exceeds the domain")
    return float(m.log_derivative(J.hi) - m.log_derivative(J.lo))


def poincare_model(m: MapDescriptor, g, clamp: bool = True):
    """Value of the Poincare model map of m at line coordinate g."""
    over = np.any(np.abs(np.asarray(g, dtype=float)) > GUARD_LIMIT)
    if over:
        if clamp:
            warnings.warn(
                "line coordinate beyond the guarded range was clamped",
                GuardClampWarning,
                stacklevel=2,
            )
            g = np.clip(g, -GUARD_LIMIT, GUARD_LIMIT)
            g = _as_float(g)
        else:
            raise DomainError("line coordinate beyond the guarded range")
    return m.model(g)


def sup_on_line(fn: Callable, grid: int = 4096, refine: int = 64) -> float:
    """Sup of |fn| over the guarded grid with one refinement pass."""
    gs = guarded_grid(grid)
    vals = np.abs(np.asarray(fn(gs), dtype=float))
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo = gs[max(i - 1, 0)]
    hi = gs[min(i + 1, grid - 1)]
    fine = np.linspace(lo, hi, refine)
    vals2 = np.abs(np.asarray(fn(fine), dtype=float))
    return max(best, float(np.max(vals2)))


def distortion_norm(m: MapDescriptor, grid: int = 4096, refine: int = 64) -> float:
    """C0 distance of the Poincare model of m from the identity (guarded sup)."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    return sup_on_line(m.model_displacement, grid=grid, refine=refine)


def classical_distortion_norm(m: MapDescriptor, grid: int = 2048) -> float:
    """sup over pairs of |log f'(x)/f'(y)| = max log f' - min log f'."""
    xs = np.linspace(m.domain.lo, m.domain.hi, grid)
    d1 = np.asarray(m.derivative(xs, 1), dtype=float)
    if np.any(d1 <= 0.0):
        raise CriticalPointError("derivative not positive on the closed domain")
    ld = np.asarray(m.log_derivative(xs), dtype=float)
    return float(np.max(ld) - np.min(ld))


def rho(m: MapDescriptor, x: float, y: float) -> float:
    """Image length over preimage length for the subinterval (x, y)."""
    if not (m.domain.contains(x) and m.domain.contains(y)) or not x < y:
        raise DomainError("need domain points x < y")
    return float(m.difference(y, x, y - x)) / (y - x)


class KoebeReport:
    """Grid certificates for the distortion bounds of nonnegative-Schwarzian maps."""

    def __init__(self, precondition_ok, min_schwarzian, nonlinearity_ratio, derivative_ratio, tol):
        self.precondition_ok = precondition_ok
        self.min_schwarzian = min_schwarzian
        self.nonlinearity_ratio = nonlinearity_ratio
        self.derivative_ratio = derivative_ratio
        self.tol = tol

    @property
    def passed(self) -> bool:
        return bool(
            self.precondition_ok
            and self.nonlinearity_ratio <= 1.0 + self.tol
            and self.derivative_ratio <= 1.0 + self.tol
        )

    def __repr__(self):
        return (
            f"KoebeReport(precondition_ok={self.precondition_ok}, "
            f"nonlinearity_ratio={self.nonlinearity_ratio:.6g}, "
            f"derivative_ratio={self.derivative_ratio:.6g}, passed={self.passed})"
        )


def koebe_check(m: MapDescriptor, grid: int = 512, tol: float = 1e-6) -> KoebeReport:
    """Check |f''/f'| <= 2/min(x-a, d-x) and its integrated two-point form.

    Requires nonnegative Schwarzian on the domain; a violation found on the
    grid is reported through ``precondition_ok`` rather than raised.
    """
    a, d = m.domain.lo, m.domain.hi
    L = m.domain.length
    xs = np.linspace(a + 1e-9 * L, d - 1e-9 * L, grid)
    sw = np.asarray(m.schwarzian(xs), dtype=float)
    min_sw = float(np.min(sw))
    precondition_ok = min_sw >= -1e-9 * max(1.0, float(np.max(np.abs(sw))))
    nl = np.abs(np.asarray(m.nonlinearity(xs), dtype=float))
    edge = np.minimum(xs - a, d - xs)
    ratio1 = float(np.max(nl * edge / 2.0))

    # pair form on a coarser grid
    n2 = min(grid, 128)
    ys = np.linspace(a + 1e-6 * L, d - 1e-6 * L, n2)
    ld = np.asarray(m.log_derivative(ys), dtype=float)
    yi = ys[:, None]
    zj = ys[None, :]
    mask = zj > yi
    num = np.abs(ld[None, :] - ld[:, None])
    log_cr = np.abs(
        np.log(((yi - a) * (d - zj)) / ((zj - a) * (d - yi)))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(mask & (log_cr > 1e-12), num / (2.0 * log_cr), 0.0)
    ratio2 = float(np.max(ratios))
    return KoebeReport(precondition_ok, min_sw, ratio1, ratio2, tol)


# ----------------------------------------------------------------------
# closed-form factories
# ----------------------------------------------------------------------


def scaled_tangent_map(domain: Interval, image: Interval, c1: float, c2: float) -> SmoothSampledMap:
    """Conjugate of tan on (c1, c2) in (-pi/2, pi/2): Schwarzian 2*p^2 > 0."""
    if not (-math.pi / 2 < c1 < c2 < math.pi / 2):
        raise DomainError("tangent window must sit inside (-pi/2, pi/2)")
    p = (c2 - c1) / domain.length
    t1, t2 = math.tan(c1), math.tan(c2)
    alpha = image.length / (t2 - t1)
    beta = image.lo - alpha * t1

    def u_of(x):
        return c1 + p * (x - domain.lo)

    def value(x):
        return alpha * np.tan(u_of(x)) + beta

    def diff(x, y, dxy):
        ux, uy = u_of(x), u_of(y)
        return alpha * np.sin(p * dxy) / (np.cos(ux) * np.cos(uy))

    def d1(x):
        t = np.tan(u_of(x))
        return alpha * p * (1.0 + t * t)

    def d2(x):
        t = np.tan(u_of(x))
        return alpha * p * p * 2.0 * t * (1.0 + t * t)

    def d3(x):
        t = np.tan(u_of(x))
        return alpha * p**3 * 2.0 * (1.0 + t * t) * (1.0 + 3.0 * t * t)

    def inverse(y):
        return domain.lo + (np.arctan((y - beta) / alpha) - c1) / p

    def inv_diff(y1, y2, dy):
        # arctan(s1) - arctan(s2) factored, with the branch for s1*s2 < -1
        s1 = (y1 - beta) / alpha
        s2 = (y2 - beta) / alpha
        den = 1.0 + s1 * s2
        d = np.arctan((dy / alpha) / den)
        d = np.where(den < 0.0, d + math.pi, d)
        return _as_float(d) / p

    def inv_d1(y):
        s = (y - beta) / alpha
        return 1.0 / (alpha * p * (1.0 + s * s))

    inverse_descriptor = SmoothSampledMap(
        image,
        inverse,
        image=domain,
        derivs=(inv_d1, None, None),
        inverse_fn=value,
        diff_fn=inv_diff,
        name="tangent^-1",
    )
    return SmoothSampledMap(
        domain,
        value,
        image=image,
        derivs=(d1, d2, d3),
        inverse_fn=inverse,
        diff_fn=diff,
        inverse_descriptor=inverse_descriptor,
        name="tangent",
    )


def cubic_perturbation_map(
    domain: Interval, eps: float, c0: float, c1: float
) -> SmoothSampledMap:
    """x + eps*x(1-x)(c0+c1 x) on (0,1), relocated to ``domain`` -> itself.

    Stage differences are fully factored, so Poincare-model values stay
    accurate at the guard boundary.  Requires |eps|*(|c0|+|c1|) < 1.
    """
    if abs(eps) * (abs(c0) + abs(c1)) >= 1.0:
        raise DomainError("perturbation too large to stay monotone")

    # p(x) = c0 x + (c1-c0) x^2 - c1 x^3 on (0,1)
    def p(x):
        return x * (1.0 - x) * (c0 + c1 * x)

    def q(x, y):
        # (p(x)-p(y))/(x-y)
        return c0 + (c1 - c0) * (x + y) - c1 * (x * x + x * y + y * y)

    A = domain.lo
    L = domain.length

    def unit(x):
        return (x - A) / L

    def value(x):
        t = unit(x)
        return A + L * (t + eps * p(t))

    def diff(x, y, dxy):
        tx, ty = unit(x), unit(y)
        dt = dxy / L
        return L * dt * (1.0 + eps * q(tx, ty))

    def d1(x):
        t = unit(x)
        return 1.0 + eps * (c0 + 2.0 * (c1 - c0) * t - 3.0 * c1 * t * t)

    def d2(x):
        t = unit(x)
        return eps * (2.0 * (c1 - c0) - 6.0 * c1 * t) / L

    def d3(x):
        return eps * (-6.0 * c1) / L**2 + 0.0 * np.asarray(x)

    return SmoothSampledMap(
        domain,
        value,
        image=domain,
        derivs=(d1, d2, d3),
        diff_fn=diff,
        name="cubic-perturbation",
    )
