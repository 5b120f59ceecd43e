"""Standard compositions and the uniform bounded-distortion estimate.

A standard composition alternates bounded-distortion stages h_i with
nonnegative-Schwarzian stages sigma_i, all chained.  Two "norms" control
its joint distortion on subintervals: d1, the total cross-ratio
contraction deficit of the h stages (nonpositive), and d2, the summed
Poincare distortion of the h stages.  After the splitting normalization
every h stage has distortion at most log 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ChainingError, DomainError, SurrogateOverflowError
from .intervals import Interval, PointQuadruple, cross_ratio, logit, sigmoid
from .maps import (
    AffineMap,
    CompositionMap,
    LinearFractionalMap,
    MapDescriptor,
    SmoothSampledMap,
    _invert_line_map,
    distortion_norm,
    sup_on_line,
)

LOG2 = math.log(2.0)
SCHWARZIAN_GRID = 129
SCHWARZIAN_SLACK = 1e-7


class StandardComposition:
    """Ordered stages [(h_1, sigma_1), ..., (h_m, sigma_m)], chained."""

    def __init__(self, stages: Sequence[tuple[MapDescriptor, MapDescriptor]], check_schwarzian: bool = True):
        if not stages:
            raise ChainingError("a standard composition needs at least one stage")
        flat: list[MapDescriptor] = []
        for h, s in stages:
            flat.extend((h, s))
        self._flat = CompositionMap(flat)  # validates all the chaining
        self.stages = [(h, s) for h, s in stages]
        if check_schwarzian:
            for k, (_, s) in enumerate(self.stages):
                xs = np.linspace(
                    s.domain.lo + 1e-7 * s.domain.length,
                    s.domain.hi - 1e-7 * s.domain.length,
                    SCHWARZIAN_GRID,
                )
                sw = np.asarray(s.schwarzian(xs), dtype=float)
                scale = max(1.0, float(np.max(np.abs(sw))))
                if float(np.min(sw)) < -SCHWARZIAN_SLACK * scale:
                    raise ChainingError(
                        f"sigma stage {k} has negative Schwarzian ({float(np.min(sw)):.3g})"
                    )

    @property
    def m(self) -> int:
        return len(self.stages)

    @property
    def domain(self) -> Interval:
        return self._flat.domain

    @property
    def image(self) -> Interval:
        return self._flat.image

    def composed_map(self) -> CompositionMap:
        return self._flat

    def h_norms(self, grid: int = 4096) -> list[float]:
        return [distortion_norm(h, grid=grid) for h, _ in self.stages]

    def is_normalized(self, cap: float = LOG2, grid: int = 1024) -> bool:
        return max(self.h_norms(grid=grid)) <= cap + 1e-9

    def reflected(self) -> "StandardComposition":
        """Conjugate of the composition by x -> -x (reverses the line)."""
        return StandardComposition(
            [(reflect_map(h), reflect_map(s)) for h, s in self.stages],
            check_schwarzian=False,
        )


def reflect_map(m: MapDescriptor) -> SmoothSampledMap:
    """neg o m o neg: orientation-preserving mirror image of m."""
    dom = Interval(-m.domain.hi, -m.domain.lo)
    img = Interval(-m.image.hi, -m.image.lo)
    return SmoothSampledMap(
        dom,
        lambda x: -m.value(-x),
        image=img,
        derivs=(
            lambda x: m.derivative(-x, 1),
            lambda x: -m.derivative(-x, 2),
            lambda x: m.derivative(-x, 3),
        ),
        inverse_fn=lambda y: -m.inverse(-y),
        diff_fn=lambda x, y, dxy: m.difference(-y, -x, dxy),
        name="reflected",
    )


# ----------------------------------------------------------------------
# the two composition norms
# ----------------------------------------------------------------------


def d2_norm(c: StandardComposition, grid: int = 4096) -> float:
    """Sum of the Poincare distortion norms of the h stages."""
    return float(sum(c.h_norms(grid=grid)))


def _quad_log_distortion(h: MapDescriptor, pts: np.ndarray) -> np.ndarray:
    """log of the flank-over-middle cross-ratio distortion of h on quadruples.

    pts has shape (M, 4) with increasing rows inside h's domain.
    """
    a, b, cc, d = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    hd_c = h.difference(d, cc, d - cc)
    hb_a = h.difference(b, a, b - a)
    hc_b = h.difference(cc, b, cc - b)
    hd_a = h.difference(d, a, d - a)
    return (
        np.log(hd_c)
        + np.log(hb_a)
        - np.log(hc_b)
        - np.log(hd_a)
        - (np.log(d - cc) + np.log(b - a) - np.log(cc - b) - np.log(d - a))
    )


def _polish_quadruple(h: MapDescriptor, quad: np.ndarray, sweeps: int = 2) -> float:
    """Coordinate-wise golden-section descent from a seed quadruple."""
    I = h.domain
    eps = 1e-9 * I.length
    q = quad.astype(float).copy()
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0

    def val(qq):
        return float(_quad_log_distortion(h, qq[None, :])[0])

    best = val(q)
    for _ in range(sweeps):
        for j in range(4):
            lo = I.lo + eps if j == 0 else q[j - 1] + eps
            hi = I.hi - eps if j == 3 else q[j + 1] - eps
            if hi <= lo:
                continue
            a, b = lo, hi
            x1 = b - inv_phi * (b - a)
            x2 = a + inv_phi * (b - a)
            qq = q.copy()
            qq[j] = x1
            f1 = val(qq)
            qq[j] = x2
            f2 = val(qq)
            for _ in range(40):
                if f1 < f2:
                    b, x2, f2 = x2, x1, f1
                    x1 = b - inv_phi * (b - a)
                    qq[j] = x1
                    f1 = val(qq)
                else:
                    a, x1, f1 = x1, x2, f2
                    x2 = a + inv_phi * (b - a)
                    qq[j] = x2
                    f2 = val(qq)
            cand = x1 if f1 < f2 else x2
            qq[j] = cand
            v = val(qq)
            if v < best:
                best = v
                q = qq
    return best


def _stage_d1_inf(
    h: MapDescriptor,
    samples: int,
    rng: np.random.Generator,
    grid_points: int,
    polish: bool,
) -> float:
    I = h.domain
    lo, hi = I.lo, I.hi
    best_val = 0.0
    best_quad: np.ndarray | None = None

    if samples > 0:
        u = rng.random((samples, 4))
        u[:, 0] = (np.arange(samples) + u[:, 0]) / samples  # stratify one axis
        u = np.sort(u, axis=1)
        pts = lo + (hi - lo) * u
        gaps = np.diff(pts, axis=1).min(axis=1)
        keep = gaps > 1e-12 * (hi - lo)
        pts = pts[keep]
        vals = _quad_log_distortion(h, pts)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_quad = pts[i]

    if grid_points >= 4:
        base = np.linspace(lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo), grid_points)
        idx = np.array(list(itertools.combinations(range(grid_points), 4)))
        pts = base[idx]
        vals = _quad_log_distortion(h, pts)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_quad = pts[i]

    if polish and best_quad is not None:
        best_val = min(best_val, _polish_quadruple(h, best_quad))
    return min(0.0, best_val)


def d1_norm(
    c: StandardComposition,
    samples: int = 100_000,
    seed: int = 0,
    grid_points: int = 20,
    polish: bool = True,
) -> float:
    """Summed infima (truncated at zero) of the cross-ratio contraction of h stages.

    Monte-Carlo over stratified random quadruples plus a combination grid,
    then a local golden-section polish; deterministic for a fixed seed.
    Always <= 0.
    """
    total = 0.0
    for i, (h, _) in enumerate(c.stages):
        rng = np.random.default_rng([seed, i])
        total += _stage_d1_inf(h, samples, rng, grid_points, polish)
    return total


# ----------------------------------------------------------------------
# splitting normalization
# ----------------------------------------------------------------------


class LineModelMap(MapDescriptor):
    """Interval map defined by a prescribed Poincare line model."""

    def __init__(self, domain: Interval, image: Interval, line_fn: Callable, name: str = ""):
        self.domain = domain
        self.image = image
        self.line_fn = line_fn
        self.name = name

    def model_displacement(self, g):
        return self.line_fn(g) - g

    def value(self, x):
        scalar = np.ndim(x) == 0
        u = np.clip(self.domain.normalized(np.asarray(x, dtype=float)), 1e-15, 1.0 - 1e-15)
        v = sigmoid(self.line_fn(logit(u)))
        out = self.image.denormalized(v)
        out = np.where(np.asarray(x) <= self.domain.lo, self.image.lo, out)
        out = np.where(np.asarray(x) >= self.domain.hi, self.image.hi, out)
        return float(out) if scalar else out

    def derivative(self, x, order: int = 1):
        h = 1e-5 * self.domain.length
        xc = np.clip(x, self.domain.lo + 2 * h, self.domain.hi - 2 * h)
        if order == 1:
            return (self.value(xc + h) - self.value(xc - h)) / (2 * h)
        if order == 2:
            return (self.value(xc + h) - 2 * self.value(xc) + self.value(xc - h)) / (h * h)
        if order == 3:
            h = 1e-4 * self.domain.length
            xc = np.clip(x, self.domain.lo + 2 * h, self.domain.hi - 2 * h)
            return (
                self.value(xc + 2 * h)
                - 2 * self.value(xc + h)
                + 2 * self.value(xc - h)
                - self.value(xc - 2 * h)
            ) / (2 * h**3)
        raise ValueError("order must be 1, 2 or 3")

    def restrict(self, sub: Interval):
        image = Interval(float(self.value(sub.lo)), float(self.value(sub.hi)))
        return SmoothSampledMap(sub, self.value, image=image, name=self.name)


def t_family_factors(h: MapDescriptor, k: int) -> list[MapDescriptor]:
    """Factor h into k maps along id + t*(P(h) - id), each with D = D(h)/k."""
    disp = h.model_displacement
    bound = None

    def m_t(t):
        return lambda g: g + t * disp(g)

    factors: list[MapDescriptor] = []
    for j in range(1, k + 1):
        t0 = (j - 1) / k
        t1 = j / k
        if j == 1:
            factors.append(LineModelMap(h.domain, h.image, m_t(t1), name="h^1/k"))
        else:
            fwd = m_t(t1)
            back = m_t(t0)
            if bound is None:
                bound = 1.5 * sup_on_line(lambda g: disp(g), grid=512) + 1e-3

            def line_fn(g, fwd=fwd, back=back, b=bound):
                return fwd(_invert_line_map(back, g, b))

            factors.append(LineModelMap(h.image, h.image, line_fn, name=f"h^{j}/k"))
    return factors


def normalize_split(c: StandardComposition, cap: float = LOG2, grid: int = 1024) -> StandardComposition:
    """Split every h stage with distortion above cap into t-family factors.

    Identity sigma stages are inserted between factors; d1 and d2 are
    preserved and the composition is pointwise unchanged.
    """
    new_stages: list[tuple[MapDescriptor, MapDescriptor]] = []
    changed = False
    for h, s in c.stages:
        D = distortion_norm(h, grid=grid)
        if D <= cap * (1.0 + 1e-12):
            new_stages.append((h, s))
            continue
        changed = True
        k = math.ceil(D / cap)
        factors = t_family_factors(h, k)
        for u in factors[:-1]:
            new_stages.append((u, AffineMap.identity(u.image)))
        new_stages.append((factors[-1], s))
    if not changed:
        return c
    return StandardComposition(new_stages, check_schwarzian=False)


# ----------------------------------------------------------------------
# reshuffling
# ----------------------------------------------------------------------


@dataclass
class ReshuffleResult:
    """P(f) rewritten as h-bar maps after the sigma models."""

    h_bar: list[Callable]
    sigma_models: list[Callable]

    def reassembled(self, g):
        for s in self.sigma_models:
            g = s(g)
        for hb in self.h_bar:
            g = hb(g)
        return g


def reshuffle(c: StandardComposition) -> ReshuffleResult:
    """Move every sigma model to the right of every h model by conjugation.

    Each returned h_bar_i is the conjugate of P(h_i) by the nonexpanding
    tail of sigma models, so sup |h_bar_i - id| <= D(h_i).
    """
    hs = [h for h, _ in c.stages]
    sigmas = [s for _, s in c.stages]

    def tail_apply(i0, g):
        for s in sigmas[i0:]:
            g = s.model(g)
        return g

    def tail_invert(i0, g):
        for s in reversed(sigmas[i0:]):
            g = s.model_inverse(g)
        return g

    def make_h_bar(i):
        def h_bar(g):
            return tail_apply(i, hs[i].model(tail_invert(i, g)))

        return h_bar

    return ReshuffleResult(
        h_bar=[make_h_bar(i) for i in range(len(hs))],
        sigma_models=[s.model for s in sigmas],
    )


# ----------------------------------------------------------------------
# the distortion bound on subintervals
# ----------------------------------------------------------------------


@dataclass
class UbdlBoundReport:
    """Measured distortion of a restricted composition against its bound."""

    d1: float
    d2: float
    cross_ratio_term: float
    bound_technical: float
    bound_simplified: float
    measured: float
    Q_used: float
    grid: int
    d1_samples: int
    seed: int
    outer: Interval
    sub: Interval
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound_technical + self.tol


def ubdl_verify(
    c: StandardComposition,
    sub: Interval,
    Q: float = 8.0,
    grid: int = 4096,
    d1_samples: int = 20_000,
    seed: int = 0,
    tol: float = 1e-9,
) -> UbdlBoundReport:
    """Compare the distortion of the restriction to (b,c) with its bound.

    The bound is Q * d2 * exp(-d1) * min(1, (c-b)/min(b-a, d-c))
    + d2 + 2|d1 + log Cr(a,b,c,d)|; since d1 <= 0, exp(-d1) = exp(|d1|).
    """
    outer = c.domain
    a, d = outer.lo, outer.hi
    b, cc = sub.lo, sub.hi
    if not (a < b < cc < d):
        raise DomainError("need a < b < c < d strictly")
    if not c.is_normalized():
        raise ChainingError("composition must be normalized (every D(h_i) <= log 2)")

    measured = distortion_norm(c.composed_map().restrict(sub), grid=grid)
    d1 = d1_norm(c, samples=d1_samples, seed=seed)
    d2 = d2_norm(c, grid=grid)
    log_cr = math.log(cross_ratio(PointQuadruple(a, b, cc, d)))
    cr_term = 2.0 * abs(d1 + log_cr)
    ratio = min(1.0, (cc - b) / min(b - a, d - cc))
    bound_technical = Q * d2 * math.exp(-d1) * ratio + d2 + cr_term
    K = 2.0 + 4.0 * Q * d2 * math.exp(-d1)
    bound_simplified = d1 + d2 + K * abs(log_cr)
    return UbdlBoundReport(
        d1=d1,
        d2=d2,
        cross_ratio_term=cr_term,
        bound_technical=bound_technical,
        bound_simplified=bound_simplified,
        measured=measured,
        Q_used=Q,
        grid=grid,
        d1_samples=d1_samples,
        seed=seed,
        outer=outer,
        sub=sub,
        tol=tol,
    )


def extend_domain_dprime(
    c: StandardComposition,
    sub: Interval,
    d1: float | None = None,
    d1_samples: int = 20_000,
    seed: int = 0,
) -> float:
    """Extension point d' > c such that the Moebius surrogate chain stays inside.

    d' solves CR(a,b,c,d') = exp(d1) * CR(a,b,c,d), with CR the flank
    cross-ratio; the surrogate g_i agrees with h_i on the images of a, b, c.
    Callers wanting the short-flank-first normalization should reflect the
    composition first (StandardComposition.reflected).
    """
    outer = c.domain
    a, d = outer.lo, outer.hi
    b, cc = sub.lo, sub.hi
    if not (a < b < cc < d):
        raise DomainError("need a < b < c < d strictly")
    if d1 is None:
        d1 = d1_norm(c, samples=d1_samples, seed=seed)
    CR = ((d - cc) * (b - a)) / ((cc - b) * (d - a))
    R = math.exp(d1) * CR
    denom = (b - a) - R * (cc - b)
    if denom <= 0:
        raise DomainError("flank equation unsolvable (d1 too negative?)")
    d_prime = (cc * (b - a) - R * a * (cc - b)) / denom
    d_prime = min(d_prime, d)

    # stage-by-stage containment of the surrogate chain started at d'
    xa, xb, xc = a, b, cc
    z = d_prime
    for i, (h, s) in enumerate(c.stages):
        ya = float(h.value(xa))
        yb = float(h.value(xb))
        yc = float(h.value(xc))
        g_i = LinearFractionalMap.from_three_points((xa, xb, xc), (ya, yb, yc), h.domain)
        den_z = g_i.c * z + g_i.d
        den_a = g_i.c * xa + g_i.d
        if den_z * den_a <= 0:
            raise SurrogateOverflowError(i, f"surrogate pole crossed at stage {i}")
        z = float(g_i.value(z))
        if z > h.image.hi + 1e-9 * h.image.length:
            raise SurrogateOverflowError(i)
        xa, xb, xc = ya, yb, yc
        z = float(s.value(min(z, s.domain.hi)))
        xa = float(s.value(xa))
        xb = float(s.value(xb))
        xc = float(s.value(xc))
    return d_prime
