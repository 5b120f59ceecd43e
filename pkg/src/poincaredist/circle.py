"""Critical circle homeomorphisms: lifts, returns, partitions, chains.

Circle points are stored as lift values; mod-1 reduction happens only at
comparison time, which keeps arc lengths exact along long orbits.  The
canonical critical family is x + omega - sin(2 pi x)/(2 pi), whose
derivative 2 sin^2(pi x) vanishes to second order at the integers (a
cubic-type critical point) and whose Schwarzian 2 pi^2 (s^2 - 2)/s^2 is
negative away from the critical point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DepthExhaustedError,
    DomainError,
    PoincaredistError,
    RationalRotationError,
    UnreachableTargetError,
)
from .intervals import Interval
from .maps import SmoothSampledMap, AffineMap, CompositionMap, MapDescriptor

TWO_PI = 2.0 * math.pi
GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


def circle_dist(x: float, y: float) -> float:
    d = (x - y) % 1.0
    return min(d, 1.0 - d)


@dataclass(frozen=True)
class CircleArc:
    """Arc on the circle, stored as lift endpoints with 0 < hi - lo < 1."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 < self.hi - self.lo < 1.0):
            raise DomainError(f"improper arc ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def position(self, x: float) -> float:
        """Arc-relative coordinate of the circle point x, in [0, 1)."""
        return (x - self.lo) % 1.0

    def contains_point(self, x: float, tol: float = 0.0) -> bool:
        t = self.position(x)
        return tol < t < self.length - tol

    def contains_arc(self, other: "CircleArc", tol: float = 1e-12) -> bool:
        t = self.position(other.lo)
        pad = tol * max(self.length, 1e-300)
        if t > self.length + pad:
            # other.lo may sit just below self.lo numerically
            if 1.0 - t > pad:
                return False
            t = 0.0
        return t + other.length <= self.length + pad

    def intersects(self, other: "CircleArc", tol: float = 0.0) -> bool:
        return self.intersection_length(other) > tol

    def intersection_length(self, other: "CircleArc") -> float:
        t = self.position(other.lo)
        total = 0.0
        # unwrapped part of other relative to self
        end = min(t + other.length, 1.0)
        total += max(0.0, min(self.length, end) - t)
        # wrapped part
        if t + other.length > 1.0:
            total += max(0.0, min(self.length, t + other.length - 1.0))
        return total

    def intersection_arcs(self, other: "CircleArc") -> list["CircleArc"]:
        out = []
        t = self.position(other.lo)
        end = min(t + other.length, 1.0)
        a, b = t, min(self.length, end)
        if b > a:
            out.append(CircleArc(self.lo + a, self.lo + b))
        if t + other.length > 1.0:
            b2 = min(self.length, t + other.length - 1.0)
            if b2 > 0.0:
                out.append(CircleArc(self.lo, self.lo + b2))
        return out

    def subtract(self, other: "CircleArc") -> list["CircleArc"]:
        """Pieces of self outside other (0, 1 or 2 arcs)."""
        pieces = self.intersection_arcs(other)
        if not pieces:
            return [self]
        cuts = sorted((self.position(p.lo), self.position(p.hi)) for p in pieces)
        out = []
        cur = 0.0
        for a, b in cuts:
            if a > cur + 1e-15:
                out.append(CircleArc(self.lo + cur, self.lo + a))
            cur = max(cur, b)
        if cur < self.length - 1e-15:
            out.append(CircleArc(self.lo + cur, self.lo + self.length))
        return out

    def distance_to_point(self, x: float) -> float:
        if self.contains_point(x):
            return 0.0
        return min(circle_dist(self.lo, x), circle_dist(self.hi, x))


# ----------------------------------------------------------------------
# lifts
# ----------------------------------------------------------------------


class RigidLift:
    """x -> x + omega."""

    def __init__(self, omega: float):
        self.omega = float(omega)

    def value(self, x):
        return x + self.omega

    def derivative(self, x, order: int = 1):
        if order == 1:
            return 1.0 + 0.0 * np.asarray(x) if np.ndim(x) else 1.0
        return 0.0 * np.asarray(x) if np.ndim(x) else 0.0

    def log_derivative(self, x):
        return 0.0 * np.asarray(x) if np.ndim(x) else 0.0

    def difference(self, x, y, dxy):
        return dxy

    def nonlinearity(self, x):
        return 0.0 * np.asarray(x) if np.ndim(x) else 0.0

    schwarzian = nonlinearity


class ArnoldLift:
    """x -> x + omega - sin(2 pi x)/(2 pi): one cubic critical point per period."""

    def __init__(self, omega: float):
        self.omega = float(omega)

    def value(self, x):
        if np.ndim(x) == 0:
            return x + self.omega - math.sin(TWO_PI * x) / TWO_PI
        return x + self.omega - np.sin(TWO_PI * x) / TWO_PI

    def derivative(self, x, order: int = 1):
        trig = math if np.ndim(x) == 0 else np
        if order == 1:
            s = trig.sin(math.pi * x) if trig is math else np.sin(np.pi * x)
            return 2.0 * s * s
        if order == 2:
            return TWO_PI * (trig.sin(TWO_PI * x) if trig is math else np.sin(TWO_PI * x))
        if order == 3:
            return TWO_PI * TWO_PI * (
                trig.cos(TWO_PI * x) if trig is math else np.cos(TWO_PI * x)
            )
        raise ValueError("order must be 1, 2 or 3")

    def log_derivative(self, x):
        if np.ndim(x) == 0:
            return math.log(2.0) + 2.0 * math.log(abs(math.sin(math.pi * x)))
        return math.log(2.0) + 2.0 * np.log(np.abs(np.sin(np.pi * x)))

    def difference(self, x, y, dxy):
        # sin a - sin b factored: no cancellation for tiny gaps
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return dxy - math.cos(math.pi * (x + y)) * math.sin(math.pi * dxy) / math.pi
        return dxy - np.cos(np.pi * (np.asarray(x) + np.asarray(y))) * np.sin(np.pi * dxy) / np.pi

    def nonlinearity(self, x):
        if np.ndim(x) == 0:
            return TWO_PI * math.cos(math.pi * x) / math.sin(math.pi * x)
        return TWO_PI * np.cos(np.pi * x) / np.sin(np.pi * x)

    def schwarzian(self, x):
        s2 = np.sin(np.pi * x) ** 2 if np.ndim(x) else math.sin(math.pi * x) ** 2
        return 2.0 * math.pi**2 * (s2 - 2.0) / s2


@dataclass
class CircleMapLift:
    """Degree-one lift with critical-point metadata."""

    lift: object
    name: str
    parameter: float
    critical_point: float | None = None
    critical_exponent: float | None = None
    close_arc: CircleArc | None = None
    remote_arc: CircleArc | None = None

    def value(self, x):
        return self.lift.value(x)

    def iterate(self, x: float, n: int) -> float:
        v = self.lift.value
        for _ in range(n):
            x = v(x)
        return x

    def degree_one_defect(self, grid: int = 64) -> float:
        xs = np.linspace(0.0, 1.0, grid, endpoint=False)
        return float(np.max(np.abs(self.lift.value(xs + 1.0) - self.lift.value(xs) - 1.0)))

    def class_report(self, grid: int = 256) -> dict:
        """Measured class certificates: arcs cover, Schwarzian sign, remote slope."""
        out = {"degree_one_defect": self.degree_one_defect()}
        if self.close_arc is not None and self.remote_arc is not None:
            cover = self.close_arc.length + self.remote_arc.length
            overlap = self.close_arc.intersection_length(self.remote_arc)
            out["arcs_cover"] = bool(cover - overlap >= 1.0 - 1e-12)
            xs = np.linspace(
                self.close_arc.lo + 1e-9, self.close_arc.hi - 1e-9, grid
            )
            xs = xs[np.abs(np.sin(np.pi * xs)) > 1e-12]  # avoid the critical point itself
            out["close_max_schwarzian"] = float(np.max(self.lift.schwarzian(xs)))
            ys = np.linspace(self.remote_arc.lo, self.remote_arc.hi, grid)
            out["remote_min_derivative"] = float(np.min(self.lift.derivative(ys, 1)))
        return out


def rigid_rotation(omega: float) -> CircleMapLift:
    # no critical point; the marked point 0 and the default arcs make the
    # partition and approximation machinery applicable unchanged
    return CircleMapLift(
        RigidLift(omega),
        name="rigid",
        parameter=omega,
        close_arc=CircleArc(-0.25, 0.25),
        remote_arc=CircleArc(0.2, 0.8),
    )


def arnold_map(omega: float) -> CircleMapLift:
    return CircleMapLift(
        ArnoldLift(omega),
        name="arnold",
        parameter=omega,
        critical_point=0.0,
        critical_exponent=3.0,
        close_arc=CircleArc(-0.25, 0.25),
        remote_arc=CircleArc(0.2, 0.8),
    )


def lift_restriction(f: CircleMapLift, I: Interval) -> SmoothSampledMap:
    """The lift as an interval map on I (lift coordinates, no reduction)."""
    lift = f.lift
    v_lo = float(lift.value(I.lo))
    image = Interval(v_lo, v_lo + float(lift.difference(I.hi, I.lo, I.length)))
    return SmoothSampledMap(
        I,
        lift.value,
        image=image,
        derivs=(
            lambda x: lift.derivative(x, 1),
            lambda x: lift.derivative(x, 2),
            lambda x: lift.derivative(x, 3),
        ),
        diff_fn=lift.difference,
        name=f"{f.name}|restriction",
    )


# ----------------------------------------------------------------------
# rotation number from closest returns
# ----------------------------------------------------------------------


@dataclass
class ContinuedFraction:
    """Partial quotients and convergents of a rotation number.

    Conventions: q[0] = 1, q[n+1] = a[n] q[n] + q[n-1] with q[-1] = 0, so
    a[0] is the integer part of 1/rho.
    """

    a: list[int]
    p: list[int]
    q: list[int]
    return_gaps: list[float] = field(default_factory=list)
    estimate: float = 0.0

    def __post_init__(self):
        if self.q[0] != 1:
            raise PoincaredistError("q_0 must be 1")
        for n in range(1, len(self.q) - 1):
            if self.q[n + 1] != self.a[n] * self.q[n] + self.q[n - 1]:
                raise PoincaredistError("continued-fraction recursion violated")
        if self.q[1] != self.a[0]:
            raise PoincaredistError("continued-fraction recursion violated at n=0")

    @property
    def depth(self) -> int:
        return len(self.a)


def rotation_number(
    f: CircleMapLift,
    depth: int,
    periodic_tol: float = 1e-13,
    max_steps: int = 20_000,
) -> tuple[float, ContinuedFraction]:
    """Closest-return combinatorics of the marked-point orbit.

    Returns (estimate, cf) with at least ``depth`` partial quotients; a
    closing orbit raises RationalRotationError with the detected period,
    and a stalled scan (mode locking or budget) raises DepthExhaustedError
    carrying the deepest rational estimate found.
    """
    base = f.critical_point if f.critical_point is not None else 0.0
    x = base
    best = math.inf
    times: list[int] = []
    gaps: list[float] = []
    sides: list[int] = []
    lifts: list[float] = []
    t = 0
    while len(times) < depth + 2 and t < max_steps:
        t += 1
        x = f.lift.value(x)
        pos = (x - base) % 1.0
        dist = min(pos, 1.0 - pos)
        if dist < periodic_tol:
            raise RationalRotationError(t)
        if dist < best:
            best = dist
            times.append(t)
            gaps.append(dist)
            sides.append(+1 if pos < 0.5 else -1)
            lifts.append(x)
    if len(times) < 2:
        raise DepthExhaustedError("orbit budget exhausted before any return")

    first_left = sides[0] < 0
    q = ([1] + times) if first_left else list(times)
    gq = ([gaps[0]] + gaps) if first_left else list(gaps)
    if len(q) < depth + 1:
        raise DepthExhaustedError(
            f"only {len(q) - 1} quotients available within {max_steps} steps",
            estimate=round(lifts[-1] - base) / times[-1],
        )
    q = q[: depth + 1]
    gq = gq[: depth + 1]
    a = [q[1]]
    for n in range(1, depth):
        num = q[n + 1] - q[n - 1]
        if num % q[n] != 0 or num // q[n] < 1:
            # creeping returns of a mode-locked orbit, not a continued fraction
            raise DepthExhaustedError(
                f"return times {q[: n + 2]} break the quotient recursion",
                estimate=round(lifts[-1] - base) / times[-1],
            )
        a.append(num // q[n])
    p = [int(round(f.iterate(base, qn) - base)) for qn in q]
    est = p[-1] / q[-1]
    return est, ContinuedFraction(a=a, p=p, q=q, return_gaps=gq, estimate=est)


def cf_cylinder(prefix: Sequence[int]) -> tuple[float, float]:
    """Value interval of all irrationals whose expansion starts with prefix."""

    def val(tail: float) -> float:
        x = tail
        for b in reversed(prefix):
            x = 1.0 / (b + x)
        return x

    v0, v1 = val(0.0), val(1.0)
    return (min(v0, v1), max(v0, v1))


def find_parameter(
    family: Callable[[float], CircleMapLift],
    lo: float,
    hi: float,
    target_prefix: Sequence[int],
    param_tol: float = 1e-14,
    max_iter: int = 200,
) -> float:
    """Bisection on the parameter until the rotation number carries the prefix.

    Requires the family's rotation number to be nondecreasing in the
    parameter.
    """
    prefix = list(target_prefix)
    depth = len(prefix)
    v_lo, v_hi = cf_cylinder(prefix)
    target_mid = 0.5 * (v_lo + v_hi)

    def classify(param: float) -> int:
        fmap = family(param)
        try:
            _, cf = rotation_number(fmap, depth)
        except RationalRotationError as e:
            rho = round(fmap.iterate(0.0, e.period)) / e.period
            return -1 if rho < target_mid else +1
        except DepthExhaustedError as e:
            if e.estimate is None:
                raise
            return -1 if e.estimate < target_mid else +1
        for i in range(depth):
            if cf.a[i] != prefix[i]:
                less = (cf.a[i] > prefix[i]) if i % 2 == 0 else (cf.a[i] < prefix[i])
                return -1 if less else +1
        return 0

    c_lo, c_hi = classify(lo), classify(hi)
    if c_lo == 0:
        return lo
    if c_hi == 0:
        return hi
    if not (c_lo < 0 < c_hi):
        raise UnreachableTargetError(
            f"prefix not bracketed by parameters ({lo}, {hi}): signs ({c_lo}, {c_hi})"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        c = classify(mid)
        if c == 0:
            return mid
        if c < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= param_tol:
            break
    raise UnreachableTargetError("bisection exhausted without matching the prefix")


# ----------------------------------------------------------------------
# dynamical partitions
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionElement:
    arc: CircleArc
    kind: str  # 'lengthy' | 'short'
    orbit_index: int


@dataclass
class DynamicalPartition:
    order: int
    elements: list[PartitionElement]
    tiling_defect: float
    cf: ContinuedFraction

    def adjacent_pair(self) -> list[PartitionElement]:
        """The two elements with an endpoint at the critical point."""
        return [el for el in self.elements if el.orbit_index == 0]


def _return_side(f: CircleMapLift, q_n: int) -> int:
    """+1 when the q_n-th image lands right of the marked point, -1 left."""
    base = f.critical_point if f.critical_point is not None else 0.0
    pos = (f.iterate(base, q_n) - base) % 1.0
    return +1 if pos < 0.5 else -1


def _base_arc(f: CircleMapLift, n: int, cf: ContinuedFraction) -> CircleArc:
    """Arc between the marked point and its q_n-th image, on the return side.

    Successive return arcs alternate sides; the trivial 0-th return (time 1)
    sits opposite the first genuine closest return, which pins its side even
    when the two return times coincide.
    """
    base = f.critical_point if f.critical_point is not None else 0.0
    side = -_return_side(f, cf.q[1]) if n == 0 else _return_side(f, cf.q[n])
    pos = (f.iterate(base, cf.q[n]) - base) % 1.0
    if side > 0:
        return CircleArc(base, base + pos)
    return CircleArc(base + pos - 1.0, base)


def dynamical_partition(
    f: CircleMapLift,
    k: int,
    cf: ContinuedFraction | None = None,
    tiling_tol: float = 1e-6,
) -> DynamicalPartition:
    """Partition of order k from the marked orbit: q_k images of the
    (k-1)-return arc (lengthy) and q_{k-1} images of the k-return arc (short)."""
    if k < 1:
        raise DomainError("partition order must be >= 1")
    if cf is None:
        _, cf = rotation_number(f, depth=k + 1)
    if len(cf.q) <= k:
        raise DepthExhaustedError("continued fraction too short for this order")
    q_k, q_km1 = cf.q[k], cf.q[k - 1]
    elements: list[PartitionElement] = []
    for base_arc, kind, count in (
        (_base_arc(f, k - 1, cf), "lengthy", q_k),
        (_base_arc(f, k, cf), "short", q_km1),
    ):
        lo, hi = base_arc.lo, base_arc.hi
        for i in range(count):
            if i > 0:
                lo, hi = f.lift.value(lo), f.lift.value(hi)
            elements.append(PartitionElement(CircleArc(lo, hi), kind, i))

    defect = _tiling_defect(elements)
    if defect > tiling_tol:
        raise DepthExhaustedError(
            f"tiling defect {defect:.3g} beyond tolerance at order {k}"
        )
    elements.sort(key=lambda el: el.arc.lo % 1.0)
    return DynamicalPartition(order=k, elements=elements, tiling_defect=defect, cf=cf)


def _tiling_defect(elements: Sequence[PartitionElement]) -> float:
    total = sum(el.arc.length for el in elements)
    defect = abs(total - 1.0)
    pos = sorted((el.arc.lo % 1.0, el.arc.length) for el in elements)
    for j, (lo, ln) in enumerate(pos):
        nxt = pos[(j + 1) % len(pos)][0]
        gap = (nxt - (lo + ln)) % 1.0
        defect = max(defect, min(gap, 1.0 - gap))
    return defect


def partition_refines(coarse: DynamicalPartition, fine: DynamicalPartition, tol: float = 1e-9) -> bool:
    for el in fine.elements:
        if not any(c.arc.contains_arc(el.arc, tol=tol) for c in coarse.elements):
            return False
    return True


def promotion_check(coarse: DynamicalPartition, fine: DynamicalPartition, tol: float = 1e-10) -> bool:
    """Every short element of order k reappears as a lengthy element of order k+1."""
    fine_lengthy = [el for el in fine.elements if el.kind == "lengthy"]
    for el in coarse.elements:
        if el.kind != "short":
            continue
        hit = any(
            fl.orbit_index == el.orbit_index
            and circle_dist(fl.arc.lo, el.arc.lo) < tol
            and abs(fl.arc.length - el.arc.length) < tol
            for fl in fine_lengthy
        )
        if not hit:
            return False
    return True


def split_counts(coarse: DynamicalPartition, fine: DynamicalPartition) -> list[tuple[int, int]]:
    """(lengthy, short) counts of fine elements inside each coarse lengthy element."""
    out = []
    for c in coarse.elements:
        if c.kind != "lengthy":
            continue
        nl = ns = 0
        for el in fine.elements:
            if c.arc.contains_arc(el.arc, tol=1e-9):
                if el.kind == "lengthy":
                    nl += 1
                else:
                    ns += 1
        out.append((nl, ns))
    return out


# ----------------------------------------------------------------------
# fineness, neighborhoods, coarseness
# ----------------------------------------------------------------------


def _image_arc(f: CircleMapLift, J: CircleArc, steps: int) -> CircleArc:
    lo, hi = J.lo, J.hi
    for _ in range(steps):
        lo, hi = f.lift.value(lo), f.lift.value(hi)
    return CircleArc(lo, hi)


def fineness_order(f: CircleMapLift, J: CircleArc, cf: ContinuedFraction) -> int:
    """1 + the largest i such that f^{q_i} maps J entirely off itself."""
    non_returning = []
    returning = []
    for i, q in enumerate(cf.q):
        img = _image_arc(f, J, q)
        if img.intersection_length(J) > 1e-15:
            returning.append(i)
        else:
            non_returning.append(i)
    if not non_returning:
        return 0
    last = len(cf.q) - 1
    if last in non_returning or (last - 1) in non_returning:
        raise DepthExhaustedError(
            "fineness scan still open at the deepest available return time"
        )
    return max(non_returning) + 1


def symmetric_neighborhood(
    f: CircleMapLift,
    lam: int,
    cf: ContinuedFraction,
    scan: int = 48,
    plateau_frac: float = 0.75,
) -> CircleArc:
    """Derivative-matched neighborhood of the critical point with fineness lam.

    Fineness is a nonincreasing step function of the right endpoint, so the
    admissible radii form one plateau; the returned neighborhood sits at
    ``plateau_frac`` of the way up that plateau, away from both knife-edge
    boundaries (where a chain interval can straddle the edge).
    """
    if f.close_arc is None:
        raise DomainError("map carries no close arc")
    base = f.critical_point if f.critical_point is not None else 0.0
    r_max = 0.98 * (f.close_arc.hi - base)

    def left_endpoint(r: float) -> float:
        if isinstance(f.lift, RigidLift):
            return base - r
        target = f.lift.derivative(base + r, 1)
        lo_l, hi_l = f.close_arc.lo + 1e-15, base - 1e-15
        if f.lift.derivative(lo_l, 1) < target:
            raise UnreachableTargetError("derivative matching leaves the close arc")
        for _ in range(100):
            mid = 0.5 * (lo_l + hi_l)
            if f.lift.derivative(mid, 1) > target:
                lo_l = mid
            else:
                hi_l = mid
        return 0.5 * (lo_l + hi_l)

    def fineness_of(r: float) -> int:
        try:
            return fineness_order(f, CircleArc(left_endpoint(r), base + r), cf)
        except DepthExhaustedError:
            return len(cf.q) + 1  # finer than resolvable: treat as very fine

    rs = np.geomspace(1e-4 * r_max, r_max, scan)
    fins = [fineness_of(float(r)) for r in rs]
    if lam not in fins:
        raise UnreachableTargetError(f"no scanned neighborhood has fineness {lam}")
    idx_hi = max(i for i, fn in enumerate(fins) if fn == lam)
    idx_lo = min(i for i, fn in enumerate(fins) if fn == lam)

    r_top = float(rs[idx_hi])
    if idx_hi + 1 < len(rs):
        out = float(rs[idx_hi + 1])
        for _ in range(48):
            mid = 0.5 * (r_top + out)
            if fineness_of(mid) == lam:
                r_top = mid
            else:
                out = mid
    r_bot = float(rs[idx_lo])
    if idx_lo > 0:
        below = float(rs[idx_lo - 1])
        for _ in range(48):
            mid = 0.5 * (below + r_bot)
            if fineness_of(mid) == lam:
                r_bot = mid
            else:
                below = mid

    r_star = r_bot + plateau_frac * (r_top - r_bot)
    arc = CircleArc(left_endpoint(r_star), base + r_star)
    if fineness_order(f, arc, cf) != lam:
        raise UnreachableTargetError(f"could not settle on fineness {lam}")
    return arc


def coarseness(
    f: CircleMapLift,
    j: int,
    V: CircleArc | Sequence[CircleArc] | None,
    cf: ContinuedFraction | None = None,
    partition: DynamicalPartition | None = None,
) -> float:
    """Sum over D_j elements meeting the complement of V of (|I|/dist(I,0))^2.

    V = None means the whole circle (empty sum).  Elements with an endpoint
    at the marked point are always excluded: their distance ratio is
    undefined, and excluding them is the role V plays in every use of the
    quantity.
    """
    if V is None:
        return 0.0
    part = partition if partition is not None else dynamical_partition(f, j, cf)
    v_list = [V] if isinstance(V, CircleArc) else list(V)
    base = f.critical_point if f.critical_point is not None else 0.0
    total = 0.0
    for el in part.elements:
        if any(v.contains_arc(el.arc, tol=1e-9) for v in v_list):
            continue
        dist = el.arc.distance_to_point(base)
        if dist <= 0.0:
            continue
        total += (el.arc.length / dist) ** 2
    return total


# ----------------------------------------------------------------------
# chains and first returns
# ----------------------------------------------------------------------


@dataclass
class ChainOfIntervals:
    """Consecutive images of a seed interval, kept in reduced coordinates.

    Each interval lives in [0, 2); ``shifts[t]`` is the integer subtracted
    from the raw image when passing from interval t to t+1.  Reduction
    keeps lift arguments small, which is what preserves double-precision
    accuracy along long chains.
    """

    intervals: list[Interval]
    shifts: list[int]
    fineness: int

    @property
    def m(self) -> int:
        return len(self.intervals) - 1

    def circle_arcs(self) -> list[CircleArc]:
        return [CircleArc(iv.lo, iv.lo + iv.length) for iv in self.intervals]


def chain_stage(f: CircleMapLift, chain: ChainOfIntervals, t: int) -> SmoothSampledMap:
    """Stage map of the chain: the lift on interval t, shifted onto t+1."""
    lift = f.lift
    shift = chain.shifts[t]

    def value(x):
        return lift.value(x) - shift

    return SmoothSampledMap(
        chain.intervals[t],
        value,
        image=chain.intervals[t + 1],
        derivs=(
            lambda x: lift.derivative(x, 1),
            lambda x: lift.derivative(x, 2),
            lambda x: lift.derivative(x, 3),
        ),
        diff_fn=lift.difference,
        name=f"{f.name}|chain[{t}]",
    )


def build_chain(
    f: CircleMapLift,
    seed: CircleArc,
    m: int,
    cf: ContinuedFraction,
    require_disjoint: bool = True,
) -> ChainOfIntervals:
    """Iterate the seed arc m times, rejecting critical-point hits and overlaps."""
    base = f.critical_point if f.critical_point is not None else 0.0
    lo = seed.lo % 1.0
    length = seed.length
    intervals = [Interval(lo, lo + length)]
    shifts: list[int] = []
    for t in range(m + 1):
        iv = intervals[t]
        arc = CircleArc(iv.lo, iv.hi)
        if f.critical_point is not None and arc.contains_point(base, tol=0.0):
            raise DomainError(f"chain interval {t} contains the critical point")
        if t < m:
            v_lo = f.lift.value(iv.lo)
            length = float(f.lift.difference(iv.hi, iv.lo, iv.length))
            s = math.floor(v_lo)
            shifts.append(s)
            intervals.append(Interval(v_lo - s, v_lo - s + length))
    if require_disjoint:
        arcs = [CircleArc(iv.lo, iv.lo + iv.length) for iv in intervals]
        for i in range(len(arcs)):
            for jj in range(i + 1, len(arcs)):
                if arcs[i].intersection_length(arcs[jj]) > 1e-12 * arcs[i].length:
                    raise DomainError(f"chain intervals {i} and {jj} overlap")
    fineness = fineness_order(f, seed, cf)
    return ChainOfIntervals(intervals=intervals, shifts=shifts, fineness=fineness)


def renormalization_interval(f: CircleMapLift, k: int, cf: ContinuedFraction) -> CircleArc:
    """Union of the two order-k elements adjacent to the marked point."""
    a_prev = _base_arc(f, k - 1, cf)
    a_k = _base_arc(f, k, cf)
    base = f.critical_point if f.critical_point is not None else 0.0
    left = min(a_prev.lo, a_k.lo)
    right = max(a_prev.hi, a_k.hi)
    if not (left < base < right):
        raise DomainError("return arcs do not straddle the marked point")
    return CircleArc(left, right)


@dataclass
class ReturnBranch:
    domain: CircleArc
    return_time: int
    map: MapDescriptor


@dataclass
class FirstReturnReport:
    branches: list[ReturnBranch]
    covering_defect: float
    images_disjoint: bool


def first_return_map(
    f: CircleMapLift,
    J: CircleArc,
    cf: ContinuedFraction,
    samples: int = 256,
    max_time: int | None = None,
) -> FirstReturnReport:
    """Branches of the first-return map to J, with induced-map descriptors."""
    if max_time is None:
        max_time = 4 * cf.q[-1]

    def return_time(x: float) -> int:
        y = x
        for t in range(1, max_time + 1):
            y = f.lift.value(y)
            if J.contains_point(y, tol=0.0):
                return t
        raise DepthExhaustedError("return time exceeds the scan budget")

    xs = [J.lo + J.length * (i + 0.5) / samples for i in range(samples)]
    ts = [return_time(x) for x in xs]

    # refine branch boundaries between samples with differing times
    cuts = [J.lo]
    branch_times = [ts[0]]
    for i in range(samples - 1):
        if ts[i] != ts[i + 1]:
            a, b = xs[i], xs[i + 1]
            ta = ts[i]
            for _ in range(50):
                mid = 0.5 * (a + b)
                if return_time(mid) == ta:
                    a = mid
                else:
                    b = mid
            cuts.append(0.5 * (a + b))
            branch_times.append(ts[i + 1])
    cuts.append(J.lo + J.length)

    branches = []
    all_images: list[CircleArc] = []
    for i, t in enumerate(branch_times):
        dom = CircleArc(cuts[i], cuts[i + 1])
        stages = []
        iv = Interval(dom.lo, dom.hi)
        for _ in range(t):
            st = lift_restriction(f, iv)
            stages.append(st)
            all_images.append(CircleArc(iv.lo, iv.lo + iv.length))
            iv = st.image
        branches.append(ReturnBranch(domain=dom, return_time=t, map=CompositionMap(stages)))

    total = sum(a.length for a in all_images)
    disjoint = True
    for i in range(len(all_images)):
        for jj in range(i + 1, len(all_images)):
            if all_images[i].intersection_length(all_images[jj]) > 1e-10:
                disjoint = False
    return FirstReturnReport(
        branches=branches,
        covering_defect=abs(total - 1.0),
        images_disjoint=disjoint,
    )
