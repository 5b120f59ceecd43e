"""Seeded random suites for the composition and cancellation checks.

All generators are deterministic functions of a numpy SeedSequence-style
integer seed, so a frozen (seed, size) pair pins the suite bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cancellation import CancellationDecomposition
from .compositions import StandardComposition
from .intervals import Interval
from .maps import (
    CompositionMap,
    ConstantNonlinearityMap,
    LinearFractionalMap,
    MapDescriptor,
    cubic_perturbation_map,
    scaled_tangent_map,
)


def random_interval(rng: np.random.Generator) -> Interval:
    length = float(np.exp(rng.uniform(-1.0, 0.7)))
    lo = float(rng.uniform(-2.0, 2.0))
    return Interval(lo, lo + length)


def random_subinterval(rng: np.random.Generator, outer: Interval) -> Interval:
    """Proper subinterval with definite flanks on both sides."""
    left = float(rng.uniform(0.05, 0.45))
    right = float(rng.uniform(0.05, 0.45))
    return Interval(
        outer.lo + left * outer.length, outer.hi - right * outer.length
    )


def random_sigma(rng: np.random.Generator, domain: Interval, image: Interval) -> MapDescriptor:
    """Nonnegative-Schwarzian stage: a Moebius map or a tangent conjugate."""
    if rng.random() < 0.5:
        return LinearFractionalMap.from_displacement(
            domain, image, float(rng.uniform(-0.8, 0.8))
        )
    c1 = float(rng.uniform(-1.2, 0.2))
    c2 = c1 + float(rng.uniform(0.4, 1.1))
    return scaled_tangent_map(domain, image, c1, c2)


def random_small_h(rng: np.random.Generator, domain: Interval, image: Interval) -> MapDescriptor:
    """Bounded-distortion stage with distortion well under log 2."""
    kind = rng.integers(0, 3)
    if kind == 0:
        return LinearFractionalMap.from_displacement(
            domain, image, float(rng.uniform(-0.5, 0.5))
        )
    if kind == 1:
        n_hat = float(rng.uniform(-0.6, 0.6))
        return ConstantNonlinearityMap(n_hat / domain.length, domain, image)
    bump = cubic_perturbation_map(
        domain,
        float(rng.uniform(-0.12, 0.12)),
        float(rng.uniform(-1.0, 1.0)),
        float(rng.uniform(-1.0, 1.0)),
    )
    if image.lo == domain.lo and image.hi == domain.hi:
        return bump
    from .maps import AffineMap

    return CompositionMap([bump, AffineMap.between(domain, image)])


def make_standard_composition(seed: int, m: int) -> StandardComposition:
    """Random m-stage standard composition with chained random intervals."""
    rng = np.random.default_rng([seed, m, 101])
    stages = []
    cur = random_interval(rng)
    for _ in range(m):
        mid = random_interval(rng)
        out = random_interval(rng)
        h = random_small_h(rng, cur, mid)
        s = random_sigma(rng, mid, out)
        stages.append((h, s))
        cur = out
    return StandardComposition(stages)


@dataclass
class UbdlCase:
    index: int
    composition: StandardComposition
    sub: Interval
    pure_sigma: bool


def make_ubdl_suite(seed: int, n: int, m_max: int = 20) -> list[UbdlCase]:
    """n seeded cases; every third one is sigma-only (identity h stages)."""
    cases = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        m = int(rng.integers(1, m_max + 1))
        pure = i % 3 == 2
        stages = []
        cur = random_interval(rng)
        for _ in range(m):
            mid = random_interval(rng)
            out = random_interval(rng)
            if pure:
                from .maps import AffineMap

                h: MapDescriptor = AffineMap.between(cur, mid)
            else:
                h = random_small_h(rng, cur, mid)
            stages.append((h, random_sigma(rng, mid, out)))
            cur = out
        comp = StandardComposition(stages)
        cases.append(
            UbdlCase(i, comp, random_subinterval(rng, comp.domain), pure)
        )
    return cases


@dataclass
class CancellationCase:
    index: int
    decomposition: CancellationDecomposition
    pattern: str  # 'alternating' | 'drift' | 'random'


def _cancellation_stages(rng: np.random.Generator, m: int, deltas, g_scale: float):
    stages = []
    cur = random_interval(rng)
    for i in range(m):
        mid = random_interval(rng)
        out = random_interval(rng)
        n_hat = float(rng.uniform(-1.0, 1.0)) * g_scale
        g = ConstantNonlinearityMap(n_hat / cur.length, cur, cur)
        h = LinearFractionalMap.from_displacement(cur, mid, float(deltas[i]))
        H = CompositionMap([g, h])
        sigma = random_sigma(rng, mid, out)
        stages.append((sigma, H, h, g))
        cur = out
    return stages


def make_cancellation_suite(seed: int, n: int, m_max: int = 20) -> list[CancellationCase]:
    """n seeded decompositions cycling alternating / drifting / random deltas."""
    cases = []
    for i in range(n):
        rng = np.random.default_rng([seed, i, 7])
        m = int(rng.integers(2, m_max + 1))
        pattern = ("alternating", "drift", "random")[i % 3]
        if pattern == "alternating":
            amp = float(rng.uniform(0.02, 0.2))
            deltas = [amp * (-1.0) ** k for k in range(m)]
        elif pattern == "drift":
            amp = float(rng.uniform(0.005, 0.05))
            deltas = [amp for _ in range(m)]
        else:
            deltas = list(rng.uniform(-0.15, 0.15, size=m))
        g_scale = float(rng.uniform(0.0, 0.08))
        cases.append(
            CancellationCase(
                i,
                CancellationDecomposition(_cancellation_stages(rng, m, deltas, g_scale)),
                pattern,
            )
        )
    return cases
