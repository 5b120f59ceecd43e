"""Cancellation of nearly linear-fractional stage distortions.

A composition sigma_m o H_m o ... o sigma_1 o H_1 with each H_i = h_i o g_i
(h_i linear-fractional) is compared with the sigma-only model composition
S_m.  The controlling quantities are D-tilde, the summed distortion of the
g corrections, and Delta, the largest running sum of the constant
displacements delta_i of the h_i models: running sums, not absolute sums,
which is what lets alternating distortions cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ChainingError, DomainError
from .intervals import Interval
from .maps import (
    CompositionMap,
    LinearFractionalMap,
    MapDescriptor,
    distortion_norm,
    sup_on_line,
)

_ENDPOINT_TOL = 1e-8


@dataclass
class CancellationStage:
    sigma: MapDescriptor
    H: MapDescriptor
    h: LinearFractionalMap
    g: MapDescriptor
    delta: float


class CancellationDecomposition:
    """Stages (sigma_i, H_i) with H_i factored as h_i o g_i, h_i Moebius."""

    def __init__(self, stages: Sequence[tuple[MapDescriptor, MapDescriptor, LinearFractionalMap, MapDescriptor]]):
        if not stages:
            raise ChainingError("empty decomposition")
        self.stages: list[CancellationStage] = []
        for k, (sigma, H, h, g) in enumerate(stages):
            if not isinstance(h, LinearFractionalMap):
                raise DomainError(f"stage {k}: h must be linear-fractional")
            _check_match(g.domain, H.domain, f"stage {k}: g domain vs H domain")
            _check_match(g.image, h.domain, f"stage {k}: g image vs h domain")
            _check_match(h.image, H.image, f"stage {k}: h image vs H image")
            _check_match(H.image, sigma.domain, f"stage {k}: H image vs sigma domain")
            if k + 1 < len(stages):
                _check_match(sigma.image, stages[k + 1][1].domain, f"stage {k}: sigma image vs next H domain")
            self.stages.append(
                CancellationStage(sigma, H, h, g, h.translation_displacement)
            )

    @property
    def m(self) -> int:
        return len(self.stages)

    @property
    def deltas(self) -> list[float]:
        return [st.delta for st in self.stages]

    def full_map(self) -> CompositionMap:
        flat: list[MapDescriptor] = []
        for st in self.stages:
            flat.extend((st.g, st.h, st.sigma))
        return CompositionMap(flat)

    def reduced_map(self) -> CompositionMap:
        """The composition with every g stripped (h domains re-anchored)."""
        flat: list[MapDescriptor] = []
        for st in self.stages:
            flat.extend((st.h, st.sigma))
        return CompositionMap(flat)


def _check_match(a: Interval, b: Interval, what: str) -> None:
    tol = _ENDPOINT_TOL * max(a.length, b.length)
    if abs(a.lo - b.lo) > tol or abs(a.hi - b.hi) > tol:
        raise ChainingError(f"{what}: ({a.lo}, {a.hi}) vs ({b.lo}, {b.hi})")


def d_tilde(d: CancellationDecomposition, grid: int = 4096) -> float:
    """Summed distortion norms of the g corrections."""
    return float(sum(distortion_norm(st.g, grid=grid) for st in d.stages))


def delta_max(d: CancellationDecomposition) -> float:
    """Largest absolute running sum of the h displacements."""
    run = 0.0
    best = 0.0
    for delta in d.deltas:
        run += delta
        best = max(best, abs(run))
    return best


def sigma_composition(d: CancellationDecomposition, x):
    """Value at x of the composed sigma models S_m."""
    for st in d.stages:
        x = st.sigma.model(x)
    return x


@dataclass
class CancellationReport:
    d_tilde: float
    delta: float
    gap: float
    bound: float
    gap_reduced: float
    bound_reduced: float
    grid: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.bound + self.tol

    @property
    def passed_reduced(self) -> bool:
        return self.gap_reduced <= self.bound_reduced + self.tol


def cancellation_verify(
    d: CancellationDecomposition, grid: int = 4096, tol: float = 1e-6
) -> CancellationReport:
    """Measure |P(f) - S_m| against D-tilde + 2*Delta on the guarded grid.

    Also verifies the reduced form (g corrections stripped) against
    2*Delta alone.  The two sides of each gap go through independent
    evaluation paths: the full chained model versus the staged sigma
    models.
    """
    dt = d_tilde(d, grid=grid)
    dl = delta_max(d)
    full = d.full_map()
    reduced = d.reduced_map()

    def gap_fn(g):
        return full.model_displacement(g) + g - sigma_composition(d, g)

    def gap_reduced_fn(g):
        return reduced.model_displacement(g) + g - sigma_composition(d, g)

    gap = sup_on_line(gap_fn, grid=grid)
    gap_reduced = sup_on_line(gap_reduced_fn, grid=grid)
    return CancellationReport(
        d_tilde=dt,
        delta=dl,
        gap=gap,
        bound=dt + 2.0 * dl,
        gap_reduced=gap_reduced,
        bound_reduced=2.0 * dl,
        grid=grid,
        tol=tol,
    )
