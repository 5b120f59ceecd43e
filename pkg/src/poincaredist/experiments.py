"""Approximate iterates and the pure-singularity measurements.

The iterate of a circle map along a chain is approximated by keeping the
map on chain intervals inside a symmetric neighborhood of the critical
point and replacing it by the affine map with the same image elsewhere.
The Poincare gap between the iterate and its approximation is then
controlled by the cancellation bound D-tilde + 2*Delta, where the stage
displacements are half nonlinearity integrals: distortion collected far
from the critical point cancels instead of accumulating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cancellation import CancellationDecomposition
from .circle import (
    ChainOfIntervals,
    CircleArc,
    CircleMapLift,
    ContinuedFraction,
    DynamicalPartition,
    build_chain,
    chain_stage,
    dynamical_partition,
    rotation_number,
    symmetric_neighborhood,
)
from .errors import DomainError
from .intervals import Interval
from .maps import (
    AffineMap,
    CompositionMap,
    LinearFractionalMap,
    MapDescriptor,
    distortion_norm,
    nonlinearity_integral,
    sup_on_line,
)

SYMMETRY_TOL = 1e-8


@dataclass
class ApproximateMap:
    """Iterate along a chain with remote stages replaced by affine maps."""

    chain: ChainOfIntervals
    neighborhood: CircleArc
    kept: list[bool]
    exact: CompositionMap
    approx: CompositionMap

    @property
    def kept_count(self) -> int:
        return sum(self.kept)


def approximate(f: CircleMapLift, chain: ChainOfIntervals, U: CircleArc) -> ApproximateMap:
    """Keep f on chain intervals inside U, use same-image affine maps elsewhere."""
    d_lo = f.lift.derivative(U.lo, 1)
    d_hi = f.lift.derivative(U.hi, 1)
    if abs(d_lo - d_hi) > SYMMETRY_TOL * max(1.0, abs(d_lo), abs(d_hi)):
        raise DomainError("neighborhood is not derivative-symmetric")
    kept: list[bool] = []
    exact_stages: list[MapDescriptor] = []
    approx_stages: list[MapDescriptor] = []
    arcs = chain.circle_arcs()
    for t in range(chain.m):
        stage = chain_stage(f, chain, t)
        keep = U.contains_arc(arcs[t], tol=1e-12)
        kept.append(keep)
        exact_stages.append(stage)
        approx_stages.append(stage if keep else AffineMap.between(stage.domain, stage.image))
    return ApproximateMap(
        chain=chain,
        neighborhood=U,
        kept=kept,
        exact=CompositionMap(exact_stages),
        approx=CompositionMap(approx_stages),
    )


def main_theorem_gap(
    f: CircleMapLift,
    chain: ChainOfIntervals,
    U: CircleArc,
    grid: int = 4096,
    am: ApproximateMap | None = None,
) -> float:
    """Guarded-grid sup of |P(f^m) - P(phi)| on the line of the first interval."""
    if am is None:
        am = approximate(f, chain, U)
    return sup_on_line(
        lambda g: am.exact.model_displacement(g) - am.approx.model_displacement(g),
        grid=grid,
    )


def h_prescription(H: MapDescriptor) -> tuple[LinearFractionalMap, CompositionMap]:
    """Moebius part of a stage: same domain and image, displacement
    -1/2 the nonlinearity integral; the correction is g = h^{-1} o H."""
    delta = -0.5 * nonlinearity_integral(H, H.domain)
    h = LinearFractionalMap.from_displacement(H.domain, H.image, delta)
    g = CompositionMap([H, h.inverse_map()])
    return h, g


def identity_moebius(I: Interval) -> LinearFractionalMap:
    return LinearFractionalMap((1.0, 0.0, 0.0, 1.0), I)


def induced_cancellation(
    f: CircleMapLift, chain: ChainOfIntervals, U: CircleArc, am: ApproximateMap | None = None
) -> CancellationDecomposition:
    """Cancellation stages of the chain iterate: remote stages become H's
    with prescribed Moebius parts, runs of kept stages become sigmas."""
    if am is None:
        am = approximate(f, chain, U)
    stages = []
    pending_H = None  # (H, h, g) waiting for its sigma
    lead_kept: list[MapDescriptor] = []
    for t in range(chain.m):
        stage = chain_stage(f, chain, t)
        if am.kept[t]:
            lead_kept.append(stage)
            continue
        sigma_maps = lead_kept
        lead_kept = []
        if pending_H is not None:
            H, h, g = pending_H
            sigma = (
                CompositionMap(sigma_maps) if sigma_maps else AffineMap.identity(H.image)
            )
            stages.append((sigma, H, h, g))
        else:
            # leading kept run becomes the sigma of an identity opening stage
            if sigma_maps:
                I0 = sigma_maps[0].domain
                stages.append(
                    (
                        CompositionMap(sigma_maps),
                        AffineMap.identity(I0),
                        identity_moebius(I0),
                        AffineMap.identity(I0),
                    )
                )
        h, g = h_prescription(stage)
        pending_H = (stage, h, g)
    if pending_H is not None:
        H, h, g = pending_H
        sigma = CompositionMap(lead_kept) if lead_kept else AffineMap.identity(H.image)
        stages.append((sigma, H, h, g))
    elif lead_kept:
        I0 = lead_kept[0].domain
        stages.append(
            (
                CompositionMap(lead_kept),
                AffineMap.identity(I0),
                identity_moebius(I0),
                AffineMap.identity(I0),
            )
        )
    return CancellationDecomposition(stages)


def stage_displacement(f: CircleMapLift, interval: Interval) -> float:
    """-1/2 of the nonlinearity integral of the lift over a chain interval."""
    return -0.5 * float(
        f.lift.log_derivative(interval.hi) - f.lift.log_derivative(interval.lo)
    )


def d_tilde_circle(
    f: CircleMapLift,
    chain: ChainOfIntervals,
    U: CircleArc,
    grid: int = 4096,
    am: ApproximateMap | None = None,
) -> tuple[float, list[dict]]:
    """Summed distortion of the prescription corrections, with per-stage
    diagnostics against the squared size-to-distance ratio."""
    if am is None:
        am = approximate(f, chain, U)
    base = f.critical_point if f.critical_point is not None else 0.0
    arcs = chain.circle_arcs()
    total = 0.0
    details = []
    for t in range(chain.m):
        if am.kept[t]:
            continue
        stage = chain_stage(f, chain, t)
        _, g = h_prescription(stage)
        norm = distortion_norm(g, grid=grid)
        dist = arcs[t].distance_to_point(base)
        ratio2 = (arcs[t].length / dist) ** 2 if dist > 0 else math.inf
        details.append(
            {"t": t, "g_norm": norm, "size_dist_sq": ratio2, "quotient": norm / ratio2 if ratio2 > 0 else 0.0}
        )
        total += norm
    return total, details


def delta_circle(
    f: CircleMapLift, chain: ChainOfIntervals, U: CircleArc, am: ApproximateMap | None = None
) -> float:
    """Largest absolute partial sum of the remote-stage displacements."""
    if am is None:
        am = approximate(f, chain, U)
    run = 0.0
    best = 0.0
    for t in range(chain.m):
        if am.kept[t]:
            continue
        run += stage_displacement(f, chain.intervals[t])
        best = max(best, abs(run))
    return best


# ----------------------------------------------------------------------
# densities
# ----------------------------------------------------------------------


@dataclass
class DensityCell:
    arc: CircleArc
    measure: float  # Lebesgue measure of the cell inside the ambient set
    value: float  # conditional expectation of the chain indicator
    meets_complement: bool  # cell reaches outside U


@dataclass
class DensityProfile:
    order: int
    cells: list[DensityCell]
    mean: float  # E(chi) over the ambient probability space
    v_ratio: float  # max/min - 1 over cells meeting the complement of U
    l1_deviation: float  # normalized integral of |E(chi|D_j) - E(chi)|
    ambient_measure: float


def _chain_arcs_outside(chain: ChainOfIntervals, U: CircleArc) -> list[CircleArc]:
    """Chain intervals that are not fully inside U (they belong to the
    ambient space: the complement of U plus the straddling intervals)."""
    return [a for a in chain.circle_arcs() if not U.contains_arc(a, tol=1e-12)]


def _cell_measures(
    element: CircleArc, U: CircleArc, chain_arcs: list[CircleArc]
) -> tuple[float, float]:
    """(ambient measure, chain measure) of a partition element.

    Ambient set: complement of U plus the in-U parts of straddling chain
    intervals.
    """
    outside = element.length - element.intersection_length(U)
    chain_m = 0.0
    in_u_extra = 0.0
    for c in chain_arcs:
        chain_m += element.intersection_length(c)
        for piece in c.intersection_arcs(U):
            in_u_extra += element.intersection_length(piece)
    return outside + in_u_extra, chain_m


def density_profile(
    f: CircleMapLift,
    chain: ChainOfIntervals,
    U: CircleArc,
    j: int,
    cf: ContinuedFraction,
    partition: DynamicalPartition | None = None,
) -> DensityProfile:
    """Per-element conditional expectations of the chain indicator."""
    part = partition if partition is not None else dynamical_partition(f, j, cf)
    chain_arcs = _chain_arcs_outside(chain, U)
    cells: list[DensityCell] = []
    total_m = 0.0
    total_chain = 0.0
    for el in part.elements:
        m_el, m_chain = _cell_measures(el.arc, U, chain_arcs)
        if m_el <= 1e-15:
            continue
        meets = el.arc.length - el.arc.intersection_length(U) > 1e-12 * el.arc.length
        cells.append(DensityCell(el.arc, m_el, m_chain / m_el, meets))
        total_m += m_el
        total_chain += m_chain
    mean = total_chain / total_m
    outside_vals = [c.value for c in cells if c.meets_complement]
    v_ratio = (
        max(outside_vals) / min(outside_vals) - 1.0
        if outside_vals and min(outside_vals) > 0
        else math.inf
    )
    l1 = sum(abs(c.value - mean) * c.measure for c in cells) / total_m
    return DensityProfile(
        order=part.order,
        cells=cells,
        mean=mean,
        v_ratio=v_ratio,
        l1_deviation=l1,
        ambient_measure=total_m,
    )


def nonlinearity_split_terms(
    f: CircleMapLift,
    chain: ChainOfIntervals,
    U: CircleArc,
    profile: DensityProfile,
    subgrid: int = 16,
) -> dict:
    """The chain nonlinearity integral and its conditional-expectation split.

    Integrals are over the ambient set with plain length measure:
    int chi*n = int chi*(n - E(n|D_j)) + int (E(chi|D_j) - E(chi)) E(n|D_j)
              + E(chi) * int E(n|D_j).
    """
    chain_arcs = _chain_arcs_outside(chain, U)
    lift = f.lift

    def exact_integral(arc: CircleArc) -> float:
        return float(lift.log_derivative(arc.hi) - lift.log_derivative(arc.lo))

    chi_n = sum(exact_integral(c) for c in chain_arcs)

    # E(n | cell) via midpoint sums on each ambient piece of the cell
    cell_data = []
    for cell in profile.cells:
        pieces = cell.arc.subtract(U)
        for c in chain_arcs:
            for piece in c.intersection_arcs(U):
                pieces.extend(cell.arc.intersection_arcs(piece))
        num = 0.0
        for p in pieces:
            xs = np.linspace(p.lo + p.length / (2 * subgrid), p.hi - p.length / (2 * subgrid), subgrid)
            num += float(np.mean(lift.nonlinearity(xs))) * p.length
        cell_data.append(num / cell.measure if cell.measure > 0 else 0.0)

    chain_in_cell = [c.value * c.measure for c in profile.cells]
    term_cond = sum(e_n * mc for e_n, mc in zip(cell_data, chain_in_cell))
    term_fluct = chi_n - term_cond
    term_split_mean = profile.mean * sum(
        e_n * c.measure for e_n, c in zip(cell_data, profile.cells)
    )
    term_split_main = term_cond - term_split_mean
    return {
        "chi_n_integral": chi_n,
        "term_fluctuation": term_fluct,
        "term_density_dev": term_split_main,
        "term_mean": term_split_mean,
    }


# ----------------------------------------------------------------------
# decay fits and the full report
# ----------------------------------------------------------------------


@dataclass
class DecayFit:
    xs: list[float]
    ys: list[float]
    model: str  # 'exp-in-x' | 'exp-in-sqrt-x'
    K1: float
    K2: float
    residual: float
    degenerate: bool = False

    @property
    def decays(self) -> bool:
        return self.degenerate or self.K2 < 1.0


def fit_decay(xs: Sequence[float], ys: Sequence[float], model: str = "exp-in-sqrt-x") -> DecayFit:
    """Least squares in log space: log y = log K1 + t(x) log K2."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if all(y < 1e-14 for y in ys):
        return DecayFit(xs, ys, model, 0.0, 0.0, 0.0, degenerate=True)
    t = [math.sqrt(x) if model == "exp-in-sqrt-x" else x for x in xs]
    logy = [math.log(max(y, 1e-300)) for y in ys]
    slope, intercept = np.polyfit(t, logy, 1)
    fitted = [intercept + slope * tt for tt in t]
    residual = math.sqrt(sum((a - b) ** 2 for a, b in zip(fitted, logy)) / len(logy))
    return DecayFit(xs, ys, model, math.exp(intercept), math.exp(slope), residual)


@dataclass
class PureSingularityRow:
    kappa: int
    lam: int
    j: int
    fineness_measured: int
    m: int
    kept: int
    delta: float
    d_tilde: float
    gap: float
    bound: float
    E_chi: float
    v_j: float
    l1_density_dev: float
    chi_n_integral: float
    term_fluctuation: float
    term_density_dev: float
    term_mean: float

    @property
    def gap_within_bound(self) -> bool:
        return self.gap <= self.bound + 1e-9


@dataclass
class ExperimentReport:
    rows: list[PureSingularityRow]
    gap_fit: DecayFit
    d_tilde_fit: DecayFit
    delta_fit: DecayFit
    density_fit: DecayFit
    lam: int
    seed: int
    grid: int

    @property
    def all_gaps_bounded(self) -> bool:
        return all(r.gap_within_bound for r in self.rows)


def standard_chain(
    f: CircleMapLift, kappa: int, cf: ContinuedFraction
) -> ChainOfIntervals:
    """Disjoint chain from a short-kind order-kappa element, iterated
    q_kappa - 1 times.

    The seed is the first short element whose midpoint sits at or past the
    antipode of the critical point: it starts the chain in the remote
    region, which keeps chains at different orders comparable.
    """
    part = dynamical_partition(f, kappa, cf)
    base = f.critical_point if f.critical_point is not None else 0.0
    shorts = [el for el in part.elements if el.kind == "short" and el.orbit_index > 0]
    if not shorts:
        raise DomainError(f"no non-adjacent short element at order {kappa}")
    seed = min(
        shorts,
        key=lambda el: (0.5 * (el.arc.lo + el.arc.hi) - (base + 0.5)) % 1.0,
    )
    return build_chain(f, seed.arc, cf.q[kappa] - 1, cf)


def pure_singularity_report(
    f: CircleMapLift,
    kappas: Sequence[int],
    lam: int,
    grid: int = 4096,
    seed: int = 0,
    j_order: int | None = None,
    cf: ContinuedFraction | None = None,
) -> ExperimentReport:
    """Gap, cancellation bound and density diagnostics for each chain order."""
    kappas = sorted(int(k) for k in kappas)
    if min(kappas) <= lam:
        raise DomainError("chain fineness must exceed the neighborhood fineness")
    if cf is None:
        _, cf = rotation_number(f, depth=max(kappas) + 2)
    U = symmetric_neighborhood(f, lam, cf)
    rows = []
    for kappa in kappas:
        chain = standard_chain(f, kappa, cf)
        am = approximate(f, chain, U)
        gap = main_theorem_gap(f, chain, U, grid=grid, am=am)
        dt, _ = d_tilde_circle(f, chain, U, grid=grid, am=am)
        dl = delta_circle(f, chain, U, am=am)
        j = j_order if j_order is not None else (lam + kappa) // 2
        prof = density_profile(f, chain, U, j, cf)
        split = nonlinearity_split_terms(f, chain, U, prof)
        rows.append(
            PureSingularityRow(
                kappa=kappa,
                lam=lam,
                j=j,
                fineness_measured=chain.fineness,
                m=chain.m,
                kept=am.kept_count,
                delta=dl,
                d_tilde=dt,
                gap=gap,
                bound=dt + 2.0 * dl,
                E_chi=prof.mean,
                v_j=prof.v_ratio,
                l1_density_dev=prof.l1_deviation,
                **{k: split[k] for k in ("chi_n_integral", "term_fluctuation", "term_density_dev", "term_mean")},
            )
        )
    gaps_x = [r.kappa - lam for r in rows]
    report = ExperimentReport(
        rows=rows,
        gap_fit=fit_decay(gaps_x, [r.gap for r in rows], "exp-in-sqrt-x"),
        d_tilde_fit=fit_decay(gaps_x, [r.d_tilde for r in rows], "exp-in-x"),
        delta_fit=fit_decay(gaps_x, [r.delta for r in rows], "exp-in-sqrt-x"),
        density_fit=fit_decay(
            [r.kappa - r.j for r in rows], [r.l1_density_dev for r in rows], "exp-in-sqrt-x"
        ),
        lam=lam,
        seed=seed,
        grid=grid,
    )
    return report
