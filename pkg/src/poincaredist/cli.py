"""Command-line experiment driver with CSV/JSON emission.

Exit codes: 0 all checks pass, 1 a bound or decay check failed,
2 configuration error, 3 numerical-accuracy refusal.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

from . import __version__
from .cancellation import cancellation_verify
from .circle import (
    CircleMapLift,
    arnold_map,
    dynamical_partition,
    find_parameter,
    rigid_rotation,
    rotation_number,
)
from .compositions import ubdl_verify
from .config import RunConfig, parse_config
from .errors import AccuracyRefusalError, ConfigError, PoincaredistError
from .experiments import pure_singularity_report
from .intervals import PointQuadruple, cross_ratio
from .suites import make_cancellation_suite, make_ubdl_suite

_TARGET_BOUNDS = {
    ("rigid", "golden"): (0.55, 0.68),
    ("rigid", "silver"): (0.35, 0.48),
    ("arnold", "golden"): (0.5, 0.7),
    ("arnold", "silver"): (0.3, 0.5),
}
_PREFIX = {"golden": 1, "silver": 2}


def build_map(cfg: RunConfig) -> CircleMapLift:
    family = rigid_rotation if cfg.family == "rigid" else arnold_map
    if cfg.omega is not None:
        return family(cfg.omega)
    lo, hi = _TARGET_BOUNDS[(cfg.family, cfg.target)]
    prefix = [_PREFIX[cfg.target]] * cfg.cf_depth
    return family(find_parameter(family, lo, hi, prefix))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report(
    cfg: RunConfig,
    columns: list[str],
    rows: list[list],
    footer_comments: list[str] | None = None,
) -> Path:
    out = Path(cfg.out or f"{cfg.command}.csv")
    lines = []
    if cfg.timestamp:
        lines.append(f"# generated {datetime.datetime.now().isoformat()}")
    cfg_desc = " ".join(f"{k}={_fmt(v)}" for k, v in cfg.items() if v is not None)
    lines.append(f"# config {cfg_desc}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    for comment in footer_comments or []:
        lines.append(f"# {comment}")
    out.write_text("\n".join(lines) + "\n")
    if cfg.emit_json:
        payload = {
            "config": {k: v for k, v in cfg.items()},
            "rows": [dict(zip(columns, row)) for row in rows],
            "footer": footer_comments or [],
        }
        Path(out).with_suffix(".json").write_text(
            json.dumps(payload, indent=1, default=float) + "\n"
        )
    return out


def _provenance(cfg: RunConfig) -> list:
    return [cfg.grid, cfg.eps_guard, cfg.seed, __version__]


_PROV_COLS = ["grid", "eps_guard", "seed", "version"]


def cmd_ubdl(cfg: RunConfig) -> int:
    suite = make_ubdl_suite(cfg.seed, cfg.n_compositions, cfg.m_max)
    columns = [
        "case", "m", "pure_sigma", "d1", "d2", "cross_ratio_term", "measured",
        "bound_technical", "bound_simplified", "koebe_integrated", "passed",
    ] + _PROV_COLS
    rows = []
    all_ok = True
    for case in suite:
        rep = ubdl_verify(
            case.composition,
            case.sub,
            Q=cfg.Q,
            grid=cfg.grid,
            d1_samples=cfg.d1_samples,
            seed=cfg.seed,
        )
        ok = rep.passed
        koebe_bound = float("nan")
        if case.pure_sigma:
            outer = case.composition.domain
            koebe_bound = 2.0 * abs(
                math.log(cross_ratio(PointQuadruple(outer.lo, case.sub.lo, case.sub.hi, outer.hi)))
            )
            ok = ok and rep.measured <= koebe_bound + 1e-6
        all_ok = all_ok and ok
        rows.append(
            [case.index, case.composition.m, case.pure_sigma, rep.d1, rep.d2,
             rep.cross_ratio_term, rep.measured, rep.bound_technical,
             rep.bound_simplified, koebe_bound, ok] + _provenance(cfg)
        )
    out = write_report(cfg, columns, rows)
    print(f"ubdl: {len(rows)} cases, {'all pass' if all_ok else 'FAILURES'} -> {out}")
    return 0 if all_ok else 1


def cmd_cancel(cfg: RunConfig) -> int:
    suite = make_cancellation_suite(cfg.seed, cfg.n_cases, cfg.m_max)
    columns = [
        "case", "pattern", "m", "d_tilde", "delta", "sum_abs_delta", "gap",
        "bound", "gap_reduced", "bound_reduced", "passed", "passed_reduced",
    ] + _PROV_COLS
    rows = []
    all_ok = True
    for case in suite:
        rep = cancellation_verify(case.decomposition, grid=cfg.grid, tol=cfg.tol)
        ok = rep.passed and rep.passed_reduced
        all_ok = all_ok and ok
        rows.append(
            [case.index, case.pattern, case.decomposition.m, rep.d_tilde, rep.delta,
             sum(abs(d) for d in case.decomposition.deltas), rep.gap, rep.bound,
             rep.gap_reduced, rep.bound_reduced, rep.passed, rep.passed_reduced]
            + _provenance(cfg)
        )
    out = write_report(cfg, columns, rows)
    print(f"cancel: {len(rows)} cases, {'all pass' if all_ok else 'FAILURES'} -> {out}")
    return 0 if all_ok else 1


def cmd_puresing(cfg: RunConfig) -> int:
    if cfg.kappa_min <= cfg.lam:
        raise ConfigError("kappa_min must exceed lam (chain finer than the neighborhood)")
    if cfg.kappa_max > cfg.max_order and not cfg.acknowledge_accuracy:
        raise AccuracyRefusalError(
            f"kappa_max {cfg.kappa_max} beyond the trusted depth {cfg.max_order}; "
            "set acknowledge_accuracy=true to proceed"
        )
    f = build_map(cfg)
    report = pure_singularity_report(
        f,
        range(cfg.kappa_min, cfg.kappa_max + 1),
        cfg.lam,
        grid=cfg.grid,
        seed=cfg.seed,
        j_order=cfg.j_order,
    )
    columns = [
        "kappa", "lambda", "j", "delta", "d_tilde", "gap", "bound", "E_chi",
        "v_j", "L1_density_dev", "fit_K1", "fit_K2", "residual", "seed",
        "grid", "eps_guard",
        "fineness_measured", "m", "kept", "chi_n_integral",
        "term_fluctuation", "term_density_dev", "term_mean", "version",
    ]
    rows = []
    for r in report.rows:
        rows.append(
            [r.kappa, r.lam, r.j, r.delta, r.d_tilde, r.gap, r.bound, r.E_chi,
             r.v_j, r.l1_density_dev, report.gap_fit.K1, report.gap_fit.K2,
             report.gap_fit.residual, cfg.seed, cfg.grid, cfg.eps_guard,
             r.fineness_measured, r.m, r.kept, r.chi_n_integral,
             r.term_fluctuation, r.term_density_dev, r.term_mean, __version__]
        )
    ok = (
        report.all_gaps_bounded
        and report.gap_fit.decays
        and report.gap_fit.residual <= cfg.resid_max
    )
    footer = [
        f"gap_fit K1={report.gap_fit.K1!r} K2={report.gap_fit.K2!r} residual={report.gap_fit.residual!r}",
        f"d_tilde_fit K2={report.d_tilde_fit.K2!r} delta_fit K2={report.delta_fit.K2!r}",
        f"density_fit K2={report.density_fit.K2!r}",
    ]
    out = write_report(cfg, columns, rows, footer_comments=footer)
    print(f"puresing: {len(rows)} rows, {'pass' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def cmd_partition(cfg: RunConfig) -> int:
    if cfg.k > cfg.max_order and not cfg.acknowledge_accuracy:
        raise AccuracyRefusalError(
            f"order {cfg.k} beyond the trusted depth {cfg.max_order}; "
            "set acknowledge_accuracy=true to proceed"
        )
    f = build_map(cfg)
    _, cf = rotation_number(f, depth=cfg.k + 1)
    part = dynamical_partition(f, cfg.k, cf)
    columns = ["order", "kind", "orbit_index", "lo", "hi", "length"] + _PROV_COLS
    rows = []
    for el in part.elements:
        lo = el.arc.lo % 1.0
        rows.append(
            [part.order, el.kind, el.orbit_index, lo, lo + el.arc.length, el.arc.length]
            + _provenance(cfg)
        )
    out = write_report(
        cfg, columns, rows, footer_comments=[f"tiling_defect={part.tiling_defect!r}"]
    )
    print(f"partition: {len(rows)} elements, defect {part.tiling_defect:.3e} -> {out}")
    return 0


COMMANDS = {
    "ubdl": cmd_ubdl,
    "cancel": cmd_cancel,
    "puresing": cmd_puresing,
    "partition": cmd_partition,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="poincaredist",
        description="Distortion-calculus verification suites for one-dimensional maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--no-timestamp", action="store_true")
        p.add_argument("--json", action="store_true", help="also write a JSON mirror")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        cfg.command = args.command
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        if args.no_timestamp:
            cfg.timestamp = False
        if args.json:
            cfg.emit_json = True
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg)
    except AccuracyRefusalError as e:
        print(f"accuracy refusal: {e}", file=sys.stderr)
        return 3
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except PoincaredistError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
