"""Command-line front end.

Every command loads one INI config (see config.py), runs one pipeline, and
emits a JSON document with a fixed envelope::

    {"command": ..., "seed": ..., "parameters": {...},
     "report": {...}, "verdict": "pass" | "fail"}

validating against the published schema in ``data/reports_schema.json``.
Exit codes: 0 every check passed, 1 a verified violation (the report carries
a witness), 2 bad input or a numerical failure (diagnostics on stderr).
Reports never mention worker counts or timestamps, so a fixed --seed yields
byte-identical output for any --jobs value.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .config import RunConfig, load_config
from .contraction import ScanPlan, contraction_margin_at, verify_contraction
from .dp import solve_system
from .errors import InputError, NumericalError
from .expr import EvalError
from .metric import SamplingPlan, verify_fm_axioms
from .implicit import verify_psi
from .pairs import (DEFAULT_T_GRID, check_commutation_variant, check_property_EA,
                    check_range_closed, check_range_containment,
                    find_coincidence_points)
from .pipeline import find_common_fixed_points, run_theorem_pipeline

COMMANDS = ("axioms", "psi-check", "verify", "pairs", "fixpoint", "theorem",
            "dp-solve", "reproduce-example6")


def _parse_t_grid(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise InputError(f"--t-grid must be comma-separated numbers, got {text!r}") from None
    if not values:
        raise InputError("--t-grid must be nonempty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzfix",
        description="Verify fuzzy-metric fixed-point hypotheses and solve the "
                    "associated dynamic programs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("axioms", "check the configured membership against the space axioms"),
        ("psi-check", "check the configured quadruple gauge's family conditions"),
        ("verify", "scan the configured contractive inequality"),
        ("pairs", "run the pairwise hypotheses for the configured maps"),
        ("fixpoint", "search for common fixed points of the configured maps"),
        ("theorem", "run the full hypothesis pipeline"),
        ("dp-solve", "solve the configured dynamic-programming system"),
        ("reproduce-example6", "run the bundled worked example end to end"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="path to the INI config")
        cmd.add_argument("--out", help="write the JSON report here instead of stdout")
        cmd.add_argument("--seed", type=int, default=0,
                         help="seed for randomized sampling (default 0)")
        cmd.add_argument("--jobs", type=int, default=1,
                         help="worker threads; output is identical for any value")
        cmd.add_argument("--grid", type=int, default=None,
                         help="override the command's sampling grid size")
        cmd.add_argument("--tol", type=float, default=None,
                         help="override the command's main tolerance")
        cmd.add_argument("--t-grid", dest="t_grid", default=None,
                         help="comma-separated positive time samples")
        if name == "psi-check":
            cmd.add_argument("--variant", choices=("as_printed", "strict"),
                             default="as_printed",
                             help="read the implication conditions as printed, or "
                                  "with the strict consequent the proofs use")
        if name == "dp-solve":
            cmd.add_argument("--csv", help="also export the solution as CSV (x,value)")
    return parser


def _require_config(args) -> RunConfig:
    if not args.config:
        raise InputError("this command needs --config PATH")
    return load_config(args.config)


def _scan_plan(args, default_grid: int = 51) -> ScanPlan:
    return ScanPlan(
        grid_n=args.grid if args.grid is not None else default_grid,
        t_grid=_parse_t_grid(args.t_grid) if args.t_grid else DEFAULT_T_GRID,
        jobs=args.jobs)


def _cmd_axioms(args) -> tuple[bool, dict, dict]:
    cfg = _require_config(args)
    fm = cfg.fuzzy_metric()
    plan = SamplingPlan(
        grid_n=args.grid if args.grid is not None else 21,
        t_grid=_parse_t_grid(args.t_grid) if args.t_grid else (0.25, 0.5, 1.0, 2.0, 4.0),
        n_random=1000, seed=args.seed, jobs=args.jobs)
    report = verify_fm_axioms(fm, plan)
    params = {"grid": plan.grid_n, "t_grid": list(plan.t_grid),
              "n_random": plan.n_random}
    return report.passed, report.to_dict(), params


def _cmd_psi_check(args) -> tuple[bool, dict, dict]:
    cfg = _require_config(args)
    psi = cfg.psi()
    grid_n = args.grid if args.grid is not None else 21
    report = verify_psi(psi, variant=args.variant, grid_n=grid_n)
    return report.passed, report.to_dict(), {"grid": grid_n, "variant": args.variant}


def _cmd_verify(args) -> tuple[bool, dict, dict]:
    cfg = _require_config(args)
    quad = cfg.quadruple()
    spec = cfg.contraction_spec()
    plan = _scan_plan(args)
    report = verify_contraction(quad, spec, plan)
    params = {"grid": plan.grid_n, "t_grid": list(plan.t_grid)}
    return report.passed, report.to_dict(), params


def _cmd_pairs(args) -> tuple[bool, dict, dict]:
    cfg = _require_config(args)
    quad = cfg.quadruple()
    t_grid = _parse_t_grid(args.t_grid) if args.t_grid else DEFAULT_T_GRID
    variant = cfg._raw("contraction", "commutation", "weakly_compatible") \
        if cfg.has("contraction") else "weakly_compatible"
    r_constant = cfg._float("contraction", "r_constant", 1.0) \
        if cfg.has("contraction") else 1.0
    tail_tol = args.tol if args.tol is not None else cfg.tolerances().tail

    report: dict = {"coincidence": {}, "commutation": {}}
    statuses: list[str] = []
    for label, pair in (("af", quad.pair_af), ("bg", quad.pair_bg)):
        found = find_coincidence_points(pair.first, pair.second)
        report["coincidence"][label] = found.to_dict()
        if variant == "weakly_compatible" and not found.points:
            report["commutation"][label] = {
                "variant": variant, "status": "inconclusive",
                "note": "no coincidence points found; nothing to check"}
            statuses.append("inconclusive")
            continue
        points = found.points if variant == "weakly_compatible" else None
        comm = check_commutation_variant(pair, variant, r_constant=r_constant,
                                         points=points, t_grid=t_grid)
        report["commutation"][label] = comm.to_dict()
        statuses.append(comm.status)

    seq_af, seq_bg = cfg.sequence("af"), cfg.sequence("bg")
    if seq_af is not None and seq_bg is not None:
        ea = check_property_EA([quad.pair_af, quad.pair_bg], [seq_af, seq_bg],
                               tol=tail_tol)
    elif seq_af is not None:
        ea = check_property_EA(quad.pair_af, seq_af, tol=tail_tol)
    else:
        ea = None
    report["property_ea"] = None if ea is None else ea.to_dict()
    if ea is not None:
        statuses.append(ea.status)

    containment = check_range_containment(quad.g, quad.a)
    report["containment"] = containment.to_dict()
    statuses.append(containment.status)
    closed = check_range_closed(quad.a)
    report["closedness"] = closed.to_dict()
    statuses.append(closed.status)

    verdict = not any(s in ("fail", "noncompatible") for s in statuses)
    return verdict, report, {"t_grid": list(t_grid), "variant": variant,
                             "tail_tol": tail_tol}


def _cmd_fixpoint(args) -> tuple[bool, dict, dict]:
    cfg = _require_config(args)
    quad = cfg.quadruple()
    tol = args.tol if args.tol is not None else cfg.tolerances().fixed_point
    search = find_common_fixed_points(quad, tol=tol, grid_n=args.grid)
    verdict = search.all_points_fixed or bool(search.certificates)
    return verdict, search.to_dict(), {"tol": tol, "grid": search.grid_n}


def _theorem_report(cfg: RunConfig, args) -> tuple[bool, dict, dict]:
    plan = _scan_plan(args)
    tc = cfg.theorem_config(plan)
    report = run_theorem_pipeline(tc)
    doc = report.to_dict()
    params = {"grid": plan.grid_n, "t_grid": list(plan.t_grid),
              "ea_pairs": tc.ea_pairs, "containment": tc.containment_direction,
              "closedness": tc.closedness_target,
              "commutation": tc.commutation_variant}
    return report.certified, doc, params


def _cmd_theorem(args) -> tuple[bool, dict, dict]:
    return _theorem_report(_require_config(args), args)


def _cmd_reproduce(args) -> tuple[bool, dict, dict]:
    with resources.as_file(resources.files("fuzzfix") / "data" / "example6.ini") as path:
        cfg = load_config(path)
        verdict, doc, params = _theorem_report(cfg, args)
        spot = contraction_margin_at(cfg.contraction_spec(), cfg.quadruple(),
                                     1.0, 1.0, 1.0)
    report = {"pipeline": doc, "spot_margin_at_1_1_1": spot}
    return verdict, report, params


def _cmd_dp_solve(args) -> tuple[bool, dict, dict]:
    cfg = _require_config(args)
    prob, tol, max_iter = cfg.dp_problem()
    if args.tol is not None:
        tol = args.tol
    system = solve_system(prob, tol=tol, max_iter=max_iter)
    rep = system.representative
    doc = system.to_dict()
    doc["solution"] = {"x": [float(v) for v in rep.xs],
                       "value": [float(v) for v in rep.values]}
    if args.csv:
        lines = ["x,value"]
        lines += [f"{float(x)!r},{float(v)!r}" for x, v in zip(rep.xs, rep.values)]
        Path(args.csv).write_text("\n".join(lines) + "\n")
    return system.common_solution, doc, {"tol": tol, "max_iter": max_iter}


_HANDLERS = {
    "axioms": _cmd_axioms,
    "psi-check": _cmd_psi_check,
    "verify": _cmd_verify,
    "pairs": _cmd_pairs,
    "fixpoint": _cmd_fixpoint,
    "theorem": _cmd_theorem,
    "dp-solve": _cmd_dp_solve,
    "reproduce-example6": _cmd_reproduce,
}


def run_command(args) -> tuple[int, str]:
    """Run one parsed command; returns (exit code, JSON document)."""
    passed, report, params = _HANDLERS[args.command](args)
    doc = {"command": args.command, "seed": args.seed, "parameters": params,
           "report": report, "verdict": "pass" if passed else "fail"}
    return (0 if passed else 1), json.dumps(doc, sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, text = run_command(args)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    except (InputError, NumericalError, EvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
