"""Command-line interface: solve, sweep, feasibility, gen-scenario, trace.

Exit codes: 0 success, 1 infeasible instance, 2 usage error, 3 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import baselines, low_complexity, power, report, sca, scenario as scenario_mod
from .power import InfeasibleError
from .scenario import SCHEMES, ValidationError

__all__ = ["main"]

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_UNCONVERGED = 3


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver configuration")
    group.add_argument("--lambda0", type=float, default=None, help="initial penalty weight")
    group.add_argument("--c", type=float, default=None, help="penalty growth factor")
    group.add_argument("--eps1", type=float, default=None, help="inner-loop objective tolerance")
    group.add_argument("--eps2", type=float, default=None, help="outer-loop penalty tolerance")
    group.add_argument("--n0", type=int, default=None, help="clean outer passes required")
    group.add_argument("--grid-step", type=float, default=None, help="coarse grid step in meters")
    group.add_argument(
        "--refine-iters", type=int, default=None, help="grid refinement halvings"
    )


def _build_cfg(args) -> sca.ScaConfig:
    overrides = {}
    for src, dst in (("lambda0", "lambda0"), ("c", "c"), ("eps1", "eps1"), ("eps2", "eps2"), ("n0", "n0")):
        value = getattr(args, src, None)
        if value is not None:
            overrides[dst] = value
    return sca.ScaConfig(**overrides)


def _build_grid(args) -> baselines.SearchGrid:
    overrides = {}
    if getattr(args, "grid_step", None) is not None:
        overrides["coarse_step"] = args.grid_step
    if getattr(args, "refine_iters", None) is not None:
        overrides["refine_iters"] = args.refine_iters
    return baselines.SearchGrid(**overrides)


def _solve_one(scheme: str, scn, cfg, grid, collect_trace=False):
    if scheme == "njdp":
        return sca.solve_njdp(scn, cfg, collect_trace=collect_trace)
    if scheme == "nlc":
        return low_complexity.solve_lowcx(scn)
    if scheme == "nfdp":
        return baselines.solve_nfdp(scn)
    if scheme == "fdma":
        return baselines.solve_fdma(scn, grid)
    if scheme == "oracle":
        return baselines.grid_oracle(scn, grid)
    raise ValidationError(f"unknown scheme '{scheme}'")


def _print_result(result, elapsed: float) -> None:
    print(f"scheme: {result.scheme}")
    if not result.feasible:
        print("status: infeasible (rate floor unreachable within the power budget)")
        return
    x, y = result.position
    print(f"position: ({x:.3f}, {y:.3f}) m")
    print("powers [W]: " + " ".join(f"{p:.6g}" for p in result.powers))
    print("rates [bits/s/Hz]: " + " ".join(f"{r:.6g}" for r in result.rates))
    print(f"sum rate: {result.sum_rate:.9g} bits/s/Hz")
    print(f"jain index: {result.jain:.6g}")
    print(f"converged: {'yes' if result.converged else 'no'}  iterations: {result.iterations}")
    print(f"elapsed: {elapsed:.3f} s")


def _cmd_solve(args) -> int:
    scn = scenario_mod.load_scenario(args.scenario)
    cfg = _build_cfg(args)
    grid = _build_grid(args)
    t0 = time.perf_counter()
    result = _solve_one(args.scheme, scn, cfg, grid)
    elapsed = time.perf_counter() - t0
    _print_result(result, elapsed)
    if args.out:
        report.emit_csv(result, args.out)
        print(f"wrote {args.out}")
    if not result.feasible:
        return EXIT_INFEASIBLE
    if not result.converged:
        return EXIT_UNCONVERGED
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scn = scenario_mod.load_scenario(args.scenario)
    schemes = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    spec = scenario_mod.SweepSpec(
        variable=args.var, start=args.start, stop=args.stop, step=args.step, schemes=schemes
    )
    cfg = _build_cfg(args)
    grid = _build_grid(args)
    t0 = time.perf_counter()
    sweep = report.run_sweep(scn, spec, cfg, grid)
    elapsed = time.perf_counter() - t0
    n_rows = len(sweep.rows)
    n_bad = sum(1 for r in sweep.rows if not r.feasible)
    print(f"sweep over {spec.variable}: {n_rows} rows ({n_bad} infeasible), {elapsed:.2f} s")
    for problem in report.check_noma_trends(sweep):
        print(f"warning: {problem}")
    if args.out:
        report.emit_csv(sweep, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_feasibility(args) -> int:
    scn = scenario_mod.load_scenario(args.scenario)
    print("rate-floor threshold per overhead candidate [bits/s/Hz]:")
    best = -np.inf
    for i, q in enumerate(scn.users):
        r_i = power.r_star_max(scn, q)
        best = max(best, r_i)
        print(f"  user {i + 1} at ({q[0]:.1f}, {q[1]:.1f}): {r_i:.6f}")
    print(f"max supportable rate floor: {best:.6f}")
    print(f"requested r_star: {scn.r_star:.6f}")
    if scn.r_star > best:
        print("status: infeasible at every overhead candidate")
        return EXIT_INFEASIBLE
    print("status: feasible")
    return EXIT_OK


def _cmd_gen_scenario(args) -> int:
    scn = scenario_mod.generate_scenario(
        seed=args.seed,
        m=args.m,
        area=tuple(args.area),
        altitude_h=args.altitude_h,
        gamma0=args.gamma0,
        p_max=args.p_max,
        r_star=args.r_star,
    )
    scenario_mod.save_scenario(scn, args.out)
    print(f"wrote {args.out} ({scn.num_users} users, area {scn.area})")
    return EXIT_OK


def _cmd_trace(args) -> int:
    scn = scenario_mod.load_scenario(args.scenario)
    cfg = _build_cfg(args)
    t0 = time.perf_counter()
    result = sca.solve_njdp(scn, cfg, collect_trace=True)
    elapsed = time.perf_counter() - t0
    sca.write_trace_csv(result.trace or [], args.out)
    print(f"wrote {args.out} ({len(result.trace or [])} iterations)")
    _print_result(result, elapsed)
    if not result.feasible:
        return EXIT_INFEASIBLE
    if not result.converged:
        return EXIT_UNCONVERGED
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavnoma",
        description="Deployment and power-control planning for UAV-collected uplink NOMA networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one scenario with one scheme")
    p_solve.add_argument("--scheme", required=True, choices=SCHEMES)
    p_solve.add_argument("--scenario", required=True, help="scenario JSON path")
    p_solve.add_argument("--out", default=None, help="write the result as CSV")
    _add_config_flags(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep r_star or p_max across schemes")
    p_sweep.add_argument("--var", required=True, choices=("r_star", "p_max"))
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--step", type=float, required=True)
    p_sweep.add_argument("--schemes", required=True, help="comma-separated scheme list")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--out", default=None)
    _add_config_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_feas = sub.add_parser("feasibility", help="report the supportable rate-floor range")
    p_feas.add_argument("--scenario", required=True)
    p_feas.set_defaults(func=_cmd_feasibility)

    p_gen = sub.add_parser("gen-scenario", help="generate a random scenario file")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--m", type=int, required=True, help="number of users")
    p_gen.add_argument(
        "--area", type=float, nargs=4, default=(0.0, 0.0, 400.0, 400.0),
        metavar=("XMIN", "YMIN", "XMAX", "YMAX"),
    )
    p_gen.add_argument("--altitude-h", type=float, default=100.0)
    p_gen.add_argument("--gamma0", type=float, default=1e6)
    p_gen.add_argument("--p-max", type=float, default=1.0)
    p_gen.add_argument("--r-star", type=float, default=0.5)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen_scenario)

    p_trace = sub.add_parser("trace", help="run the iterative solver and dump its per-iteration trace")
    p_trace.add_argument("--scenario", required=True)
    p_trace.add_argument("--out", required=True, help="trace CSV path")
    _add_config_flags(p_trace)
    p_trace.set_defaults(func=_cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
