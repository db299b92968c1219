"""Command-line entry point: ``misgossip {solve,simulate,sweep,compare}``.

Exit codes: 0 success (all points pass), 1 comparison failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import functools
import itertools
import json
import sys
from dataclasses import replace
from pathlib import Path

from .core import NetworkParams
from .experiments import (
    BUILTIN_SPECS,
    PointError,
    SpecError,
    Tolerance,
    check_rows,
    resolve_spec,
    rows_to_csv,
    rows_to_json,
    run_sweep,
)
from .sim import SimConfig, default_probes, iter_trajectory, run, trajectory_record
from .solver import solve_all


def _param_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("network parameters")
    g.add_argument("--n", type=int, default=10, help="number of user nodes (default 10)")
    g.add_argument("--lambda-e", type=float, default=1.0, help="source self-update rate")
    g.add_argument("--lambda-s", type=float, default=1.0, help="total source-to-network rate")
    g.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="per-node gossip rate")
    g.add_argument("--p", type=float, default=0.9, help="mutation probability")
    return p


def _out_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, help="write results here instead of stdout")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    return p


def _sim_parser(defaults: bool) -> argparse.ArgumentParser:
    # sweep/compare take these as overrides of the spec's sim section
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("simulation")
    g.add_argument("--horizon", type=float, default=5e5 if defaults else None)
    g.add_argument("--burn-in", type=float, default=0.1 if defaults else None,
                   help="fraction of the horizon discarded before averaging")
    g.add_argument("--seed", type=int, default=0 if defaults else None)
    g.add_argument("--replications", type=int, default=1 if defaults else None)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="misgossip",
        description="Truth fraction and version age in timely gossip networks with mutation.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[_param_parser(), _out_parser()],
                       help="exact stationary F and x1")
    s.add_argument("--tables", action="store_true", help="include the c, t and v tables")
    s.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("simulate", parents=[_param_parser(), _sim_parser(True), _out_parser()],
                       help="Monte Carlo estimate of F and x1")
    s.add_argument("--probes", action="store_true",
                   help="also estimate every t[k,m], c[k] and v[k]")
    s.add_argument("--verbose", action="store_true",
                   help="write a newline-delimited trajectory log to stderr")
    s.add_argument("--trace-limit", type=int, default=10000,
                   help="events in the trajectory log (default 10000)")

    for name, help_text in (("sweep", "run a sweep spec"),
                            ("compare", "check simulation against the solver")):
        s = sub.add_parser(name, parents=[_sim_parser(False), _out_parser()], help=help_text)
        s.add_argument("spec", help=f"sweep spec JSON file or builtin name ({', '.join(BUILTIN_SPECS)})")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--timing", action="store_true",
                       help="fill wall_seconds (makes output non-reproducible)")
        if name == "compare":
            s.add_argument("--z", type=float, default=3.0)
            s.add_argument("--f-floor", type=float, default=0.02)
            s.add_argument("--x1-rel-floor", type=float, default=0.05)
            s.add_argument("--perturb-spread", action="store_true",
                           help="negative control: square the outside-sender count in the t recursion")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _params(args, parser) -> NetworkParams:
    try:
        return NetworkParams(args.n, args.lambda_e, args.lambda_s, args.lam, args.p)
    except ValueError as exc:
        parser.error(str(exc))


def _cmd_solve(args, parser) -> int:
    sol = solve_all(_params(args, parser))
    if args.format == "json":
        _emit(json.dumps(sol.to_dict(tables=args.tables), indent=2), args.out)
    else:
        x1 = "inf" if sol.age_diverges else repr(sol.x1)
        _emit(f"F,x1,age_diverges\n{sol.F!r},{x1},{int(sol.age_diverges)}", args.out)
    return 0


def _cmd_simulate(args, parser) -> int:
    params = _params(args, parser)
    try:
        config = SimConfig(params, horizon=args.horizon, burn_in_fraction=args.burn_in,
                           seed=args.seed, replications=args.replications,
                           probes=default_probes(params.n) if args.probes else ())
    except ValueError as exc:
        parser.error(str(exc))
    if args.verbose:
        for event, state in itertools.islice(
                iter_trajectory(params, args.seed, horizon=args.horizon), args.trace_limit):
            sys.stderr.write(json.dumps(trajectory_record(event, state)) + "\n")
    report = run(config, workers=args.workers)
    _emit(report.to_json(), args.out)
    return 0


def _load_spec(args):
    spec = resolve_spec(args.spec)
    overrides = {k: v for k, v in (("horizon", args.horizon), ("burn_in", args.burn_in),
                                   ("seed", args.seed), ("replications", args.replications))
                 if v is not None}
    if overrides and spec.sim is not None:
        spec = replace(spec, sim=replace(spec.sim, **overrides))
    return spec


def _cmd_sweep(args, parser) -> int:
    spec = _load_spec(args)
    rows = run_sweep(spec, workers=args.workers)
    if args.format == "csv":
        _emit(rows_to_csv(rows, timing=args.timing), args.out)
    else:
        _emit(rows_to_json(spec, rows, timing=args.timing), args.out)
    return 0


def _cmd_compare(args, parser) -> int:
    spec = _load_spec(args)
    if spec.sim is None:
        raise SpecError("compare needs a spec with a 'sim' section")
    solver = functools.partial(solve_all, spread_power=2) if args.perturb_spread else solve_all
    rows = run_sweep(spec, workers=args.workers, solver=solver)
    verdicts = check_rows(rows, Tolerance(args.z, args.f_floor, args.x1_rel_floor))
    failed = sum(not v.passed for v in verdicts)
    lines = [v.line() for v in verdicts]
    lines.append(f"{'PASS' if not failed else 'FAIL'}: {len(verdicts) - failed}/{len(verdicts)} checks passed")
    _emit("\n".join(lines), args.out)
    return 1 if failed else 0


_COMMANDS = {"solve": _cmd_solve, "simulate": _cmd_simulate,
             "sweep": _cmd_sweep, "compare": _cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except (SpecError, PointError) as exc:
        print(f"misgossip: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
