"""Command-line front end.

    layerdelay analyze  --scheme FR --k-s 100 --k-p 100 --n-s 120 --eps-s 0.1
    layerdelay simulate --scheme FIR --k-s 10 --k-p 5 --n-s 12 --eps-s 0.2 --trials 100000
    layerdelay optimize --scheme FR --k-s 100 --k-p 100 --eps-s 0.1 --users 50
    layerdelay optimize --crossover --k-s 100 --k-p 100 --eps-s 0.5
    layerdelay sweep experiment.yaml --out rows.csv
    layerdelay figure fig3 --out fig3.csv

Every subcommand writes CSV (with a ``#``-commented metadata header) to
``--out`` or standard output.  Exit status 2 signals an invalid
configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .experiments import (
    FIGURES,
    ConfigError,
    ExperimentSpec,
    load_spec,
    reproduce_figure,
    run_experiment,
)
from .optimize import DEFAULT_USER_GRID, compare_multicast, find_crossover_users, optimize_ns
from .schemes import InfiniteDelayError


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_output(p):
    p.add_argument("--out", help="write CSV here instead of standard output")


def _add_scenario(p, scheme_required=True):
    p.add_argument("--scheme", choices=["IIR", "FR", "FIR"], type=str.upper,
                   required=scheme_required)
    p.add_argument("--k-s", type=int, required=True, help="data symbols per packet")
    p.add_argument("--k-p", type=int, required=True, help="packets per chunk")
    p.add_argument("--n-s", help="coded symbols per packet, or 'opt'")
    p.add_argument("--eps-s", type=float, required=True, help="symbol erasure probability")
    p.add_argument("--users", type=int, default=1)
    p.add_argument("--budget", type=int, help="also report decode probability within this many slots")
    p.add_argument("--ns-max", type=int)
    p.add_argument("--normalize", action="store_true")


def _single_point_spec(args, mode) -> ExperimentSpec:
    fixed = {"k_s": args.k_s, "k_p": args.k_p, "u": args.users}
    if args.n_s is not None:
        fixed["n_s"] = args.n_s if args.n_s == "opt" else int(args.n_s)
    if args.budget is not None:
        fixed["budget"] = args.budget
    if args.ns_max is not None:
        fixed["ns_max"] = args.ns_max
    return ExperimentSpec(
        name=mode if mode != "analytic" else "analyze",
        sweep_variable="eps_s",
        sweep_grid=(args.eps_s,),
        fixed=fixed,
        schemes=(args.scheme,),
        mode=mode,
        trials=getattr(args, "trials", 100_000),
        seed=getattr(args, "seed", 0),
        normalize=args.normalize,
    )


def cmd_analyze(args):
    _emit(run_experiment(_single_point_spec(args, "analytic")).to_csv(), args.out)


def cmd_simulate(args):
    _emit(run_experiment(_single_point_spec(args, "simulate")).to_csv(), args.out)


def _csv(header_meta: dict, columns, rows) -> str:
    buf = io.StringIO()
    for key in sorted(header_meta):
        buf.write(f"# {key}: {json.dumps(header_meta[key], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def cmd_optimize(args):
    params = {"k_s": args.k_s, "k_p": args.k_p, "eps_s": args.eps_s, "ns_max": args.ns_max}
    meta = {"tool": f"layerdelay {__version__}"}
    if args.crossover:
        grid = tuple(int(g) for g in args.grid.split(",")) if args.grid else DEFAULT_USER_GRID
        grid = tuple(sorted(u for u in set(grid) if u <= args.u_max))
        points = compare_multicast(args.k_s, args.k_p, args.eps_s, grid, args.ns_max)
        u_star = find_crossover_users(args.k_s, args.k_p, args.eps_s, args.u_max,
                                      args.ns_max, grid)
        meta.update(params=dict(params, u_max=args.u_max, grid=list(grid)), crossover=u_star)
        rows = [(p.users, p.iir.mean_slots, p.fr.mean_slots, p.fr_ns, int(p.fr_wins))
                for p in points]
        text = _csv(meta, ("users", "iir_slots", "fr_slots", "fr_n_s", "fr_wins"), rows)
    else:
        if args.scheme is None:
            raise ConfigError("--scheme is required unless --crossover is given")
        res = optimize_ns(args.scheme, args.k_s, args.k_p, args.eps_s, args.users, args.ns_max)
        meta.update(
            params=dict(params, scheme=args.scheme, users=args.users),
            best_ns=res.best_ns,
            best_slots=res.best_delay.mean_slots,
            capped=res.capped,
        )
        floor = args.k_s * args.k_p
        rows = [(n, v, v / floor, int(n == res.best_ns)) for n, v in res.profile]
        text = _csv(meta, ("n_s", "mean_slots", "normalized", "best"), rows)
    _emit(text, args.out)


def cmd_sweep(args):
    spec = load_spec(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.normalize:
        overrides["normalize"] = True
    if overrides:
        data = dict(spec.to_dict(), **overrides)
        spec = ExperimentSpec(**data)
    _emit(run_experiment(spec).to_csv(), args.out)


def cmd_figure(args):
    table = reproduce_figure(args.figure, mode=args.mode, trials=args.trials, seed=args.seed)
    _emit(table.to_csv(), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layerdelay", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analytic / exact-sum delay of one scenario")
    _add_scenario(p)
    _add_output(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo delay of one scenario")
    _add_scenario(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="block-length search or user-count crossover")
    _add_scenario(p, scheme_required=False)
    p.add_argument("--crossover", action="store_true",
                   help="find the user count where optimised FR overtakes IIR")
    p.add_argument("--u-max", type=int, default=1000)
    p.add_argument("--grid", help="comma-separated user grid for --crossover")
    _add_output(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="run an experiment config (YAML)")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--normalize", action="store_true")
    _add_output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="reproduce one of the reference figures")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--mode", choices=["analytic", "simulate", "both"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"layerdelay: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, InfiniteDelayError) as exc:
        print(f"layerdelay: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
