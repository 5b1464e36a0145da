"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure (or, for ``spectral``, a graph in
which some learner cannot reach the truth), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from confidyn import experiments
from confidyn.analysis import spectral_gap
from confidyn.config import ExperimentConfig, load_bandit, load_bwr, load_experiment
from confidyn.errors import ValidationError
from confidyn.graphs import build_circulant, build_periodic_tight, read_graph, write_graph, write_periodic

log = logging.getLogger("confidyn")


def _ints(raw: str) -> list[int]:
    return [int(v) for v in raw.replace(",", " ").split()]


def cmd_spectral(args) -> int:
    report = spectral_gap(read_graph(args.graph), args.truth)
    print(json.dumps(report.to_dict(), indent=2))
    if not report.reachable:
        print("error: some learner has no path to the truth", file=sys.stderr)
        return 1
    return 0


def cmd_simulate(args) -> int:
    if args.config is not None:
        cfg = load_experiment(args.config)
    elif args.graph is not None:
        cfg = ExperimentConfig(topology="fixed-file", graph=args.graph)
    else:
        raise ValidationError("simulate needs --config or --graph")
    if args.graph is not None:
        cfg = cfg.with_overrides(topology="fixed-file", graph=args.graph)
    cfg = cfg.with_overrides(
        seed=args.seed, out=args.out, horizon=args.horizon, replicates=args.replicates,
        init=args.init, ratio=args.ratio,
    )
    summary = experiments.simulate(cfg, args.workers)
    recorded = {k: v for k, v in cfg.to_dict().items() if k != "out"}
    payload = experiments.write_run(summary, cfg.out, recorded)
    fit = payload["fit"]
    if fit is not None:
        flag = "  (r2 below threshold)" if fit["flagged"] else ""
        print(f"slope {fit['slope']:.5f}  r2 {fit['r2']:.5f}  window {fit['window']}{flag}")
    print(f"wrote {cfg.out}")
    return 0


def cmd_reproduce_fig1(args) -> int:
    window = (args.fit_lo, args.fit_hi) if args.fit_lo is not None and args.fit_hi is not None else None
    result = experiments.reproduce_fig1(
        ns=_ints(args.n), ms=_ints(args.m), replicates=args.replicates, horizon=args.horizon,
        seed=args.seed, ratio=args.ratio, window=window, out_dir=args.out, workers=args.workers,
    )
    for row in result["slopes"]:
        print(f"n={row['n']:<4d} m={row['m']:<3d} slope={row['slope']:.5f}  (-1/n={row['reference_slope']:.5f})")
    print(f"wrote {args.out}")
    return 0


def cmd_construct(args) -> int:
    if args.kind == "circulant":
        write_graph(build_circulant(args.learners, args.degree), args.out)
        print(f"wrote {args.out}")
    else:
        manifest = write_periodic(build_periodic_tight(args.learners, args.degree, args.period), args.out)
        print(f"wrote {manifest}")
    return 0


def cmd_bwr(args) -> int:
    cfg = load_bwr(args.config)
    cfg = replace(cfg, **{k: v for k, v in (("seed", args.seed), ("out", args.out)) if v is not None})
    payload = experiments.write_traces(experiments.run_bwr(cfg, args.workers), cfg.out, "bwr")
    print(f"max |mean - engine| = {payload['max_deviation']:.3g}  max z = {payload['max_z']:.2f}")
    print(f"wrote {cfg.out}")
    return 0


def cmd_bandit(args) -> int:
    cfg = load_bandit(args.config)
    cfg = replace(cfg, **{k: v for k, v in (("seed", args.seed), ("out", args.out)) if v is not None})
    payload = experiments.write_traces(experiments.run_bandit(cfg, args.workers), cfg.out, "bandit")
    print(f"max |mean - engine| = {payload['max_deviation']:.3g}  max z = {payload['max_z']:.2f}")
    print(f"wrote {cfg.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confidyn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectral", help="spectral gap of a fixed graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--truth", type=int, default=0)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("simulate", help="run an experiment manifest")
    p.add_argument("--config")
    p.add_argument("--graph", help="fixed graph file or periodic manifest (overrides the topology)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--horizon", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--init")
    p.add_argument("--ratio", type=float)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce-fig1", help="random-neighbour sweep over (n, m)")
    p.add_argument("--n", default="20,50,100")
    p.add_argument("--m", default="1,5,10")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratio", type=float, default=1.25)
    p.add_argument("--fit-lo", type=int)
    p.add_argument("--fit-hi", type=int)
    p.add_argument("--out", default="out/fig1")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_reproduce_fig1)

    p = sub.add_parser("construct", help="write a tight construction to disk")
    p.add_argument("kind", choices=["circulant", "periodic-tight"])
    p.add_argument("--learners", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    for name, func in (("bwr", cmd_bwr), ("bandit", cmd_bandit)):
        p = sub.add_parser(name, help=f"{name} Monte Carlo against the engine")
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
