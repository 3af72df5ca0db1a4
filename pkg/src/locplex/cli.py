"""Command-line entry point: ``locplex evaluate|solve|restructure|grid|synth``.

Exit codes: 0 ok, 2 validation error, 3 enumeration budget exceeded, 4 internal error.
Output directory defaults to ``$LOCPLEX_OUT`` (or ``./locplex-out``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import io
from .complexity import decompose
from .economics import z_plex
from .harness import GridSpec, RunRecord, pattern_checks, run_grid, synth_data
from .model import CostParams, ValidationError
from .restructuring import rationalise, rebalance, reduce
from .solvers import BudgetExceeded, allocate_nearest, solve_kmedian, solve_kmedianplex

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_INTERNAL = 0, 2, 3, 4
OUT_ENV = "LOCPLEX_OUT"


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "locplex-out")


def _config(args) -> io.RunConfig:
    cfg = io.RunConfig.load(args.config) if args.config else io.RunConfig()
    for key in ("seed", "min_gain", "n_tail", "mode", "budget", "k", "problem", "network"):
        val = getattr(args, key, None)
        if key == "network" and val is not None:
            val = str(Path(val).resolve())
        if val is not None:
            setattr(cfg, key, val)
    if getattr(args, "reallocate", False):
        cfg.reallocate = True
    if getattr(args, "full_scan", False):
        cfg.full_scan = True
    return cfg


def _instance(cfg: io.RunConfig):
    if cfg.nodes is None or cfg.distances is None:
        raise ValidationError(["config must name 'nodes' and 'distances' files"])
    return io.load_instance(cfg.resolve(cfg.nodes), cfg.resolve(cfg.distances), cfg.depot)


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    for key in ("nodes", "distances", "depot"):
        if getattr(args, key) is not None:
            setattr(cfg, key, str(Path(getattr(args, key)).resolve()) if key != "depot" else args.depot)
    params = dict(cfg.params)
    for key in ("r", "gamma", "rho", "phi", "alpha"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    params.setdefault("r", 1.0)
    params.setdefault("gamma", 0.0)
    cfg.params = params
    inst, table = _instance(cfg)
    cp = CostParams(**params)
    if args.network:
        net = io.read_network(args.network, table)
    elif args.facilities:
        fac = [table.index(f.strip()) for f in args.facilities.split(",") if f.strip()]
        net = allocate_nearest(inst, fac, cp)
    else:
        raise ValidationError(["give --facilities or --network"])
    breakdown = decompose(inst, net)
    report = z_plex(inst, net, cp)
    out = {
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "facilities": [table.ids[f] for f in net.facilities],
        "complexity": breakdown.to_dict(inst),
        "profit": report.to_dict(),
    }
    if args.format == "csv":
        rows = [[table.ids[f], table.names[f], q, c, report.revenue_by_facility[f]]
                for f, (q, c) in breakdown.per_facility.items()]
        text = io.csv_text(["facility", "name", "share", "complexity", "revenue"], rows)
        text += io.csv_text(["total", "central", "weighted_local", "gross_profit", "complexity_cost",
                             "net_profit_plex", "net_profit_kmedian"],
                            [[breakdown.total, breakdown.central, breakdown.weighted_local,
                              report.gross_profit, report.complexity_cost, report.net_profit_plex,
                              report.net_profit_kmedian]])
    else:
        text = io.dumps(out)
    if args.out:
        io.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _config(args)
    inst, table = _instance(cfg)
    params = cfg.cost_params()
    if cfg.k is None:
        raise ValidationError(["config must set k"])
    solver = {"kmedian": solve_kmedian, "kmedianplex": solve_kmedianplex}.get(cfg.problem)
    if solver is None:
        raise ValidationError([f"unknown problem {cfg.problem!r}"])
    res = solver(inst, params, cfg.k, cfg.mode, cfg.budget, cfg.min_gain)
    out = _out_dir(args)
    io.atomic_write(out / "network.csv", io.network_text(res.network, table))
    summary = {"config_hash": cfg.hash(), "seed": cfg.seed, **res.summary(),
               "facilities": [table.ids[f] for f in res.network.facilities],
               "report": z_plex(inst, res.network, params).to_dict()}
    if res.refined_network is not None:
        io.atomic_write(out / "network_refined.csv", io.network_text(res.refined_network, table))
        summary["refined_facilities"] = [table.ids[f] for f in res.refined_network.facilities]
    io.atomic_write(out / "summary.json", io.dumps(summary))
    print(io.dumps({"objective": res.objective, "out": str(out)}), end="")
    return EXIT_OK


def cmd_restructure(args) -> int:
    cfg = _config(args)
    inst, table = _instance(cfg)
    params = cfg.cost_params()
    if cfg.network is None:
        raise ValidationError(["restructure needs an input network (config 'network' or --network)"])
    net = io.read_network(cfg.resolve(cfg.network), table)
    strategy = args.strategy
    notes = []
    if strategy == "rebalance":
        res = rebalance(inst, net, params, cfg.min_gain, cfg.full_scan, cfg.guard_recentre)
    elif strategy == "rationalise":
        res = rationalise(inst, net, params, cfg.n_tail, cfg.min_gain)
    else:
        res = reduce(inst, net, params, cfg.reallocate, cfg.min_gain)
    for note in res.notes:
        logging.getLogger("locplex").warning(note)
        notes.append(note)
    out = _out_dir(args)
    io.atomic_write(out / "network.csv", io.network_text(res.final_network, table))
    io.atomic_write(out / "moves.csv", io.csv_text(
        ["step", "kind", "subject", "before", "after"],
        [[k, m.kind, " ".join(table.ids[s] for s in m.subject), repr(m.before), repr(m.after)]
         for k, m in enumerate(res.moves)]))
    summary = {"config_hash": cfg.hash(), "seed": cfg.seed, **res.summary(),
               "facilities": [table.ids[f] for f in res.final_network.facilities]}
    io.atomic_write(out / "summary.json", io.dumps(summary))
    print(io.dumps({"z_before": res.z_before, "z_after": res.z_after, "moves": len(res.moves),
                    "out": str(out)}), end="")
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = _config(args)
    grid = dict(cfg.grid)
    if args.seed is not None:
        grid["seed"] = args.seed
    grid.setdefault("seed", cfg.seed)
    spec = GridSpec.from_dict(grid)
    if cfg.nodes is not None:
        inst, _ = _instance(cfg)
        label = cfg.nodes
    else:
        inst = synth_data(spec.n, spec.seed)[0]
        label = f"synth:n={spec.n}"
    chash = io.config_hash({"config": cfg.to_dict(), "grid": spec.to_dict()})
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    header = ["config_hash", "seed", "instance"] + RunRecord.header(spec.strategies)
    records = []
    csv_fd, csv_tmp = tempfile.mkstemp(dir=out, prefix=".records.csv.")
    js_fd, js_tmp = tempfile.mkstemp(dir=out, prefix=".records.jsonl.")
    try:
        with os.fdopen(csv_fd, "w", newline="") as fc, os.fdopen(js_fd, "w") as fj:
            fc.write(io.csv_text(header, []))
            for rec in run_grid(spec, inst, workers=args.workers):
                records.append(rec)
                row = [chash, str(spec.seed), label] + rec.row(header[3:])
                fc.write(io.csv_text(header, [row]).split("\n", 1)[1])
                fj.write(json.dumps({"config_hash": chash, "seed": spec.seed, "instance": label,
                                     **rec.flat()}, sort_keys=True, default=io._default) + "\n")
                fc.flush()
                fj.flush()
        os.replace(csv_tmp, out / "records.csv")
        os.replace(js_tmp, out / "records.jsonl")
    except BaseException:
        for tmp in (csv_tmp, js_tmp):
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    checks = pattern_checks(records)
    summary = {"config_hash": chash, "seed": spec.seed, "instance": label, "cells": len(records),
               "checks": checks}
    io.atomic_write(out / "summary.json", io.dumps(summary))
    for name, c in checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}")
    return EXIT_OK


def cmd_synth(args) -> int:
    inst, xy, _ = synth_data(args.n, args.seed)
    out = _out_dir(args)
    io.write_nodes(out / "nodes.csv", inst, xy)
    io.write_distances(out / "dist.csv", inst)
    io.atomic_write(out / "synth.json", io.dumps({"n": args.n, "seed": args.seed, "depot": inst.depot}))
    print(io.dumps({"n": args.n, "seed": args.seed, "depot": inst.depot, "out": str(out)}), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="locplex", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output directory"):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help=out_help)

    ev = sub.add_parser("evaluate", help="complexity breakdown and profit report for a network")
    common(ev, "output file (default stdout)")
    ev.add_argument("--nodes")
    ev.add_argument("--distances", "--dist", dest="distances")
    ev.add_argument("--depot")
    ev.add_argument("--facilities", help="comma-separated node ids or names; nearest allocation")
    ev.add_argument("--network", help="allocation CSV (node,name,facility)")
    for key in ("r", "gamma", "rho", "phi", "alpha"):
        ev.add_argument(f"--{key}", type=float)
    ev.add_argument("--format", choices=("json", "csv"), default="json")
    ev.set_defaults(func=cmd_evaluate)

    so = sub.add_parser("solve", help="solve K-Median or K-MedianPlex")
    common(so)
    so.add_argument("--k", type=int)
    so.add_argument("--problem", choices=("kmedian", "kmedianplex"))
    so.add_argument("--mode", choices=("exact", "local"))
    so.add_argument("--budget", type=int)
    so.add_argument("--min-gain", type=float)
    so.set_defaults(func=cmd_solve)

    re = sub.add_parser("restructure", help="apply one improvement strategy to a network")
    common(re)
    re.add_argument("--strategy", choices=("rebalance", "rationalise", "reduce"), required=True)
    re.add_argument("--network")
    re.add_argument("--min-gain", type=float)
    re.add_argument("--n-tail", type=int)
    re.add_argument("--reallocate", action="store_true")
    re.add_argument("--full-scan", action="store_true")
    re.set_defaults(func=cmd_restructure)

    gr = sub.add_parser("grid", help="run a parameter sweep")
    common(gr)
    gr.add_argument("--workers", type=int, default=1)
    gr.set_defaults(func=cmd_grid)

    sy = sub.add_parser("synth", help="write a synthetic instance")
    sy.add_argument("--n", type=int, default=125)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out")
    sy.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(json.dumps({"error": "validation", "problems": exc.problems}) + "\n")
        return EXIT_VALIDATION
    except BudgetExceeded as exc:
        sys.stderr.write(json.dumps({"error": "budget", "message": str(exc)}) + "\n")
        return EXIT_BUDGET
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(json.dumps({"error": "internal", "message": repr(exc)}) + "\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
