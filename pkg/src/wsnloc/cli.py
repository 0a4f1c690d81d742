"""Command line interface: generate, cluster, localize, experiment, report."""

from __future__ import annotations

import argparse
import csv
import sys

from .cbl import cbl
from .clustering import ClusterParams, extract_clusters, initial_hop_distance, volume_threshold
from .graphio import read_graph, write_graph
from .harness import (
    ALGORITHMS,
    ExperimentConfig,
    build_trial_graph,
    dispatch_algorithm,
    load_config,
    run_experiment,
)
from .metrics import evaluate
from .report import render_report


def _canonical_deployment(args) -> str:
    name = args.deployment
    if name in ("disjoint", "intersecting"):
        if args.clusters is None or args.nodes is None:
            raise SystemExit(
                "explicit planar deployments need --clusters and --nodes"
            )
        prefix = "D" if name == "disjoint" else "I"
        return f"{prefix}-{args.clusters}-{args.nodes}"
    return name


def _cmd_generate(args) -> int:
    cfg = ExperimentConfig(
        deployment=_canonical_deployment(args),
        nodes=args.nodes or 100,
        side=args.side,
        sensing_range=args.range,
        err_mags=(args.error,),
        trials=1,
        rng_seed=args.seed,
        algorithms=("quad",),
    )
    deployment, graph = build_trial_graph(cfg, args.error, trial_index=0)
    write_graph(args.out, graph, deployment)
    print(
        f"wrote {args.out}: n={graph.n} edges={graph.num_edges} "
        f"R={graph.R:g} err={args.error:g}"
    )
    return 0


def _cmd_cluster(args) -> int:
    loaded = read_graph(args.graph)
    graph = loaded.graph
    params = ClusterParams(
        kappa=volume_threshold(args.error),
        theta=initial_hop_distance(graph),
        theta_increment=loaded.deployment.side / 100.0,
        theta_max=graph.R,
    )
    clusters, residual = extract_clusters(graph, args.error, params=params)
    out = args.out or args.graph
    write_graph(out, graph, loaded.deployment, clusters=clusters, residual=residual)
    sizes = ", ".join(str(len(c)) for c in clusters) or "none"
    print(
        f"wrote {out}: {len(clusters)} clusters (sizes: {sizes}), "
        f"{len(residual)} residual nodes"
    )
    return 0


def _cmd_localize(args) -> int:
    loaded = read_graph(args.graph)
    graph, deployment = loaded.graph, loaded.deployment
    cfg = ExperimentConfig(
        deployment="random",
        sensing_range=graph.R,
        side=deployment.side,
        err_mags=(args.error,),
        trials=1,
        algorithms=(args.algorithm,),
        robust_min_angle=args.robust_angle,
        seed_cap=args.seed_cap,
    )
    if args.algorithm == "pc-cbl" and loaded.clusters is not None:
        # Reuse clusters already appended to the file.
        f, _ = cbl(
            graph,
            loaded.clusters,
            args.error,
            volume_threshold(args.error),
            robust_min_angle=args.robust_angle,
            seed_cap=args.seed_cap,
        )
        assignments, anchors = f.assignments, f.anchors
        n_clusters = len(loaded.clusters)
    else:
        assignments, anchors, n_clusters = dispatch_algorithm(
            args.algorithm, graph, deployment, args.error, cfg
        )
    report = evaluate(assignments, deployment.positions, graph.n, anchors)
    offset = "n/a" if report.avg_offset is None else f"{report.avg_offset:.4f}"
    flips = "n/a" if report.flips is None else str(report.flips)
    extra = f" clusters={n_clusters}" if n_clusters is not None else ""
    print(
        f"{args.algorithm}: recall={report.recall_pct:.2f}% "
        f"offset={offset} flips={flips}{extra}"
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["node", "x", "y", "z"])
            for node in sorted(assignments):
                p = assignments[node]
                row = [node] + [format(c, ".9g") for c in p]
                if len(p) == 2:
                    row.append("0")
                writer.writerow(row)
        print(f"wrote positions to {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.deployment is not None:
        overrides["deployment"] = _canonical_deployment(args)
    if args.nodes is not None and args.deployment in (None, "random", "random2d"):
        overrides["nodes"] = args.nodes
    if args.side is not None:
        overrides["side"] = args.side
    if args.range is not None:
        overrides["sensing_range"] = args.range
    if args.error is not None:
        overrides["err_mags"] = tuple(float(t) for t in args.error.split(","))
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.algorithm is not None:
        overrides["algorithms"] = tuple(t.strip() for t in args.algorithm.split(","))
    if args.robust_angle is not None:
        overrides["robust_min_angle"] = args.robust_angle
    if args.seed_cap is not None:
        overrides["seed_cap"] = args.seed_cap
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            rows = run_experiment(cfg, fh)
        print(f"wrote {rows} data rows to {args.out}")
    else:
        run_experiment(cfg, sys.stdout)
    return 0


def _cmd_report(args) -> int:
    outputs = render_report(args.csv, args.out_dir)
    for path in outputs:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsnloc",
        description=(
            "Range-based 3D WSN localization: deployment generation, "
            "planar clustering, localization and Monte-Carlo sweeps."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a deployment graph file")
    gen.add_argument("--deployment", default="random",
                     help="random, random2d, D-k-m, I-k-m, disjoint, intersecting")
    gen.add_argument("--nodes", type=int, default=None,
                     help="node count (random) or nodes per cluster (explicit planar)")
    gen.add_argument("--clusters", type=int, default=None,
                     help="cluster count for explicit planar deployments")
    gen.add_argument("--range", type=float, default=40.0, help="sensing range R")
    gen.add_argument("--side", type=float, default=100.0, help="cube side length")
    gen.add_argument("--error", type=float, default=0.0, help="error magnitude")
    gen.add_argument("--seed", type=int, default=1, help="RNG seed")
    gen.add_argument("--out", required=True, help="output graph file")
    gen.set_defaults(func=_cmd_generate)

    clu = sub.add_parser("cluster", help="extract coplanar clusters from a graph file")
    clu.add_argument("graph", help="input graph file")
    clu.add_argument("--error", type=float, default=0.0,
                     help="error magnitude the distances carry")
    clu.add_argument("--out", default=None,
                     help="output file (default: rewrite the input)")
    clu.set_defaults(func=_cmd_cluster)

    loc = sub.add_parser("localize", help="localize a graph file and report quality")
    loc.add_argument("graph", help="input graph file")
    loc.add_argument("--algorithm", choices=ALGORITHMS, default="quad")
    loc.add_argument("--error", type=float, default=0.0,
                     help="error magnitude the distances carry")
    loc.add_argument("--robust-angle", dest="robust_angle", type=float, default=None,
                     help="minimum anchor-triangle angle in degrees")
    loc.add_argument("--seed-cap", dest="seed_cap", type=int, default=None,
                     help="bound on localization seed attempts")
    loc.add_argument("--out", default=None, help="write estimated positions as CSV")
    loc.set_defaults(func=_cmd_localize)

    exp = sub.add_parser("experiment", help="run a Monte-Carlo sweep to CSV")
    exp.add_argument("--config", default=None, help="key=value config file")
    exp.add_argument("--deployment", default=None)
    exp.add_argument("--nodes", type=int, default=None)
    exp.add_argument("--clusters", type=int, default=None)
    exp.add_argument("--side", type=float, default=None)
    exp.add_argument("--range", type=float, default=None)
    exp.add_argument("--error", default=None, help="error magnitude(s), comma separated")
    exp.add_argument("--trials", type=int, default=None)
    exp.add_argument("--seed", type=int, default=None)
    exp.add_argument("--algorithm", default=None, help="algorithm(s), comma separated")
    exp.add_argument("--robust-angle", dest="robust_angle", type=float, default=None)
    exp.add_argument("--seed-cap", dest="seed_cap", type=int, default=None)
    exp.add_argument("--out", default=None, help="output CSV (default: stdout)")
    exp.set_defaults(func=_cmd_experiment)

    rep = sub.add_parser("report", help="summary table and figures from a sweep CSV")
    rep.add_argument("csv", help="sweep CSV produced by the experiment command")
    rep.add_argument("--out-dir", default=".", help="directory for summary and figures")
    rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
