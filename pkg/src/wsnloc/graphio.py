"""Plain-text interchange format for WSN graphs.

The file is whitespace separated and versioned::

    wsn 1
    meta n=<int> R=<real> side=<real> k=<int|-1>
    node <id> <x> <y> <z> <cluster|-1>
    edge <id1> <id2> <measured_distance>
    cluster <cluster_id> <node_id> ...

Positions and distances are printed with 9 significant digits, so one
write/read cycle is idempotent at that precision.  cluster lines are
optional (appended by the clustering step); cluster id -1 lists the
residual off-plane nodes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO

from .network import Deployment, WsnGraph

FORMAT_VERSION = 1


class GraphFormatError(ValueError):
    """Malformed interchange file; message carries the line number."""


@dataclass
class GraphFile:
    """Parsed contents of one interchange file."""

    graph: WsnGraph
    deployment: Deployment
    clusters: Optional[list[list[int]]] = None
    residual: Optional[list[int]] = None


def _fmt(x: float) -> str:
    return format(x, ".9g")


def write_graph(
    path: str | os.PathLike,
    graph: WsnGraph,
    deployment: Deployment,
    clusters: Optional[Sequence[Sequence[int]]] = None,
    residual: Optional[Sequence[int]] = None,
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        _write_stream(fh, graph, deployment, clusters, residual)


def _write_stream(fh: TextIO, graph, deployment, clusters, residual) -> None:
    k = deployment.k if deployment.k is not None else -1
    fh.write(f"wsn {FORMAT_VERSION}\n")
    fh.write(
        f"meta n={graph.n} R={_fmt(graph.R)} side={_fmt(deployment.side)} k={k}\n"
    )
    labels = deployment.cluster_labels
    for i, (x, y, z) in enumerate(deployment.positions):
        label = labels[i] if labels is not None else -1
        fh.write(f"node {i} {_fmt(x)} {_fmt(y)} {_fmt(z)} {label}\n")
    for (u, v) in sorted(graph.edges):
        fh.write(f"edge {u} {v} {_fmt(graph.edges[(u, v)])}\n")
    if clusters is not None:
        for cid, members in enumerate(clusters):
            ids = " ".join(str(m) for m in members)
            fh.write(f"cluster {cid} {ids}\n")
        if residual is not None:
            ids = " ".join(str(m) for m in residual)
            fh.write(f"cluster -1 {ids}".rstrip() + "\n")


def read_graph(path: str | os.PathLike) -> GraphFile:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    def fail(lineno: int, msg: str):
        raise GraphFormatError(f"{path}:{lineno}: {msg}")

    if not lines:
        fail(1, "empty file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "wsn":
        fail(1, "missing 'wsn <version>' header")
    if head[1] != str(FORMAT_VERSION):
        fail(1, f"unsupported format version {head[1]}")
    if len(lines) < 2 or not lines[1].startswith("meta "):
        fail(2, "missing meta line")
    meta: dict[str, str] = {}
    for token in lines[1].split()[1:]:
        key, _, value = token.partition("=")
        if not value:
            fail(2, f"bad meta token {token!r}")
        meta[key] = value
    try:
        n = int(meta["n"])
        sensing_range = float(meta["R"])
        side = float(meta["side"])
        k = int(meta["k"])
    except (KeyError, ValueError) as exc:
        fail(2, f"bad meta line ({exc})")

    positions: list = [None] * n
    labels = [-1] * n
    edges: dict[tuple[int, int], float] = {}
    cluster_map: dict[int, list[int]] = {}
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if not parts:
            continue
        kind = parts[0]
        try:
            if kind == "node":
                idx = int(parts[1])
                positions[idx] = (float(parts[2]), float(parts[3]), float(parts[4]))
                labels[idx] = int(parts[5])
            elif kind == "edge":
                u, v = int(parts[1]), int(parts[2])
                if u == v:
                    fail(lineno, "self-loop edge")
                key = (u, v) if u < v else (v, u)
                edges[key] = float(parts[3])
            elif kind == "cluster":
                cid = int(parts[1])
                cluster_map[cid] = [int(p) for p in parts[2:]]
            else:
                fail(lineno, f"unknown record {kind!r}")
        except (ValueError, IndexError):
            fail(lineno, f"malformed {kind} line")
    missing = [i for i, p in enumerate(positions) if p is None]
    if missing:
        fail(len(lines), f"missing node lines for ids {missing[:5]}")

    has_labels = any(l >= 0 for l in labels)
    deployment = Deployment(
        positions,
        side,
        labels if has_labels else None,
        k if k >= 0 else None,
    )
    graph = WsnGraph(n, sensing_range, edges)
    clusters = None
    residual = None
    if cluster_map:
        clusters = [cluster_map[c] for c in sorted(c for c in cluster_map if c >= 0)]
        residual = cluster_map.get(-1, [])
    return GraphFile(graph, deployment, clusters, residual)
