"""Distance-only extraction of coplanar clusters.

Works purely on measured pairwise distances: a node quadruple whose
tetrahedron volume stays at or below the threshold kappa counts as
coplanar, and clusters grow by absorbing off-plane nodes that are
coplanar with some member triple.  A hop distance theta keeps long
(likely inter-plane) edges out of the extension and is relaxed step by
step once no cluster can grow any further.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geometry import TetraDistances, classify_tetra
from .network import WsnGraph


@dataclass
class ClusterParams:
    """Extraction thresholds: volume cutoff and hop-distance schedule."""

    kappa: float
    theta: float
    theta_increment: float = 1.0
    theta_max: float = float("inf")


def volume_threshold(err_mag: float) -> float:
    """Tetrahedron volume treated as flat at error magnitude err_mag."""
    if err_mag < 0.0:
        raise ValueError("error magnitude must be non-negative")
    return 6.0 * math.log(1.0 + err_mag)


def initial_hop_distance(g: WsnGraph) -> float:
    """Half the average measured edge weight of the graph."""
    if not g.edges:
        raise ValueError("graph has no edges")
    return sum(g.edges.values()) / (2.0 * len(g.edges))


def _coplanar_with_some_triple(adj, node, near, old, kappa) -> bool:
    # Scan member triples within theta of `node` for one forming a flat
    # tetrahedron with it.  Triples fully inside `old` were exhausted in
    # earlier passes and are skipped; member pairs without a measured
    # distance count as infinitely far and can never be flat.
    adj_n = adj[node]
    new = [m for m in near if m not in old]
    if not new:
        return False
    olds = [m for m in near if m in old]
    pool = new + olds
    n_new = len(new)
    for i, a in enumerate(pool):
        if i >= n_new:
            break  # triples entirely inside `old` from here on
        adj_a = adj[a]
        d_an = adj_n[a]
        for j in range(i + 1, len(pool)):
            b = pool[j]
            d_ab = adj_a.get(b)
            if d_ab is None:
                continue
            adj_b = adj[b]
            d_bn = adj_n[b]
            for k in range(j + 1, len(pool)):
                c = pool[k]
                d_ac = adj_a.get(c)
                d_bc = adj_b.get(c)
                if d_ac is None or d_bc is None:
                    continue
                td = TetraDistances(d_ab, d_ac, adj_n[a], d_bc, adj_n[b], adj_n[c])
                if classify_tetra(td, kappa).is_coplanar:
                    return True
    return False


def extend_cluster(
    members: list[int],
    off_plane: set[int],
    g: WsnGraph,
    theta: float,
    kappa: float,
    tested: Optional[dict[int, set[int]]] = None,
) -> int:
    """Grow one cluster to a fixed point, mutating members and off_plane.

    Each pass tests every off-plane node against the member triples
    visible within theta; nodes that pass join in a batch at the end of
    the pass (so a pass never sees its own additions), and passes repeat
    until one adds nothing.  `tested` caches, per candidate, the member
    set already exhaustively checked, which keeps repeated passes and
    theta re-runs from recomputing old triples.  Returns the number of
    nodes added.
    """
    if tested is None:
        tested = {}
    adj = g.adj
    added = 0
    while True:
        snapshot = list(members)
        newbies: list[int] = []
        for cand in sorted(off_plane):
            adj_c = adj[cand]
            near = [
                m
                for m in snapshot
                if (d := adj_c.get(m)) is not None and d <= theta
            ]
            if len(near) < 3:
                continue
            old = tested.get(cand, ())
            if _coplanar_with_some_triple(adj, cand, near, old, kappa):
                newbies.append(cand)
                tested.pop(cand, None)
            else:
                tested[cand] = set(near)
        if not newbies:
            return added
        members.extend(newbies)
        off_plane.difference_update(newbies)
        added += len(newbies)


def extract_clusters(
    g: WsnGraph,
    err_mag: float,
    params: Optional[ClusterParams] = None,
) -> tuple[list[list[int]], list[int]]:
    """Partition the graph's nodes into coplanar clusters plus a residual.

    Thresholds default to kappa = volume_threshold(err_mag) and theta =
    initial_hop_distance(g) with unit increments up to the sensing
    range.  Seed quadruples are scanned among off-plane nodes in
    ascending connectivity order (ties by id) and must be fully
    connected at hop distance; every seed is extended immediately.  Once
    the scan finds no more seeds, theta relaxes stepwise and all
    clusters re-extend until either nothing is off-plane or theta
    exceeds the sensing range.  Returns (clusters, residual) with each
    cluster sorted by node id.
    """
    if g.n < 4:
        raise ValueError("need at least four nodes to extract clusters")
    if params is None:
        params = ClusterParams(
            kappa=volume_threshold(err_mag),
            theta=initial_hop_distance(g),
            theta_increment=1.0,
            theta_max=g.R,
        )
    kappa = params.kappa
    theta = params.theta
    order = sorted(range(g.n), key=lambda v: (g.degree(v), v))
    pos = {v: i for i, v in enumerate(order)}
    off_plane = set(order)
    adj = g.adj
    clusters: list[list[int]] = []
    caches: list[dict[int, set[int]]] = []

    # Neighbor lists restricted to hop distance, in scan order.
    tnbrs = [
        sorted((w for w, d in adj[v].items() if d <= theta), key=pos.__getitem__)
        for v in range(g.n)
    ]
    tsets = [set(t) for t in tnbrs]

    for i, a in enumerate(order):
        if a not in off_plane:
            continue
        set_a = tsets[a]
        adj_a = adj[a]
        for b in tnbrs[a]:
            if a not in off_plane:
                break
            if pos[b] <= i or b not in off_plane:
                continue
            adj_b = adj[b]
            for c in tnbrs[b]:
                if a not in off_plane or b not in off_plane:
                    break
                if pos[c] <= pos[b] or c not in off_plane or c not in set_a:
                    continue
                adj_c = adj[c]
                for d in tnbrs[c]:
                    if pos[d] <= pos[c] or d not in off_plane:
                        continue
                    if d not in set_a or d not in tsets[b]:
                        continue
                    td = TetraDistances(
                        adj_a[b], adj_a[c], adj_a[d], adj_b[c], adj_b[d], adj_c[d]
                    )
                    if not classify_tetra(td, kappa).is_coplanar:
                        continue
                    seed = [a, b, c, d]
                    off_plane.difference_update(seed)
                    cache: dict[int, set[int]] = {}
                    extend_cluster(seed, off_plane, g, theta, kappa, cache)
                    clusters.append(seed)
                    caches.append(cache)
                    break

    while off_plane and theta <= params.theta_max:
        theta += params.theta_increment
        for members, cache in zip(clusters, caches):
            if not off_plane:
                break
            extend_cluster(members, off_plane, g, theta, kappa, cache)

    return [sorted(m) for m in clusters], sorted(off_plane)
