"""Graph trilateration: queue-driven 2D localization from a seed triangle.

The driver tries fully-connected, non-collinear seed triples in
ascending id order, propagates from each one, and keeps the first
formation that covers every node (otherwise the largest one found).
Formations record which anchors localized each node so that flip
counting downstream can reconstruct the anchor regions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .geometry import (
    COLLINEAR_ANGLE_DEG,
    DegenerateGeometryError,
    Point2,
    min_triangle_angle,
    place_seed_triangle,
    trilaterate_point_2d,
)
from .network import WsnGraph


@dataclass
class PointFormation2:
    """Partial 2D coordinate assignment for a graph's nodes."""

    assignments: dict[int, Point2] = field(default_factory=dict)
    seed_ids: Optional[tuple[int, int, int]] = None
    anchors: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.assignments)


def _propagate(
    g: WsnGraph,
    member_set,
    seed: tuple[int, int, int],
    seed_pos,
    err_mag: float,
    min_angle: float,
) -> PointFormation2:
    pos: dict[int, Point2] = dict(zip(seed, seed_pos))
    anchors_used: dict[int, tuple[int, ...]] = {}
    localized_neighbors: dict[int, list[int]] = {}
    queue = deque(seed)
    adj = g.adj
    while queue:
        i = queue.popleft()
        pi = pos[i]
        for j, d_ij in adj[i].items():
            if j in pos or j not in member_set:
                continue
            seen = localized_neighbors.setdefault(j, [])
            seen.append(i)
            if len(seen) < 3:
                continue
            # Anchor rule: first two localized neighbors plus the
            # newest one; retried on each later notification.
            a1, a2 = seen[0], seen[1]
            p1, p2 = pos[a1], pos[a2]
            if min_triangle_angle(p1, p2, pi) < min_angle:
                continue
            p = trilaterate_point_2d(
                ((p1, adj[j][a1]), (p2, adj[j][a2]), (pi, d_ij)), err_mag
            )
            if p is None:
                continue
            pos[j] = p
            anchors_used[j] = (a1, a2, i)
            queue.append(j)
    return PointFormation2(pos, seed, anchors_used)


def trilaterate_from_seed(
    g: WsnGraph,
    seed: tuple[int, int, int],
    err_mag: float,
    robust_min_angle: Optional[float] = None,
    members: Optional[Iterable[int]] = None,
) -> PointFormation2:
    """Propagate 2D positions from one explicit seed triple.

    The seed triangle is placed from the measured pairwise distances
    (a at the origin, b on the positive x-axis, c above it).  Raises
    DegenerateGeometryError when the seed nodes are not mutually
    connected or their distances form no triangle.
    """
    a, b, c = seed
    d_ab, d_ac, d_bc = g.dist(a, b), g.dist(a, c), g.dist(b, c)
    if d_ab is None or d_ac is None or d_bc is None:
        raise DegenerateGeometryError("seed triple is not fully connected")
    seed_pos = place_seed_triangle(d_ab, d_ac, d_bc)
    min_angle = robust_min_angle if robust_min_angle is not None else COLLINEAR_ANGLE_DEG
    if min_triangle_angle(*seed_pos) < min_angle:
        raise DegenerateGeometryError("collinear seed triple")
    member_set = set(members) if members is not None else range(g.n)
    return _propagate(g, member_set, seed, seed_pos, err_mag, min_angle)


def trilaterate(
    g: WsnGraph,
    err_mag: float,
    robust_min_angle: Optional[float] = None,
    seed_cap: Optional[int] = None,
    members: Optional[Iterable[int]] = None,
) -> PointFormation2:
    """Best-effort 2D localization of a graph (or a node subset).

    Seed triples are tried in ascending lexicographic order; the search
    returns early on full coverage and otherwise keeps the largest
    formation (first found wins ties).  Triples lying entirely inside an
    already-computed formation are skipped, since propagating from them
    cannot reach any new node.  seed_cap bounds the number of seed
    attempts; None means exhaustive search.
    """
    nodes = sorted(members) if members is not None else list(range(g.n))
    member_set = set(nodes)
    min_angle = robust_min_angle if robust_min_angle is not None else COLLINEAR_ANGLE_DEG
    best = PointFormation2()
    tried: list[set[int]] = []
    attempts = 0
    adj = g.adj
    for a in nodes:
        adj_a = adj[a]
        for b in adj_a:
            if b <= a or b not in member_set:
                continue
            adj_b = adj[b]
            for c in adj_b:
                if c <= b or c not in member_set or c not in adj_a:
                    continue
                if any(a in t and b in t and c in t for t in tried):
                    continue
                try:
                    seed_pos = place_seed_triangle(adj_a[b], adj_a[c], adj_b[c])
                except DegenerateGeometryError:
                    continue
                if min_triangle_angle(*seed_pos) < min_angle:
                    continue
                if seed_cap is not None and attempts >= seed_cap:
                    return best
                attempts += 1
                formation = _propagate(
                    g, member_set, (a, b, c), seed_pos, err_mag, min_angle
                )
                if len(formation) == len(nodes):
                    return formation
                tried.append(set(formation.assignments))
                if len(formation) > len(best):
                    best = formation
    return best


def trilaterate_cluster(
    g: WsnGraph,
    members: Iterable[int],
    err_mag: float,
    robust_min_angle: Optional[float] = None,
    seed_cap: Optional[int] = None,
) -> PointFormation2:
    """Trilaterate the subgraph induced by one coplanar cluster.

    Only edges between cluster members are used, so the result is the
    cluster's local (z = 0) point formation.
    """
    return trilaterate(
        g,
        err_mag,
        robust_min_angle=robust_min_angle,
        seed_cap=seed_cap,
        members=members,
    )
