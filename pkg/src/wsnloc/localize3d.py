"""Graph quadrilateration: queue-driven 3D localization from a seed tetrahedron.

Mirrors the trilateration driver one dimension up: seeds are
fully-connected node quadruples whose measured distances form a
non-coplanar tetrahedron, and a node is localized once four localized
neighbors whose positions are not coplanar satisfy its measured
distances.  Coplanar anchor quadruples are rejected outright, because
they can only place a node up to a reflection.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .geometry import (
    DegenerateGeometryError,
    Point3,
    TetraDistances,
    classify_tetra,
    place_seed_tetra,
    quadrilaterate_point_3d,
)
from .network import WsnGraph


@dataclass
class PointFormation3:
    """Partial 3D coordinate assignment for a graph's nodes."""

    assignments: dict[int, Point3] = field(default_factory=dict)
    seed_ids: Optional[tuple[int, int, int, int]] = None
    anchors: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.assignments)


def _point_tetra(p0, p1, p2, p3) -> TetraDistances:
    return TetraDistances(
        math.dist(p0, p1),
        math.dist(p0, p2),
        math.dist(p0, p3),
        math.dist(p1, p2),
        math.dist(p1, p3),
        math.dist(p2, p3),
    )


def _propagate(
    g: WsnGraph,
    member_set,
    seed: tuple[int, int, int, int],
    seed_pos,
    err_mag: float,
    kappa: float,
) -> PointFormation3:
    pos: dict[int, Point3] = dict(zip(seed, seed_pos))
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
            if len(seen) < 4:
                continue
            a1, a2, a3 = seen[0], seen[1], seen[2]
            p1, p2, p3 = pos[a1], pos[a2], pos[a3]
            # The anchor quadruple must span a real tetrahedron, else
            # the node could flip about the anchors' plane.
            if not classify_tetra(
                _point_tetra(p1, p2, p3, pi), kappa
            ).is_noncoplanar:
                continue
            p = quadrilaterate_point_3d(
                (
                    (p1, adj[j][a1]),
                    (p2, adj[j][a2]),
                    (p3, adj[j][a3]),
                    (pi, d_ij),
                ),
                err_mag,
            )
            if p is None:
                continue
            pos[j] = p
            anchors_used[j] = (a1, a2, a3, i)
            queue.append(j)
    return PointFormation3(pos, seed, anchors_used)


def quadrilaterate_from_seed(
    g: WsnGraph,
    seed: tuple[int, int, int, int],
    err_mag: float,
    kappa: float = 0.0,
    members: Optional[Iterable[int]] = None,
) -> PointFormation3:
    """Propagate 3D positions from one explicit seed quadruple.

    Raises DegenerateGeometryError when the seed is not fully connected
    or its measured distances do not form a non-coplanar tetrahedron.
    """
    a, b, c, d = seed
    dists = (
        g.dist(a, b),
        g.dist(a, c),
        g.dist(a, d),
        g.dist(b, c),
        g.dist(b, d),
        g.dist(c, d),
    )
    if any(x is None for x in dists):
        raise DegenerateGeometryError("seed quadruple is not fully connected")
    td = TetraDistances(*dists)
    if not classify_tetra(td, kappa).is_noncoplanar:
        raise DegenerateGeometryError("seed quadruple is coplanar")
    seed_pos = place_seed_tetra(td)
    member_set = set(members) if members is not None else range(g.n)
    return _propagate(g, member_set, seed, seed_pos, err_mag, kappa)


def quadrilaterate(
    g: WsnGraph,
    err_mag: float,
    kappa: float = 0.0,
    seed_cap: Optional[int] = None,
    members: Optional[Iterable[int]] = None,
) -> PointFormation3:
    """Best-effort 3D localization of a graph.

    Tries fully-connected non-coplanar seed quadruples in ascending
    lexicographic order with early return on full coverage, otherwise
    the largest formation wins (first-found breaks ties).  Quadruples
    inside an already-computed formation are skipped; seed_cap bounds
    the number of attempts (None = exhaustive).
    """
    nodes = sorted(members) if members is not None else list(range(g.n))
    member_set = set(nodes)
    best = PointFormation3()
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
                adj_c = adj[c]
                for d in adj_c:
                    if d <= c or d not in member_set:
                        continue
                    if d not in adj_a or d not in adj_b:
                        continue
                    if any(
                        a in t and b in t and c in t and d in t for t in tried
                    ):
                        continue
                    td = TetraDistances(
                        adj_a[b], adj_a[c], adj_a[d], adj_b[c], adj_b[d], adj_c[d]
                    )
                    if not classify_tetra(td, kappa).is_noncoplanar:
                        continue
                    try:
                        seed_pos = place_seed_tetra(td)
                    except DegenerateGeometryError:
                        continue
                    if seed_cap is not None and attempts >= seed_cap:
                        return best
                    attempts += 1
                    formation = _propagate(
                        g, member_set, (a, b, c, d), seed_pos, err_mag, kappa
                    )
                    if len(formation) == len(nodes):
                        return formation
                    tried.append(set(formation.assignments))
                    if len(formation) > len(best):
                        best = formation
    return best
