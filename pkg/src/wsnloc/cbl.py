"""Coplanarity-based localization of clustered deployments.

Each coplanar cluster is first localized flat (2D trilateration among
its own members only), then clusters are lifted into 3-space one at a
time: a seed cluster donates the global frame (its flat formation on
z = 0), a second cluster is semi-localized against it (fixed up to one
reflection about the seed plane), and every further cluster is rigidly
localized once three of its support nodes can be uniquely positioned
from four non-coplanar already-global anchors.  A cluster's transform
then maps all of its locally positioned members to global coordinates
in one step, which is what keeps coplanar anchor sets from ever
flipping individual nodes.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .geometry import (
    COLLINEAR_ANGLE_DEG,
    DegenerateGeometryError,
    Point2,
    Point3,
    RigidTransform,
    TetraDistances,
    apply_transform,
    build_transform,
    classify_tetra,
    min_triangle_angle,
    quadrilaterate_point_3d,
    three_sphere_candidates,
)
from .localize2d import trilaterate_cluster
from .localize3d import PointFormation3, _point_tetra
from .network import WsnGraph


class ClusterState(enum.Enum):
    UNLOCALIZED = "unlocalized"
    SEMI = "semi"
    RIGID = "rigid"


@dataclass
class CoplanarCluster:
    """One coplanar cluster with its flat formation and placement state.

    local_formation holds the intra-cluster 2D positions; support,
    transform, global_positions and state describe the current 3D
    placement attempt and are reset between seed choices.
    """

    id: int
    members: tuple[int, ...]
    local_formation: dict[int, Point2] = field(default_factory=dict)
    state: ClusterState = ClusterState.UNLOCALIZED
    support: Optional[tuple[int, int, int]] = None
    transform: Optional[RigidTransform] = None
    global_positions: dict[int, Point3] = field(default_factory=dict)
    anchor_record: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def reset_placement(self) -> None:
        self.state = ClusterState.UNLOCALIZED
        self.support = None
        self.transform = None
        self.global_positions = {}
        self.anchor_record = {}

    def lifted_local(self, node: int) -> Point3:
        x, y = self.local_formation[node]
        return (x, y, 0.0)


def make_clusters(memberships: Iterable[Iterable[int]]) -> list[CoplanarCluster]:
    return [
        CoplanarCluster(i, tuple(sorted(members)))
        for i, members in enumerate(memberships)
    ]


def localize_clusters_2d(
    g: WsnGraph,
    clusters: Sequence[CoplanarCluster],
    err_mag: float,
    robust_min_angle: Optional[float] = None,
    seed_cap: Optional[int] = None,
) -> None:
    """Compute every cluster's flat formation over its own edges only."""
    for cluster in clusters:
        formation = trilaterate_cluster(
            g,
            cluster.members,
            err_mag,
            robust_min_angle=robust_min_angle,
            seed_cap=seed_cap,
        )
        cluster.local_formation = formation.assignments


def _first_noncollinear_triple(anchors):
    # anchors: list of (node, position, distance); first triple whose
    # positions span a proper triangle, scanning in id order.
    n = len(anchors)
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                if (
                    min_triangle_angle(
                        anchors[i][1], anchors[j][1], anchors[k][1]
                    )
                    >= COLLINEAR_ANGLE_DEG
                ):
                    return anchors[i], anchors[j], anchors[k]
    return None


def rank_support_triples(
    cluster: CoplanarCluster,
    g: WsnGraph,
    global_pos: dict[int, Point3],
    limit: int = 12,
) -> list[tuple[int, int, int]]:
    """Candidate support triples, best first.

    Support nodes need enough already-global interplanar neighbors to be
    uniquely localizable, so candidates are ranked by that anchor count
    and triples by (total anchor count, local min angle), ties toward
    the smallest ids.  Collinear triples are excluded.
    """
    counts = []
    for m in cluster.members:
        if m not in cluster.local_formation:
            continue
        c = sum(1 for nbr in g.adj[m] if nbr in global_pos)
        if c >= 4:
            counts.append((m, c))
    if len(counts) < 3:
        return []
    # Bound the candidate pool; ranking already favors anchor-rich nodes.
    pool = sorted(counts, key=lambda t: (-t[1], t[0]))[:24]
    scored = []
    for i in range(len(pool) - 2):
        m1, c1 = pool[i]
        p1 = cluster.local_formation[m1]
        for j in range(i + 1, len(pool) - 1):
            m2, c2 = pool[j]
            p2 = cluster.local_formation[m2]
            for k in range(j + 1, len(pool)):
                m3, c3 = pool[k]
                angle = min_triangle_angle(p1, p2, cluster.local_formation[m3])
                if angle < COLLINEAR_ANGLE_DEG:
                    continue
                key = (c1 + c2 + c3, angle, (-m1, -m2, -m3))
                scored.append((key, tuple(sorted((m1, m2, m3)))))
    scored.sort(key=lambda t: t[0], reverse=True)
    return [triple for _, triple in scored[:limit]]


def select_support_nodes(
    cluster: CoplanarCluster,
    g: WsnGraph,
    global_pos: dict[int, Point3],
) -> Optional[tuple[int, int, int]]:
    """The best-ranked support triple for a cluster, or None."""
    triples = rank_support_triples(cluster, g, global_pos, limit=1)
    return triples[0] if triples else None


def _unique_localize(
    node: int,
    g: WsnGraph,
    global_pos: dict[int, Point3],
    err_mag: float,
    kappa: float,
):
    """Uniquely position one node from four non-coplanar global anchors.

    Base anchors are the first non-collinear triple among the node's
    already-global neighbors (in id order); every later neighbor is
    tried as the disambiguating fourth until one forms a non-coplanar
    quadruple that resolves the mirror pair.  Returns (position,
    anchor ids) or None.
    """
    anchors = [
        (nbr, global_pos[nbr], d)
        for nbr, d in g.adj[node].items()
        if nbr in global_pos
    ]
    if len(anchors) < 4:
        return None
    base = _first_noncollinear_triple(anchors)
    if base is None:
        return None
    base_ids = {a[0] for a in base}
    base_anchors = tuple((a[1], a[2]) for a in base)
    for nbr, pos, d in anchors:
        if nbr in base_ids:
            continue
        quad = _point_tetra(base[0][1], base[1][1], base[2][1], pos)
        if not classify_tetra(quad, kappa).is_noncoplanar:
            continue
        p = quadrilaterate_point_3d(base_anchors + ((pos, d),), err_mag)
        if p is not None:
            ids = tuple(a[0] for a in base) + (nbr,)
            return p, ids
    return None


def _globalize(cluster: CoplanarCluster, support, support_global) -> bool:
    local = tuple(cluster.lifted_local(s) for s in support)
    try:
        transform = build_transform(local, support_global)
    except DegenerateGeometryError:
        return False
    cluster.transform = transform
    cluster.support = tuple(support)
    cluster.global_positions = {
        m: apply_transform(transform, cluster.lifted_local(m))
        for m in cluster.members
        if m in cluster.local_formation
    }
    return True


def semi_localize(
    seed: CoplanarCluster,
    target: CoplanarCluster,
    g: WsnGraph,
    err_mag: float,
) -> bool:
    """Place a cluster against the seed cluster, up to one reflection.

    All seed anchors are coplanar, so the first support node s has two
    mirror positions; the one with the greater z is taken (a pure
    convention, since only an external anchor could tell them apart).
    Two further support nodes are then uniquely localized from s plus
    three seed anchors, which fixes the rest of the cluster through the
    frame transform.  Mutates the target on success.
    """
    seed_pos = seed.global_positions
    if len(seed_pos) < 3:
        return False
    local_nodes = sorted(target.local_formation)
    for s in local_nodes:
        s_anchors = [
            (nbr, seed_pos[nbr], d)
            for nbr, d in g.adj[s].items()
            if nbr in seed_pos
        ]
        if len(s_anchors) < 3:
            continue
        base = _first_noncollinear_triple(s_anchors)
        if base is None:
            continue
        cands = three_sphere_candidates(
            tuple((a[1], a[2]) for a in base), err_mag
        )
        if cands is None:
            continue
        p_hi, p_lo = cands
        s_pos = p_hi if p_hi[2] >= p_lo[2] else p_lo
        # Unique-localize further support candidates from s plus three
        # seed anchors (s sits off the seed plane, so the quadruple is
        # non-coplanar whenever the elimination below succeeds).
        placed: list[tuple[int, Point3, tuple[int, ...]]] = []
        for t in local_nodes:
            if t == s:
                continue
            d_ts = g.adj[t].get(s)
            if d_ts is None:
                continue
            t_anchors = [
                (nbr, seed_pos[nbr], d)
                for nbr, d in g.adj[t].items()
                if nbr in seed_pos
            ]
            if len(t_anchors) < 3:
                continue
            t_base = _first_noncollinear_triple(t_anchors)
            if t_base is None:
                continue
            p_t = quadrilaterate_point_3d(
                tuple((a[1], a[2]) for a in t_base) + ((s_pos, d_ts),),
                err_mag,
            )
            if p_t is None:
                continue
            placed.append((t, p_t, tuple(a[0] for a in t_base) + (s,)))
            if len(placed) >= 6:
                break
        for i in range(len(placed) - 1):
            for j in range(i + 1, len(placed)):
                a_node, a_pos, a_ids = placed[i]
                b_node, b_pos, b_ids = placed[j]
                if (
                    min_triangle_angle(
                        target.local_formation[s],
                        target.local_formation[a_node],
                        target.local_formation[b_node],
                    )
                    < COLLINEAR_ANGLE_DEG
                ):
                    continue
                if _globalize(target, (s, a_node, b_node), (s_pos, a_pos, b_pos)):
                    target.state = ClusterState.SEMI
                    target.anchor_record = {a_node: a_ids, b_node: b_ids}
                    return True
    return False


def rigid_localize(
    target: CoplanarCluster,
    g: WsnGraph,
    global_pos: dict[int, Point3],
    err_mag: float,
    kappa: float,
) -> bool:
    """Place a cluster from uniquely localized support nodes only.

    Requires anchors spread over at least two non-coincident planes:
    each support node must be resolvable from four non-coplanar global
    anchors.  Ranked support triples are tried in order (a candidate
    with many anchors can still sit next to a single plane only), and
    the attempt fails once no ranked triple survives.  Mutates the
    target on success.
    """
    resolved: dict[int, Optional[tuple]] = {}

    def resolve(node):
        if node not in resolved:
            resolved[node] = _unique_localize(node, g, global_pos, err_mag, kappa)
        return resolved[node]

    for support in rank_support_triples(target, g, global_pos):
        results = [resolve(s) for s in support]
        if any(r is None for r in results):
            continue
        support_global = tuple(r[0] for r in results)
        if not _globalize(target, support, support_global):
            continue
        target.state = ClusterState.RIGID
        target.anchor_record = {s: r[1] for s, r in zip(support, results)}
        return True
    return False


def _collect_formation(clusters: Sequence[CoplanarCluster]) -> PointFormation3:
    formation = PointFormation3()
    for cluster in clusters:
        if cluster.state is ClusterState.UNLOCALIZED:
            continue
        for node in sorted(cluster.global_positions):
            formation.assignments[node] = cluster.global_positions[node]
        formation.anchors.update(cluster.anchor_record)
    return formation


def cbl(
    g: WsnGraph,
    memberships: Iterable[Iterable[int]],
    err_mag: float,
    kappa: float = 0.0,
    robust_min_angle: Optional[float] = None,
    seed_cap: Optional[int] = None,
) -> tuple[PointFormation3, list[CoplanarCluster]]:
    """Localize a clustered deployment in 3D.

    After flat per-cluster trilateration, every ordered (seed, semi)
    cluster pair is tried: the seed's flat formation becomes the global
    z = 0 frame, the semi candidate attaches up to a reflection, and a
    queue of freshly global clusters drives rigid localization of the
    rest (clusters are re-examined whenever new anchors appear near
    them).  Returns the first formation covering every cluster, else
    the largest one found, along with the cluster objects in their
    final winning state.
    """
    clusters = make_clusters(memberships)
    localize_clusters_2d(
        g, clusters, err_mag, robust_min_angle=robust_min_angle, seed_cap=seed_cap
    )
    cluster_of: list[Optional[CoplanarCluster]] = [None] * g.n
    for cluster in clusters:
        for m in cluster.members:
            cluster_of[m] = cluster

    if len(clusters) == 1:
        only = clusters[0]
        only.global_positions = {
            m: only.lifted_local(m) for m in only.local_formation
        }
        only.state = ClusterState.RIGID
        return _collect_formation(clusters), clusters

    best = PointFormation3()
    best_state: Optional[list[CoplanarCluster]] = None
    for seed in clusters:
        if len(seed.local_formation) < 3:
            continue
        for semi in clusters:
            if semi is seed or len(semi.local_formation) < 3:
                continue
            for cluster in clusters:
                cluster.reset_placement()
            seed.global_positions = {
                m: seed.lifted_local(m) for m in seed.local_formation
            }
            seed.state = ClusterState.RIGID
            if not semi_localize(seed, semi, g, err_mag):
                continue
            global_pos = dict(seed.global_positions)
            global_pos.update(semi.global_positions)
            queue = deque((seed, semi))
            while queue:
                current = queue.popleft()
                # One burst: every neighbor cluster that gained anchors
                # from this cluster's members gets a rigid attempt.
                touched: dict[int, CoplanarCluster] = {}
                for v in current.global_positions:
                    for w in g.adj[v]:
                        cw = cluster_of[w]
                        if cw is None or cw.state is not ClusterState.UNLOCALIZED:
                            continue
                        touched[cw.id] = cw
                for cid in sorted(touched):
                    cw = touched[cid]
                    if cw.state is not ClusterState.UNLOCALIZED:
                        continue
                    if rigid_localize(cw, g, global_pos, err_mag, kappa):
                        global_pos.update(cw.global_positions)
                        queue.append(cw)
            formation = _collect_formation(clusters)
            if all(c.state is not ClusterState.UNLOCALIZED for c in clusters):
                return formation, clusters
            if len(formation) > len(best):
                best = formation
                best_state = [
                    CoplanarCluster(
                        c.id,
                        c.members,
                        dict(c.local_formation),
                        c.state,
                        c.support,
                        c.transform,
                        dict(c.global_positions),
                        dict(c.anchor_record),
                    )
                    for c in clusters
                ]
    if best_state is not None:
        return best, best_state
    for cluster in clusters:
        cluster.reset_placement()
    return best, clusters
