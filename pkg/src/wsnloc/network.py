"""WSN graph model, deployment generators and the distance-noise model.

A deployment is a list of ground-truth node positions inside a cubic
volume (optionally grouped into coplanar clusters); the unit-ball graph
over a deployment connects every pair within the sensing range R and
carries measured distances on its edges.  All generators take an
explicit numpy Generator, so runs are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .geometry import Point3


@dataclass
class Deployment:
    """Ground-truth node positions inside a [0, side]^3 volume.

    cluster_labels assigns each node to a coplanar cluster (present for
    planar deployments only); k is the number of clusters.
    """

    positions: list[Point3]
    side: float
    cluster_labels: Optional[list[int]] = None
    k: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.positions)

    def label_clusters(self) -> list[list[int]]:
        """Cluster membership lists derived from the labels."""
        if self.cluster_labels is None:
            raise ValueError("deployment carries no cluster labels")
        k = self.k if self.k is not None else max(self.cluster_labels) + 1
        groups: list[list[int]] = [[] for _ in range(k)]
        for node, label in enumerate(self.cluster_labels):
            groups[label].append(node)
        return groups


class WsnGraph:
    """Undirected graph of sensor nodes with measured edge distances.

    edges maps (u, v) with u < v to the measured distance; adj holds a
    per-node {neighbor: distance} dict with neighbors in ascending id
    order.  Graphs are immutable after construction.
    """

    __slots__ = ("n", "R", "edges", "adj")

    def __init__(self, n: int, R: float, edges: dict[tuple[int, int], float]):
        self.n = n
        self.R = R
        self.edges = edges
        adj: list[dict[int, float]] = [{} for _ in range(n)]
        for (u, v), d in sorted(edges.items()):
            if not d > 0.0:
                raise ValueError(f"non-positive edge distance on ({u}, {v})")
            adj[u][v] = d
            adj[v][u] = d
        # Rebuild each dict in ascending neighbor order.
        self.adj = [dict(sorted(a.items())) for a in adj]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def dist(self, u: int, v: int) -> Optional[float]:
        """Measured distance of edge (u, v), or None if absent."""
        return self.adj[u].get(v)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def avg_degree(self) -> float:
        return 2.0 * len(self.edges) / self.n if self.n else 0.0

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n


def build_unit_ball_graph(deployment: Deployment, R: float) -> WsnGraph:
    """Connect every node pair with true distance <= R (inclusive).

    Edges carry the true Euclidean distance; apply_noise perturbs them.
    """
    if not R > 0.0:
        raise ValueError("sensing range must be positive")
    pts = deployment.positions
    edges: dict[tuple[int, int], float] = {}
    n = len(pts)
    for u in range(n):
        pu = pts[u]
        for v in range(u + 1, n):
            d = math.dist(pu, pts[v])
            if d <= R:
                edges[(u, v)] = d
    return WsnGraph(n, R, edges)


@dataclass(frozen=True)
class NoiseSpec:
    """Empirical range-noise model parameters.

    Every measured distance d becomes d * (1 + g) + L with
    g ~ Normal(range_bias(R), err_mag / 100), and with probability
    large_noise_prob an extra offset L = +-(P / 100) * R where
    P ~ Uniform(0, large_noise_max_pct) and the sign is fair.
    """

    err_mag: float
    R: float
    large_noise_prob: float = 0.05
    large_noise_max_pct: float = 10.0


def range_bias(R: float) -> float:
    """Mean relative ranging error for sensing range R (empirical fit)."""
    return 0.022 * math.log(1.0 + R) - 0.038


def apply_noise(g: WsnGraph, spec: NoiseSpec, rng: np.random.Generator) -> WsnGraph:
    """Perturb every measured distance once per undirected edge.

    Results stay symmetric by construction and are floored at 1e-6 so
    no measured distance becomes non-positive.
    """
    mean = range_bias(spec.R)
    sigma = spec.err_mag / 100.0
    noisy: dict[tuple[int, int], float] = {}
    for key in sorted(g.edges):
        d = g.edges[key]
        rel = rng.normal(mean, sigma)
        value = d * (1.0 + rel)
        if rng.random() < spec.large_noise_prob:
            pct = rng.uniform(0.0, spec.large_noise_max_pct)
            sign = -1.0 if rng.random() < 0.5 else 1.0
            value += sign * (pct / 100.0) * spec.R
        noisy[key] = max(value, 1e-6)
    return WsnGraph(g.n, g.R, noisy)


def gen_random_cube(n: int, side: float, rng: np.random.Generator) -> Deployment:
    """n i.i.d. uniform points in the [0, side]^3 cube."""
    if n < 1:
        raise ValueError("need at least one node")
    pts = rng.uniform(0.0, side, (n, 3))
    return Deployment([tuple(p) for p in pts], side)


def gen_random_square(n: int, side: float, rng: np.random.Generator) -> Deployment:
    """n i.i.d. uniform points on the z = 0 square (for 2D experiments)."""
    if n < 1:
        raise ValueError("need at least one node")
    pts = rng.uniform(0.0, side, (n, 2))
    return Deployment([(float(x), float(y), 0.0) for x, y in pts], side)


def _grid_dims(k: int) -> tuple[int, int, int]:
    """Factor k into the most cubic axis-count triple (product = k)."""
    best = None
    for a in range(1, k + 1):
        if k % a:
            continue
        for b in range(1, k // a + 1):
            if (k // a) % b:
                continue
            c = k // (a * b)
            dims = tuple(sorted((a, b, c), reverse=True))
            ratio = dims[0] / dims[2]
            key = (ratio, dims)
            if best is None or key < best[0]:
                best = (key, dims)
    return best[1]


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(normal)))] = 1.0
    e1 = np.cross(normal, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return e1, e2


def _sample_plane_points(
    lo: np.ndarray,
    hi: np.ndarray,
    count: int,
    rng: np.random.Generator,
    max_plane_tries: int = 100,
) -> tuple[list[Point3], np.ndarray, float]:
    """Uniform points on a random plane clipped to the box [lo, hi].

    The plane is drawn as a uniform unit normal with the offset uniform
    over the box's support interval, so it always intersects the box;
    degenerate slivers where rejection sampling stalls trigger a fresh
    plane.  Returns the points plus the plane (normal, offset).
    """
    center = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    radius = 2.0 * float(np.linalg.norm(half))
    corners = np.array(
        [
            [a, b, c]
            for a in (lo[0], hi[0])
            for b in (lo[1], hi[1])
            for c in (lo[2], hi[2])
        ]
    )
    for _ in range(max_plane_tries):
        normal = rng.normal(size=3)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal /= norm
        support = corners @ normal
        offset = rng.uniform(support.min(), support.max())
        e1, e2 = _plane_basis(normal)
        anchor = center + (offset - float(normal @ center)) * normal
        pts: list[Point3] = []
        budget = 1000 * count
        while len(pts) < count and budget > 0:
            budget -= 1
            u, v = rng.uniform(-radius, radius, 2)
            p = anchor + u * e1 + v * e2
            if np.all(p >= lo) and np.all(p <= hi):
                pts.append((float(p[0]), float(p[1]), float(p[2])))
        if len(pts) == count:
            return pts, normal, offset
    raise RuntimeError("could not sample a usable plane inside the box")


def gen_planar_disjoint(
    k: int, m: int, side: float, rng: np.random.Generator
) -> Deployment:
    """k disjoint coplanar clusters of m nodes each.

    The cube is split into a near-cubic grid of k boxes (8 -> 2x2x2,
    27 -> 3x3x3, ...); each box gets one random plane with m uniform
    points on the plane-box intersection.
    """
    if k < 1 or m < 3:
        raise ValueError("need k >= 1 clusters of m >= 3 nodes")
    kx, ky, kz = _grid_dims(k)
    sx, sy, sz = side / kx, side / ky, side / kz
    positions: list[Point3] = []
    labels: list[int] = []
    label = 0
    for ix in range(kx):
        for iy in range(ky):
            for iz in range(kz):
                lo = np.array([ix * sx, iy * sy, iz * sz])
                hi = lo + np.array([sx, sy, sz])
                pts, _, _ = _sample_plane_points(lo, hi, m, rng)
                positions.extend(pts)
                labels.extend([label] * m)
                label += 1
    return Deployment(positions, side, labels, k)


def gen_planar_intersecting(
    k: int, m: int, side: float, rng: np.random.Generator
) -> Deployment:
    """k coplanar clusters on random planes spanning the whole cube.

    Planes are independent, so for k >= 2 they generally intersect
    inside the volume.
    """
    if k < 1 or m < 3:
        raise ValueError("need k >= 1 clusters of m >= 3 nodes")
    lo = np.zeros(3)
    hi = np.full(3, float(side))
    positions: list[Point3] = []
    labels: list[int] = []
    for label in range(k):
        pts, _, _ = _sample_plane_points(lo, hi, m, rng)
        positions.extend(pts)
        labels.extend([label] * m)
    return Deployment(positions, side, labels, k)


def planarity_factor(k: int, n: int) -> float:
    """How planar a deployment is: 1 - k^2 / n for k clusters, n nodes."""
    if n < 1:
        raise ValueError("need at least one node")
    return 1.0 - (k * k) / n
