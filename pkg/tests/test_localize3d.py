"""Quadrilateration driver tests."""

import itertools
import math
import time

import numpy as np
import pytest

from wsnloc.geometry import DegenerateGeometryError, TetraDistances, classify_tetra
from wsnloc.localize3d import quadrilaterate, quadrilaterate_from_seed
from wsnloc.network import Deployment, WsnGraph, build_unit_ball_graph, gen_random_cube


def complete_graph(positions):
    n = len(positions)
    edges = {
        (u, v): math.dist(positions[u], positions[v])
        for u in range(n)
        for v in range(u + 1, n)
    }
    return WsnGraph(n, max(edges.values()) + 1.0, edges)


def assert_congruent(assignments, truth, tol):
    for u, v in itertools.combinations(sorted(assignments), 2):
        want = math.dist(truth[u], truth[v])
        got = math.dist(assignments[u], assignments[v])
        assert got == pytest.approx(want, abs=tol), (u, v)


class TestSmallGraphs:
    def test_tetrahedron_plus_interior_point(self):
        truth = [
            (0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.0, 0.0, 1.0),
            (0.3, 0.3, 0.3),
        ]
        g = complete_graph(truth)
        f = quadrilaterate(g, 0.0)
        assert len(f) == 5
        assert_congruent(f.assignments, truth, 1e-6)

    def test_explicit_seed(self):
        truth = [
            (0.0, 0.0, 0.0),
            (2.0, 0.0, 0.0),
            (0.0, 2.0, 0.0),
            (0.0, 0.0, 2.0),
            (1.5, 1.5, 1.5),
            (0.5, 1.0, 0.2),
        ]
        g = complete_graph(truth)
        f = quadrilaterate_from_seed(g, (0, 1, 2, 3), 0.0)
        assert len(f) == 6
        assert_congruent(f.assignments, truth, 1e-6)

    def test_coplanar_deployment_has_no_formation(self):
        rng = np.random.default_rng(0)
        truth = [(x, y, 0.0) for x, y in rng.uniform(0.0, 50.0, (8, 2))]
        g = complete_graph(truth)
        f = quadrilaterate(g, 0.0)
        assert len(f) == 0

    def test_coplanar_seed_rejected(self):
        truth = [
            (0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (1.0, 1.0, 0.0),
            (0.2, 0.4, 2.0),
        ]
        g = complete_graph(truth)
        with pytest.raises(DegenerateGeometryError):
            quadrilaterate_from_seed(g, (0, 1, 2, 3), 0.0)


class TestRandomDeployments:
    def make_graph(self, seed, n=100, r=50.0):
        dep = gen_random_cube(n, 100.0, np.random.default_rng(seed))
        return build_unit_ball_graph(dep, r), dep.positions

    def test_dense_noiseless_full_recall(self):
        for seed in (1, 2, 3):
            g, truth = self.make_graph(seed)
            assert g.avg_degree() >= 15.0
            f = quadrilaterate(g, 0.0)
            assert len(f) / g.n >= 0.99
            assert_congruent(f.assignments, truth, 1e-6)

    def test_anchor_quadruples_never_coplanar(self):
        g, _ = self.make_graph(5, n=60)
        f = quadrilaterate(g, 0.0)
        for node, anchor_ids in f.anchors.items():
            pts = [f.assignments[a] for a in anchor_ids]
            td = TetraDistances(
                math.dist(pts[0], pts[1]),
                math.dist(pts[0], pts[2]),
                math.dist(pts[0], pts[3]),
                math.dist(pts[1], pts[2]),
                math.dist(pts[1], pts[3]),
                math.dist(pts[2], pts[3]),
            )
            assert classify_tetra(td, 0.0).is_noncoplanar

    def test_determinism(self):
        g, _ = self.make_graph(7, n=50)
        a = quadrilaterate(g, 5.0)
        b = quadrilaterate(g, 5.0)
        assert a.assignments == b.assignments

    def test_seed_cap(self):
        g, _ = self.make_graph(9, n=40)
        assert len(quadrilaterate(g, 0.0, seed_cap=0)) == 0
        assert len(quadrilaterate(g, 0.0, seed_cap=1)) > 0

    def test_noiseless_runtime_is_sane(self):
        g, _ = self.make_graph(11)
        start = time.perf_counter()
        f = quadrilaterate(g, 0.0)
        assert time.perf_counter() - start < 10.0
        assert len(f) >= 99
