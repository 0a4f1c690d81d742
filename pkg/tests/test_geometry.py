"""Geometry kernel tests: classification, seeding, lateration, transforms."""

import math

import numpy as np
import pytest

from wsnloc.geometry import (
    DegenerateGeometryError,
    RigidTransform,
    TetraDistances,
    apply_transform,
    build_transform,
    cayley_menger_det,
    classify_tetra,
    min_triangle_angle,
    place_seed_triangle,
    place_seed_tetra,
    quadrilaterate_point_3d,
    resolve_ambiguity,
    three_sphere_candidates,
    trilaterate_point_2d,
)

SQRT2 = math.sqrt(2.0)


def tetra_from_points(pts):
    return TetraDistances(
        math.dist(pts[0], pts[1]),
        math.dist(pts[0], pts[2]),
        math.dist(pts[0], pts[3]),
        math.dist(pts[1], pts[2]),
        math.dist(pts[1], pts[3]),
        math.dist(pts[2], pts[3]),
    )


def coordinate_volume(pts):
    m = np.array([np.subtract(pts[i], pts[0]) for i in (1, 2, 3)], dtype=float)
    return abs(np.linalg.det(m)) / 6.0


def bordered_matrix_det(d):
    # Independent oracle: the literal 5x5 bordered determinant.
    ab2, ac2, ad2, bc2, bd2, cd2 = (x * x for x in d)
    m = np.array(
        [
            [0.0, ab2, ac2, ad2, 1.0],
            [ab2, 0.0, bc2, bd2, 1.0],
            [ac2, bc2, 0.0, cd2, 1.0],
            [ad2, bd2, cd2, 0.0, 1.0],
            [1.0, 1.0, 1.0, 1.0, 0.0],
        ]
    )
    return float(np.linalg.det(m))


class TestCayleyMenger:
    def test_unit_square_is_flat(self):
        d = TetraDistances(1.0, SQRT2, 1.0, 1.0, SQRT2, 1.0)
        assert abs(cayley_menger_det(d)) < 1e-9

    def test_right_tetrahedron(self):
        # Oracle: corner tetrahedron a=(0,0,0), b=(1,0,0), c=(0,1,0),
        # d=(0,0,1) has volume 1/6, so the determinant is 288*(1/6)^2 = 8.
        d = TetraDistances(1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2)
        assert cayley_menger_det(d) == pytest.approx(8.0, abs=1e-9)

    def test_unrealizable_distances_negative(self):
        d = TetraDistances(1.0, 1.0, 1.0, 1.0, 1.0, 3.0)
        assert cayley_menger_det(d) < 0.0
        assert classify_tetra(d, 0.0).is_incomplete

    def test_matches_bordered_matrix(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            pts = rng.uniform(0.0, 50.0, (4, 3))
            d = tetra_from_points(pts)
            lit = bordered_matrix_det(d)
            assert cayley_menger_det(d) == pytest.approx(
                lit, rel=1e-7, abs=1e-6
            )

    def test_volume_matches_coordinates(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            pts = rng.uniform(0.0, 1.0, (4, 3))
            d = tetra_from_points(pts)
            vol = math.sqrt(max(cayley_menger_det(d), 0.0) / 288.0)
            assert vol == pytest.approx(coordinate_volume(pts), abs=1e-7)


class TestClassify:
    def test_unit_square_coplanar_at_zero(self):
        d = TetraDistances(1.0, SQRT2, 1.0, 1.0, SQRT2, 1.0)
        assert classify_tetra(d, 0.0).is_coplanar

    def test_right_tetra_noncoplanar(self):
        d = TetraDistances(1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2)
        c = classify_tetra(d, 0.0)
        assert c.is_noncoplanar
        assert c.volume == pytest.approx(1.0 / 6.0, abs=1e-12)

    def test_threshold_flattens(self):
        d = TetraDistances(1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2)
        assert classify_tetra(d, 0.2).is_coplanar

    def test_coplanar_at_deployment_scale(self):
        # Points on a random plane inside a 100-unit cube must classify
        # as coplanar even at kappa = 0 despite float rounding.
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            e1 = np.cross(n, [1.0, 0.0, 0.0])
            if np.linalg.norm(e1) < 1e-6:
                e1 = np.cross(n, [0.0, 1.0, 0.0])
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(n, e1)
            base = rng.uniform(30.0, 70.0, 3)
            pts = [
                base + rng.uniform(-30, 30) * e1 + rng.uniform(-30, 30) * e2
                for _ in range(4)
            ]
            assert classify_tetra(tetra_from_points(pts), 0.0).is_coplanar


class TestSeedPlacement:
    def test_equilateral(self):
        a, b, c = place_seed_triangle(2.0, 2.0, 2.0)
        assert a == (0.0, 0.0)
        assert b == (2.0, 0.0)
        assert c[0] == pytest.approx(1.0)
        assert c[1] == pytest.approx(math.sqrt(3.0), abs=1e-9)

    def test_right_triangle(self):
        _, _, c = place_seed_triangle(4.0, 3.0, 5.0)
        assert c == pytest.approx((0.0, 3.0), abs=1e-9)

    def test_collinear_boundary_accepted(self):
        _, _, c = place_seed_triangle(2.0, 1.0, 1.0)
        assert c == pytest.approx((1.0, 0.0), abs=1e-9)

    def test_impossible_triangle_raises(self):
        with pytest.raises(DegenerateGeometryError):
            place_seed_triangle(10.0, 1.0, 1.0)

    def test_triangle_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            pts = rng.uniform(0.0, 100.0, (3, 2))
            r_ab = math.dist(pts[0], pts[1])
            r_ac = math.dist(pts[0], pts[2])
            r_bc = math.dist(pts[1], pts[2])
            a, b, c = place_seed_triangle(r_ab, r_ac, r_bc)
            assert math.dist(a, b) == pytest.approx(r_ab, abs=1e-9)
            assert math.dist(a, c) == pytest.approx(r_ac, abs=1e-9)
            assert math.dist(b, c) == pytest.approx(r_bc, abs=1e-9)
            assert c[1] >= 0.0

    def test_corner_tetrahedron(self):
        d = TetraDistances(1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2)
        a, b, c, dd = place_seed_tetra(d)
        assert dd == pytest.approx((0.0, 0.0, 1.0), abs=1e-9)

    def test_regular_tetrahedron(self):
        d = TetraDistances(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
        _, _, _, dd = place_seed_tetra(d)
        assert dd == pytest.approx(
            (0.5, 0.2886751345948129, 0.8164965809277260), abs=1e-7
        )

    def test_coplanar_inputs_land_on_plane(self):
        d = TetraDistances(1.0, SQRT2, 1.0, 1.0, SQRT2, 1.0)
        _, _, _, dd = place_seed_tetra(d)
        assert abs(dd[2]) < 1e-7

    def test_tetra_round_trip(self):
        rng = np.random.default_rng(13)
        n_ok = 0
        while n_ok < 300:
            pts = rng.uniform(0.0, 100.0, (4, 3))
            d = tetra_from_points(pts)
            try:
                placed = place_seed_tetra(d)
            except DegenerateGeometryError:
                continue
            n_ok += 1
            got = tetra_from_points(placed)
            for want, have in zip(d, got):
                assert have == pytest.approx(want, abs=1e-7)
            assert placed[3][2] >= 0.0

    def test_degenerate_base_raises(self):
        d = TetraDistances(2.0, 1.0, 1.0, 1.0, 1.5, 0.7)
        with pytest.raises(DegenerateGeometryError):
            place_seed_tetra(d)


class TestResolveAmbiguity:
    def test_exact_match(self):
        p = resolve_ambiguity((0, 0, 1), (0, 0, -1), (0, 0, 1), 0.0, 0.0)
        assert p == (0, 0, 1)

    def test_equidistant_anchor_is_null(self):
        # Anchor on the mirror plane: both candidates at equal distance.
        r = math.sqrt(3.0)
        assert resolve_ambiguity((0, 0, 1), (0, 0, -1), (1, 1, 0), r, 0.0) is None
        assert resolve_ambiguity((0, 0, 1), (0, 0, -1), (1, 1, 0), 5.0, 10.0) is None

    def test_margin_accepts_noisy_distance(self):
        # |2 - 2.05| <= 2.05 * 0.05 while |4 - 2.05| is far outside.
        p = resolve_ambiguity((0, 0, 1), (0, 0, -1), (0, 0, 3), 2.05, 5.0)
        assert p == (0, 0, 1)

    def test_neither_in_margin(self):
        assert resolve_ambiguity((0, 0, 1), (0, 0, -1), (0, 0, 3), 9.0, 1.0) is None

    def test_symmetry_property(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            p1 = tuple(rng.uniform(-5, 5, 3))
            mirror = (p1[0], p1[1], -p1[2])
            anchor = (rng.uniform(-5, 5), rng.uniform(-5, 5), 0.0)
            r = rng.uniform(0.0, 10.0)
            err = rng.uniform(0.0, 20.0)
            assert resolve_ambiguity(p1, mirror, anchor, r, err) is None


class TestMinTriangleAngle:
    def test_equilateral(self):
        h = math.sqrt(3.0) / 2.0
        assert min_triangle_angle((0, 0), (1, 0), (0.5, h)) == pytest.approx(60.0)

    def test_collinear(self):
        assert min_triangle_angle((0, 0), (1, 0), (2, 0)) == pytest.approx(0.0, abs=1e-6)

    def test_345(self):
        assert min_triangle_angle((0, 0), (4, 0), (0, 3)) == pytest.approx(
            36.8699, abs=1e-4
        )

    def test_coincident_points(self):
        assert min_triangle_angle((1, 2), (1, 2), (3, 4)) == 0.0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(31)
        import itertools

        for _ in range(100):
            pts = [tuple(rng.uniform(0, 10, 3)) for _ in range(3)]
            angles = {
                round(min_triangle_angle(*perm), 9)
                for perm in itertools.permutations(pts)
            }
            assert len(angles) == 1


class TestTrilateratePoint:
    def test_paper_formation_node(self):
        # Anchors are the first three nodes of the worked five-node
        # formation; the target sits at (3, 0).  The published distances
        # are truncated to five decimals, so allow a matching error
        # magnitude for the elimination margin.
        anchors = (
            ((0.0, 0.0), 3.0),
            ((0.0, 2.0), 3.60555),
            ((2.0, 3.0), 3.16227),
        )
        p = trilaterate_point_2d(anchors, 0.01)
        assert p is not None
        assert p == pytest.approx((3.0, 0.0), abs=1e-4)

    def test_exact_round_trip(self):
        target = (1.0, 1.0)
        anchors_pts = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]
        anchors = tuple((a, math.dist(a, target)) for a in anchors_pts)
        assert trilaterate_point_2d(anchors, 0.0) == pytest.approx(target, abs=1e-9)

    def test_collinear_anchors_rejected(self):
        anchors = (((0.0, 0.0), 1.0), ((1.0, 0.0), 1.0), ((2.0, 0.0), 1.5))
        assert trilaterate_point_2d(anchors, 0.0) is None

    def test_perturbed_inside_margin(self):
        # +2% on the eliminating distance stays inside the 5% margin.
        target = (3.0, 2.0)
        a1, a2, a3 = (0.0, 0.0), (10.0, 0.0), (0.0, 8.0)
        anchors = (
            (a1, math.dist(a1, target)),
            (a2, math.dist(a2, target)),
            (a3, math.dist(a3, target) * 1.02),
        )
        p = trilaterate_point_2d(anchors, 5.0)
        assert p is not None
        assert math.dist(p, target) < 1e-6

    def test_far_apart_circles_fail(self):
        anchors = (((0.0, 0.0), 1.0), ((10.0, 0.0), 1.0), ((0.0, 8.0), 1.0))
        assert trilaterate_point_2d(anchors, 0.0) is None


class TestQuadrilateratePoint:
    def test_exact_round_trip(self):
        target = (0.3, 0.3, 0.3)
        anchors_pts = [
            (0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.0, 0.0, 1.0),
        ]
        anchors = tuple((a, math.dist(a, target)) for a in anchors_pts)
        p = quadrilaterate_point_3d(anchors, 0.0)
        assert p == pytest.approx(target, abs=1e-7)

    def test_coplanar_anchors_cannot_disambiguate(self):
        target = (0.2, 0.2, 0.7)
        anchors_pts = [
            (0.0, 0.0, 0.0),
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (1.0, 1.0, 0.0),
        ]
        anchors = tuple((a, math.dist(a, target)) for a in anchors_pts)
        assert quadrilaterate_point_3d(anchors, 0.0) is None

    def test_random_recovery_property(self):
        rng = np.random.default_rng(41)
        n_ok = 0
        while n_ok < 100:
            pts = rng.uniform(0.0, 10.0, (4, 3))
            if coordinate_volume(pts) < 0.5:
                continue
            target = tuple(rng.uniform(0.0, 10.0, 3))
            anchors = tuple(
                (tuple(p), math.dist(p, target)) for p in pts
            )
            p = quadrilaterate_point_3d(anchors, 0.0)
            assert p is not None
            assert math.dist(p, target) < 1e-6
            n_ok += 1

    def test_sphere_candidates_are_mirrors(self):
        pts = [(0.0, 0.0, 0.0), (4.0, 0.0, 0.0), (0.0, 4.0, 0.0)]
        target = (1.0, 1.0, 2.0)
        anchors = tuple((p, math.dist(p, target)) for p in pts)
        hi, lo = three_sphere_candidates(anchors, 0.0)
        assert hi == pytest.approx((1.0, 1.0, 2.0), abs=1e-9)
        assert lo == pytest.approx((1.0, 1.0, -2.0), abs=1e-9)


class TestRigidTransform:
    def test_identity(self):
        tri = [(0.0, 0.0, 0.0), (3.0, 0.0, 0.0), (0.0, 2.0, 0.0)]
        t = build_transform(tri, tri)
        for i in range(3):
            for j in range(3):
                want = 1.0 if i == j else 0.0
                assert t.rotation[i][j] == pytest.approx(want, abs=1e-12)
        assert apply_transform(t, (1.0, 2.0, 3.0)) == pytest.approx((1.0, 2.0, 3.0))

    def test_pure_translation(self):
        tri = [(0.0, 0.0, 0.0), (3.0, 0.0, 0.0), (0.0, 2.0, 0.0)]
        shifted = [(x + 5.0, y - 2.0, z + 7.0) for x, y, z in tri]
        t = build_transform(tri, shifted)
        for i in range(3):
            for j in range(3):
                want = 1.0 if i == j else 0.0
                assert t.rotation[i][j] == pytest.approx(want, abs=1e-9)
        delta = tuple(
            g - l for g, l in zip(t.global_origin, t.local_origin)
        )
        assert delta == pytest.approx((5.0, -2.0, 7.0), abs=1e-9)

    def test_recovers_z_rotation(self):
        tri = [(1.0, 0.0, 0.0), (0.0, 2.0, 0.0), (-1.0, -1.0, 0.0)]
        ctr = tuple(sum(c) / 3.0 for c in zip(*tri))
        rot90 = lambda p: (
            ctr[0] - (p[1] - ctr[1]),
            ctr[1] + (p[0] - ctr[0]),
            p[2],
        )
        t = build_transform(tri, [rot90(p) for p in tri])
        want = ((0.0, -1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
        for i in range(3):
            for j in range(3):
                assert t.rotation[i][j] == pytest.approx(want[i][j], abs=1e-9)

    def test_support_points_map_exactly(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            local = [tuple(p) for p in rng.uniform(0, 50, (3, 3))]
            angle = rng.uniform(0, 2 * math.pi)
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            k = np.array(
                [
                    [0, -axis[2], axis[1]],
                    [axis[2], 0, -axis[0]],
                    [-axis[1], axis[0], 0],
                ]
            )
            rot = np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)
            shift = rng.uniform(-50, 50, 3)
            glob = [tuple(rot @ np.array(p) + shift) for p in local]
            if min_triangle_angle(*local) < 1.0:
                continue
            t = build_transform(local, glob)
            for lp, gp in zip(local, glob):
                assert math.dist(apply_transform(t, lp), gp) < 1e-7

    def test_isometry_property(self):
        rng = np.random.default_rng(47)
        local = [(0.0, 0.0, 0.0), (10.0, 0.0, 0.0), (3.0, 8.0, 0.0)]
        glob = [(5.0, 5.0, 5.0), (5.0, 15.0, 5.0), (5.0, 8.0, 13.0)]
        t = build_transform(local, glob)
        pts = [tuple(p) for p in rng.uniform(-20, 20, (20, 3))]
        mapped = [apply_transform(t, p) for p in pts]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                assert math.dist(mapped[i], mapped[j]) == pytest.approx(
                    math.dist(pts[i], pts[j]), abs=1e-7
                )

    def test_coplanar_local_stays_on_global_plane(self):
        local = [(0.0, 0.0, 0.0), (6.0, 0.0, 0.0), (1.0, 4.0, 0.0)]
        glob = [(10.0, 0.0, 3.0), (10.0, 6.0, 3.0), (10.0 + 4.0, 1.0, 3.0)]
        # Global triple lies on a plane; map z=0 points and check
        # plane membership via the scalar triple product.
        glob = [(0.0, 0.0, 1.0), (0.0, 6.0, 1.0), (4.0, 1.0, 1.0)]
        t = build_transform(local, glob)
        g0 = np.array(glob[0])
        u = np.array(glob[1]) - g0
        v = np.array(glob[2]) - g0
        rng = np.random.default_rng(53)
        for _ in range(50):
            p = (rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0)
            w = np.array(apply_transform(t, p)) - g0
            assert abs(np.dot(np.cross(u, v), w)) / np.linalg.norm(
                np.cross(u, v)
            ) < 1e-7

    def test_collinear_triple_raises(self):
        line = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.0, 0.0)]
        tri = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        with pytest.raises(DegenerateGeometryError):
            build_transform(line, tri)
        with pytest.raises(DegenerateGeometryError):
            build_transform(tri, line)
