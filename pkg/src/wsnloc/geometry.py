"""Geometric kernels for range-based localization.

Everything here works either on bare pairwise distances (tetrahedron
classification via the Cayley-Menger determinant, seed placement) or on
already-assigned coordinates (circle/sphere intersection with a noise
margin, rigid local-to-global transforms).  Points are plain tuples and
all functions are pure, so they are safe to call from multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]

# Anchor triples with a smaller minimum interior angle (degrees) are
# treated as collinear and rejected.
COLLINEAR_ANGLE_DEG = 1e-6

# Absolute floor for the candidate-elimination margin, so exact
# measurements still tolerate floating-point rounding.
ABS_MARGIN = 1e-9

# Relative dead zone for tetrahedron volumes: determinants computed from
# rounded distances never come out exactly zero for coplanar points, so
# volumes below VOLUME_EPS_REL * max_distance**3 count as zero.
VOLUME_EPS_REL = 1e-7


class DegenerateGeometryError(ValueError):
    """Input distances or points admit no valid construction."""


class TetraDistances(NamedTuple):
    """The six pairwise distances among four nodes a, b, c, d."""

    d_ab: float
    d_ac: float
    d_ad: float
    d_bc: float
    d_bd: float
    d_cd: float


@dataclass(frozen=True)
class TetraClass:
    """Classification of four nodes from their pairwise distances.

    kind is one of "coplanar", "noncoplanar" or "incomplete"
    (incomplete = the distances have no Euclidean realization).
    volume is the tetrahedron volume, positive only for "noncoplanar".
    """

    kind: str
    volume: float = 0.0

    @property
    def is_coplanar(self) -> bool:
        return self.kind == "coplanar"

    @property
    def is_noncoplanar(self) -> bool:
        return self.kind == "noncoplanar"

    @property
    def is_incomplete(self) -> bool:
        return self.kind == "incomplete"


def cayley_menger_det(d: TetraDistances) -> float:
    """Cayley-Menger determinant of four nodes given pairwise distances.

    This is the determinant of the 5x5 bordered matrix

        | 0    ab^2 ac^2 ad^2 1 |
        | ab^2 0    bc^2 bd^2 1 |
        | ac^2 bc^2 0    cd^2 1 |
        | ad^2 bd^2 cd^2 0    1 |
        | 1    1    1    1    0 |

    evaluated through the algebraically identical 3x3 Gram form
    (det M = 8 * det G), which is cheaper and cancels less.
    The determinant equals 288 * V^2 for a realizable tetrahedron of
    volume V, and is negative when no realization exists.
    """
    ab2 = d.d_ab * d.d_ab
    ac2 = d.d_ac * d.d_ac
    ad2 = d.d_ad * d.d_ad
    bc2 = d.d_bc * d.d_bc
    bd2 = d.d_bd * d.d_bd
    cd2 = d.d_cd * d.d_cd
    # Gram matrix of edge vectors out of a (law of cosines).
    g12 = 0.5 * (ab2 + ac2 - bc2)
    g13 = 0.5 * (ab2 + ad2 - bd2)
    g23 = 0.5 * (ac2 + ad2 - cd2)
    det_g = (
        ab2 * (ac2 * ad2 - g23 * g23)
        - g12 * (g12 * ad2 - g23 * g13)
        + g13 * (g12 * g23 - ac2 * g13)
    )
    return 8.0 * det_g


def classify_tetra(d: TetraDistances, kappa: float) -> TetraClass:
    """Classify four nodes as coplanar / non-coplanar / incomplete.

    Volumes at or below the threshold kappa count as coplanar; a
    scale-relative epsilon absorbs floating-point noise so that exactly
    coplanar inputs classify as coplanar even at kappa = 0.
    """
    det = cayley_menger_det(d)
    v_eps = VOLUME_EPS_REL * max(d) ** 3
    det_eps = 288.0 * v_eps * v_eps
    if det < -det_eps:
        return TetraClass("incomplete")
    volume = math.sqrt(max(det, 0.0) / 288.0)
    if volume <= max(kappa, v_eps):
        return TetraClass("coplanar")
    return TetraClass("noncoplanar", volume)


def place_seed_triangle(
    r_ab: float, r_ac: float, r_bc: float
) -> tuple[Point2, Point2, Point2]:
    """Place three nodes in the plane from their pairwise distances.

    a goes to the origin, b onto the positive x-axis, and c above the
    x-axis (the positive root is always taken), so the construction is
    deterministic up to global congruence.  Raises
    DegenerateGeometryError when the distances strictly violate the
    triangle inequality; the boundary case is accepted and yields a
    collinear triple.
    """
    if not (r_ab > 0.0 and r_ac > 0.0 and r_bc > 0.0):
        raise DegenerateGeometryError("triangle distances must be positive")
    ab2 = r_ab * r_ab
    ac2 = r_ac * r_ac
    bc2 = r_bc * r_bc
    x = (ab2 - bc2 + ac2) / (2.0 * r_ab)
    disc = 4.0 * ab2 * ac2 - (ab2 - bc2 + ac2) ** 2
    if disc < -1e-12 * max(4.0 * ab2 * ac2, 1.0):
        raise DegenerateGeometryError(
            f"impossible triangle: ({r_ab}, {r_ac}, {r_bc})"
        )
    y = math.sqrt(max(disc, 0.0)) / (2.0 * r_ab)
    return (0.0, 0.0), (r_ab, 0.0), (x, y)


def place_seed_tetra(d: TetraDistances) -> tuple[Point3, Point3, Point3, Point3]:
    """Place four nodes in 3-space from their pairwise distances.

    a, b, c go onto the z = 0 plane via place_seed_triangle and d above
    it (positive z root).  Raises DegenerateGeometryError when the base
    triangle is degenerate or the six distances are inconsistent.
    """
    (_, _), (bx, _), (cx, cy) = place_seed_triangle(d.d_ab, d.d_ac, d.d_bc)
    if cy <= 1e-12 * max(1.0, d.d_ab):
        raise DegenerateGeometryError("degenerate base triangle")
    ad2 = d.d_ad * d.d_ad
    bd2 = d.d_bd * d.d_bd
    cd2 = d.d_cd * d.d_cd
    xp = (ad2 - bd2 + bx * bx) / (2.0 * bx)
    yp = (ad2 - cd2 - xp * xp + (xp - cx) ** 2 + cy * cy) / (2.0 * cy)
    z2 = ad2 - xp * xp - yp * yp
    if z2 < -1e-9:
        raise DegenerateGeometryError("inconsistent tetrahedron distances")
    z = math.sqrt(max(z2, 0.0))
    return (0.0, 0.0, 0.0), (bx, 0.0, 0.0), (cx, cy, 0.0), (xp, yp, z)


def resolve_ambiguity(p1, p2, anchor, r: float, err_mag: float):
    """Pick one of two candidate points using a distance to an anchor.

    A candidate qualifies when its distance to the anchor is within the
    margin max(r * err_mag / 100, 1e-9) of the measured distance r.
    Returns the single qualifying candidate, or None when both or
    neither qualify (the ambiguous cases).  Works in 2D and 3D alike.
    """
    margin = max(r * err_mag / 100.0, ABS_MARGIN)
    ok1 = abs(math.dist(p1, anchor) - r) <= margin
    ok2 = abs(math.dist(p2, anchor) - r) <= margin
    if ok1 and ok2:
        return None
    if ok1:
        return p1
    if ok2:
        return p2
    return None


def min_triangle_angle(a, b, c) -> float:
    """Smallest interior angle of triangle abc, in degrees (0..60].

    Accepts 2D or 3D points; coincident points give 0.
    """
    la = math.dist(b, c)
    lb = math.dist(a, c)
    lc = math.dist(a, b)
    if la <= 0.0 or lb <= 0.0 or lc <= 0.0:
        return 0.0
    # The smallest angle is opposite the shortest side.
    if la <= lb and la <= lc:
        cos_val = (lb * lb + lc * lc - la * la) / (2.0 * lb * lc)
    elif lb <= lc:
        cos_val = (la * la + lc * lc - lb * lb) / (2.0 * la * lc)
    else:
        cos_val = (la * la + lb * lb - lc * lc) / (2.0 * la * lb)
    cos_val = min(1.0, max(-1.0, cos_val))
    return math.degrees(math.acos(cos_val))


def _disc_slack(err_mag: float, *radii: float) -> float:
    # Tolerance (in squared-length units) for a slightly negative
    # intersection discriminant caused by measurement noise.
    rmax = max(radii)
    return 2.0 * (err_mag / 100.0) * rmax * rmax + ABS_MARGIN


def trilaterate_point_2d(
    anchors: Sequence[tuple[Point2, float]], err_mag: float
) -> Optional[Point2]:
    """Position a node in 2D from three anchor points and distances.

    Intersects the first two circles analytically (two mirror
    candidates) and eliminates one with the third anchor.  Returns None
    for collinear anchors, circles that miss each other beyond the
    noise margin, or an unresolved ambiguity.
    """
    (c1, r1), (c2, r2), (c3, r3) = anchors
    if min_triangle_angle(c1, c2, c3) < COLLINEAR_ANGLE_DEG:
        return None
    dx = c2[0] - c1[0]
    dy = c2[1] - c1[1]
    d = math.hypot(dx, dy)
    x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    y2 = r1 * r1 - x * x
    if y2 < 0.0:
        if -y2 > _disc_slack(err_mag, r1, r2):
            return None
        y = 0.0
    else:
        y = math.sqrt(y2)
    exx, exy = dx / d, dy / d
    bx = c1[0] + x * exx
    by = c1[1] + x * exy
    # ey is ex rotated 90 degrees counter-clockwise.
    p_hi = (bx - y * exy, by + y * exx)
    p_lo = (bx + y * exy, by - y * exx)
    if y == 0.0:
        margin = max(r3 * err_mag / 100.0, ABS_MARGIN)
        if abs(math.dist(p_hi, c3) - r3) <= margin:
            return p_hi
        return None
    return resolve_ambiguity(p_hi, p_lo, c3, r3, err_mag)


def three_sphere_candidates(
    anchors: Sequence[tuple[Point3, float]], err_mag: float
) -> Optional[tuple[Point3, Point3]]:
    """Intersect three spheres; return the two mirror candidates.

    The candidates are reflections of each other about the plane of the
    three sphere centers (they coincide when the solution lies on that
    plane).  Returns None for collinear centers or when the spheres
    miss each other beyond the noise margin.
    """
    (q1, r1), (q2, r2), (q3, r3) = anchors
    if min_triangle_angle(q1, q2, q3) < COLLINEAR_ANGLE_DEG:
        return None
    ux, uy, uz = q2[0] - q1[0], q2[1] - q1[1], q2[2] - q1[2]
    d = math.sqrt(ux * ux + uy * uy + uz * uz)
    exx, exy, exz = ux / d, uy / d, uz / d
    wx, wy, wz = q3[0] - q1[0], q3[1] - q1[1], q3[2] - q1[2]
    i = exx * wx + exy * wy + exz * wz
    vy_x, vy_y, vy_z = wx - i * exx, wy - i * exy, wz - i * exz
    j = math.sqrt(vy_x * vy_x + vy_y * vy_y + vy_z * vy_z)
    if j <= 0.0:
        return None
    eyx, eyy, eyz = vy_x / j, vy_y / j, vy_z / j
    ezx = exy * eyz - exz * eyy
    ezy = exz * eyx - exx * eyz
    ezz = exx * eyy - exy * eyx
    x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    y = (r1 * r1 - r3 * r3 + i * i + j * j) / (2.0 * j) - (i / j) * x
    z2 = r1 * r1 - x * x - y * y
    if z2 < 0.0:
        if -z2 > _disc_slack(err_mag, r1, r2, r3):
            return None
        z = 0.0
    else:
        z = math.sqrt(z2)
    bx = q1[0] + x * exx + y * eyx
    by = q1[1] + x * exy + y * eyy
    bz = q1[2] + x * exz + y * eyz
    p_hi = (bx + z * ezx, by + z * ezy, bz + z * ezz)
    p_lo = (bx - z * ezx, by - z * ezy, bz - z * ezz)
    return p_hi, p_lo


def quadrilaterate_point_3d(
    anchors: Sequence[tuple[Point3, float]], err_mag: float
) -> Optional[Point3]:
    """Position a node in 3D from four anchor points and distances.

    The first three anchors give two mirror candidates; the fourth
    eliminates one of them.  The caller is responsible for checking
    that the fourth anchor is not coplanar with the first three (an
    on-plane fourth anchor simply fails to disambiguate and the result
    is None).
    """
    cand = three_sphere_candidates(anchors[:3], err_mag)
    if cand is None:
        return None
    p_hi, p_lo = cand
    q4, r4 = anchors[3]
    if p_hi == p_lo:
        margin = max(r4 * err_mag / 100.0, ABS_MARGIN)
        if abs(math.dist(p_hi, q4) - r4) <= margin:
            return p_hi
        return None
    return resolve_ambiguity(p_hi, p_lo, q4, r4, err_mag)


@dataclass(frozen=True)
class RigidTransform:
    """Rotation plus origin pair mapping local coordinates to global ones.

    Applying the transform computes rotation @ (p - local_origin)
    + global_origin.  rotation is stored as three row tuples.
    """

    rotation: tuple[tuple[float, float, float], ...]
    local_origin: Point3
    global_origin: Point3


def _unit(vx: float, vy: float, vz: float) -> tuple[float, float, float]:
    n = math.sqrt(vx * vx + vy * vy + vz * vz)
    if n <= 0.0:
        raise DegenerateGeometryError("zero-length axis vector")
    return vx / n, vy / n, vz / n


def _frame_columns(p0: Point3, p1: Point3, ctr: Point3):
    # Orthonormal frame: x toward the first point, z normal to the
    # plane spanned with the second, y completing the frame.
    x = _unit(p0[0] - ctr[0], p0[1] - ctr[1], p0[2] - ctr[2])
    v = _unit(p1[0] - ctr[0], p1[1] - ctr[1], p1[2] - ctr[2])
    cx = x[1] * v[2] - x[2] * v[1]
    cy = x[2] * v[0] - x[0] * v[2]
    cz = x[0] * v[1] - x[1] * v[0]
    n = math.sqrt(cx * cx + cy * cy + cz * cz)
    if n < 1e-12:
        raise DegenerateGeometryError("collinear support triple")
    z = (cx / n, cy / n, cz / n)
    y = (
        x[1] * z[2] - x[2] * z[1],
        x[2] * z[0] - x[0] * z[2],
        x[0] * z[1] - x[1] * z[0],
    )
    return x, y, z


def _det3(m) -> float:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def build_transform(
    local: Sequence[Point3], global_: Sequence[Point3]
) -> RigidTransform:
    """Rigid transform mapping three local points onto three global ones.

    Both triples must be non-collinear.  The rotation is built from the
    two point-pair frames (centroid origins, x-axis toward the first
    point, z-axis normal to the triple's plane) and is always a proper
    rotation; a reflection can only arise from corrupted input and
    raises DegenerateGeometryError.
    """
    l0, l1, l2 = local
    g0, g1, g2 = global_
    cl = (
        (l0[0] + l1[0] + l2[0]) / 3.0,
        (l0[1] + l1[1] + l2[1]) / 3.0,
        (l0[2] + l1[2] + l2[2]) / 3.0,
    )
    cg = (
        (g0[0] + g1[0] + g2[0]) / 3.0,
        (g0[1] + g1[1] + g2[1]) / 3.0,
        (g0[2] + g1[2] + g2[2]) / 3.0,
    )
    xin, yin, zin = _frame_columns(l0, l1, cl)
    xout, yout, zout = _frame_columns(g0, g1, cg)
    # rotation = M_out @ M_in^T with the frame vectors as columns.
    rotation = tuple(
        tuple(
            xout[r] * xin[c] + yout[r] * yin[c] + zout[r] * zin[c]
            for c in range(3)
        )
        for r in range(3)
    )
    if abs(_det3(rotation) - 1.0) > 1e-9:
        raise DegenerateGeometryError("transform is not a proper rotation")
    return RigidTransform(rotation, cl, cg)


def apply_transform(t: RigidTransform, p: Point3) -> Point3:
    """Map a local point to global coordinates."""
    vx = p[0] - t.local_origin[0]
    vy = p[1] - t.local_origin[1]
    vz = p[2] - t.local_origin[2]
    r = t.rotation
    return (
        r[0][0] * vx + r[0][1] * vy + r[0][2] * vz + t.global_origin[0],
        r[1][0] * vx + r[1][1] * vy + r[1][2] * vz + t.global_origin[1],
        r[2][0] * vx + r[2][1] * vy + r[2][2] * vz + t.global_origin[2],
    )
