"""Evaluation of localization results against ground truth.

Estimated formations live in an arbitrary seed frame (and, for
cluster-based localization, possibly a mirror image of the truth), so
offsets are measured after a least-squares rigid alignment that is
allowed to include one reflection.  Flips are counted per node against
the recorded anchors: a node flipped if its aligned estimate falls on
the other side of any anchor line (2D) or anchor plane (3D) than its
true position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

# Side-of-boundary values closer to zero than this are treated as "on
# the boundary" and never counted as flips.
BOUNDARY_EPS = 1e-9


@dataclass(frozen=True)
class Alignment:
    """Rigid map est -> truth: rotation (optionally improper) + shift."""

    rotation: np.ndarray
    translation: np.ndarray
    mirrored: bool

    def apply(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation


@dataclass(frozen=True)
class EvalReport:
    """Recall, post-alignment offset and flip count for one formation."""

    recall_pct: float
    avg_offset: Optional[float]
    flips: Optional[int]
    aligned: bool


def recall(formation_size: int, n: int) -> float:
    """Localized share of the network, in percent."""
    if n <= 0:
        raise ValueError("graph must have nodes")
    return 100.0 * formation_size / n


def _kabsch(x: np.ndarray, y: np.ndarray, force_improper: bool) -> np.ndarray:
    h = x.T @ y
    u, _, vt = np.linalg.svd(h)
    det = np.linalg.det(vt.T @ u.T)
    d = np.ones(x.shape[1])
    if force_improper == (det > 0.0):
        d[-1] = -1.0
    return vt.T @ np.diag(d) @ u.T


def align(
    est: Mapping[int, Sequence[float]], truth: Sequence[Sequence[float]]
) -> Optional[Alignment]:
    """Least-squares rigid alignment of an estimate onto ground truth.

    Solved twice, once proper and once with a reflection, keeping the
    better fit (the proper one on ties).  Returns None when the common
    nodes are too few or too degenerate to pin the alignment down
    (fewer than 3 nodes, or a collinear 3D point set).
    """
    nodes = sorted(est)
    if len(nodes) < 3:
        return None
    x = np.array([est[v] for v in nodes], dtype=float)
    y = np.array([[truth[v][d] for d in range(x.shape[1])] for v in nodes])
    cx = x.mean(axis=0)
    cy = y.mean(axis=0)
    xc = x - cx
    yc = y - cy
    if x.shape[1] == 3:
        svals = np.linalg.svd(yc, compute_uv=False)
        if svals[1] < 1e-9 * max(svals[0], 1.0):
            return None  # collinear truth leaves a free rotation
    candidates = []
    for mirrored in (False, True):
        rot = _kabsch(xc, yc, force_improper=mirrored)
        resid = float(np.linalg.norm(xc @ rot.T - yc))
        candidates.append((resid, mirrored, rot))
    candidates.sort(key=lambda t: (t[0], t[1]))
    resid, mirrored, rot = candidates[0]
    return Alignment(rot, cy - rot @ cx, mirrored)


def avg_offset(
    est: Mapping[int, Sequence[float]],
    truth: Sequence[Sequence[float]],
    alignment: Optional[Alignment] = None,
) -> Optional[float]:
    """Mean distance between aligned estimates and truth, per node."""
    if alignment is None:
        alignment = align(est, truth)
        if alignment is None:
            return None
    total = 0.0
    for v, p in est.items():
        mapped = alignment.apply(p)
        total += math.dist(mapped, truth[v][: len(p)])
    return total / len(est)


def _side_signs_2d(point, anchor_pts):
    signs = []
    for i in range(3):
        ax, ay = anchor_pts[i][0], anchor_pts[i][1]
        bx, by = anchor_pts[(i + 1) % 3][0], anchor_pts[(i + 1) % 3][1]
        value = (bx - ax) * (point[1] - ay) - (by - ay) * (point[0] - ax)
        signs.append(0 if abs(value) <= BOUNDARY_EPS else (1 if value > 0 else -1))
    return signs


def _side_signs_3d(point, anchor_pts):
    signs = []
    p = np.asarray(point, dtype=float)
    pts = [np.asarray(a, dtype=float) for a in anchor_pts]
    for skip in range(4):
        tri = [pts[i] for i in range(4) if i != skip]
        normal = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        value = float(normal @ (p - tri[0]))
        signs.append(0 if abs(value) <= BOUNDARY_EPS else (1 if value > 0 else -1))
    return signs


def flip_count(
    est: Mapping[int, Sequence[float]],
    truth: Sequence[Sequence[float]],
    anchors_used: Mapping[int, Sequence[int]],
    alignment: Optional[Alignment] = None,
) -> Optional[int]:
    """Nodes whose aligned estimate landed in a different anchor region.

    The three anchor pair lines (2D) or four anchor triple planes (3D)
    carve space into topological regions; a node counts as flipped when
    any region sign of its aligned estimate contradicts the sign of its
    true position, both evaluated against the true anchor positions.
    Boundary signs match anything.
    """
    if not anchors_used:
        return 0
    if alignment is None:
        alignment = align(est, truth)
        if alignment is None:
            return None
    flips = 0
    for node, anchor_ids in anchors_used.items():
        if node not in est:
            continue
        dim = len(est[node])
        anchor_pts = [truth[a][:dim] for a in anchor_ids]
        mapped = alignment.apply(est[node])
        if dim == 2:
            s_est = _side_signs_2d(mapped, anchor_pts)
            s_true = _side_signs_2d(truth[node][:2], anchor_pts)
        else:
            s_est = _side_signs_3d(mapped, anchor_pts)
            s_true = _side_signs_3d(truth[node][:3], anchor_pts)
        if any(a * b < 0 for a, b in zip(s_est, s_true)):
            flips += 1
    return flips


def evaluate(
    assignments: Mapping[int, Sequence[float]],
    truth: Sequence[Sequence[float]],
    n: int,
    anchors_used: Optional[Mapping[int, Sequence[int]]] = None,
) -> EvalReport:
    """Full report for one formation: recall, offset and flips."""
    rec = recall(len(assignments), n)
    if not assignments:
        return EvalReport(rec, None, None, False)
    alignment = align(assignments, truth)
    if alignment is None:
        return EvalReport(rec, None, None, False)
    offset = avg_offset(assignments, truth, alignment)
    flips = flip_count(assignments, truth, anchors_used or {}, alignment)
    return EvalReport(rec, offset, flips, True)
