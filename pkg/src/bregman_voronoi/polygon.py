"""Planar polygon utilities: halfplane clipping with edge labels, areas and
point-in-polygon tests."""
from __future__ import annotations

import numpy as np

from .errors import ValidationError

# labels of the four clip-rectangle edges (bottom, right, top, left)
CLIP_LABELS = (-1, -2, -3, -4)


def rectangle(clip) -> tuple[np.ndarray, np.ndarray]:
    """CCW vertices of ``(xmin, ymin, xmax, ymax)`` with clip-edge labels."""
    x0, y0, x1, y1 = (float(v) for v in clip)
    if not (x1 > x0 and y1 > y0):
        raise ValidationError(f"clip rectangle {clip} is empty")
    verts = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    return verts, np.array(CLIP_LABELS)


def clip_halfplane(verts: np.ndarray, labels: np.ndarray, normal, offset: float,
                   label: int, eps: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Keep the part of a convex polygon where ``<normal, x> + offset <= 0``.

    ``labels[i]`` names the constraint supporting edge ``verts[i] -> verts[i+1]``;
    new edges created by the cut get ``label``.
    """
    if len(verts) == 0:
        return verts, labels
    normal = np.asarray(normal, dtype=float)
    vals = verts @ normal + offset
    scale = eps * (np.linalg.norm(normal) * (1 + np.abs(verts).max()) + abs(offset))
    inside = vals <= scale
    if inside.all():
        return verts, labels
    if not inside.any():
        return np.empty((0, 2)), np.empty(0, dtype=int)
    out_v, out_l = [], []
    m = len(verts)
    for i in range(m):
        j = (i + 1) % m
        s_in, e_in = inside[i], inside[j]
        if s_in:
            out_v.append(verts[i])
            out_l.append(labels[i])
        if s_in != e_in:
            t = vals[i] / (vals[i] - vals[j])
            point = verts[i] + t * (verts[j] - verts[i])
            out_v.append(point)
            out_l.append(label if s_in else labels[i])
    v = np.array(out_v)
    lab = np.array(out_l, dtype=int)
    return _dedupe(v, lab)


def _dedupe(v: np.ndarray, lab: np.ndarray, tol: float = 1e-13):
    if len(v) < 2:
        return v, lab
    keep = []
    m = len(v)
    scale = tol * (1 + np.abs(v).max())
    for i in range(m):
        nxt = v[(i + 1) % m]
        if np.linalg.norm(v[i] - nxt) > scale or m == 1:
            keep.append(i)
        # a zero-length edge is dropped; the vertex that follows carries on
    if not keep:
        return v[:1], lab[:1]
    return v[keep], lab[keep]


def area(verts) -> float:
    """Signed shoelace area (positive for CCW)."""
    v = np.asarray(verts, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def centroid(verts) -> np.ndarray:
    v = np.asarray(verts, dtype=float)
    a = area(v)
    if a == 0:
        return v.mean(axis=0)
    x, y = v[:, 0], v[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6 * a)
    cy = np.sum((y + np.roll(y, -1)) * cross) / (6 * a)
    return np.array([cx, cy])


def is_convex(verts, tol: float = 1e-12) -> bool:
    """True for a (weakly) convex CCW or CW polygon."""
    v = np.asarray(verts, dtype=float)
    if len(v) < 3:
        return True
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    scale = tol * max(1.0, float(np.abs(v).max()) ** 2)
    return bool(np.all(cross >= -scale) or np.all(cross <= scale))


def contains_convex(verts, pts, tol: float = 0.0) -> np.ndarray:
    """Vectorised test for points inside a CCW convex polygon (boundary included)."""
    v = np.asarray(verts, dtype=float)
    pts = np.asarray(pts, dtype=float)
    if len(v) < 3:
        return np.zeros(pts.shape[:-1], dtype=bool)
    ok = np.ones(pts.shape[:-1], dtype=bool)
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        cr = (b[0] - a[0]) * (pts[..., 1] - a[1]) - (b[1] - a[1]) * (pts[..., 0] - a[0])
        ok &= cr >= -tol
    return ok


def contains_evenodd(verts, pts) -> np.ndarray:
    """Even-odd rule point-in-polygon, for arbitrary simple polygons."""
    v = np.asarray(verts, dtype=float)
    pts = np.asarray(pts, dtype=float)
    px, py = pts[..., 0], pts[..., 1]
    inside = np.zeros(px.shape, dtype=bool)
    n = len(v)
    for i in range(n):
        x0, y0 = v[i]
        x1, y1 = v[(i + 1) % n]
        crosses = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (px < xint)
    return inside
