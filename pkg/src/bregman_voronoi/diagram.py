"""Bregman Voronoi diagrams in the plane.

Exact constructions clip a rectangle by affine bisectors (first type,
weighted, k-order) or by bisectors in gradient space (second type).  The
raster oracle labels every pixel by brute-force minimisation of the
divergence and works for every diagram kind in any dimension sliced to 2D.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import divergence as dv
from . import polygon as pg
from .divergence import Generator
from .errors import (
    DegenerateSites,
    DomainError,
    NumericalError,
    TooManySubsets,
    ValidationError,
)

EDGE_SAMPLES = 32
MAX_ENUMERATED_SITES = 14
MIN_SITE_GAP = 1e-9


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class PowerBall:
    center: np.ndarray
    squared_radius: float

    def power(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.sum((x - self.center) ** 2, axis=-1) - self.squared_radius


@dataclass
class Cell:
    """One diagram cell.

    ``polygon`` is CCW.  ``edge_labels[i]`` names what bounds the edge from
    vertex ``i`` to ``i + 1``: a neighbouring cell index (>= 0) or a clip
    edge (-1 bottom, -2 right, -3 top, -4 left).  Curved cells carry a
    densely sampled boundary and keep the straight polygon they come from
    in ``gradient_polygon``.
    """

    key: object
    polygon: np.ndarray
    edge_labels: np.ndarray
    bounded: bool
    curved: bool = False
    gradient_polygon: Optional[np.ndarray] = None

    @property
    def area(self) -> float:
        return pg.area(self.polygon)


@dataclass
class PlanarDiagram:
    kind: str
    generator: Generator
    sites: np.ndarray
    clip: tuple
    cells: list
    weights: Optional[np.ndarray] = None
    k: Optional[int] = None
    edge_samples: int = EDGE_SAMPLES

    def cell_of(self, key):
        for c in self.cells:
            if c.key == key:
                return c
        return None

    def adjacency(self) -> set:
        """Pairs of cell keys sharing an edge of positive length."""
        out = set()
        for c in self.cells:
            v = c.polygon
            for i, lab in enumerate(c.edge_labels):
                if lab < 0:
                    continue
                if np.linalg.norm(v[(i + 1) % len(v)] - v[i]) <= 1e-12:
                    continue
                other = self.cells[lab].key
                out.add(tuple(sorted((c.key, other), key=repr)))
        return out


@dataclass
class RasterLabels:
    """Grid of winning cell labels; ``keys[label]`` is the site id or subset.

    Row 0 is the top of the clip rectangle; -1 marks pixels outside the domain.
    """

    labels: np.ndarray
    clip: tuple
    mode: str
    keys: list

    @property
    def shape(self):
        return self.labels.shape


def pixel_centers(clip, resolution) -> np.ndarray:
    """``(H, W, 2)`` array of pixel centres; pixel (0, 0) is the top-left."""
    w, h = _res(resolution)
    x0, y0, x1, y1 = (float(v) for v in clip)
    xs = x0 + (np.arange(w) + 0.5) * (x1 - x0) / w
    ys = y1 - (np.arange(h) + 0.5) * (y1 - y0) / h
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X, Y], axis=-1)


def _res(resolution):
    if np.ndim(resolution) == 0:
        w = h = int(resolution)
    else:
        w, h = (int(v) for v in resolution)
    if w < 1 or h < 1 or w * h > 4096 * 4096:
        raise ValidationError(f"resolution {resolution} outside 1..4096^2")
    return w, h


# ---------------------------------------------------------------------------
# validation


def validate_sites(gen: Generator, sites) -> np.ndarray:
    s = np.atleast_2d(np.asarray(sites, dtype=float))
    if s.shape[-1] != gen.dim:
        raise ValidationError(f"sites have dimension {s.shape[-1]}, generator {gen.dim}")
    if len(s) == 0:
        raise ValidationError("no sites given")
    dv.check_domain(gen, s, "site")
    if len(s) > 1:
        from scipy.spatial import cKDTree

        dist, _ = cKDTree(s).query(s, k=2)
        if dist[:, 1].min() <= MIN_SITE_GAP:
            raise DegenerateSites("duplicate (or nearly coincident) sites")
    return s


def validate_clip(gen: Generator, clip) -> tuple:
    clip = tuple(float(v) for v in clip)
    if len(clip) != 4:
        raise ValidationError("clip must be xmin,ymin,xmax,ymax")
    verts, _ = pg.rectangle(clip)
    if gen.dim != 2:
        raise ValidationError("exact planar diagrams need a 2D generator")
    if not np.all(gen.domain.contains(verts)):
        raise DomainError(f"clip rectangle {clip} is not strictly inside the domain "
                          f"{gen.domain.to_dict()}")
    return clip


# ---------------------------------------------------------------------------
# power diagram correspondence


def site_constants(gen: Generator, sites: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients ``p'`` and constants ``F(p) - <p, p'>``.

    ``D(x || p) = F(x) - <x, p'> - (F(p) - <p, p'>)``, so each site acts on
    ``x`` through an affine score.
    """
    grads = gen.grad(sites)
    return grads, gen.f(sites) - np.sum(sites * grads, axis=-1)


def to_power_balls(gen: Generator, sites) -> list:
    """Power balls whose power diagram is the first-type Bregman diagram."""
    s = dv.check_domain(gen, np.atleast_2d(np.asarray(sites, dtype=float)), "site")
    grads, const = site_constants(gen, s)
    r2 = np.sum(grads * grads, axis=-1) + 2 * const
    return [PowerBall(g, float(r)) for g, r in zip(grads, r2)]


# ---------------------------------------------------------------------------
# affine cells: cell i = argmin_i (-<x, a_i> + b_i)


def _affine_cell(i, a, b, verts, labels, candidates=None):
    others = range(len(a)) if candidates is None else candidates
    for j in others:
        if j == i:
            continue
        # s_i - s_j <= 0  <=>  <x, a_j - a_i> + b_i - b_j <= 0
        verts, labels = pg.clip_halfplane(verts, labels, a[j] - a[i], b[i] - b[j], j)
        if len(verts) == 0:
            break
    return verts, labels


def _affine_cells(a: np.ndarray, b: np.ndarray, clip) -> list:
    rect, rlab = pg.rectangle(clip)
    out = []
    for i in range(len(a)):
        v, lab = _affine_cell(i, a, b, rect, rlab)
        out.append((v, lab))
    return out


def _make_cells(raw, keys, curved=False) -> list:
    cells = []
    for (v, lab), key in zip(raw, keys):
        bounded = bool(len(v) >= 3 and np.all(lab >= 0))
        cells.append(Cell(key, v, lab, bounded, curved))
    return cells


def first_type_diagram_2d(gen: Generator, sites, clip) -> PlanarDiagram:
    """Cells ``{x : D(x||p_i) <= D(x||p_j) for all j}`` clipped to ``clip``."""
    s = validate_sites(gen, sites)
    clip = validate_clip(gen, clip)
    grads, const = site_constants(gen, s)
    raw = _affine_cells(grads, -const, clip)
    return PlanarDiagram("first", gen, s, clip, _make_cells(raw, list(range(len(s)))))


def weighted_first_type_diagram_2d(gen: Generator, sites, weights, clip) -> PlanarDiagram:
    """Cells of ``D(x||p_i) + w_i``; some cells may be empty (zero vertices)."""
    s = validate_sites(gen, sites)
    clip = validate_clip(gen, clip)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if len(w) != len(s):
        raise ValidationError("one weight per site is required")
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    grads, const = site_constants(gen, s)
    raw = _affine_cells(grads, w - const, clip)
    return PlanarDiagram("weighted", gen, s, clip, _make_cells(raw, list(range(len(s)))),
                         weights=w)


def weighted_bisector(gen: Generator, p, q, wp: float, wq: float):
    """Hyperplane evaluating ``D(x||p) + wp - D(x||q) - wq``."""
    from .geom_core import Hyperplane, bisector_first_type

    h = bisector_first_type(gen, p, q)
    return Hyperplane(h.normal, h.offset + float(wp) - float(wq))


def second_type_diagram_2d(gen: Generator, sites, clip,
                           edge_samples: int = EDGE_SAMPLES) -> PlanarDiagram:
    """Cells ``{x : D(p_i||x) <= D(p_j||x)}``.

    In gradient coordinates this is the first-type diagram of the conjugate
    on the gradient sites; it is built there, clipped to the bounding box of
    ``grad(clip)``, and each straight edge is mapped back through the inverse
    gradient with ``edge_samples`` points.
    """
    s = validate_sites(gen, sites)
    clip = validate_clip(gen, clip)
    if edge_samples < 2:
        raise ValidationError("edge_samples must be at least 2")
    dual = dv.dual_generator(gen)
    rect, _ = pg.rectangle(clip)
    # the image of the rectangle is bounded by the images of its edges
    t = np.linspace(0, 1, 257)[:, None]
    border = np.concatenate([rect[i] + t * (rect[(i + 1) % 4] - rect[i]) for i in range(4)])
    gb = gen.grad(border)
    gclip = (gb[:, 0].min(), gb[:, 1].min(), gb[:, 0].max(), gb[:, 1].max())
    gsites = gen.grad(s)
    inner = first_type_diagram_2d(dual, gsites, gclip)
    cells = []
    for c in inner.cells:
        if len(c.polygon) < 3:
            cells.append(Cell(c.key, np.empty((0, 2)), np.empty(0, int), False, True,
                              c.polygon))
            continue
        curve, labs = _map_back(gen, c.polygon, c.edge_labels, edge_samples)
        cells.append(Cell(c.key, curve, labs, c.bounded, True, c.polygon))
    return PlanarDiagram("second", gen, s, clip, cells, edge_samples=edge_samples)


def _map_back(gen, gpoly, labels, samples):
    t = np.linspace(0.0, 1.0, samples, endpoint=False)[:, None]
    pts, labs = [], []
    m = len(gpoly)
    for i in range(m):
        a, b = gpoly[i], gpoly[(i + 1) % m]
        pts.append(a + t * (b - a))
        labs.append(np.full(samples, labels[i]))
    with np.errstate(all="ignore"):
        curve = gen.inv_grad(np.concatenate(pts))
    if not np.all(np.isfinite(curve)):
        raise NumericalError("inverse gradient failed on a cell boundary")
    return curve, np.concatenate(labs)


# ---------------------------------------------------------------------------
# k-order diagrams


def k_order_centers(gen: Generator, sites: np.ndarray, subset) -> tuple[np.ndarray, float]:
    """Centre ``c_S = inv_grad(mean p'_j)`` and weight ``w_S`` of a k-subset.

    The weight is derived from the identity ``(1/k) sum_j D(x||p_j) =
    D(x||c_S) + w_S``: it is evaluated at the clip-independent probe point
    ``c_S`` itself (where ``D(c_S||c_S) = 0``) and checked for constancy at
    ten further points.
    """
    idx = list(subset)
    pts = sites[idx]
    cg = gen.grad(pts).mean(axis=0)
    c = gen.inv_grad(cg)
    dv.check_domain(gen, c, "k-order centre")

    def mean_div(x):
        return np.mean(dv.divergence_unchecked(gen, x[..., None, :], pts), axis=-1)

    w = float(mean_div(c))
    probes = _probe_points(gen, pts, c)
    resid = mean_div(probes) - dv.divergence_unchecked(gen, probes, c) - w
    scale = 1.0 + np.abs(mean_div(probes))
    if np.max(np.abs(resid) / scale) > 1e-7:
        raise NumericalError("k-order weight is not constant; generator inconsistency")
    return c, w


def _probe_points(gen, pts, c):
    lo = np.minimum(pts.min(axis=0), c)
    hi = np.maximum(pts.max(axis=0), c)
    t = (np.arange(1, 11) / 11.0)[:, None]
    u = np.stack([t[:, 0], 1 - t[:, 0] ** 2], axis=-1) if gen.dim == 2 else t
    return lo + u * (hi - lo)


def k_order_weight_closed_form(gen: Generator, sites: np.ndarray, subset) -> float:
    """``F(c) - <c, c'> - (1/k) sum_j (F(p_j) - <p_j, p_j'>)``."""
    pts = sites[list(subset)]
    cg = gen.grad(pts).mean(axis=0)
    c = gen.inv_grad(cg)
    _, const = site_constants(gen, pts)
    return float(gen.f(c) - c @ cg - const.mean())


def k_order_diagram_2d(gen: Generator, sites, k: int, clip, method: str = "auto") -> PlanarDiagram:
    """Cells labelled by the ``k`` nearest sites (sorted index tuples).

    The diagram is the weighted diagram of the centres ``c_S`` with weights
    ``w_S``.  A subset cell is bounded by the weighted bisectors against the
    single-swap neighbours ``S - {i} + {j}``; those coincide with the site
    bisectors ``D(x||p_i) = D(x||p_j)`` and characterise the cell exactly.

    ``method='enumerate'`` tries all subsets (``n <= 14``);
    ``'walk'`` explores cells by adjacency from the cell of the clip centre;
    ``'auto'`` picks enumeration for small ``n``.
    """
    s = validate_sites(gen, sites)
    clip = validate_clip(gen, clip)
    n = len(s)
    k = int(k)
    if not 1 <= k < n:
        raise ValidationError(f"k must satisfy 1 <= k < n = {n}")
    if method == "auto":
        method = "enumerate" if n <= MAX_ENUMERATED_SITES else "walk"
    if method == "enumerate" and n > MAX_ENUMERATED_SITES:
        raise TooManySubsets(f"subset enumeration supports n <= {MAX_ENUMERATED_SITES}, got {n}")
    if method not in ("enumerate", "walk"):
        raise ValidationError(f"unknown k-order method {method!r}")

    cache = {}

    def center(S):
        if S not in cache:
            cache[S] = k_order_centers(gen, s, S)
        return cache[S]

    rect, rlab = pg.rectangle(clip)

    def build(S):
        cS, wS = center(S)
        a_S = gen.grad(cS)
        b_S = wS - float(gen.f(cS) - cS @ a_S)
        verts, labels = rect, rlab
        inside = [i for i in S]
        outside = [j for j in range(n) if j not in S]
        for i in inside:
            for j in outside:
                T = tuple(sorted(set(S) - {i} | {j}))
                cT, wT = center(T)
                a_T = gen.grad(cT)
                b_T = wT - float(gen.f(cT) - cT @ a_T)
                verts, labels = pg.clip_halfplane(verts, labels, a_T - a_S, b_S - b_T,
                                                  i * n + j)
                if len(verts) == 0:
                    return verts, labels
        return verts, labels

    found = {}
    if method == "enumerate":
        for S in itertools.combinations(range(n), k):
            v, lab = build(S)
            if len(v) >= 3 and pg.area(v) > 0:
                found[S] = (v, lab)
    else:
        x0 = np.array([(clip[0] + clip[2]) / 2, (clip[1] + clip[3]) / 2])
        d0 = dv.divergence_unchecked(gen, x0, s)
        start = tuple(sorted(np.lexsort((np.arange(n), d0))[:k].tolist()))
        queue = [start]
        seen = {start}
        while queue:
            S = queue.pop()
            v, lab = build(S)
            if len(v) < 3 or pg.area(v) <= 0:
                continue
            found[S] = (v, lab)
            for code in set(lab.tolist()):
                if code < 0:
                    continue
                i, j = divmod(code, n)
                T = tuple(sorted(set(S) - {i} | {j}))
                if T not in seen:
                    seen.add(T)
                    queue.append(T)
    keys = sorted(found)
    index = {S: m for m, S in enumerate(keys)}
    cells = []
    for S in keys:
        v, lab = found[S]
        new = lab.copy()
        for m, code in enumerate(lab):
            if code >= 0:
                i, j = divmod(int(code), n)
                T = tuple(sorted(set(S) - {i} | {j}))
                new[m] = index.get(T, -5)
        cells.append(Cell(S, v, new, bool(np.all(new >= 0)), False))
    return PlanarDiagram("k_order", gen, s, clip, cells, k=k)


# ---------------------------------------------------------------------------
# k-bag bisectors


def kbag_divergence(gens: Sequence[Generator], alpha, x, p) -> np.ndarray:
    """``D_{F_alpha}(x||p)`` for ``F_alpha = sum_m alpha_m F_m``."""
    alpha = np.asarray(alpha, dtype=float)
    return sum(a * dv.divergence_unchecked(g, x, p) for a, g in zip(alpha, gens))


def kbag_bisector_value(gens, alpha_i, alpha_j, p_i, p_j, x) -> np.ndarray:
    """Implicit function whose zero set is the k-bag bisector of two sites."""
    return kbag_divergence(gens, alpha_i, x, p_i) - kbag_divergence(gens, alpha_j, x, p_j)


# ---------------------------------------------------------------------------
# raster oracle


def _threads() -> int:
    raw = os.environ.get("BVD_THREADS", "0")
    try:
        t = int(raw)
    except ValueError:
        raise ValidationError(f"BVD_THREADS must be an integer, got {raw!r}") from None
    if t <= 0:
        t = os.cpu_count() or 1
    return max(1, t)


def _domain_mask(gens, x):
    ok = np.ones(x.shape[:-1], dtype=bool)
    for g in gens:
        ok &= g.domain.contains(x)
    return ok


def raster_diagram(gen, sites, mode: str, clip, resolution=512, weights=None, k=None,
                   alphas=None) -> RasterLabels:
    """Brute-force per-pixel argmin of the selected objective.

    Modes: ``first`` D(x||p_i), ``second`` D(p_i||x), ``symmetrized``,
    ``weighted`` D(x||p_i) + w_i, ``k_order`` (label = k-nearest subset) and
    ``k_bag`` (``gen`` is a list of base generators, ``alphas`` one weight
    vector per site).  Ties go to the lowest index; pixels outside the
    domain are labelled -1.  The work is split over row blocks (``BVD_THREADS``)
    and does not depend on the split.
    """
    if mode == "k_bag":
        gens = list(gen)
        if alphas is None:
            raise ValidationError("k_bag mode needs per-site alpha vectors")
        alphas = np.asarray(alphas, dtype=float)
        dim = gens[0].dim
    else:
        gens = [gen]
        dim = gen.dim
    s = np.atleast_2d(np.asarray(sites, dtype=float))
    if s.shape[-1] != dim:
        raise ValidationError("site dimension does not match the generator")
    for g in gens:
        dv.check_domain(g, s, "site")
    if dim != 2:
        raise ValidationError("raster_diagram samples a planar grid; use a 2D generator")
    n = len(s)
    if mode == "weighted":
        if weights is None or len(weights) != n:
            raise ValidationError("weighted mode needs one weight per site")
        weights = np.asarray(weights, dtype=float)
    if mode == "k_order":
        if k is None or not 1 <= int(k) < max(n, 2):
            raise ValidationError("k_order mode needs 1 <= k < n")
        k = int(k)
    if mode == "k_bag" and alphas.shape != (n, len(gens)):
        raise ValidationError("alphas must have shape (n_sites, n_generators)")
    if mode not in ("first", "second", "symmetrized", "weighted", "k_order", "k_bag"):
        raise ValidationError(f"unknown raster mode {mode!r}")

    grid = pixel_centers(clip, resolution)
    H, W = grid.shape[:2]
    labels = np.full((H, W), -1, dtype=np.int64)
    subset_rows = np.full((H, W, k or 1), -1, dtype=np.int64) if mode == "k_order" else None
    g0 = gens[0]

    def objective(x):
        xe = x[:, None, :]
        with np.errstate(all="ignore"):
            if mode == "first":
                return dv.divergence_unchecked(g0, xe, s)
            if mode == "weighted":
                return dv.divergence_unchecked(g0, xe, s) + weights
            if mode == "k_order":
                return dv.divergence_unchecked(g0, xe, s)
            if mode == "second":
                return dv.divergence_unchecked(g0, s, xe)
            if mode == "symmetrized":
                return 0.5 * np.sum((xe - s) * (g0.grad(xe) - g0.grad(s)), axis=-1)
            return sum(alphas[:, m] * dv.divergence_unchecked(gm, xe, s)
                       for m, gm in enumerate(gens))

    def work(r0, r1):
        x = grid[r0:r1].reshape(-1, 2)
        ok = _domain_mask(gens, x)
        lab = np.full(len(x), -1, dtype=np.int64)
        if ok.any():
            val = objective(x[ok])
            if mode == "k_order":
                order = np.argsort(val, axis=1, kind="stable")[:, :k]
                subset_rows[r0:r1].reshape(-1, k)[ok] = np.sort(order, axis=1)
            else:
                lab[ok] = np.argmin(val, axis=1)
        labels[r0:r1] = lab.reshape(r1 - r0, W)

    rows_per = max(1, (1 << 16) // max(W * n, 1))
    blocks = [(r, min(H, r + rows_per)) for r in range(0, H, rows_per)]
    nt = _threads()
    if nt == 1 or len(blocks) == 1:
        for b in blocks:
            work(*b)
    else:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            list(ex.map(lambda b: work(*b), blocks))

    keys = list(range(n))
    if mode == "k_order":
        flat = subset_rows.reshape(-1, k)
        valid = flat[:, 0] >= 0
        uniq, inv = np.unique(flat[valid], axis=0, return_inverse=True)
        lab = np.full(len(flat), -1, dtype=np.int64)
        lab[valid] = inv.reshape(-1)
        labels = lab.reshape(H, W)
        keys = [tuple(int(v) for v in row) for row in uniq]
    return RasterLabels(labels, tuple(float(v) for v in clip), mode, keys)


def rasterize_diagram(diagram: PlanarDiagram, resolution=512) -> tuple[RasterLabels, np.ndarray]:
    """Pixel labels implied by the exact cells, plus how many cells claim each pixel.

    Convex straight cells use a halfplane test; curved cells use the
    even-odd rule on their sampled boundary.
    """
    grid = pixel_centers(diagram.clip, resolution)
    H, W = grid.shape[:2]
    labels = np.full((H, W), -1, dtype=np.int64)
    claims = np.zeros((H, W), dtype=np.int64)
    x0, y0, x1, y1 = diagram.clip
    for m, c in enumerate(diagram.cells):
        if len(c.polygon) < 3:
            continue
        lo = c.polygon.min(axis=0)
        hi = c.polygon.max(axis=0)
        cols = np.nonzero((grid[0, :, 0] >= lo[0]) & (grid[0, :, 0] <= hi[0]))[0]
        rows = np.nonzero((grid[:, 0, 1] >= lo[1]) & (grid[:, 0, 1] <= hi[1]))[0]
        if len(cols) == 0 or len(rows) == 0:
            continue
        sub = grid[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        if c.curved:
            inside = pg.contains_evenodd(c.polygon, sub)
        else:
            inside = pg.contains_convex(c.polygon, sub)
        view_l = labels[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        view_c = claims[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        view_l[inside & (view_c == 0)] = m
        view_c[inside] += 1
    keys = [c.key for c in diagram.cells]
    return RasterLabels(labels, diagram.clip, diagram.kind, keys), claims


def boundary_band(labels: np.ndarray) -> np.ndarray:
    """Pixels whose label differs from any of their 8 neighbours."""
    band = np.zeros(labels.shape, dtype=bool)
    H, W = labels.shape
    pad = np.pad(labels, 1, mode="edge")
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            band |= pad[1 + dy:1 + dy + H, 1 + dx:1 + dx + W] != labels
    return band


@dataclass
class Agreement:
    agreement: float
    coverage: float
    compared: int

    def ok(self, threshold: float = 0.995) -> bool:
        return self.agreement >= threshold and self.coverage >= threshold


def compare_labels(exact: RasterLabels, oracle: RasterLabels,
                   claims: Optional[np.ndarray] = None) -> Agreement:
    """Fraction of non-boundary, in-domain pixels where both label sets name
    the same cell key; ``coverage`` is the fraction claimed by exactly one cell."""
    if exact.shape != oracle.shape:
        raise ValidationError("raster shapes differ")
    band = boundary_band(oracle.labels)
    use = ~band & (oracle.labels >= 0)
    okeys = np.array([repr(k) for k in oracle.keys] + ["<none>"], dtype=object)
    ekeys = np.array([repr(k) for k in exact.keys] + ["<none>"], dtype=object)
    o = okeys[np.where(oracle.labels >= 0, oracle.labels, len(oracle.keys))]
    e = ekeys[np.where(exact.labels >= 0, exact.labels, len(exact.keys))]
    total = int(use.sum())
    if total == 0:
        return Agreement(1.0, 1.0, 0)
    agree = float(np.sum((o == e) & use)) / total
    cover = 1.0 if claims is None else float(np.sum((claims == 1) & use)) / total
    return Agreement(agree, cover, total)


# ---------------------------------------------------------------------------
# vertices and adjacency


def diagram_vertices(gen: Generator, sites, strict: bool = False) -> list:
    """Vertices of the (unclipped) first-type diagram with their site triples.

    Each returned entry is ``(point, (i, j, k), in_domain)``.  Triples with
    (near-)parallel bisectors are skipped, or raise :class:`DegenerateSites`
    when ``strict``.
    """
    s = validate_sites(gen, sites)
    if gen.dim != 2:
        raise ValidationError("diagram_vertices needs a 2D generator")
    grads, const = site_constants(gen, s)
    n = len(s)
    out = []
    for i, j, k in itertools.combinations(range(n), 3):
        A = np.array([grads[j] - grads[i], grads[k] - grads[i]])
        rhs = np.array([const[i] - const[j], const[i] - const[k]])
        if np.linalg.cond(A) > 1e12:
            if strict:
                raise DegenerateSites(f"sites {i}, {j}, {k} have parallel bisectors")
            continue
        x = np.linalg.solve(A, rhs)
        score = -(grads @ x) - const
        ref = score[i]
        tol = 1e-9 * (1 + np.abs(score).max())
        if np.any(score < ref - tol):
            continue
        out.append((x, (i, j, k), bool(gen.domain.contains(x))))
    return out


def first_type_adjacency(gen: Generator, sites) -> set:
    """Site pairs whose first-type cells share an edge of positive length.

    The affine bisectors extend to the whole plane (the power diagram), so
    the cells are clipped in a box enclosing every vertex and site rather
    than in the domain.
    """
    s = validate_sites(gen, sites)
    grads, const = site_constants(gen, s)
    verts = [v for v, _, _ in diagram_vertices(gen, s)]
    pts = np.vstack([s] + ([np.array(verts)] if verts else []))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 1.0 + (hi - lo).max()
    clip = (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad)
    raw = _affine_cells(grads, -const, clip)
    scale = 1e-9 * pad
    out = set()
    for i, (v, lab) in enumerate(raw):
        for m, j in enumerate(lab):
            if j < 0:
                continue
            if np.linalg.norm(v[(m + 1) % len(v)] - v[m]) > scale:
                out.add((min(i, int(j)), max(i, int(j))))
    return out
