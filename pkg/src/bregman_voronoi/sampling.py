"""Centroidal relaxation, Bregman k-means and greedy epsilon-nets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import divergence as dv
from . import polygon as pg
from .diagram import site_constants
from .divergence import Generator
from .errors import DomainError, EmptyRegion, NonTermination, ValidationError

DEFAULT_GRID = 512


@dataclass(frozen=True)
class DomainPolygon:
    """Convex polygon (stored CCW) used as a sampling domain.

    ``margin`` is the clearance the polygon must keep from the boundary of a
    generator's domain; see :meth:`check_inside`.
    """

    vertices: np.ndarray
    margin: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValidationError("a domain polygon needs at least three 2D vertices")
        a = pg.area(v)
        if abs(a) <= 1e-14:
            raise ValidationError("domain polygon has zero area")
        if a < 0:
            v = v[::-1].copy()
        if not pg.is_convex(v):
            raise ValidationError("domain polygon must be convex")
        if self.margin < 0:
            raise ValidationError("margin must be nonnegative")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def box(cls, xmin, ymin, xmax, ymax, margin: float = 0.0) -> "DomainPolygon":
        return cls(np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]], float),
                   margin)

    @property
    def area(self) -> float:
        return pg.area(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        return pg.centroid(self.vertices)

    @property
    def bbox(self) -> tuple:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return (lo[0], lo[1], hi[0], hi[1])

    def contains(self, pts, tol: float = 1e-12) -> np.ndarray:
        return pg.contains_convex(self.vertices, pts, tol)

    def check_inside(self, gen: Generator) -> None:
        """Every vertex must stay ``margin`` away from the generator's domain
        boundary (and strictly inside it)."""
        v = self.vertices
        lo = np.array(gen.domain.lower)
        hi = np.array(gen.domain.upper)
        clearance = np.minimum(v - lo, hi - v).min()
        if gen.domain.simplex:
            clearance = min(clearance, float((1 - v.sum(axis=1)).min() / np.sqrt(2)))
        if not np.all(gen.domain.contains(v)) or clearance < self.margin:
            raise DomainError(
                f"domain polygon is {clearance:.3g} from the boundary of the {gen.name} "
                f"domain; the declared margin is {self.margin:g}")

    def labels(self):
        return np.arange(len(self.vertices)) - len(self.vertices) - 10


# ---------------------------------------------------------------------------
# grids and centroids


@dataclass(frozen=True)
class Grid:
    centers: np.ndarray  # (H, W, 2)
    cell_area: float
    spacing: tuple

    @classmethod
    def over(cls, bbox, resolution: int) -> "Grid":
        from .diagram import pixel_centers

        x0, y0, x1, y1 = bbox
        c = pixel_centers(bbox, resolution)
        h, w = c.shape[:2]
        dx, dy = (x1 - x0) / w, (y1 - y0) / h
        return cls(c, dx * dy, (dx, dy))


def region_centroid(points, density, mask=None) -> np.ndarray:
    """Mass centroid ``sum p(x) x / sum p(x)`` over the masked sample points."""
    pts = np.asarray(points, dtype=float).reshape(-1, np.shape(points)[-1])
    w = np.broadcast_to(np.asarray(density, dtype=float), np.shape(points)[:-1]).reshape(-1)
    if mask is not None:
        m = np.asarray(mask, dtype=bool).reshape(-1)
        pts, w = pts[m], w[m]
    if np.any(w < 0):
        raise ValidationError("density must be nonnegative")
    total = w.sum()
    if len(pts) == 0 or total <= 0:
        raise EmptyRegion("region has no mass")
    return (w[:, None] * pts).sum(axis=0) / total


def _assign(gen: Generator, x: np.ndarray, sites: np.ndarray, chunk: int = 1 << 15):
    """Nearest site by ``D(x || p_i)`` (lowest index on ties) and its divergence."""
    lab = np.empty(len(x), dtype=np.int64)
    val = np.empty(len(x))
    for s in range(0, len(x), chunk):
        d = dv.divergence_unchecked(gen, x[s:s + chunk, None, :], sites)
        lab[s:s + chunk] = np.argmin(d, axis=1)
        val[s:s + chunk] = d[np.arange(len(d)), lab[s:s + chunk]]
    return lab, val


# ---------------------------------------------------------------------------
# Lloyd relaxation


@dataclass
class LloydResult:
    sites: np.ndarray
    trace: list
    events: list
    iterations: int
    converged: bool


def lloyd(gen: Generator, domain: DomainPolygon, k: int,
          init: Union[int, np.ndarray, None] = 0, max_iter: int = 50, tol: float = 1e-9,
          resolution: int = DEFAULT_GRID,
          density: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> LloydResult:
    """Centroidal Bregman Voronoi relaxation on a raster of the domain.

    Each step assigns grid cells to the nearest site (first type, restricted
    to the polygon), records the objective ``sum_i int_{V_i} p(x) D(x||p_i)``
    and moves every site to the mass centroid of its cell.  A site whose cell
    is empty is moved to the grid point farthest from all sites.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    domain.check_inside(gen)
    grid = Grid.over(domain.bbox, resolution)
    pts = grid.centers.reshape(-1, 2)
    mask = domain.contains(pts) & gen.domain.contains(pts)
    x = pts[mask]
    if len(x) < k:
        raise EmptyRegion("domain raster has fewer points than sites")
    rho = np.ones(len(x)) if density is None else np.asarray(density(x), dtype=float)
    if np.any(rho < 0) or rho.sum() <= 0:
        raise ValidationError("density must be nonnegative with positive mass")
    if init is None or np.ndim(init) == 0:
        rng = np.random.default_rng(0 if init is None else int(init))
        sites = x[rng.choice(len(x), size=k, replace=False)].copy()
    else:
        sites = np.array(init, dtype=float).reshape(-1, 2)
        if len(sites) != k:
            raise ValidationError(f"expected {k} initial sites, got {len(sites)}")
        if not np.all(domain.contains(sites)):
            raise DomainError("initial sites must lie inside the domain polygon")
    trace, events = [], []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        lab, val = _assign(gen, x, sites)
        f = float(np.sum(rho * val) * grid.cell_area)
        if trace and trace[-1] - f <= tol * max(abs(trace[-1]), 1e-300):
            trace.append(f)
            converged = True
            break
        trace.append(f)
        mass = np.bincount(lab, weights=rho, minlength=k)
        new = np.empty_like(sites)
        for d in range(2):
            new[:, d] = np.bincount(lab, weights=rho * x[:, d], minlength=k)
        empty = mass <= 0
        new[~empty] /= mass[~empty, None]
        for i in np.nonzero(empty)[0]:
            _, far = _assign(gen, x, np.delete(new, np.nonzero(empty)[0], axis=0)) \
                if (~empty).any() else (None, np.zeros(len(x)))
            j = int(np.argmax(far))
            new[i] = x[j]
            empty[i] = False
            events.append({"iteration": it, "event": "empty_cell", "site": int(i),
                           "reseeded_at": x[j].tolist()})
        sites = new
    return LloydResult(sites, trace, events, it, converged)


# ---------------------------------------------------------------------------
# Bregman k-means


@dataclass
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    trace: list
    events: list
    iterations: int


def bregman_kmeans(gen: Generator, data, k: int, init: Union[int, np.ndarray, None] = 0,
                   max_iter: int = 100) -> KMeansResult:
    """Alternate nearest-centroid assignment under ``D(x || c)`` and
    arithmetic-mean updates.  Empty clusters move to the farthest point."""
    X = dv.check_domain(gen, np.atleast_2d(np.asarray(data, dtype=float)), "data point")
    n = len(X)
    if not 1 <= k <= n:
        raise ValidationError(f"k must satisfy 1 <= k <= n = {n}")
    if init is None or np.ndim(init) == 0:
        rng = np.random.default_rng(0 if init is None else int(init))
        C = X[np.sort(rng.choice(n, size=k, replace=False))].copy()
    else:
        C = dv.check_domain(gen, np.atleast_2d(np.asarray(init, dtype=float)), "centroid")
        if len(C) != k:
            raise ValidationError(f"expected {k} initial centroids")
    trace, events = [], []
    prev = None
    it = 0
    for it in range(1, max_iter + 1):
        lab, val = _assign(gen, X, C)
        trace.append(float(val.sum()))
        if prev is not None and np.array_equal(lab, prev):
            break
        prev = lab
        counts = np.bincount(lab, minlength=k)
        newC = C.copy()
        for j in range(k):
            if counts[j]:
                newC[j] = X[lab == j].mean(axis=0)
        for j in np.nonzero(counts == 0)[0]:
            keep = np.nonzero(counts > 0)[0]
            _, far = _assign(gen, X, newC[keep])
            idx = int(np.argmax(far))
            newC[j] = X[idx]
            counts[j] = 1
            events.append({"iteration": it, "event": "empty_cluster", "cluster": int(j),
                           "reseeded_at": X[idx].tolist()})
        C = newC
    return KMeansResult(lab, C, trace, events, it)


# ---------------------------------------------------------------------------
# sample error and epsilon-nets


class _RestrictedDiagram:
    """First-type diagram of a growing point set, clipped to a convex polygon."""

    def __init__(self, gen: Generator, domain: DomainPolygon):
        self.gen = gen
        self.domain = domain
        self.sites = np.empty((0, 2))
        self.grads = np.empty((0, 2))
        self.const = np.empty(0)
        self.cells = []
        self.errors = []  # per cell: (max divergence, vertex)

    def _score_plane(self, i, j):
        # D(x||p_i) - D(x||p_j) = <x, p_j' - p_i'> - c_i + c_j
        return self.grads[j] - self.grads[i], self.const[j] - self.const[i]

    def _cell_error(self, i):
        v = self.cells[i][0]
        if len(v) == 0:
            return (-np.inf, None)
        d = dv.divergence_unchecked(self.gen, v, self.sites[i])
        m = int(np.argmax(d))
        return (float(d[m]), v[m])

    def insert(self, p):
        p = np.asarray(p, dtype=float)
        g, c = site_constants(self.gen, p[None, :])
        self.sites = np.vstack([self.sites, p])
        self.grads = np.vstack([self.grads, g])
        self.const = np.append(self.const, c)
        new = len(self.sites) - 1
        verts, labels = self.domain.vertices, self.domain.labels()
        for j in range(new):
            nrm, off = self._score_plane(new, j)
            verts, labels = pg.clip_halfplane(verts, labels, nrm, off, j)
            if len(verts) == 0:
                break
        self.cells.append((verts, labels))
        self.errors.append(None)
        for i in range(new):
            nrm, off = self._score_plane(i, new)
            v, lab = self.cells[i]
            if len(v):
                nv = pg.clip_halfplane(v, lab, nrm, off, new)
                if len(nv[0]) != len(v) or not np.array_equal(nv[0], v):
                    self.cells[i] = nv
                    self.errors[i] = None
        for i in range(len(self.sites)):
            if self.errors[i] is None:
                self.errors[i] = self._cell_error(i)

    def worst(self):
        i = int(np.argmax([e[0] for e in self.errors]))
        return self.errors[i][0], self.errors[i][1], i


def _check_points(gen, domain, P):
    P = dv.check_domain(gen, np.atleast_2d(np.asarray(P, dtype=float)), "sample point")
    if len(P) == 0:
        raise ValidationError("need at least one sample point")
    if not np.all(domain.contains(P, tol=1e-9)):
        raise DomainError("sample points must lie in the domain polygon")
    return P


def sample_error(gen: Generator, P, domain: DomainPolygon, with_vertex: bool = False):
    """``sup_{x in D} min_i D(x || p_i)``, attained at a vertex of the
    diagram of ``P`` restricted to the domain (each divergence is convex in
    ``x`` and the restricted cells are convex polygons)."""
    domain.check_inside(gen)
    P = _check_points(gen, domain, P)
    rd = _RestrictedDiagram(gen, domain)
    for p in P:
        rd.insert(p)
    err, vert, _ = rd.worst()
    err = max(err, 0.0)
    return (err, vert) if with_vertex else err


@dataclass
class SampleRun:
    points: np.ndarray
    epsilon: float
    trace: list = field(default_factory=list)
    error: float = 0.0


def eps_net(gen: Generator, domain: DomainPolygon, eps: float, seeds=None,
            max_points: int = 1_000_000) -> SampleRun:
    """Greedy farthest-point insertion until every point of the domain is
    within divergence ``eps`` of the sample.

    The worst point is always a vertex of the restricted diagram, so each
    insertion adds that vertex.  The result covers the domain (error <= eps)
    and is sparse: every pair has ``max(D(p||q), D(q||p)) > eps``.
    """
    if not eps > 0:
        raise ValidationError("epsilon must be positive")
    domain.check_inside(gen)
    S = domain.centroid[None, :] if seeds is None else _check_points(gen, domain, seeds)
    for a in range(len(S)):
        for b in range(a + 1, len(S)):
            if max(dv.eval_divergence(gen, S[a], S[b]), dv.eval_divergence(gen, S[b], S[a])) <= eps:
                raise ValidationError(f"seeds {a} and {b} are within {eps} of each other")
    rd = _RestrictedDiagram(gen, domain)
    for p in S:
        rd.insert(p)
    trace = []
    while True:
        err, vert, _ = rd.worst()
        if err <= eps:
            break
        if len(rd.sites) >= max_points:
            raise NonTermination(f"epsilon-net exceeded {max_points} points")
        trace.append({"inserted": vert.tolist(), "error": err})
        rd.insert(vert)
    return SampleRun(rd.sites.copy(), float(eps), trace, max(float(err), 0.0))


def net_sparsity_violations(gen: Generator, P, eps: float) -> list:
    """Pairs with ``max(D(p||q), D(q||p)) <= eps``."""
    P = np.asarray(P, dtype=float)
    D = dv.divergence_unchecked(gen, P[:, None, :], P[None, :, :])
    M = np.maximum(D, D.T)
    i, j = np.nonzero(np.triu(M <= eps, 1))
    return list(zip(i.tolist(), j.tolist()))
