"""Bregman Delaunay and geodesic triangulations in the plane.

Both are lower convex hulls of lifted sites, built here by lexicographic
sweep insertion followed by Lawson flips driven by an in-circle style
predicate.  Every lifted point lies on a strictly convex graph, so all sites
are hull vertices and flipping always terminates at the lower hull.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import divergence as dv
from . import geom_core as gc
from .diagram import EDGE_SAMPLES, site_constants, validate_sites
from .divergence import Generator
from .errors import DegenerateInput, GeneralPositionWarning, NumericalError, ValidationError


@dataclass
class Triangulation:
    """Triangles are index triples, CCW in the plane where they are straight:
    source coordinates for ``delaunay``, gradient coordinates for ``geodesic``.
    ``adjacency[t][m]`` is the triangle across the edge opposite vertex ``m``
    (-1 on the hull)."""

    kind: str
    vertices: np.ndarray
    triangles: np.ndarray
    adjacency: np.ndarray
    generator: Optional[Generator] = None
    degenerate: bool = False

    def edges(self) -> set:
        out = set()
        for a, b, c in self.triangles.tolist():
            for u, v in ((a, b), (b, c), (c, a)):
                out.add((min(u, v), max(u, v)))
        return out

    def triangle_set(self) -> set:
        return {tuple(sorted(t)) for t in self.triangles.tolist()}

    def edge_polylines(self, samples: int = EDGE_SAMPLES) -> dict:
        """Edges as sampled curves: gamma geodesics for the geodesic kind,
        straight segments otherwise."""
        out = {}
        for i, j in sorted(self.edges()):
            kind = "gamma" if self.kind == "geodesic" else "lambda"
            arc = gc.GeodesicArc(kind, self.vertices[i], self.vertices[j])
            if self.generator is None:
                t = np.linspace(0, 1, samples)[:, None]
                out[(i, j)] = (1 - t) * self.vertices[i] + t * self.vertices[j]
            else:
                out[(i, j)] = gc.geodesic_polyline(self.generator, arc, samples)
        return out


# ---------------------------------------------------------------------------
# predicates


def _orient(P, a, b, c) -> float:
    u = P[b] - P[a]
    v = P[c] - P[a]
    return float(u[0] * v[1] - u[1] * v[0])


def _orient_sign(P, a, b, c, tol: float = 1e-14) -> int:
    u = P[b] - P[a]
    v = P[c] - P[a]
    det = u[0] * v[1] - u[1] * v[0]
    scale = np.linalg.norm(u) * np.linalg.norm(v)
    if abs(det) <= tol * scale:
        return 0
    return 1 if det > 0 else -1


def lifted_in_circle(P: np.ndarray, heights: np.ndarray, tri, x: int) -> int:
    """-1 if lifted point ``x`` lies strictly below the plane through the
    lifted triangle, 0 if on it (within tolerance), +1 above."""
    a, b, c = tri
    rows = np.array([[*(P[i] - P[x]), heights[i] - heights[x]] for i in (a, b, c)])
    scale = np.prod(np.linalg.norm(rows, axis=1))
    if scale == 0:
        return 0
    det = np.linalg.det(rows) / scale
    if abs(det) < gc.PREDICATE_TOL:
        return 0
    o = _orient(P, a, b, c)
    return -int(np.sign(det)) * int(np.sign(o))


# ---------------------------------------------------------------------------
# sweep + flip construction


def _lower_hull_2d(P: np.ndarray, incircle: Callable[[tuple, int], int]) -> tuple[np.ndarray, bool]:
    """Triangulate ``P`` so that every interior edge is locally convex under
    ``incircle``.  Returns CCW triangles and whether a tie was met."""
    n = len(P)
    order = sorted(range(n), key=lambda i: (P[i][0], P[i][1], i))
    m = 2
    while m < n and _orient_sign(P, order[0], order[1], order[m]) == 0:
        m += 1
    if m == n:
        raise DegenerateInput("all sites are collinear")
    he = {}

    def add(a, b, c):
        if _orient(P, a, b, c) < 0:
            b, c = c, b
        he[(a, b)] = c
        he[(b, c)] = a
        he[(c, a)] = b

    def remove(a, b, c):
        for e in ((a, b), (b, c), (c, a)):
            he.pop(e, None)

    stack = []
    q = order[m]
    chain = order[:m]
    for u, v in zip(chain, chain[1:]):
        add(u, v, q)
        stack.extend([(u, v), (v, q), (q, u)])
    # CCW hull as a vertex list (collinear chain vertices stay on it)
    if _orient(P, chain[0], chain[-1], q) > 0:
        hull = list(chain) + [q]
    else:
        hull = [chain[0], q] + list(reversed(chain[1:]))
    for idx in order[m + 1:]:
        L = len(hull)
        vis = [_orient_sign(P, hull[i], hull[(i + 1) % L], idx) < 0 for i in range(L)]
        if not any(vis) or all(vis):
            raise NumericalError("sweep insertion met an inconsistent hull")
        for i in range(L):
            if vis[i]:
                u, v = hull[i], hull[(i + 1) % L]
                add(v, u, idx)
                stack.extend([(u, v), (v, idx), (idx, u)])
        # visible edges form one run start..end-1; its inner vertices leave the hull
        start = next(i for i in range(L) if vis[i] and not vis[i - 1])
        end = start
        while vis[end % L]:
            end += 1
        hull = [hull[(end + t) % L] for t in range(L - (end - start) + 1)] + [idx]

    tie = False
    while stack:
        a, b = stack.pop()
        if (a, b) not in he or (b, a) not in he:
            continue
        c = he[(a, b)]
        d = he[(b, a)]
        s = incircle((a, b, c), d)
        if s == 0:
            tie = True
            continue
        if s > 0:
            continue
        # flip ab -> cd; the quad a, d, b, c is convex for points on a convex lift
        if _orient_sign(P, c, d, b) <= 0 or _orient_sign(P, d, c, a) <= 0:
            continue
        remove(a, b, c)
        remove(b, a, d)
        add(a, d, c)
        add(d, b, c)
        stack.extend([(a, d), (d, b), (b, c), (c, a)])

    tris = set()
    for (a, b), c in he.items():
        t = (a, b, c)
        r = min(range(3), key=lambda i: t[i])
        tris.add(t[r:] + t[:r])
    return np.array(sorted(tris), dtype=np.int64).reshape(-1, 3), tie


def _adjacency(tris: np.ndarray) -> np.ndarray:
    owner = {}
    for t, (a, b, c) in enumerate(tris.tolist()):
        for m, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            owner[(u, v)] = (t, m)
    adj = np.full(tris.shape, -1, dtype=np.int64)
    for (u, v), (t, m) in owner.items():
        other = owner.get((v, u))
        if other is not None:
            adj[t, m] = other[0]
    return adj


def _finish(kind, gen, sites, tris, tie) -> Triangulation:
    if tie:
        warnings.warn("four lifted sites are (numerically) coplanar; the tie was "
                      "resolved by insertion order", GeneralPositionWarning, stacklevel=3)
    return Triangulation(kind, sites, tris, _adjacency(tris), gen, tie)


def bregman_delaunay_2d(gen: Generator, sites) -> Triangulation:
    """Projection of the lower convex hull of the lifted sites ``(p, F(p))``."""
    s = validate_sites(gen, sites)
    if gen.dim != 2 or len(s) < 3:
        raise ValidationError("need at least three 2D sites")

    def incircle(tri, x):
        return gc.in_sphere(gen, s[x], s[list(tri)])

    tris, tie = _lower_hull_2d(s, incircle)
    return _finish("delaunay", gen, s, tris, tie)


def geodesic_triangulation_2d(gen: Generator, sites) -> Triangulation:
    """Regular triangulation of the power balls of the sites, in gradient space.

    Vertices sit at ``p'`` with heights ``<p', p'> - r^2``; triangles are
    straight there and their edges are gamma geodesics back in the source
    space.
    """
    from .diagram import to_power_balls

    s = validate_sites(gen, sites)
    if gen.dim != 2 or len(s) < 3:
        raise ValidationError("need at least three 2D sites")
    balls = to_power_balls(gen, s)
    G = np.array([b.center for b in balls])
    h = np.array([b.center @ b.center - b.squared_radius for b in balls])

    def incircle(tri, x):
        return lifted_in_circle(G, h, tri, x)

    tris, tie = _lower_hull_2d(G, incircle)
    return _finish("geodesic", gen, s, tris, tie)


# ---------------------------------------------------------------------------
# checkers


def brute_force_lower_hull(P: np.ndarray, heights: np.ndarray) -> set:
    """Triangles whose lifted plane has every other lifted point strictly above
    (O(n^4) reference)."""
    n = len(P)
    out = set()
    for a, b, c in itertools.combinations(range(n), 3):
        if _orient_sign(P, a, b, c) == 0:
            continue
        if all(lifted_in_circle(P, heights, (a, b, c), x) > 0
               for x in range(n) if x not in (a, b, c)):
            out.add((a, b, c))
    return out


def empty_sphere_check(gen: Generator, tri: Triangulation) -> bool:
    """No site lies strictly inside the circumscribing Bregman sphere of any
    triangle it is not a vertex of."""
    return not empty_sphere_violations(gen, tri)


def empty_sphere_violations(gen: Generator, tri: Triangulation) -> list:
    s = tri.vertices
    bad = []
    for t in tri.triangles.tolist():
        for x in range(len(s)):
            if x in t:
                continue
            if gc.in_sphere(gen, s[x], s[t]) < 0:
                bad.append((tuple(t), x))
    return bad


@dataclass
class DualityReport:
    """Edge-set comparison of the Delaunay kind against the geodesic kind,
    which is the exact dual of the first-type diagram."""

    only_delaunay: set
    only_geodesic: set

    @property
    def dual(self) -> bool:
        return not self.only_delaunay and not self.only_geodesic


def compare_delaunay_geodesic(gen: Generator, sites) -> DualityReport:
    a = bregman_delaunay_2d(gen, sites).edges()
    b = geodesic_triangulation_2d(gen, sites).edges()
    return DualityReport(a - b, b - a)


def is_regular_pair(gen: Generator, tri: Triangulation, edge) -> bool:
    """Locally Delaunay test of an edge; hull edges are trivially regular."""
    u, v = sorted(edge)
    inc = [t for t in tri.triangles.tolist() if u in t and v in t]
    if len(inc) < 2:
        return True
    t1, t2 = inc
    p1 = next(x for x in t1 if x not in (u, v))
    p2 = next(x for x in t2 if x not in (u, v))
    s = tri.vertices
    return gc.in_sphere(gen, s[p1], s[t2]) >= 0 and gc.in_sphere(gen, s[p2], s[t1]) >= 0


def flip_edge(tri: Triangulation, edge) -> Triangulation:
    """Return a copy with ``edge`` flipped (the quad must be convex)."""
    u, v = sorted(edge)
    tris = tri.triangles.tolist()
    inc = [t for t in tris if u in t and v in t]
    if len(inc) != 2:
        raise ValidationError("edge is not interior")
    a = next(x for x in inc[0] if x not in (u, v))
    b = next(x for x in inc[1] if x not in (u, v))
    P = tri.vertices
    rest = [t for t in tris if t not in inc]
    new = []
    for t in ((a, b, u), (a, b, v)):
        if _orient_sign(P, *t) == 0:
            raise ValidationError("flip would create a degenerate triangle")
        new.append(t if _orient(P, *t) > 0 else (t[0], t[2], t[1]))
    arr = np.array(rest + new, dtype=np.int64)
    return Triangulation(tri.kind, P, arr, _adjacency(arr), tri.generator)


def flippable_edges(tri: Triangulation) -> list:
    P = tri.vertices
    out = []
    for u, v in sorted(tri.edges()):
        inc = [t for t in tri.triangles.tolist() if u in t and v in t]
        if len(inc) != 2:
            continue
        a = next(x for x in inc[0] if x not in (u, v))
        b = next(x for x in inc[1] if x not in (u, v))
        # convex quad iff u and v lie on opposite sides of ab
        if _orient_sign(P, a, b, u) * _orient_sign(P, a, b, v) < 0:
            out.append((u, v))
    return out


def all_triangulations(tri: Triangulation, limit: int = 5000) -> list:
    """Triangulations reachable by edge flips (the whole flip graph for small n)."""
    seen = {frozenset(tri.triangle_set()): tri}
    queue = [tri]
    while queue and len(seen) < limit:
        t = queue.pop()
        for e in flippable_edges(t):
            nt = flip_edge(t, e)
            key = frozenset(nt.triangle_set())
            if key not in seen:
                seen[key] = nt
                queue.append(nt)
    return list(seen.values())


# ---------------------------------------------------------------------------
# smallest enclosing Bregman ball


@dataclass(frozen=True)
class EnclosingBall:
    ball: gc.BregmanBall
    weights: np.ndarray
    gap: float


def smallest_enclosing_ball(gen: Generator, points, tol: float = 1e-6) -> EnclosingBall:
    """Minimise ``max_i D(p_i || c)`` over centres ``c``.

    The objective is convex in ``c'``.  Its Lagrange dual maximises the Jensen
    gap ``J(l) = sum_i l_i F(p_i) - F(sum_i l_i p_i)`` over the simplex and
    the optimal centre is ``sum_i l_i p_i``.  The duality gap
    ``max_i D(p_i||c) - J(l)`` certifies optimality.
    """
    from scipy.optimize import minimize

    P = dv.check_domain(gen, np.atleast_2d(np.asarray(points, dtype=float)))
    n = len(P)
    if n == 1:
        return EnclosingBall(gc.BregmanBall("first", P[0].copy(), 0.0), np.ones(1), 0.0)
    FP = gen.f(P)

    def negJ(lam):
        c = lam @ P
        return -(lam @ FP - float(gen.f(c)))

    def grad_negJ(lam):
        c = lam @ P
        return -(FP - P @ gen.grad(c))

    best = None
    starts = [np.full(n, 1.0 / n)] + [np.eye(n)[i] * 0.5 + 0.5 / n for i in range(min(n, 3))]
    for x0 in starts:
        res = minimize(negJ, x0 / x0.sum(), jac=grad_negJ, method="SLSQP",
                       bounds=[(0.0, 1.0)] * n,
                       constraints=[{"type": "eq", "fun": lambda l: l.sum() - 1.0,
                                     "jac": lambda l: np.ones_like(l)}],
                       options={"ftol": 1e-15, "maxiter": 1000})
        lam = np.clip(res.x, 0, None)
        lam /= lam.sum()
        c = lam @ P
        r = float(np.max(dv.divergence_unchecked(gen, P, c)))
        gap = r + negJ(lam)
        if best is None or gap < best[2]:
            best = (lam, c, gap, r)
        if gap <= tol * (1 + r):
            break
    lam, c, gap, r = best
    if gap > tol * (1 + r):
        raise NumericalError(f"smallest enclosing ball: duality gap {gap:.3g} above tolerance")
    return EnclosingBall(gc.BregmanBall("first", c, r), lam, float(gap))


def max_enclosing_radius(gen: Generator, tri: Triangulation) -> float:
    return max(smallest_enclosing_ball(gen, tri.vertices[t]).ball.radius
               for t in tri.triangles.tolist())
