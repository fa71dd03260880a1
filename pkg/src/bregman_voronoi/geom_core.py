"""Geometric primitives on top of a generator: lifting, bisectors, Bregman
balls and spheres, the InSphere predicate, geodesics and projections."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import divergence as dv
from .divergence import Generator
from .errors import (
    DegenerateInput,
    DegenerateSimplex,
    DomainError,
    EmptyFeasibleSet,
    NonTermination,
    ValidationError,
)

PREDICATE_TOL = 1e-9
COND_MAX = 1e12


# ---------------------------------------------------------------------------
# lifting and hyperplanes


@dataclass(frozen=True)
class LiftedPoint:
    x: np.ndarray
    z: float


@dataclass(frozen=True)
class Hyperplane:
    """``{x : <normal, x> + offset = 0}``.

    In lifted space the normal has ``d + 1`` entries and its last (z)
    coefficient is ``-1``, so :meth:`height` gives the plane's z value.
    """

    normal: np.ndarray
    offset: float

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = x @ self.normal + self.offset
        return float(v) if np.ndim(v) == 0 else v

    def height(self, x) -> np.ndarray:
        """z value of a lifted-space plane above ``x``."""
        x = np.asarray(x, dtype=float)
        v = x @ self.normal[:-1] + self.offset
        return float(v) if np.ndim(v) == 0 else v


def lift(gen: Generator, x) -> LiftedPoint:
    x = dv.check_domain(gen, x)
    return LiftedPoint(x, float(gen.f(x)))


def tangent_hyperplane(gen: Generator, q) -> Hyperplane:
    """Tangent plane ``z = <x - q, q'> + F(q)`` to the graph of ``F`` at ``q``."""
    q = dv.check_domain(gen, q)
    qg = gen.grad(q)
    return Hyperplane(np.append(qg, -1.0), float(gen.f(q) - q @ qg))


def bisector_first_type(gen: Generator, p, q) -> Hyperplane:
    """Affine bisector ``{x : D(x||p) = D(x||q)}``.

    Evaluating the returned plane gives ``D(x||p) - D(x||q)``: negative on
    the side of ``p`` and positive on the side of ``q``.
    """
    p = dv.check_domain(gen, p)
    q = dv.check_domain(gen, q)
    pg, qg = gen.grad(p), gen.grad(q)
    normal = qg - pg
    if not np.any(np.abs(normal) > 1e-300) or np.linalg.norm(normal) <= 1e-14 * (
            1 + np.linalg.norm(pg)):
        raise DegenerateInput("bisector: the two sites have the same gradient")
    offset = float(gen.f(q) - q @ qg - gen.f(p) + p @ pg)
    return Hyperplane(normal, offset)


def bisector_second_type(gen: Generator, p, q) -> Hyperplane:
    """Bisector ``{x : D(p||x) = D(q||x)}`` as a hyperplane in gradient coordinates.

    Evaluated at ``x' = grad(x)`` it gives ``D(p||x) - D(q||x)``.
    """
    p = dv.check_domain(gen, p)
    q = dv.check_domain(gen, q)
    if np.linalg.norm(q - p) <= 1e-14 * (1 + np.linalg.norm(p)):
        raise DegenerateInput("bisector: coincident sites")
    return Hyperplane(q - p, float(gen.f(p) - gen.f(q)))


# ---------------------------------------------------------------------------
# balls and spheres


@dataclass(frozen=True)
class BregmanBall:
    kind: str
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.kind not in ("first", "second"):
            raise ValidationError(f"ball kind must be 'first' or 'second', got {self.kind!r}")
        if not self.radius >= 0:
            raise ValidationError(f"ball radius must be nonnegative, got {self.radius}")


def ball_contains(gen: Generator, ball: BregmanBall, x) -> np.ndarray:
    x = dv.check_domain(gen, x)
    c = dv.check_domain(gen, ball.center)
    if ball.kind == "first":
        d = dv.divergence_unchecked(gen, x, c)
    else:
        d = dv.divergence_unchecked(gen, c, x)
    out = d <= ball.radius
    return bool(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SecondBallViaDual:
    """Second-type ball ``B'_F(c, r)`` seen as the inverse-gradient image of the
    first-type ball ``B_{F*}(c', r)`` of the conjugate."""

    gen: Generator
    center_grad: np.ndarray
    radius: float

    def contains(self, x) -> np.ndarray:
        xg = self.gen.grad(dv.check_domain(self.gen, x))
        d = dv.dual_divergence(self.gen, xg, np.broadcast_to(self.center_grad, xg.shape))
        return np.asarray(d) <= self.radius


def second_ball_via_dual(gen: Generator, c, r: float) -> SecondBallViaDual:
    c = dv.check_domain(gen, c)
    return SecondBallViaDual(gen, gen.grad(c), float(r))


def _orientation(simplex: np.ndarray) -> float:
    """Sign-carrying, scale-normalised orientation minor of ``d + 1`` points."""
    m = simplex[1:] - simplex[0]
    det = np.linalg.det(m) if m.size else 1.0
    scale = np.prod(np.linalg.norm(m, axis=1)) if m.size else 1.0
    return det / scale if scale > 0 else 0.0


def in_sphere(gen: Generator, x, simplex) -> int:
    """-1 if ``x`` is strictly inside the first-type Bregman sphere through
    ``simplex``, 0 if on it (within tolerance), +1 if outside.

    The lifted determinant is evaluated in the translated form
    ``det[p_i - x, D(p_i || x)]`` and normalised by the product of row norms.
    Its sign is multiplied by the sign of the orientation minor so the
    convention does not depend on the vertex order.
    """
    x = dv.check_domain(gen, x)
    s = dv.check_domain(gen, simplex, "simplex vertex")
    d = gen.dim
    if s.shape != (d + 1, d):
        raise ValidationError(f"in_sphere needs {d + 1} simplex vertices in dimension {d}")
    orient = _orientation(s)
    if abs(orient) < 1e-12:
        raise DegenerateSimplex("in_sphere: simplex vertices are affinely dependent")
    rows = np.column_stack([s - x, dv.divergence_unchecked(gen, s, x)])
    scale = np.prod(np.linalg.norm(rows, axis=1))
    if scale == 0:
        return 0
    det = np.linalg.det(rows) / scale
    if abs(det) < PREDICATE_TOL:
        return 0
    # with this row layout inside points give sign (-1)^(d+1) * orientation
    sign = int(np.sign(det)) * int(np.sign(orient))
    return sign if d % 2 == 1 else -sign


def circumsphere(gen: Generator, simplex) -> BregmanBall:
    """First-type Bregman sphere through ``d + 1`` points.

    The lifted points span the plane ``z = <x, a> + b``; the centre is
    ``inv_grad(a)``.  Solved relative to the first vertex for conditioning.
    """
    s = dv.check_domain(gen, simplex, "simplex vertex")
    d = gen.dim
    if s.shape != (d + 1, d):
        raise ValidationError(f"circumsphere needs {d + 1} vertices in dimension {d}")
    p0 = s[0]
    U = s[1:] - p0
    rhs = dv.divergence_unchecked(gen, s[1:], p0)
    if np.linalg.cond(U) > COND_MAX:
        raise DegenerateSimplex("circumsphere: simplex is (numerically) degenerate")
    a = gen.grad(p0) + np.linalg.solve(U, rhs)
    with np.errstate(all="ignore"):
        c = gen.inv_grad(a)
    if not np.all(np.isfinite(c)) or not gen.domain.contains(c):
        raise DomainError(f"circumsphere: centre {c.tolist()} falls outside the domain")
    r = float(dv.divergence_unchecked(gen, p0, c))
    return BregmanBall("first", c, max(r, 0.0))


# ---------------------------------------------------------------------------
# orthogonality and geodesics


def three_point_gap(gen: Generator, p, q, r) -> np.ndarray:
    """``D(p||q) + D(q||r) - D(p||r) - <p - q, r' - q'>``; zero up to rounding."""
    p, q, r = (dv.check_domain(gen, v) for v in (p, q, r))
    lhs = (dv.divergence_unchecked(gen, p, q) + dv.divergence_unchecked(gen, q, r)
           - dv.divergence_unchecked(gen, p, r))
    return lhs - np.sum((p - q) * (gen.grad(r) - gen.grad(q)), axis=-1)


def is_bregman_orthogonal(gen: Generator, p, q, r, tol: float = PREDICATE_TOL) -> bool:
    """Whether ``pq`` is Bregman orthogonal to ``qr``: ``<p - q, r' - q'> = 0``."""
    p, q, r = (dv.check_domain(gen, v) for v in (p, q, r))
    a = p - q
    b = gen.grad(r) - gen.grad(q)
    scale = 1.0 + np.linalg.norm(a) * np.linalg.norm(b)
    return bool(abs(float(a @ b)) <= tol * scale)


@dataclass(frozen=True)
class GeodesicArc:
    kind: str
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        if self.kind not in ("gamma", "lambda"):
            raise ValidationError(f"geodesic kind must be 'gamma' or 'lambda', got {self.kind!r}")


def geodesic_point(gen: Generator, arc: GeodesicArc, lam) -> np.ndarray:
    """Point of the arc at parameter ``lam`` (scalar or array)."""
    lam = np.asarray(lam, dtype=float)
    if np.any((lam < 0) | (lam > 1)):
        raise ValidationError("geodesic parameter must lie in [0, 1]")
    p = dv.check_domain(gen, arc.p)
    q = dv.check_domain(gen, arc.q)
    t = lam[..., None]
    if arc.kind == "lambda":
        x = (1 - t) * p + t * q
    else:
        x = gen.inv_grad((1 - t) * gen.grad(p) + t * gen.grad(q))
        # reproduce the endpoints exactly
        x = np.where(t == 0, p, np.where(t == 1, q, x))
    return dv.check_domain(gen, x, "geodesic point")


def geodesic_polyline(gen: Generator, arc: GeodesicArc, samples: int = 32) -> np.ndarray:
    return geodesic_point(gen, arc, np.linspace(0.0, 1.0, samples))


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-8, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15.0
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


def curve_length(gen: Generator, curve: Callable[[float], np.ndarray], orientation: str,
                 tol: float = 1e-8) -> float:
    """Integral over ``lam`` in [0, 1] of the divergence between the curve
    start ``p_0 = curve(0)`` and ``curve(lam)``.

    ``orientation='start_first'`` integrates ``D(p_0 || p_lam)``;
    ``'start_second'`` integrates ``D(p_lam || p_0)``.
    """
    p0 = np.asarray(curve(0.0), dtype=float)
    if orientation == "start_first":
        def f(t):
            return float(dv.divergence_unchecked(gen, p0, np.asarray(curve(t))))
    elif orientation == "start_second":
        def f(t):
            return float(dv.divergence_unchecked(gen, np.asarray(curve(t)), p0))
    else:
        raise ValidationError(f"unknown orientation {orientation!r}")
    return adaptive_simpson(f, 0.0, 1.0, tol)


def geodesic_length(gen: Generator, arc: GeodesicArc, tol: float = 1e-8) -> float:
    """Length of an arc under the functional it minimises.

    Gamma arcs integrate ``D(p_lam || p_0)`` and lambda (straight) arcs
    integrate ``D(p_0 || p_lam)``.  With these pairings each arc is shorter
    than any perturbation that keeps ``p_lam`` on the three-point slice
    through the arc point, which is what the minimality argument compares.
    """
    orientation = "start_second" if arc.kind == "gamma" else "start_first"
    return curve_length(gen, lambda t: geodesic_point(gen, arc, t), orientation, tol)


def geodesic_bisector_point(gen: Generator, p, q, tol: float = 1e-13) -> np.ndarray:
    """Intersection of the gamma geodesic from ``p`` to ``q`` with the
    first-type bisector of ``p`` and ``q`` (bisection on the parameter)."""
    h = bisector_first_type(gen, p, q)
    arc = GeodesicArc("gamma", np.asarray(p, float), np.asarray(q, float))
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(geodesic_point(gen, arc, mid)) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return geodesic_point(gen, arc, 0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# Bregman projection onto a polytope {x : A x <= b}


def _project_polytope(y: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact Euclidean projection by enumerating KKT active sets of size <= d."""
    if np.all(A @ y <= b + 1e-14):
        return y.copy()
    d = y.size
    m = len(b)
    # rounding grows with |y| (long trial steps can land far away)
    scale = 1.0 + np.abs(b) + np.linalg.norm(A, axis=1) * np.linalg.norm(y)
    best, best_dist = None, math.inf
    for size in range(1, min(d, m) + 1):
        for S in itertools.combinations(range(m), size):
            As, bs = A[list(S)], b[list(S)]
            G = As @ As.T
            if np.linalg.cond(G) > COND_MAX:
                continue
            mu = np.linalg.solve(G, As @ y - bs)
            if np.any(mu < -1e-12 * scale[list(S)]):
                continue
            z = y - As.T @ np.maximum(mu, 0.0)
            if np.all(A @ z <= b + 1e-13 * scale):
                dist = float(np.sum((z - y) ** 2))
                if dist < best_dist:
                    best, best_dist = z, dist
    if best is None:
        raise EmptyFeasibleSet("polytope projection failed: constraints infeasible")
    return best


def _feasible_start(gen: Generator, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Chebyshev-style interior point of ``{A x <= b}`` inside the domain (LP)."""
    from scipy.optimize import linprog

    d = gen.dim
    lo = np.array(gen.domain.lower)
    hi = np.array(gen.domain.upper)
    margin = 1e-6
    rows = [np.hstack([A, np.linalg.norm(A, axis=1)[:, None]])]
    rhs = [b]
    bounds = []
    for i in range(d):
        bounds.append((lo[i] + margin if np.isfinite(lo[i]) else None,
                       hi[i] - margin if np.isfinite(hi[i]) else None))
    if gen.domain.simplex:
        rows.append(np.hstack([np.ones((1, d)), [[math.sqrt(d)]]]))
        rhs.append([1.0 - margin])
    # the slack t is capped so unbounded polytopes still give a finite point
    res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                  bounds=bounds + [(0.0, 1.0)], method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        raise EmptyFeasibleSet("the polytope does not meet the generator domain")
    return res.x[:d]


def bregman_project(gen: Generator, p, A, b, tol: float = 1e-6,
                    max_iter: int = 10000) -> np.ndarray:
    """``argmin_{x : A x <= b} D(x || p)`` by projected gradient descent with
    Armijo backtracking (Barzilai-Borwein trial steps)."""
    p = dv.check_domain(gen, p)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if A.shape != (len(b), gen.dim):
        raise ValidationError("bregman_project: A must be (m, d) and b of length m")
    if np.all(A @ p <= b):
        return p.copy()
    pg = gen.grad(p)
    x = _feasible_start(gen, A, b)

    def obj(z):
        return float(dv.divergence_unchecked(gen, z, p))

    def residual(z, g):
        return np.linalg.norm(z - _project_polytope(z - g, A, b))

    g = gen.grad(x) - pg
    fx = obj(x)
    step = 1.0
    x_prev = g_prev = None
    for _ in range(max_iter):
        if residual(x, g) <= tol:
            return x
        if x_prev is not None:
            s, yv = x - x_prev, g - g_prev
            sy = float(s @ yv)
            if sy > 0:
                step = float(s @ s) / sy
        t = step
        res_x = residual(x, g)
        while True:
            cand = _project_polytope(x - t * g, A, b)
            if gen.domain.contains(cand):
                fc = obj(cand)
                if fc <= fx + 1e-4 * float(g @ (cand - x)):
                    break
                # near the optimum the decrease drops below the rounding of f;
                # fall back to the stationarity measure
                fuzz = 1e-14 * (1.0 + abs(float(gen.f(x))) + abs(float(pg @ x)))
                if abs(fc - fx) <= fuzz and residual(cand, gen.grad(cand) - pg) < res_x:
                    break
            t *= 0.5
            if t < 1e-20:
                return x
        x_prev, g_prev = x, g
        x = cand
        fx = fc
        g = gen.grad(x) - pg
    raise NonTermination("bregman_project: no convergence within the iteration budget")


# ---------------------------------------------------------------------------
# fatness probe


@dataclass(frozen=True)
class Sandwich:
    r_in: float
    r_out: float
    eta_min: float
    eta_max: float

    @property
    def gamma_in(self) -> float:
        return 2.0 / self.eta_max

    @property
    def gamma_out(self) -> float:
        return 2.0 / self.eta_min


def hessian_extremes(gen: Generator, lo, hi, n: int = 33) -> tuple[float, float]:
    """Smallest and largest Hessian eigenvalue over a grid on the box ``[lo, hi]``."""
    if gen.hessian is None:
        raise ValidationError(f"{gen.name}: no Hessian available")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    axes = [np.linspace(lo[i], hi[i], n) for i in range(gen.dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, gen.dim)
    ev = np.linalg.eigvalsh(gen.hessian(grid))
    return float(ev.min()), float(ev.max())


def _directions(dim: int, count: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        a = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.column_stack([np.cos(a), np.sin(a)])
    rng = np.random.default_rng(0)
    u = rng.normal(size=(count, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def euclidean_sandwich(gen: Generator, ball: BregmanBall, box: Optional[tuple] = None,
                       directions: int = 256, tol: float = 1e-10) -> Sandwich:
    """Concentric Euclidean radii ``r_in <= r_out`` around a first-type ball.

    Each ray from the centre is bisected to where ``D(x || c) = r``.  The
    Hessian eigenvalue range is sampled over the ball's bounding box.
    """
    if ball.kind != "first":
        raise ValidationError("euclidean_sandwich expects a first-type ball")
    c = dv.check_domain(gen, ball.center)
    lo, hi = (np.asarray(v, dtype=float) for v in (box or gen.domain.sample_box()))
    if np.any(c <= lo) or np.any(c >= hi):
        raise DomainError("ball centre lies outside the probe box")
    U = _directions(gen.dim, directions)
    with np.errstate(divide="ignore", invalid="ignore"):
        tmax = np.min(np.where(U > 0, (hi - c) / U, np.where(U < 0, (lo - c) / U, np.inf)),
                      axis=1)
    edge = c + tmax[:, None] * U
    if np.any(dv.divergence_unchecked(gen, edge, c) <= ball.radius):
        raise DomainError("the Bregman ball exits the probe box")
    a = np.zeros(len(U))
    b = tmax.copy()
    while np.max(b - a) > tol:
        m = 0.5 * (a + b)
        inside = dv.divergence_unchecked(gen, c + m[:, None] * U, c) <= ball.radius
        a = np.where(inside, m, a)
        b = np.where(inside, b, m)
    radii = 0.5 * (a + b)
    r_in, r_out = float(radii.min()), float(radii.max())
    bb_lo = np.maximum(c - r_out, lo)
    bb_hi = np.minimum(c + r_out, hi)
    eta_min, eta_max = hessian_extremes(gen, bb_lo, bb_hi)
    return Sandwich(r_in, r_out, eta_min, eta_max)
