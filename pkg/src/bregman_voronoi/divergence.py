"""Generators, Bregman divergences and Legendre duality.

A :class:`Generator` bundles a strictly convex function ``F`` with its
gradient, inverse gradient and open domain.  All callables are vectorised:
they take arrays of shape ``(..., d)`` and return ``(...)`` (for ``f``) or
``(..., d)`` (for ``grad`` / ``inv_grad``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    EmptyDomain,
    NonFiniteError,
    UnsupportedError,
    ValidationError,
)

EPS_NUM = 1e-10
DOMAIN_MARGIN = 1e-12

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DomainSpec:
    """Open box ``lower < x < upper`` (bounds may be infinite), optionally
    intersected with the open simplex ``sum(x) < 1``."""

    lower: tuple
    upper: tuple
    simplex: bool = False

    @classmethod
    def box(cls, lower, upper, dim=None, simplex=False):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if dim is not None:
            lo = np.broadcast_to(lo, (dim,))
            hi = np.broadcast_to(hi, (dim,))
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi), simplex)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def kind(self) -> str:
        lo, hi = np.array(self.lower), np.array(self.upper)
        if self.simplex:
            return "simplex"
        if np.all(np.isinf(lo)) and np.all(np.isinf(hi)):
            return "all-space"
        if np.all(lo == 0) and np.all(np.isinf(hi)):
            return "positive-orthant"
        if np.all(lo == 0) and np.all(hi == 1):
            return "unit-cube"
        return "box"

    def contains(self, x, margin: float = DOMAIN_MARGIN) -> np.ndarray:
        """Boolean mask over the leading axes of ``x``."""
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        ok = np.all((x > lo + margin) & (x < hi - margin), axis=-1)
        ok &= np.all(np.isfinite(x), axis=-1)
        if self.simplex:
            ok &= np.sum(x, axis=-1) < 1.0 - margin
        return ok

    def intersect(self, other: "DomainSpec") -> "DomainSpec":
        if other.dim != self.dim:
            raise DimensionMismatch(f"domains of dimension {self.dim} and {other.dim}")
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        if np.any(lo >= hi):
            raise EmptyDomain("intersection of generator domains is empty")
        return DomainSpec(tuple(lo.tolist()), tuple(hi.tolist()), self.simplex or other.simplex)

    def sample_box(self) -> tuple[np.ndarray, np.ndarray]:
        """A compact box well inside the domain, used for random probes."""
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for i, (a, b) in enumerate(zip(self.lower, self.upper)):
            if math.isfinite(a) and math.isfinite(b):
                w = b - a
                lo[i], hi[i] = a + 0.05 * w, b - 0.05 * w
            elif math.isfinite(a):
                lo[i], hi[i] = a + 0.05, a + 3.0
            elif math.isfinite(b):
                lo[i], hi[i] = b - 3.0, b - 0.05
            else:
                lo[i], hi[i] = -3.0, 3.0
        if self.simplex:
            hi = np.minimum(hi, 0.9 / self.dim)
        return lo, hi

    def to_dict(self) -> dict:
        def enc(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {"kind": self.kind, "lower": [enc(v) for v in self.lower],
                "upper": [enc(v) for v in self.upper]}


@dataclass(frozen=True, eq=False)
class Generator:
    """Strictly convex differentiable generator ``F`` on an open convex domain."""

    name: str
    dim: int
    f: ArrayFn
    grad: ArrayFn
    inv_grad: ArrayFn
    domain: DomainSpec
    hessian: Optional[ArrayFn] = None
    conjugate: Optional[ArrayFn] = None
    dual_factory: Optional[Callable[[], "Generator"]] = None
    separable: bool = False
    analytic_inv_grad: bool = True
    spec: Mapping = field(default_factory=dict)

    def __repr__(self):
        return f"Generator({self.name!r}, dim={self.dim})"


# ---------------------------------------------------------------------------
# validation helpers


def as_points(gen: Generator, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != gen.dim:
        if gen.dim == 1:
            x = x[..., None]
        else:
            raise DimensionMismatch(
                f"{gen.name}: expected points of dimension {gen.dim}, got shape {x.shape}")
    return x


def check_domain(gen: Generator, x, what: str = "point") -> np.ndarray:
    x = as_points(gen, x)
    ok = gen.domain.contains(x)
    if not np.all(ok):
        bad = x[~ok] if x.ndim > 1 else x
        raise DomainError(
            f"{gen.name}: {what} {np.asarray(bad).reshape(-1, gen.dim)[0].tolist()} "
            f"outside the open domain {gen.domain.to_dict()}")
    return x


def _finite(value, gen: Generator, what: str):
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"{gen.name}: non-finite {what}")
    return value


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


# ---------------------------------------------------------------------------
# core operations


def divergence_unchecked(gen: Generator, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``F(p) - F(q) - <grad F(q), p - q>`` with broadcasting and no checks."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return gen.f(p) - gen.f(q) - np.sum(gen.grad(q) * (p - q), axis=-1)


def _clamp(v):
    return np.where((v < 0) & (v > -EPS_NUM), 0.0, v)


def eval_divergence(gen: Generator, p, q):
    """Bregman divergence ``D_F(p || q)``; broadcasts over leading axes."""
    p = check_domain(gen, p)
    q = check_domain(gen, q)
    v = _finite(divergence_unchecked(gen, p, q), gen, "divergence")
    return _scalar(_clamp(v))


def eval_conjugate(gen: Generator, y):
    """Legendre conjugate ``F*(y) = <x, y> - F(x)`` with ``x = inv_grad(y)``."""
    y = as_points(gen, y)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        x = gen.inv_grad(y)
    check_domain(gen, x, what="inverse-gradient image")
    v = np.sum(x * y, axis=-1) - gen.f(x)
    return _scalar(_finite(v, gen, "conjugate"))


def dual_divergence(gen: Generator, yp, yq):
    """``D_{F*}(yp || yq)`` evaluated through ``inv_grad`` alone.

    Useful when the image of the domain under the gradient is not a box and
    :func:`dual_generator` therefore is not available.
    """
    yp = as_points(gen, yp)
    yq = as_points(gen, yq)
    xp = check_domain(gen, gen.inv_grad(yp), "inverse-gradient image")
    xq = check_domain(gen, gen.inv_grad(yq), "inverse-gradient image")
    fp = np.sum(xp * yp, axis=-1) - gen.f(xp)
    fq = np.sum(xq * yq, axis=-1) - gen.f(xq)
    v = fp - fq - np.sum(xq * (yp - yq), axis=-1)
    return _scalar(_clamp(_finite(v, gen, "dual divergence")))


def symmetrized_divergence(gen: Generator, p, q):
    """``S_F(p, q) = 1/2 <p - q, grad F(p) - grad F(q)>``."""
    p = check_domain(gen, p)
    q = check_domain(gen, q)
    v = 0.5 * np.sum((p - q) * (gen.grad(p) - gen.grad(q)), axis=-1)
    return _scalar(_clamp(_finite(v, gen, "symmetrized divergence")))


def dual_generator(gen: Generator) -> Generator:
    """Legendre dual ``F*`` as a generator on the gradient image of the domain."""
    if gen.dual_factory is None or not gen.analytic_inv_grad:
        raise UnsupportedError(
            f"{gen.name}: no closed-form Legendre dual with a box-shaped domain")
    return gen.dual_factory()


# ---------------------------------------------------------------------------
# univariate building blocks


@dataclass(frozen=True)
class _Uni:
    name: str
    f: ArrayFn
    df: ArrayFn
    d2f: ArrayFn
    inv_df: ArrayFn
    lo: float
    hi: float
    conj: ArrayFn
    dual: Callable[[], "_Uni"]


def _from_uni(u: _Uni, dim: int = 1, spec: Optional[dict] = None) -> Generator:
    spec = dict(spec or {"name": u.name})
    spec["dim"] = dim

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.eye(dim) * u.d2f(x)[..., None, :]

    return Generator(
        name=u.name,
        dim=dim,
        f=lambda x: np.sum(u.f(np.asarray(x, dtype=float)), axis=-1),
        grad=lambda x: u.df(np.asarray(x, dtype=float)),
        inv_grad=lambda y: u.inv_df(np.asarray(y, dtype=float)),
        domain=DomainSpec.box(u.lo, u.hi, dim),
        hessian=hess,
        conjugate=lambda y: np.sum(u.conj(np.asarray(y, dtype=float)), axis=-1),
        dual_factory=lambda: _from_uni(u.dual(), dim, _dual_spec(spec, u)),
        separable=True,
        spec=spec,
    )


def _dual_spec(spec, u):
    d = dict(spec)
    d["name"] = u.dual().name
    return d


def _xlogx(x):
    return x * np.log(x)


def _sigmoid(y):
    return np.where(y >= 0, 1.0 / (1.0 + np.exp(-np.abs(y))),
                    np.exp(-np.abs(y)) / (1.0 + np.exp(-np.abs(y))))


def _softplus(y):
    return np.maximum(y, 0.0) + np.log1p(np.exp(-np.abs(y)))


_INF = math.inf
_UNI: dict = {}


def _register(*unis):
    for u in unis:
        _UNI[u.name] = u


_register(
    _Uni("squared_norm", lambda x: x * x, lambda x: 2 * x, lambda x: 2 + 0 * x,
         lambda y: y / 2, -_INF, _INF, lambda y: y * y / 4,
         lambda: _UNI["squared_norm_dual"]),
    _Uni("squared_norm_dual", lambda y: y * y / 4, lambda y: y / 2, lambda y: 0.5 + 0 * y,
         lambda x: 2 * x, -_INF, _INF, lambda x: x * x,
         lambda: _UNI["squared_norm"]),
    _Uni("squared_half_norm", lambda x: 0.5 * x * x, lambda x: x + 0.0, lambda x: 1 + 0 * x,
         lambda y: y + 0.0, -_INF, _INF, lambda y: 0.5 * y * y,
         lambda: _UNI["squared_half_norm"]),
    _Uni("shannon", lambda x: _xlogx(x) - x, np.log, lambda x: 1 / x, np.exp,
         0.0, _INF, np.exp, lambda: _UNI["exponential"]),
    _Uni("exponential", np.exp, np.exp, np.exp, np.log, -_INF, _INF,
         lambda y: _xlogx(y) - y, lambda: _UNI["shannon"]),
    _Uni("burg", lambda x: -np.log(x), lambda x: -1 / x, lambda x: 1 / (x * x),
         lambda y: -1 / y, 0.0, _INF, lambda y: -1 - np.log(-y),
         lambda: _UNI["burg_dual"]),
    _Uni("burg_dual", lambda y: -1 - np.log(-y), lambda y: -1 / y, lambda y: 1 / (y * y),
         lambda x: -1 / x, -_INF, 0.0, lambda x: -np.log(x),
         lambda: _UNI["burg"]),
    _Uni("bit_entropy", lambda x: _xlogx(x) + _xlogx(1 - x), lambda x: np.log(x / (1 - x)),
         lambda x: 1 / (x * (1 - x)), _sigmoid, 0.0, 1.0, _softplus,
         lambda: _UNI["dual_bit_entropy"]),
    _Uni("dual_bit_entropy", _softplus, _sigmoid, lambda y: _sigmoid(y) * _sigmoid(-y),
         lambda x: np.log(x / (1 - x)), -_INF, _INF,
         lambda x: _xlogx(x) + _xlogx(1 - x), lambda: _UNI["bit_entropy"]),
    _Uni("hellinger_like", lambda x: -np.sqrt(1 - x * x), lambda x: x / np.sqrt(1 - x * x),
         lambda x: (1 - x * x) ** -1.5, lambda y: y / np.sqrt(1 + y * y), -1.0, 1.0,
         lambda y: np.sqrt(1 + y * y), lambda: _UNI["hellinger_like_dual"]),
    _Uni("hellinger_like_dual", lambda y: np.sqrt(1 + y * y), lambda y: y / np.sqrt(1 + y * y),
         lambda y: (1 + y * y) ** -1.5, lambda x: x / np.sqrt(1 - x * x), -_INF, _INF,
         lambda x: -np.sqrt(1 - x * x), lambda: _UNI["hellinger_like"]),
)


def _norm_like_uni(alpha: int) -> _Uni:
    a = float(alpha)
    e = a / (a - 1)

    def dual():
        return _Uni(f"norm_like_dual", lambda y: (a - 1) * (y / a) ** e,
                    lambda y: (y / a) ** (1 / (a - 1)),
                    lambda y: (y / a) ** (1 / (a - 1) - 1) / (a * (a - 1)),
                    lambda x: a * x ** (a - 1), 0.0, _INF, lambda x: x ** a,
                    lambda: _norm_like_uni(alpha))

    return _Uni("norm_like", lambda x: x ** a, lambda x: a * x ** (a - 1),
                lambda x: a * (a - 1) * x ** (a - 2), lambda y: (y / a) ** (1 / (a - 1)),
                0.0, _INF, lambda y: (a - 1) * (y / a) ** e, dual)


# ---------------------------------------------------------------------------
# built-in generator constructors


def squared_norm(dim: int = 1) -> Generator:
    """``F(x) = <x, x>``; divergence ``||p - q||^2``."""
    return _from_uni(_UNI["squared_norm"], dim)


def squared_half_norm(dim: int = 1) -> Generator:
    """``F(x) = <x, x> / 2``; self-dual, gradient is the identity."""
    return _from_uni(_UNI["squared_half_norm"], dim)


def norm_like(alpha: int = 3, dim: int = 1) -> Generator:
    """``F(x) = sum x_i^alpha`` on the positive orthant, integer ``alpha >= 2``."""
    if int(alpha) != alpha or alpha < 2:
        raise ValidationError(f"norm_like requires an integer alpha >= 2, got {alpha}")
    alpha = int(alpha)
    u = _norm_like_uni(alpha)
    gen = _from_uni(u, dim, {"name": "norm_like", "alpha": alpha})
    spec = dict(gen.spec)

    def dual():
        d = _from_uni(u.dual(), dim, {"name": "norm_like_dual", "alpha": alpha})
        return _replace(d, dual_factory=lambda: norm_like(alpha, dim))

    return _replace(gen, dual_factory=dual, spec=spec)


def shannon(dim: int = 1) -> Generator:
    """Unnormalised Shannon entropy ``x log x - x``; Kullback-Leibler (I-)divergence."""
    return _from_uni(_UNI["shannon"], dim)


def exponential(dim: int = 1) -> Generator:
    return _from_uni(_UNI["exponential"], dim)


def burg(dim: int = 1) -> Generator:
    """Burg entropy ``-log x``; Itakura-Saito divergence."""
    return _from_uni(_UNI["burg"], dim)


def bit_entropy(dim: int = 1) -> Generator:
    """``x log x + (1-x) log(1-x)`` on ``(0, 1)``; logistic loss."""
    return _from_uni(_UNI["bit_entropy"], dim)


def dual_bit_entropy(dim: int = 1) -> Generator:
    """``log(1 + e^x)``; dual logistic loss."""
    return _from_uni(_UNI["dual_bit_entropy"], dim)


def hellinger_like(dim: int = 1) -> Generator:
    """``-sqrt(1 - x^2)`` on ``(-1, 1)``."""
    return _from_uni(_UNI["hellinger_like"], dim)


def mahalanobis(Q) -> Generator:
    """Generalised quadratic ``F(x) = x^T Q x`` for a symmetric positive definite ``Q``."""
    Q = np.array(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValidationError("mahalanobis: Q must be a square matrix")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise ValidationError("mahalanobis: Q must be symmetric")
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        raise ValidationError("mahalanobis: Q must be positive definite") from None
    Q = 0.5 * (Q + Q.T)
    Qinv = np.linalg.inv(Q)
    Qinv = 0.5 * (Qinv + Qinv.T)
    d = Q.shape[0]

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, Q, x)

    return Generator(
        name="mahalanobis",
        dim=d,
        f=f,
        grad=lambda x: 2.0 * np.asarray(x, dtype=float) @ Q,
        inv_grad=lambda y: 0.5 * np.asarray(y, dtype=float) @ Qinv,
        domain=DomainSpec.box(-_INF, _INF, d),
        hessian=lambda x: np.broadcast_to(2.0 * Q, np.shape(x)[:-1] + (d, d)),
        conjugate=lambda y: 0.25 * np.einsum("...i,ij,...j->...", y, Qinv, y),
        dual_factory=lambda: mahalanobis(0.25 * Qinv),
        separable=False,
        spec={"name": "mahalanobis", "Q": Q.tolist()},
    )


def _replace(gen: Generator, **kw) -> Generator:
    from dataclasses import replace

    return replace(gen, **kw)


# ---------------------------------------------------------------------------
# combinators


def make_separable(factors: Sequence[Generator]) -> Generator:
    """``F(x) = sum_i f_i(x_i)`` from univariate generators."""
    factors = list(factors)
    if not factors:
        raise ValidationError("make_separable needs at least one factor")
    for g in factors:
        if g.dim != 1:
            raise DimensionMismatch(f"make_separable: factor {g.name} is not univariate")
    d = len(factors)

    def col(x, i):
        return np.asarray(x, dtype=float)[..., i:i + 1]

    def f(x):
        return sum(g.f(col(x, i)) for i, g in enumerate(factors))

    def grad(x):
        return np.concatenate([g.grad(col(x, i)) for i, g in enumerate(factors)], axis=-1)

    def inv_grad(y):
        return np.concatenate([g.inv_grad(col(y, i)) for i, g in enumerate(factors)], axis=-1)

    hessian = None
    if all(g.hessian is not None for g in factors):
        def hessian(x):
            diag = np.concatenate([g.hessian(col(x, i))[..., 0] for i, g in enumerate(factors)],
                                  axis=-1)
            return np.eye(d) * diag[..., None, :]

    conjugate = None
    if all(g.conjugate is not None for g in factors):
        def conjugate(y):
            return sum(g.conjugate(col(y, i)) for i, g in enumerate(factors))

    dual_factory = None
    if all(g.dual_factory is not None and g.analytic_inv_grad for g in factors):
        def dual_factory():
            return make_separable([g.dual_factory() for g in factors])

    lo = [g.domain.lower[0] for g in factors]
    hi = [g.domain.upper[0] for g in factors]
    return Generator(
        name="separable[" + ",".join(g.name for g in factors) + "]",
        dim=d,
        f=f,
        grad=grad,
        inv_grad=inv_grad,
        domain=DomainSpec.box(lo, hi),
        hessian=hessian,
        conjugate=conjugate,
        dual_factory=dual_factory,
        separable=True,
        analytic_inv_grad=all(g.analytic_inv_grad for g in factors),
        spec={"name": "separable", "factors": [dict(g.spec) for g in factors]},
    )


def linear_combination(gens: Sequence[Generator], weights: Sequence[float]) -> Generator:
    """Positive combination ``sum_k w_k F_k``; its divergence is ``sum_k w_k D_{F_k}``.

    The inverse gradient is solved numerically (coordinate-wise bisection for
    separable parts, damped Newton otherwise).
    """
    gens = list(gens)
    w = [float(v) for v in weights]
    if len(gens) != len(w) or not gens:
        raise ValidationError("linear_combination: need one positive weight per generator")
    if any(not (v > 0) for v in w):
        raise ValidationError("linear_combination: weights must be strictly positive")
    d = gens[0].dim
    for g in gens:
        if g.dim != d:
            raise DimensionMismatch(f"linear_combination: {g.name} has dim {g.dim}, expected {d}")
    dom = gens[0].domain
    for g in gens[1:]:
        dom = dom.intersect(g.domain)

    def f(x):
        return sum(wk * g.f(x) for wk, g in zip(w, gens))

    def grad(x):
        return sum(wk * g.grad(x) for wk, g in zip(w, gens))

    hessian = None
    if all(g.hessian is not None for g in gens):
        def hessian(x):
            return sum(wk * g.hessian(x) for wk, g in zip(w, gens))

    separable = all(g.separable for g in gens)

    if separable:
        def inv_grad(y):
            return invert_separable_gradient(grad, y, dom)
    else:
        if hessian is None:
            raise UnsupportedError("linear_combination of non-separable generators needs Hessians")

        def inv_grad(y):
            return invert_gradient_newton(grad, hessian, y, dom)

    return Generator(
        name="lincomb[" + ",".join(f"{wk:g}*{g.name}" for wk, g in zip(w, gens)) + "]",
        dim=d,
        f=f,
        grad=grad,
        inv_grad=inv_grad,
        domain=dom,
        hessian=hessian,
        separable=separable,
        analytic_inv_grad=False,
        spec={"name": "linear_combination", "weights": w,
              "generators": [dict(g.spec) for g in gens]},
    )


def add_affine(gen: Generator, a, b: float = 0.0) -> Generator:
    """``G(x) = F(x) + <a, x> + b``; leaves every divergence unchanged."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (gen.dim,)).copy()
    b = float(b)
    conj = None
    if gen.conjugate is not None:
        def conj(y):
            return gen.conjugate(np.asarray(y, dtype=float) - a) - b

    return Generator(
        name=f"{gen.name}+affine",
        dim=gen.dim,
        f=lambda x: gen.f(x) + np.asarray(x, dtype=float) @ a + b,
        grad=lambda x: gen.grad(x) + a,
        inv_grad=lambda y: gen.inv_grad(np.asarray(y, dtype=float) - a),
        domain=gen.domain,
        hessian=gen.hessian,
        conjugate=conj,
        separable=gen.separable,
        analytic_inv_grad=gen.analytic_inv_grad,
        spec={"name": "affine", "base": dict(gen.spec), "a": a.tolist(), "b": b},
    )


# ---------------------------------------------------------------------------
# numerical inverse gradients


def invert_separable_gradient(grad: ArrayFn, y, domain: DomainSpec,
                              tol: float = 1e-12, max_iter: int = 400) -> np.ndarray:
    """Solve ``grad(x) = y`` for a coordinate-wise increasing gradient by bisection.

    All coordinates are bracketed and bisected simultaneously.
    """
    y = np.asarray(y, dtype=float)
    lower = np.broadcast_to(np.asarray(domain.lower), y.shape)
    upper = np.broadcast_to(np.asarray(domain.upper), y.shape)
    start = np.where(np.isfinite(lower) & np.isfinite(upper), 0.5 * (lower + upper),
                     np.where(np.isfinite(lower), lower + 1.0,
                              np.where(np.isfinite(upper), upper - 1.0, 0.0)))
    a = np.where(np.isfinite(lower), lower, start)
    b = np.where(np.isfinite(upper), upper, start)
    with np.errstate(all="ignore"):
        step = np.ones_like(y)
        for _ in range(2100):
            need = ~np.isfinite(lower) & (grad(a) > y)
            if not need.any():
                break
            a = np.where(need, start - step, a)
            step = np.where(need, step * 2, step)
        step = np.ones_like(y)
        for _ in range(2100):
            need = ~np.isfinite(upper) & (grad(b) < y)
            if not need.any():
                break
            b = np.where(need, start + step, b)
            step = np.where(need, step * 2, step)
        for _ in range(max_iter):
            m = 0.5 * (a + b)
            gm = grad(m)
            go_right = gm < y
            a = np.where(go_right, m, a)
            b = np.where(go_right, b, m)
            if np.all(b - a <= tol * (1.0 + np.abs(m))):
                break
    return 0.5 * (a + b)


def invert_gradient_newton(grad: ArrayFn, hessian: ArrayFn, y, domain: DomainSpec,
                           tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Damped Newton iteration for ``grad(x) = y`` that stays inside ``domain``."""
    y = np.asarray(y, dtype=float)
    lo, hi = domain.sample_box()
    x = np.broadcast_to(0.5 * (lo + hi), y.shape).copy()
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            r = grad(x) - y
            rn = np.linalg.norm(r, axis=-1)
            if np.all(rn <= tol * (1.0 + np.linalg.norm(y, axis=-1))):
                break
            step = np.linalg.solve(hessian(x), r[..., None])[..., 0]
            t = np.ones(x.shape[:-1])
            for _ in range(60):
                cand = x - t[..., None] * step
                ok = domain.contains(cand) & (
                    np.linalg.norm(grad(cand) - y, axis=-1) <= (1 - 1e-4 * t) * rn + 1e-300)
                if np.all(ok | (rn == 0)):
                    break
                t = np.where(ok, t, 0.5 * t)
            x = x - t[..., None] * step
    return x


# ---------------------------------------------------------------------------
# registry and sampling

BUILTINS = ("squared_norm", "squared_half_norm", "norm_like", "shannon", "exponential",
            "burg", "bit_entropy", "dual_bit_entropy", "hellinger_like", "mahalanobis")

_SIMPLE = {
    "squared_norm": squared_norm,
    "squared_half_norm": squared_half_norm,
    "shannon": shannon,
    "exponential": exponential,
    "burg": burg,
    "bit_entropy": bit_entropy,
    "dual_bit_entropy": dual_bit_entropy,
    "hellinger_like": hellinger_like,
}


def generator_names() -> list[str]:
    return list(BUILTINS) + sorted(n for n in _UNI if n not in BUILTINS) + [
        "norm_like_dual", "separable", "linear_combination", "affine"]


def generator_from_spec(spec: Mapping) -> Generator:
    """Rebuild a generator from its JSON description (the ``spec`` attribute)."""
    if isinstance(spec, str):
        spec = {"name": spec}
    name = spec.get("name")
    dim = int(spec.get("dim", 1))
    if name in _SIMPLE:
        return _SIMPLE[name](dim)
    if name in _UNI:
        return _from_uni(_UNI[name], dim)
    if name == "norm_like":
        return norm_like(int(spec.get("alpha", 3)), dim)
    if name == "norm_like_dual":
        return dual_generator(norm_like(int(spec.get("alpha", 3)), dim))
    if name == "mahalanobis":
        Q = spec.get("Q")
        if Q is None:
            Q = np.eye(dim)
        return mahalanobis(Q)
    if name == "separable":
        return make_separable([generator_from_spec(s) for s in spec["factors"]])
    if name == "linear_combination":
        return linear_combination([generator_from_spec(s) for s in spec["generators"]],
                                  spec["weights"])
    if name == "affine":
        return add_affine(generator_from_spec(spec["base"]), spec["a"], spec.get("b", 0.0))
    raise ValidationError(
        f"unknown generator {name!r}; valid names: {', '.join(generator_names())}")


def random_points(gen: Generator, n: int, rng: np.random.Generator,
                  box: Optional[tuple] = None) -> np.ndarray:
    """``n`` uniform points in a compact box inside the domain."""
    lo, hi = box if box is not None else gen.domain.sample_box()
    pts = rng.uniform(lo, hi, size=(n, gen.dim))
    if gen.domain.simplex:
        ok = gen.domain.contains(pts)
        pts = pts[ok]
    return pts
