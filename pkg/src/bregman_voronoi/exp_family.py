"""Exponential families in natural coordinates.

The Kullback-Leibler divergence between two members of the same family is a
Bregman divergence of the cumulant (log-normaliser) with swapped arguments:
``KL(p || q) = D_F(theta_q || theta_p)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import divergence as dv
from .divergence import DomainSpec, Generator
from .errors import DomainError, ValidationError

NORMAL_THETA2_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class ExponentialFamily:
    name: str
    order: int
    cumulant: Generator
    source_names: tuple
    from_source: Callable[[np.ndarray], np.ndarray]
    to_source: Callable[[np.ndarray], np.ndarray]
    closed_form_kl: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    note: str = ""

    def natural(self, **source) -> np.ndarray:
        """Natural parameter from keyword source parameters, e.g. ``natural(q=0.3)``."""
        missing = [k for k in self.source_names if k not in source]
        if missing:
            raise ValidationError(f"{self.name}: missing source parameter(s) {missing}")
        s = np.array([float(source[k]) for k in self.source_names])
        return self.from_source(s)


def kl_divergence(fam: ExponentialFamily, theta_p, theta_q) -> float:
    """KL(p || q) for two members given by natural parameters."""
    return dv.eval_divergence(fam.cumulant, theta_q, theta_p)


def kl_dual(fam: ExponentialFamily, mu_p, mu_q) -> float:
    """The same KL, computed as ``D_{F*}(mu_p || mu_q)`` in expectation coordinates."""
    return dv.dual_divergence(fam.cumulant, mu_p, mu_q)


def to_expectation(fam: ExponentialFamily, theta) -> np.ndarray:
    theta = dv.check_domain(fam.cumulant, theta, "natural parameter")
    return fam.cumulant.grad(theta)


def to_natural(fam: ExponentialFamily, mu) -> np.ndarray:
    mu = dv.as_points(fam.cumulant, mu)
    with np.errstate(all="ignore"):
        theta = fam.cumulant.inv_grad(mu)
    return dv.check_domain(fam.cumulant, theta, "natural parameter (expectation out of range)")


def kl_from_source(fam: ExponentialFamily, p: Sequence[float], q: Sequence[float]) -> dict:
    """Bregman-path KL next to the closed-form oracle, from source parameters."""
    sp = np.asarray(p, dtype=float).reshape(-1)
    sq = np.asarray(q, dtype=float).reshape(-1)
    if sp.size != fam.order or sq.size != fam.order:
        raise ValidationError(
            f"{fam.name}: expected {fam.order} source parameter(s) {list(fam.source_names)}")
    bregman = float(kl_divergence(fam, fam.from_source(sp), fam.from_source(sq)))
    closed = float(fam.closed_form_kl(sp, sq))
    return {"kl_natural_bregman": bregman, "kl_closed_form": closed,
            "abs_diff": abs(bregman - closed)}


# ---------------------------------------------------------------------------
# source parameter checks and closed forms (textbook formulas, independent of
# the Bregman machinery)


def _need(cond, msg):
    if not cond:
        raise DomainError(msg)


def _bern_from(s):
    q = float(s[0])
    _need(0 < q < 1, f"bernoulli: q={q} must lie in (0, 1)")
    return np.array([math.log(q / (1 - q))])


def _bern_kl(a, b):
    a, b = float(a[0]), float(b[0])
    return a * math.log(a / b) + (1 - a) * math.log((1 - a) / (1 - b))


def _pois_from(s):
    lam = float(s[0])
    _need(lam > 0, f"poisson: lambda={lam} must be positive")
    return np.array([math.log(lam)])


def _pois_kl(a, b):
    a, b = float(a[0]), float(b[0])
    return a * math.log(a / b) + b - a


def _normal_from(s):
    mu, s2 = float(s[0]), float(s[1])
    _need(s2 > 0, f"normal: sigma2={s2} must be positive")
    return np.array([mu / s2, -1.0 / (2 * s2)])


def _normal_to(t):
    t = np.asarray(t, dtype=float)
    s2 = -1.0 / (2 * t[..., 1])
    return np.stack([t[..., 0] * s2, s2], axis=-1)


def _normal_kl(a, b):
    m1, v1 = float(a[0]), float(a[1])
    m2, v2 = float(b[0]), float(b[1])
    return 0.5 * math.log(v2 / v1) + (v1 + (m1 - m2) ** 2) / (2 * v2) - 0.5


def _lap_from(s):
    rate = float(s[0])
    _need(rate > 0, f"laplacian: rate={rate} must be positive")
    return np.array([rate])


def _lap_kl(a, b):
    a, b = float(a[0]), float(b[0])
    return math.log(a / b) + b / a - 1


# ---------------------------------------------------------------------------
# cumulants


def _normal_cumulant() -> Generator:
    def f(t):
        t = np.asarray(t, dtype=float)
        return -t[..., 0] ** 2 / (4 * t[..., 1]) + 0.5 * np.log(-np.pi / t[..., 1])

    def grad(t):
        t = np.asarray(t, dtype=float)
        t1, t2 = t[..., 0], t[..., 1]
        return np.stack([-t1 / (2 * t2), t1 ** 2 / (4 * t2 ** 2) - 1 / (2 * t2)], axis=-1)

    def inv_grad(m):
        m = np.asarray(m, dtype=float)
        s2 = m[..., 1] - m[..., 0] ** 2
        return np.stack([m[..., 0] / s2, -1 / (2 * s2)], axis=-1)

    def hessian(t):
        t = np.asarray(t, dtype=float)
        t1, t2 = t[..., 0], t[..., 1]
        h11 = -1 / (2 * t2)
        h12 = t1 / (2 * t2 ** 2)
        h22 = -t1 ** 2 / (2 * t2 ** 3) + 1 / (2 * t2 ** 2)
        return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)

    return Generator(
        name="normal_cumulant", dim=2, f=f, grad=grad, inv_grad=inv_grad,
        domain=DomainSpec((-math.inf, -math.inf), (math.inf, -NORMAL_THETA2_MARGIN)),
        hessian=hessian, dual_factory=None, separable=False,
        spec={"name": "normal_cumulant", "dim": 2},
    )


def _laplacian_cumulant() -> Generator:
    # F(theta) = -log(theta), theta > 0
    return Generator(
        name="laplacian_cumulant", dim=1,
        f=lambda t: -np.log(np.asarray(t, dtype=float))[..., 0],
        grad=lambda t: -1.0 / np.asarray(t, dtype=float),
        inv_grad=lambda m: -1.0 / np.asarray(m, dtype=float),
        domain=DomainSpec((0.0,), (math.inf,)),
        hessian=lambda t: (1.0 / np.asarray(t, dtype=float) ** 2)[..., None],
        separable=True,
        spec={"name": "laplacian_cumulant", "dim": 1},
    )


def bernoulli() -> ExponentialFamily:
    return ExponentialFamily(
        "bernoulli", 1, dv.dual_bit_entropy(1), ("q",), _bern_from,
        lambda t: 1.0 / (1.0 + np.exp(-np.asarray(t, dtype=float))), _bern_kl)


def poisson() -> ExponentialFamily:
    return ExponentialFamily(
        "poisson", 1, dv.exponential(1), ("lambda",), _pois_from,
        lambda t: np.exp(np.asarray(t, dtype=float)), _pois_kl)


def normal() -> ExponentialFamily:
    return ExponentialFamily(
        "normal", 2, _normal_cumulant(), ("mu", "sigma2"), _normal_from, _normal_to, _normal_kl)


def laplacian() -> ExponentialFamily:
    """Cumulant ``-log(theta)`` on ``theta > 0``.

    This is the one-sided exponential law with rate ``theta`` (density
    ``theta * exp(-theta * x)`` on ``x >= 0``), not the two-sided Laplace
    distribution.  The name is kept for compatibility with the usual table of
    canonical decompositions.
    """
    return ExponentialFamily(
        "laplacian", 1, _laplacian_cumulant(), ("rate",), _lap_from,
        lambda t: np.asarray(t, dtype=float), _lap_kl,
        note="one-sided exponential-rate law; F(theta) = -log(theta)")


FAMILIES = {"bernoulli": bernoulli, "poisson": poisson, "normal": normal,
            "laplacian": laplacian}


def family_by_name(name: str) -> ExponentialFamily:
    try:
        return FAMILIES[name.lower()]()
    except KeyError:
        raise ValidationError(
            f"unknown family {name!r}; valid names: {', '.join(FAMILIES)}") from None
