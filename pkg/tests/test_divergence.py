import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bregman_voronoi import divergence as dv
from bregman_voronoi.errors import (DimensionMismatch, DomainError, NonFiniteError,
                                    ValidationError)

from conftest import ANALYTIC, gen2


# worked values -------------------------------------------------------------


def test_squared_norm_value():
    assert dv.eval_divergence(dv.squared_norm(), 3.0, 1.0) == pytest.approx(4.0)


def test_shannon_identity_zero():
    assert dv.eval_divergence(dv.shannon(), 0.7, 0.7) == pytest.approx(0.0, abs=1e-15)


def test_burg_itakura_saito_value():
    assert dv.eval_divergence(dv.burg(), 2.0, 1.0) == pytest.approx(1 - math.log(2), rel=1e-12)


def test_conjugate_values():
    assert dv.eval_conjugate(dv.exponential(), 1.0) == pytest.approx(-1.0)
    assert dv.eval_conjugate(dv.squared_half_norm(), 3.0) == pytest.approx(4.5)
    assert dv.eval_conjugate(dv.burg(), -1.0) == pytest.approx(-1.0)


def test_conjugate_out_of_range():
    with pytest.raises(DomainError):
        dv.eval_conjugate(dv.exponential(), -1.0)


def test_symmetrized_values():
    assert dv.symmetrized_divergence(dv.shannon(), 2.0, 1.0) == pytest.approx(0.5 * math.log(2))
    assert dv.symmetrized_divergence(dv.squared_norm(), 3.0, 1.0) == pytest.approx(4.0)
    assert dv.symmetrized_divergence(dv.burg(), 1.5, 1.5) == pytest.approx(0.0)


def test_separable_kl_zero():
    g = dv.make_separable([dv.shannon(), dv.shannon()])
    assert g.dim == 2
    assert dv.eval_divergence(g, [1.0, 1.0], [1.0, 1.0]) == pytest.approx(0.0)


def test_linear_combination_values():
    g = dv.linear_combination([dv.squared_norm(), dv.squared_norm()], [1.0, 2.0])
    assert dv.eval_divergence(g, 3.0, 1.0) == pytest.approx(12.0)
    h = dv.linear_combination([dv.shannon(), dv.burg()], [1.0, 1.0])
    assert dv.eval_divergence(h, 2.0, 1.0) == pytest.approx(math.log(2), rel=1e-12)


def test_linear_combination_single_generator():
    g = dv.linear_combination([dv.shannon(2)], [1.0])
    p, q = [0.3, 1.2], [0.8, 0.5]
    assert dv.eval_divergence(g, p, q) == pytest.approx(dv.eval_divergence(dv.shannon(2), p, q))


def test_linear_combination_numeric_inverse(rng):
    g = dv.linear_combination([dv.shannon(2), dv.burg(2)], [0.3, 1.7])
    x = rng.uniform(0.1, 3.0, size=(50, 2))
    assert np.allclose(g.inv_grad(g.grad(x)), x, rtol=1e-9)


def test_linear_combination_rejects_bad_weights():
    with pytest.raises(ValidationError):
        dv.linear_combination([dv.shannon()], [0.0])
    with pytest.raises(DimensionMismatch):
        dv.linear_combination([dv.shannon(1), dv.shannon(2)], [1.0, 1.0])


def test_add_affine_leaves_divergence_unchanged(rng):
    base = dv.exponential(2)
    g = dv.add_affine(base, [0.5, -1.0], 3.0)
    p, q = rng.normal(size=(2, 20, 2))
    assert np.allclose(dv.eval_divergence(g, p, q), dv.eval_divergence(base, p, q))


def test_mahalanobis_value():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    g = dv.mahalanobis(Q)
    d = np.array([1.0, -2.0])
    assert dv.eval_divergence(g, d, [0.0, 0.0]) == pytest.approx(d @ Q @ d)


def test_mahalanobis_not_positive_definite():
    with pytest.raises(ValidationError):
        dv.mahalanobis([[1.0, 2.0], [2.0, 1.0]])


# errors --------------------------------------------------------------------


def test_domain_error_outside_open_domain():
    with pytest.raises(DomainError):
        dv.eval_divergence(dv.shannon(), 0.0, 1.0)
    with pytest.raises(DomainError):
        dv.eval_divergence(dv.burg(), 1.0, -1.0)
    with pytest.raises(DomainError):
        dv.eval_divergence(dv.bit_entropy(), 1.0, 0.5)


def test_exponential_overflow():
    with pytest.raises(NonFiniteError):
        dv.eval_divergence(dv.exponential(), 1e4, 0.0)


def test_dimension_mismatch():
    with pytest.raises(ValidationError):
        dv.eval_divergence(dv.shannon(2), [1.0, 2.0, 3.0], [1.0, 1.0])


def test_unknown_generator_lists_names():
    with pytest.raises(ValidationError, match="valid names: .*shannon"):
        dv.generator_from_spec({"name": "nope"})


def test_norm_like_requires_integer_exponent():
    with pytest.raises(ValidationError):
        dv.norm_like(1)


# duality -------------------------------------------------------------------


@pytest.mark.parametrize("name", ANALYTIC)
def test_dual_generator_round_trip(name, rng):
    g = gen2(name)
    dual = dv.dual_generator(g)
    x = dv.random_points(g, 30, rng)
    y = g.grad(x)
    assert np.allclose(dual.grad(y), x, rtol=1e-10, atol=1e-12)
    # F(x) + F*(x') = <x, x'>
    assert np.allclose(g.f(x) + dual.f(y), np.sum(x * y, axis=1), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("name", ANALYTIC)
def test_numeric_conjugate_matches_closed_form(name, rng):
    g = gen2(name)
    y = g.grad(dv.random_points(g, 20, rng))
    closed = dv.dual_generator(g).f(y)
    numeric = np.sum(g.inv_grad(y) * y, axis=1) - g.f(g.inv_grad(y))
    assert np.allclose(closed, numeric, rtol=1e-10, atol=1e-10)


def test_spec_round_trip():
    for g in (dv.shannon(2), dv.norm_like(4, 2), dv.mahalanobis([[2.0, 0.0], [0.0, 1.0]]),
              dv.linear_combination([dv.shannon(2), dv.burg(2)], [1.0, 2.0]),
              dv.make_separable([dv.shannon(), dv.exponential()])):
        h = dv.generator_from_spec(g.spec)
        p, q = np.array([0.4, 0.9]), np.array([1.3, 0.2])
        assert dv.eval_divergence(h, p, q) == pytest.approx(dv.eval_divergence(g, p, q))


# properties ----------------------------------------------------------------

coords = st.floats(0.05, 3.0, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["shannon", "burg", "squared_half_norm", "exponential", "norm_like"]),
       coords, coords, coords, coords)
def test_nonnegative_and_zero_only_on_diagonal(name, a, b, c, d):
    g = gen2(name)
    p, q = np.array([a, b]), np.array([c, d])
    v = dv.eval_divergence(g, p, q)
    assert v >= -1e-12 * (1 + abs(g.f(p)) + abs(g.f(q)))
    assert dv.eval_divergence(g, p, p) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(coords, coords, st.floats(0.1, 5.0))
def test_linearity_in_generator(a, b, lam):
    g1, g2 = dv.shannon(), dv.burg()
    comb = dv.linear_combination([g1, g2], [1.0, lam])
    want = dv.eval_divergence(g1, a, b) + lam * dv.eval_divergence(g2, a, b)
    assert dv.eval_divergence(comb, a, b) == pytest.approx(want, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(coords, coords, coords, coords)
def test_symmetrized_is_half_sum(a, b, c, d):
    g = dv.shannon(2)
    p, q = np.array([a, b]), np.array([c, d])
    s = dv.symmetrized_divergence(g, p, q)
    assert s == pytest.approx(0.5 * (dv.eval_divergence(g, p, q) + dv.eval_divergence(g, q, p)),
                              rel=1e-9, abs=1e-12)
