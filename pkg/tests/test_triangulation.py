import warnings

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.spatial import Delaunay

from bregman_voronoi import diagram as dg
from bregman_voronoi import divergence as dv
from bregman_voronoi import triangulation as tr
from bregman_voronoi.errors import DegenerateInput, GeneralPositionWarning

from conftest import gen2


def test_euclidean_delaunay_matches_scipy(rng):
    g = dv.squared_half_norm(2)
    for _ in range(10):
        P = rng.uniform(0, 1, size=(30, 2))
        want = {tuple(sorted(t)) for t in Delaunay(P).simplices.tolist()}
        assert tr.bregman_delaunay_2d(g, P).triangle_set() == want
        assert tr.geodesic_triangulation_2d(g, P).triangle_set() == want


def test_cocircular_square_warns():
    g = dv.squared_half_norm(2)
    sq = [[0, 0], [1, 0], [1, 1], [0, 1]]
    with pytest.warns(GeneralPositionWarning):
        t = tr.bregman_delaunay_2d(g, sq)
    assert len(t.triangles) == 2
    assert t.degenerate
    diag = t.edges() - {(0, 1), (1, 2), (2, 3), (0, 3)}
    assert diag in ({(0, 2)}, {(1, 3)})


def test_collinear_sites_rejected():
    with pytest.raises(DegenerateInput):
        tr.bregman_delaunay_2d(dv.shannon(2), [[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]])


@pytest.mark.parametrize("name", ["shannon", "burg", "exponential", "mahalanobis"])
def test_lower_hull_against_brute_force(name, rng):
    g = gen2(name)
    for _ in range(5):
        P = dv.random_points(g, 12, rng)
        t = tr.bregman_delaunay_2d(g, P)
        assert t.triangle_set() == tr.brute_force_lower_hull(P, g.f(P))
        assert tr.empty_sphere_check(g, t)


def test_triangles_are_ccw_and_adjacency_consistent(rng):
    g = dv.burg(2)
    P = dv.random_points(g, 20, rng)
    t = tr.bregman_delaunay_2d(g, P)
    for a, b, c in t.triangles:
        u, v = P[b] - P[a], P[c] - P[a]
        assert u[0] * v[1] - u[1] * v[0] > 0
    for ti, tri in enumerate(t.triangles):
        for m in range(3):
            o = t.adjacency[ti, m]
            if o < 0:
                continue
            shared = set(tri.tolist()) - {int(tri[m])}
            assert shared <= set(t.triangles[o].tolist())
            assert ti in t.adjacency[o].tolist()


def test_geodesic_triangulation_is_dual_of_diagram(rng):
    g = dv.shannon(2)
    P = dv.random_points(g, 15, rng)
    t = tr.geodesic_triangulation_2d(g, P)
    assert t.edges() == dg.first_type_adjacency(g, P)
    # triangles are CCW in gradient coordinates
    G = g.grad(P)
    for a, b, c in t.triangles:
        u, v = G[b] - G[a], G[c] - G[a]
        assert u[0] * v[1] - u[1] * v[0] > 0


def test_mahalanobis_geodesic_equivalent_to_delaunay(rng):
    g = gen2("mahalanobis")
    for _ in range(10):
        P = rng.uniform(-2, 2, size=(15, 2))
        assert tr.geodesic_triangulation_2d(g, P).edges() == tr.bregman_delaunay_2d(g, P).edges()


def test_geodesic_edges_are_gamma_arcs(rng):
    g = dv.shannon(2)
    P = dv.random_points(g, 8, rng)
    t = tr.geodesic_triangulation_2d(g, P)
    for (i, j), pts in t.edge_polylines(9).items():
        gp = g.grad(pts)
        lam = np.linspace(0, 1, 9)[:, None]
        assert np.allclose(gp, (1 - lam) * g.grad(P[i]) + lam * g.grad(P[j]), atol=1e-10)


def test_regular_pairs_and_flips(rng):
    g = dv.shannon(2)
    P = dv.random_points(g, 8, rng)
    t = tr.bregman_delaunay_2d(g, P)
    edges = tr.flippable_edges(t)
    assert edges
    assert all(tr.is_regular_pair(g, t, e) for e in edges)
    f = tr.flip_edge(t, edges[0])
    assert len(f.triangles) == len(t.triangles)
    assert not tr.empty_sphere_check(g, f)
    assert not all(tr.is_regular_pair(g, f, e) for e in tr.flippable_edges(f))


def test_optimality_minimises_max_enclosing_radius(rng):
    g = dv.shannon(2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeneralPositionWarning)
        P = dv.random_points(g, 7, rng)
        t = tr.bregman_delaunay_2d(g, P)
    best = tr.max_enclosing_radius(g, t)
    others = tr.all_triangulations(t, limit=2000)
    assert len(others) > 1
    for o in others:
        assert tr.max_enclosing_radius(g, o) >= best - 1e-9


def test_smallest_enclosing_ball_examples():
    g = dv.squared_half_norm(2)
    one = tr.smallest_enclosing_ball(g, [[0.3, 0.4]])
    assert one.ball.radius == 0.0
    two = tr.smallest_enclosing_ball(g, [[0, 0], [2, 0]])
    assert two.ball.center == pytest.approx([1.0, 0.0], abs=1e-6)
    assert two.ball.radius == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("name", ["shannon", "burg", "exponential"])
def test_smallest_enclosing_ball_against_primal(name, rng):
    g = gen2(name)
    P = dv.random_points(g, 6, rng)
    got = tr.smallest_enclosing_ball(g, P)
    # primal: minimise max_i D(p_i || c) directly with an epigraph variable
    x0 = np.r_[P.mean(axis=0), 10.0]
    cons = [{"type": "ineq", "fun": lambda z, p=p: z[2] - dv.divergence_unchecked(g, p, z[:2])}
            for p in P]
    lo, hi = g.domain.sample_box()
    res = minimize(lambda z: z[2], x0, constraints=cons, method="SLSQP",
                   bounds=[(lo[0], hi[0]), (lo[1], hi[1]), (0, None)],
                   options={"ftol": 1e-12, "maxiter": 500})
    assert got.ball.radius == pytest.approx(res.x[2], rel=1e-5, abs=1e-8)
    assert got.gap <= 1e-6 * (1 + got.ball.radius)


def test_delaunay_geodesic_duality_report(rng):
    g = dv.squared_half_norm(2)
    P = rng.uniform(0, 1, size=(15, 2))
    assert tr.compare_delaunay_geodesic(g, P).dual
    # shannon: the Delaunay kind is generally not the dual of the diagram
    sh = dv.shannon(2)
    reports = [tr.compare_delaunay_geodesic(sh, dv.random_points(sh, 15, rng)) for _ in range(10)]
    assert not all(r.dual for r in reports)
