"""Acceptance suite: thirteen criteria at their stated tolerances.

Each test records a one-line verdict that is printed in the terminal
summary (and by ``python tests/test_acceptance.py``).
"""
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial import Delaunay, cKDTree

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE, ANALYTIC, gen2  # noqa: E402

from bregman_voronoi import diagram as dg  # noqa: E402
from bregman_voronoi import divergence as dv  # noqa: E402
from bregman_voronoi import exp_family as ef  # noqa: E402
from bregman_voronoi import geom_core as gc  # noqa: E402
from bregman_voronoi import sampling as sp  # noqa: E402
from bregman_voronoi import triangulation as tr  # noqa: E402
from bregman_voronoi.errors import GeneralPositionWarning  # noqa: E402


def record(num: int, ok: bool, detail: str) -> None:
    prev = ACCEPTANCE.get(num)
    if prev is not None:
        ok = ok and prev[0]
        detail = prev[1] + "; " + detail
    ACCEPTANCE[num] = (bool(ok), detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


def pairs(g, rng, n):
    out = []
    while sum(len(o) for o in out) < n:
        out.append(dv.random_points(g, n, rng))
    return np.vstack(out)[:n]


# 1 -------------------------------------------------------------------------


def test_criterion_01_duality_identity():
    rng = np.random.default_rng(1)
    worst = {}
    for name in ANALYTIC:
        g = gen2(name)
        p, q = pairs(g, rng, 1000), pairs(g, rng, 1000)
        d = dv.eval_divergence(g, p, q)
        dd = dv.dual_divergence(g, g.grad(q), g.grad(p))
        worst[name] = float(np.max(np.abs(d - dd) / (1 + np.abs(d))))
    ok = max(worst.values()) <= 1e-8
    record(1, ok, f"8 generators x 1000 pairs, max |D - D*|/(1+|D|) = {max(worst.values()):.2e}")
    assert ok, worst


# 2 -------------------------------------------------------------------------


def test_criterion_02_three_point_property():
    rng = np.random.default_rng(2)
    worst = 0.0
    names = list(ANALYTIC) + ["mahalanobis", "norm_like", "burg_dual", "hellinger_like_dual"]
    for name in names:
        g = gen2(name)
        p, q, r = (pairs(g, rng, 1000) for _ in range(3))
        res = gc.three_point_gap(g, p, q, r)
        scale = 1 + (np.abs(dv.eval_divergence(g, p, q)) + np.abs(dv.eval_divergence(g, q, r))
                     + np.abs(dv.eval_divergence(g, p, r)))
        worst = max(worst, float(np.max(np.abs(res) / scale)))
    ok = worst <= 1e-9
    record(2, ok, f"{len(names)} generators x 1000 triples, max residual/scale = {worst:.2e}")
    assert ok


# 3 -------------------------------------------------------------------------


def test_criterion_03_power_diagram_equivalence():
    rng = np.random.default_rng(3)
    names = list(ANALYTIC) + ["mahalanobis"]
    violations = 0
    banded = 0
    for name in names:
        g = gen2(name)
        sites = pairs(g, rng, 40)
        balls = dg.to_power_balls(g, sites)
        x = pairs(g, rng, 1000)
        i = rng.integers(0, len(sites), 1000)
        j = rng.integers(0, len(sites), 1000)
        di = dv.eval_divergence(g, x, sites[i])
        dj = dv.eval_divergence(g, x, sites[j])
        pi = np.array([balls[a].power(x[m]) for m, a in enumerate(i)])
        pj = np.array([balls[b].power(x[m]) for m, b in enumerate(j)])
        scale = 1 + np.abs(di) + np.abs(dj)
        band = np.abs(di - dj) <= 1e-9 * scale
        banded += int(band.sum())
        violations += int(np.sum((np.sign(di - dj) != np.sign(pi - pj)) & ~band))
    ok = violations == 0
    record(3, ok, f"{len(names)} generators x 1000 (x,i,j), {violations} violations "
                  f"({banded} in the tolerance band)")
    assert ok


# 4 -------------------------------------------------------------------------

C4_SETUP = {
    "shannon": ((0.05, 0.05, 0.95, 0.95), 0.08),
    "burg": ((0.05, 0.05, 0.95, 0.95), 0.3),
    "exponential": ((-1.0, -1.0, 1.0, 1.0), 0.15),
    "mahalanobis": ((-1.0, -1.0, 1.0, 1.0), 0.3),
}


@pytest.mark.parametrize("name", sorted(C4_SETUP))
def test_criterion_04_exact_vs_oracle(name):
    rng = np.random.default_rng(4 + sorted(C4_SETUP).index(name))
    g = gen2(name)
    clip, wscale = C4_SETUP[name]
    lo = np.array(clip[:2])
    hi = np.array(clip[2:])
    worst = 1.0
    for n in (3, 10, 50):
        sites = lo + (hi - lo) * rng.uniform(0.03, 0.97, size=(n, 2))
        weights = wscale * rng.uniform(0, 1, n)
        for kind in ("first", "weighted", "k_order"):
            if kind == "first":
                d = dg.first_type_diagram_2d(g, sites, clip)
                oracle = dg.raster_diagram(g, sites, "first", clip, 512)
            elif kind == "weighted":
                d = dg.weighted_first_type_diagram_2d(g, sites, weights, clip)
                oracle = dg.raster_diagram(g, sites, "weighted", clip, 512, weights=weights)
            else:
                d = dg.k_order_diagram_2d(g, sites, 2, clip)
                oracle = dg.raster_diagram(g, sites, "k_order", clip, 512, k=2)
            exact, claims = dg.rasterize_diagram(d, 512)
            a = dg.compare_labels(exact, oracle, claims)
            worst = min(worst, a.agreement, a.coverage)
    ok = worst >= 0.995
    record(4, ok, f"{name}: min agreement over n in (3,10,50) x 3 kinds = {worst:.5f}")
    assert ok


# 5 -------------------------------------------------------------------------


def _euclid_labels(sites, clip, res):
    grid = dg.pixel_centers(clip, res).reshape(-1, 2)
    d, idx = cKDTree(sites).query(grid, k=2)
    tie = np.abs(d[:, 1] ** 2 - d[:, 0] ** 2) <= 1e-9
    return idx[:, 0].reshape(res, res), tie.reshape(res, res)


def test_criterion_05_euclidean_specialization():
    rng = np.random.default_rng(5)
    g = gen2("squared_half_norm")
    clip = (0.0, 0.0, 1.0, 1.0)
    res = 256
    bad = {"first": 0, "second": 0, "delaunay": 0, "geodesic": 0}
    for _ in range(50):
        sites = rng.uniform(0, 1, size=(20, 2))
        ref, tie = _euclid_labels(sites, clip, res)
        for kind in ("first", "second"):
            if kind == "first":
                d = dg.first_type_diagram_2d(g, sites, clip)
            else:
                d = dg.second_type_diagram_2d(g, sites, clip)
            exact, claims = dg.rasterize_diagram(d, res)
            keys = np.array([c.key for c in d.cells])
            lab = np.where(exact.labels >= 0, keys[exact.labels], -1)
            if np.any((lab != ref) & ~tie) or np.any((claims != 1) & ~tie):
                bad[kind] += 1
        scipy_tris = {tuple(sorted(t)) for t in Delaunay(sites).simplices.tolist()}
        if tr.bregman_delaunay_2d(g, sites).triangle_set() != scipy_tris:
            bad["delaunay"] += 1
        if tr.geodesic_triangulation_2d(g, sites).triangle_set() != scipy_tris:
            bad["geodesic"] += 1
    ok = not any(bad.values())
    record(5, ok, f"50 instances x 20 sites, mismatching instances {bad}")
    assert ok


# 6 and 7 -------------------------------------------------------------------

TRI_GENERATORS = list(ANALYTIC) + ["mahalanobis"]


def _instances(name, count=50, n=15):
    rng = np.random.default_rng(6 + TRI_GENERATORS.index(name))
    g = gen2(name)
    for _ in range(count):
        yield g, pairs(g, rng, n)


@pytest.mark.parametrize("name", TRI_GENERATORS)
def test_criterion_06_empty_sphere(name):
    violations = 0
    checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeneralPositionWarning)
        for g, sites in _instances(name):
            t = tr.bregman_delaunay_2d(g, sites)
            violations += len(tr.empty_sphere_violations(g, t))
            checked += len(t.triangles) * (len(sites) - 3)
    ok = violations == 0
    record(6, ok, f"{name}: {violations} violations in {checked} (triangle, site) tests")
    assert ok


@pytest.mark.parametrize("name", TRI_GENERATORS)
def test_criterion_07_geodesic_duality(name):
    mismatches = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeneralPositionWarning)
        for g, sites in _instances(name):
            t = tr.geodesic_triangulation_2d(g, sites)
            if t.edges() != dg.first_type_adjacency(g, sites):
                mismatches += 1
    ok = mismatches == 0
    record(7, ok, f"{name}: {mismatches}/50 edge-set mismatches")
    assert ok


# 8 -------------------------------------------------------------------------


def _random_source(name, rng):
    if name == "bernoulli":
        return [rng.uniform(0.02, 0.98)]
    if name == "poisson":
        return [rng.uniform(0.1, 20.0)]
    return [rng.uniform(-5, 5), rng.uniform(0.1, 10.0)]


def test_criterion_08_kl_bridge():
    rng = np.random.default_rng(8)
    worst = 0.0
    for name in ("bernoulli", "poisson", "normal"):
        fam = ef.family_by_name(name)
        for _ in range(100):
            out = ef.kl_from_source(fam, _random_source(name, rng), _random_source(name, rng))
            worst = max(worst, out["abs_diff"] / abs(out["kl_closed_form"]))
    spot = ef.kl_from_source(ef.bernoulli(), [0.5], [0.25])["kl_natural_bregman"]
    ok = worst <= 1e-8 and abs(spot - 0.5 * np.log(4 / 3)) <= 1e-12
    record(8, ok, f"3 families x 100 pairs, max relative diff {worst:.2e}; "
                  f"Bernoulli(0.5||0.25) = {spot:.6f}")
    assert ok


# 9 -------------------------------------------------------------------------


def _random_region(rng, clip, pts):
    lo = np.array(clip[:2])
    hi = np.array(clip[2:])
    c = lo + (hi - lo) * rng.uniform(0.3, 0.7, 2)
    rad = rng.uniform(0.15, 0.3) * (hi - lo).min()
    mask = np.sum((pts - c) ** 2, axis=-1) <= rad ** 2
    a = rng.normal(size=2) * 3 / (hi - lo)
    dens = np.exp(pts @ a) * mask
    return dens


@pytest.mark.parametrize("name", ["shannon", "burg", "exponential"])
def test_criterion_09_centroid_minimiser(name):
    rng = np.random.default_rng(9 + ["shannon", "burg", "exponential"].index(name))
    g = gen2(name)
    clip = (0.05, 0.05, 0.95, 0.95)
    res = 512
    cell = (clip[2] - clip[0]) / res
    pts = dg.pixel_centers(clip, res).reshape(-1, 2)
    worst = 0.0
    for _ in range(3):
        w = _random_region(rng, clip, pts)
        centroid = sp.region_centroid(pts, w, w > 0)
        # sum_x w(x) D(x||c) = const - M F(c) - <grad F(c), m1 - M c>, for every grid c
        M = w.sum()
        m1 = w @ pts
        obj = -M * g.f(pts) - np.sum(g.grad(pts) * (m1 - M * pts), axis=1)
        best = pts[int(np.argmin(obj))]
        worst = max(worst, float(np.max(np.abs(best - centroid))) / cell)
    ok = worst <= 1.0
    record(9, ok, f"{name}: 3 regions, grid argmin within {worst:.3f} cells of the centroid")
    assert ok


# 10 ------------------------------------------------------------------------


def _monotone(trace):
    return all(b <= a + 1e-9 * abs(a) for a, b in zip(trace, trace[1:]))


def test_criterion_10_lloyd_kmeans():
    rng = np.random.default_rng(10)
    dom = sp.DomainPolygon.box(0.05, 0.05, 0.95, 0.95, margin=0.05)
    failures = 0
    runs = 0
    for run in range(10):
        name = ("shannon", "burg", "squared_half_norm", "exponential", "bit_entropy")[run % 5]
        g = gen2(name)
        k = int(rng.integers(2, 9))
        res = sp.lloyd(g, dom, k, init=run, max_iter=30, resolution=128)
        failures += not _monotone(res.trace)
        runs += 1
    for run in range(10):
        name = ("shannon", "burg", "squared_half_norm", "exponential", "mahalanobis")[run % 5]
        g = gen2(name)
        data = pairs(g, rng, 300)
        res = sp.bregman_kmeans(g, data, int(rng.integers(2, 9)), init=run)
        failures += not _monotone(res.trace)
        runs += 1
    # k = 1: the single site is the mass centroid / data mean
    g = gen2("burg")
    grid = sp.Grid.over(dom.bbox, 128)
    x = grid.centers.reshape(-1, 2)
    x = x[dom.contains(x)]
    l1 = sp.lloyd(g, dom, 1, max_iter=10, resolution=128)
    err_l = float(np.max(np.abs(l1.sites[0] - x.mean(axis=0))))
    data = pairs(gen2("shannon"), rng, 500)
    k1 = sp.bregman_kmeans(gen2("shannon"), data, 1)
    err_k = float(np.max(np.abs(k1.centroids[0] - data.mean(axis=0))))
    ok = failures == 0 and err_l <= 1e-6 and err_k <= 1e-6
    record(10, ok, f"{runs} runs, {failures} non-monotone; k=1 error lloyd {err_l:.1e}, "
                   f"k-means {err_k:.1e}")
    assert ok


# 11 ------------------------------------------------------------------------

EPSILONS = (0.08, 0.04, 0.02, 0.01)


def _net_checks(g, dom, eps):
    run = sp.eps_net(g, dom, eps)
    P = run.points
    certified = sp.sample_error(g, P, dom)
    # independent coverage probe on a dense grid (can only under-estimate)
    grid = dg.pixel_centers(dom.bbox, 256).reshape(-1, 2)
    probe = float(np.max(np.min(dv.eval_divergence(g, grid[:, None, :], P[None]), axis=1)))
    D = dv.eval_divergence(g, P[:, None, :], P[None, :, :])
    M = np.maximum(D, D.T)
    sparse = bool(np.all(M[np.triu_indices(len(P), 1)] > eps))
    return len(P), certified, probe, sparse


@pytest.mark.parametrize("name", ["shannon", "squared_half_norm"])
def test_criterion_11_eps_net(name):
    g = gen2(name)
    dom = sp.DomainPolygon.box(0.05, 0.05, 0.95, 0.95, margin=0.05)
    sizes = []
    covered = True
    sparse_all = True
    for eps in EPSILONS:
        n, cert, probe, sparse = _net_checks(g, dom, eps)
        sizes.append(n)
        covered &= cert <= eps and probe <= cert + 1e-12
        sparse_all &= sparse
    slope = float(np.polyfit(np.log(1 / np.array(EPSILONS)), np.log(sizes), 1)[0])
    ok = covered and sparse_all and 0.8 <= slope <= 1.3
    record(11, ok, f"{name}: sizes {sizes}, covered={covered}, sparse={sparse_all}, "
                   f"slope {slope:.3f} (target [0.8, 1.3])")
    assert covered and sparse_all
    assert 0.8 <= slope <= 1.3, f"log-log size slope {slope:.3f} outside [0.8, 1.3]"


# 12 ------------------------------------------------------------------------


@pytest.mark.parametrize("name", list(ANALYTIC) + ["mahalanobis"])
def test_criterion_12_fatness(name):
    rng = np.random.default_rng(12)
    g = gen2(name)
    lo, hi = (np.asarray(v, float) for v in g.domain.sample_box())
    box = (lo, hi)
    t = np.linspace(0, 1, 200)[:, None]
    failures = 0
    for _ in range(100):
        c = lo + (hi - lo) * rng.uniform(0.2, 0.8, 2)
        perim = np.vstack([lo + t * [hi[0] - lo[0], 0], [hi[0], lo[1]] + t * [0, hi[1] - lo[1]],
                           hi - t * [hi[0] - lo[0], 0], [lo[0], hi[1]] - t * [0, hi[1] - lo[1]]])
        rmax = float(np.min(dv.eval_divergence(g, perim, c)))
        r = rng.uniform(0.05, 0.9) * rmax
        s = gc.euclidean_sandwich(g, gc.BregmanBall("first", c, r), box)
        if not (s.r_in ** 2 >= 0.5 * s.gamma_in * r and s.r_out ** 2 <= 2 * s.gamma_out * r):
            failures += 1
    ok = failures == 0
    record(12, ok, f"{name}: {failures}/100 balls outside the sandwich bounds")
    assert ok


# 13 ------------------------------------------------------------------------


def _all_generators():
    out = [gen2(n) for n in ANALYTIC]
    out += [gen2("mahalanobis"), dv.norm_like(3, 2), dv.norm_like(4, 2),
            dv.generator_from_spec({"name": "norm_like_dual", "alpha": 3, "dim": 2}),
            dv.generator_from_spec({"name": "burg_dual", "dim": 2}),
            dv.generator_from_spec({"name": "hellinger_like_dual", "dim": 2}),
            dv.generator_from_spec({"name": "squared_norm_dual", "dim": 2}),
            dv.make_separable([dv.shannon(1), dv.burg(1)]),
            dv.linear_combination([dv.shannon(2), dv.burg(2)], [0.3, 1.7]),
            dv.add_affine(dv.exponential(2), [0.5, -1.0], 2.0)]
    return out


def test_criterion_13_gradient_checks():
    rng = np.random.default_rng(13)
    worst = {}
    gens = _all_generators()
    for g in gens:
        x = pairs(g, rng, 100)
        h = 1e-6 * (1 + np.abs(x))
        num = np.empty_like(x)
        for i in range(g.dim):
            e = np.zeros(g.dim)
            e[i] = 1.0
            num[:, i] = (g.f(x + h[:, i:i + 1] * e) - g.f(x - h[:, i:i + 1] * e)) / (2 * h[:, i])
        ana = g.grad(x)
        rel = np.linalg.norm(num - ana, axis=1) / (1 + np.linalg.norm(ana, axis=1))
        worst[g.name] = float(rel.max())
    top = max(worst.values())
    ok = top <= 1e-5
    record(13, ok, f"{len(gens)} generators x 100 points, max relative error {top:.2e}")
    assert ok, worst


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
