"""Quick invariant suite behind ``bvd selftest``: small instances of every
structural check, each run against an independent computation."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import diagram as dg
from . import divergence as dv
from . import exp_family as ef
from . import geom_core as gc
from . import io
from . import sampling as sp
from . import triangulation as tr

ANALYTIC = ("squared_norm", "squared_half_norm", "shannon", "exponential", "burg",
            "bit_entropy", "dual_bit_entropy", "hellinger_like")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _pairs(gen, rng, n):
    return dv.random_points(gen, n, rng), dv.random_points(gen, n, rng)


def check_duality(rng) -> str:
    worst = 0.0
    for name in ANALYTIC:
        g = dv.generator_from_spec({"name": name, "dim": 2})
        p, q = _pairs(g, rng, 200)
        m = min(len(p), len(q))
        p, q = p[:m], q[:m]
        d = dv.eval_divergence(g, p, q)
        dd = dv.dual_divergence(g, g.grad(q), g.grad(p))
        worst = max(worst, float(np.max(np.abs(d - dd) / (1 + np.abs(d)))))
    assert worst <= 1e-8, f"relative error {worst:.3g}"
    return f"max relative error {worst:.2e}"


def check_three_point(rng) -> str:
    worst = 0.0
    for name in ANALYTIC:
        g = dv.generator_from_spec({"name": name, "dim": 2})
        p, q = _pairs(g, rng, 200)
        r = dv.random_points(g, 200, rng)
        m = min(len(p), len(q), len(r))
        res = gc.three_point_gap(g, p[:m], q[:m], r[:m])
        scale = 1 + np.abs(dv.eval_divergence(g, p[:m], r[:m]))
        worst = max(worst, float(np.max(np.abs(res) / scale)))
    assert worst <= 1e-9, f"residual {worst:.3g}"
    return f"max scaled residual {worst:.2e}"


def check_power_equivalence(rng) -> str:
    g = dv.shannon(2)
    sites = dv.random_points(g, 8, rng)
    balls = dg.to_power_balls(g, sites)
    x = dv.random_points(g, 300, rng)
    D = dv.eval_divergence(g, x[:, None, :], sites[None, :, :])
    P = np.stack([b.power(x) for b in balls], axis=1)
    assert np.array_equal(np.argmin(D, axis=1), np.argmin(P, axis=1))
    return "argmin orders agree on 300 probes"


def check_diagram_oracle(rng) -> str:
    g = dv.shannon(2)
    clip = (0.05, 0.05, 0.95, 0.95)
    sites = rng.uniform(0.1, 0.9, size=(10, 2))
    d = dg.first_type_diagram_2d(g, sites, clip)
    exact, claims = dg.rasterize_diagram(d, 128)
    oracle = dg.raster_diagram(g, sites, "first", clip, 128)
    a = dg.compare_labels(exact, oracle, claims)
    assert a.ok(), f"agreement {a.agreement:.4f}"
    return f"agreement {a.agreement:.4f} on {a.compared} pixels"


def check_empty_sphere(rng) -> str:
    g = dv.burg(2)
    sites = rng.uniform(0.2, 2.0, size=(12, 2))
    t = tr.bregman_delaunay_2d(g, sites)
    bad = tr.empty_sphere_violations(g, t)
    assert not bad, f"{len(bad)} violations"
    return f"{len(t.triangles)} triangles, no violations"


def check_geodesic_duality(rng) -> str:
    g = dv.exponential(2)
    sites = rng.uniform(-1.0, 1.0, size=(12, 2))
    t = tr.geodesic_triangulation_2d(g, sites)
    adj = dg.first_type_adjacency(g, sites)
    assert t.edges() == adj, "edge set differs from diagram adjacency"
    return f"{len(adj)} edges match"


def check_kl_bridge(rng) -> str:
    out = ef.kl_from_source(ef.poisson(), [2.0], [1.0])
    assert abs(out["kl_natural_bregman"] - 0.386294361) < 1e-8
    assert out["abs_diff"] <= 1e-12
    return f"poisson KL {out['kl_natural_bregman']:.6f}"


def check_gradients(rng) -> str:
    worst = 0.0
    for name in ANALYTIC:
        g = dv.generator_from_spec({"name": name, "dim": 2})
        x = dv.random_points(g, 20, rng)
        h = 1e-6 * (1 + np.abs(x))
        num = np.empty_like(x)
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1.0
            num[:, i] = (g.f(x + h * e) - g.f(x - h * e)) / (2 * h[:, i])
        ana = g.grad(x)
        worst = max(worst, float(np.max(np.abs(num - ana) / (1 + np.abs(ana)))))
    assert worst <= 1e-5, f"relative error {worst:.3g}"
    return f"max relative error {worst:.2e}"


def check_lloyd(rng) -> str:
    g = dv.shannon(2)
    dom = sp.DomainPolygon.box(0.05, 0.05, 0.95, 0.95, margin=0.05)
    res = sp.lloyd(g, dom, 4, init=int(rng.integers(1 << 30)), max_iter=10, resolution=64)
    t = res.trace
    assert all(b <= a + 1e-9 * abs(a) for a, b in zip(t, t[1:])), "objective increased"
    return f"{res.iterations} iterations, objective {t[-1]:.4g}"


def check_json_roundtrip(rng) -> str:
    g = dv.shannon(2)
    sites = rng.uniform(0.1, 0.9, size=(5, 2))
    d = dg.first_type_diagram_2d(g, sites, (0.05, 0.05, 0.95, 0.95))
    text = io.dumps(io.diagram_to_json(d))
    again = io.dumps(io.diagram_to_json(io.diagram_from_json(io.json.loads(text))))
    assert text == again, "round trip changed the document"
    return f"{len(text)} bytes identical"


CHECKS: list[tuple[str, Callable]] = [
    ("duality", check_duality),
    ("three_point", check_three_point),
    ("power_equivalence", check_power_equivalence),
    ("diagram_vs_raster", check_diagram_oracle),
    ("empty_sphere", check_empty_sphere),
    ("geodesic_duality", check_geodesic_duality),
    ("kl_bridge", check_kl_bridge),
    ("gradients", check_gradients),
    ("lloyd_monotone", check_lloyd),
    ("json_roundtrip", check_json_roundtrip),
]


def run(seed: int = 0) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            detail = fn(rng)
            ok = True
        except AssertionError as e:
            ok, detail = False, str(e) or "assertion failed"
        except Exception as e:  # report, keep going
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return out
