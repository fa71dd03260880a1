"""``bvd`` command line: diagrams, triangulations, rasters, quantisation and
divergence queries, written as bvd-1 JSON with optional SVG/PPM figures.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from typing import Optional, Sequence

import numpy as np

from . import diagram as dg
from . import divergence as dv
from . import exp_family as ef
from . import io
from . import sampling as sp
from . import triangulation as tr
from .errors import BregmanError, NumericalError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


# ---------------------------------------------------------------------------
# argument helpers


def _floats(text: str, what: str, count: Optional[int] = None) -> list:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise ValidationError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not all(np.isfinite(vals)):
        raise ValidationError(f"{what}: values must be finite")
    if count is not None and len(vals) != count:
        raise ValidationError(f"{what}: expected {count} numbers, got {len(vals)}")
    return vals


def _clip(text: str) -> tuple:
    x0, y0, x1, y1 = _floats(text, "--clip", 4)
    if not (x1 > x0 and y1 > y0):
        raise ValidationError(f"--clip: empty rectangle {text}")
    return (x0, y0, x1, y1)


def generator_spec(args, dim: int = 2) -> dict:
    """Generator description from ``--gen`` (name or JSON object) plus options."""
    text = args.gen.strip()
    if text.startswith("{"):
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"--gen: invalid JSON ({e.msg})") from None
    else:
        spec = {"name": text}
    spec.setdefault("dim", dim)
    if getattr(args, "alpha", None) is not None:
        spec["alpha"] = args.alpha
    if getattr(args, "Q", None):
        rows = [_floats(r, "--Q") for r in args.Q.split(";")]
        spec["Q"] = rows
        spec["dim"] = len(rows)
    return spec


def make_generator(args, dim: int = 2) -> dv.Generator:
    return dv.generator_from_spec(generator_spec(args, dim))


def _provenance(argv, seed=None) -> dict:
    return {"argv": list(argv), "seed": seed}


def _emit(doc: dict, out: Optional[str]) -> None:
    text = io.dumps(doc)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _domain(args) -> sp.DomainPolygon:
    if args.polygon:
        verts = io.read_points_csv(args.polygon, 2)
        return sp.DomainPolygon(verts, args.margin)
    x0, y0, x1, y1 = _clip(args.domain)
    return sp.DomainPolygon.box(x0, y0, x1, y1, args.margin)


def _weights(args, n: int):
    if args.weights is None:
        return None
    try:
        w = io.read_points_csv(args.weights, 1)[:, 0]
    except (ValidationError, OSError):
        w = np.array(_floats(args.weights, "--weights"))
    if len(w) != n:
        raise ValidationError(f"--weights: expected {n} values, got {len(w)}")
    return w


# ---------------------------------------------------------------------------
# subcommands


def cmd_diagram(args, argv) -> int:
    gen = make_generator(args)
    sites = io.read_points_csv(args.input, 2)
    clip = _clip(args.clip)
    if args.type == "first":
        d = dg.first_type_diagram_2d(gen, sites, clip)
    elif args.type == "second":
        d = dg.second_type_diagram_2d(gen, sites, clip, args.edge_samples)
    elif args.type == "weighted":
        w = _weights(args, len(sites))
        if w is None:
            raise ValidationError("--type weighted needs --weights")
        d = dg.weighted_first_type_diagram_2d(gen, sites, w, clip)
    else:
        if args.k is None:
            raise ValidationError("--type k_order needs --k")
        d = dg.k_order_diagram_2d(gen, sites, args.k, clip)
    doc = io.diagram_to_json(d, _provenance(argv, args.seed))
    if args.check:
        mode = {"k_order": "k_order", "weighted": "weighted"}.get(d.kind, d.kind)
        exact, claims = dg.rasterize_diagram(d, args.grid)
        oracle = dg.raster_diagram(gen, sites, mode, clip, args.grid, weights=d.weights, k=d.k)
        a = dg.compare_labels(exact, oracle, claims)
        doc["oracle_check"] = {"grid": args.grid, "agreement": a.agreement,
                               "coverage": a.coverage, "compared": a.compared, "ok": a.ok()}
    _emit(doc, args.out)
    if args.svg:
        io.write_svg(args.svg, io.diagram_svg(d))
    return EXIT_OK


def cmd_triangulate(args, argv) -> int:
    gen = make_generator(args)
    sites = io.read_points_csv(args.input, 2)
    if args.type == "delaunay":
        t = tr.bregman_delaunay_2d(gen, sites)
    else:
        t = tr.geodesic_triangulation_2d(gen, sites)
    _emit(io.triangulation_to_json(t, _provenance(argv, args.seed), args.edge_samples),
          args.out)
    if args.svg:
        clip = _clip(args.clip) if args.clip else None
        io.write_svg(args.svg, io.triangulation_svg(t, clip, samples=args.edge_samples or 32))
    return EXIT_OK


def cmd_raster(args, argv) -> int:
    gen = make_generator(args)
    sites = io.read_points_csv(args.input, 2)
    clip = _clip(args.clip)
    r = dg.raster_diagram(gen, sites, args.mode, clip, args.grid,
                          weights=_weights(args, len(sites)), k=args.k)
    counts = np.bincount(r.labels[r.labels >= 0].ravel(), minlength=len(r.keys))
    payload = {"mode": r.mode, "clip": list(r.clip), "width": r.shape[1], "height": r.shape[0],
               "keys": [list(k) if isinstance(k, tuple) else k for k in r.keys],
               "counts": counts, "sites": sites}
    if args.labels:
        payload["labels"] = r.labels
    _emit(io.document("raster", payload, gen, _provenance(argv, args.seed)), args.out)
    if args.ppm:
        io.write_ppm(args.ppm, r.labels)
    return EXIT_OK


def cmd_lloyd(args, argv) -> int:
    gen = make_generator(args)
    dom = _domain(args)
    init = io.read_points_csv(args.init, 2) if args.init else args.seed
    res = sp.lloyd(gen, dom, args.k, init=init, max_iter=args.max_iter, tol=args.tol,
                   resolution=args.grid)
    payload = {"domain": dom.vertices, "margin": dom.margin, "k": args.k, "sites": res.sites,
               "trace": res.trace, "events": res.events, "iterations": res.iterations,
               "converged": res.converged}
    _emit(io.document("lloyd", payload, gen, _provenance(argv, args.seed)), args.out)
    if args.svg:
        x0, y0, x1, y1 = dom.bbox
        d = dg.first_type_diagram_2d(gen, res.sites, (x0, y0, x1, y1))
        io.write_svg(args.svg, io.diagram_svg(d))
    return EXIT_OK


def cmd_kmeans(args, argv) -> int:
    data = io.read_points_csv(args.input)
    gen = make_generator(args, data.shape[1])
    init = io.read_points_csv(args.init, data.shape[1]) if args.init else args.seed
    res = sp.bregman_kmeans(gen, data, args.k, init=init, max_iter=args.max_iter)
    payload = {"k": args.k, "assignments": res.assignments, "centroids": res.centroids,
               "trace": res.trace, "events": res.events, "iterations": res.iterations}
    _emit(io.document("kmeans", payload, gen, _provenance(argv, args.seed)), args.out)
    return EXIT_OK


def cmd_epsnet(args, argv) -> int:
    gen = make_generator(args)
    dom = _domain(args)
    seeds = io.read_points_csv(args.seeds, 2) if args.seeds else None
    run = sp.eps_net(gen, dom, args.eps, seeds=seeds)
    payload = {"domain": dom.vertices, "margin": dom.margin, "epsilon": run.epsilon,
               "points": run.points, "error": run.error, "trace": run.trace,
               "sparsity_violations": sp.net_sparsity_violations(gen, run.points, args.eps)}
    _emit(io.document("epsnet", payload, gen, _provenance(argv, args.seed)), args.out)
    if args.svg:
        x0, y0, x1, y1 = dom.bbox
        io.write_svg(args.svg, io.svg_document((x0, y0, x1, y1), [(0, dom.vertices)],
                                               run.points))
    return EXIT_OK


def cmd_kl(args, argv) -> int:
    fam = ef.family_by_name(args.family)
    p = _floats(args.p, "--p")
    q = _floats(args.q, "--q")
    out = ef.kl_from_source(fam, p, q)
    payload = {"family": fam.name, "p": p, "q": q, "source_names": list(fam.source_names),
               **out, "value": out["kl_natural_bregman"]}
    _emit(io.document("kl", payload, None, _provenance(argv)), args.out)
    return EXIT_OK


def cmd_divergence(args, argv) -> int:
    p = _floats(args.p, "--p")
    q = _floats(args.q, "--q")
    if len(p) != len(q):
        raise ValidationError("--p and --q must have the same length")
    gen = make_generator(args, len(p))
    if args.kind == "bregman":
        val = dv.eval_divergence(gen, p, q)
    elif args.kind == "symmetrized":
        val = dv.symmetrized_divergence(gen, p, q)
    else:
        val = dv.eval_divergence(gen, q, p)
    payload = {"kind_of_divergence": args.kind, "p": p, "q": q, "value": float(val)}
    _emit(io.document("divergence", payload, gen, _provenance(argv)), args.out)
    return EXIT_OK


def cmd_selftest(args, argv) -> int:
    from . import selftest

    results = selftest.run(args.seed or 0)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<20} {r.detail}  ({r.seconds:.2f}s)")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bvd", description="Bregman Voronoi diagram toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, gen=True, seed=True):
        if gen:
            p.add_argument("--gen", default="squared_half_norm",
                           help="generator name or JSON spec (see 'bvd divergence --help')")
            p.add_argument("--alpha", type=int, help="exponent for norm_like")
            p.add_argument("--Q", help="mahalanobis matrix, rows separated by ';'")
        if seed:
            p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="JSON output path (default: stdout)")

    p = sub.add_parser("diagram", help="exact planar Voronoi diagram")
    common(p)
    p.add_argument("--type", choices=["first", "second", "weighted", "k_order"], default="first")
    p.add_argument("--in", dest="input", required=True, help="site CSV")
    p.add_argument("--clip", required=True, help="xmin,ymin,xmax,ymax")
    p.add_argument("--weights", help="CSV file or comma list of additive weights")
    p.add_argument("--k", type=int)
    p.add_argument("--edge-samples", type=int, default=dg.EDGE_SAMPLES)
    p.add_argument("--check", action="store_true", help="compare against the raster oracle")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("triangulate", help="Bregman Delaunay or geodesic triangulation")
    common(p)
    p.add_argument("--type", choices=["delaunay", "geodesic"], default="delaunay")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--clip", help="SVG viewport (default: padded bounding box)")
    p.add_argument("--edge-samples", type=int, default=0,
                   help="also store sampled edge curves in the JSON")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_triangulate)

    p = sub.add_parser("raster", help="brute-force label raster")
    common(p)
    p.add_argument("--mode", choices=["first", "second", "symmetrized", "weighted", "k_order"],
                   default="first")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--clip", required=True)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--weights")
    p.add_argument("--k", type=int)
    p.add_argument("--labels", action="store_true", help="include the label grid in the JSON")
    p.add_argument("--ppm")
    p.set_defaults(func=cmd_raster)

    for name, func, helptext in (("lloyd", cmd_lloyd, "centroidal Voronoi relaxation"),
                                 ("epsnet", cmd_epsnet, "greedy epsilon-net")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--domain", default="0,0,1,1", help="box xmin,ymin,xmax,ymax")
        p.add_argument("--polygon", help="CSV of convex domain vertices (overrides --domain)")
        p.add_argument("--margin", type=float, default=0.0,
                       help="required clearance from the generator's domain boundary")
        p.add_argument("--svg")
        if name == "lloyd":
            p.add_argument("--k", type=int, required=True)
            p.add_argument("--init", help="CSV of initial sites (default: random from --seed)")
            p.add_argument("--max-iter", type=int, default=50)
            p.add_argument("--tol", type=float, default=1e-9)
            p.add_argument("--grid", type=int, default=512)
        else:
            p.add_argument("--eps", type=float, required=True)
            p.add_argument("--seeds", help="CSV of initial points (default: domain centroid)")
        p.set_defaults(func=func)

    p = sub.add_parser("kmeans", help="Bregman k-means on a point CSV")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--init")
    p.add_argument("--max-iter", type=int, default=100)
    p.set_defaults(func=cmd_kmeans)

    p = sub.add_parser("kl", help="KL divergence between exponential-family members")
    common(p, gen=False, seed=False)
    p.add_argument("--family", required=True, choices=sorted(ef.FAMILIES))
    p.add_argument("--p", required=True, help="source parameters of the first law")
    p.add_argument("--q", required=True, help="source parameters of the second law")
    p.set_defaults(func=cmd_kl)

    p = sub.add_parser("divergence", help="evaluate a divergence between two points",
                       epilog="generators: " + ", ".join(dv.generator_names()))
    common(p, seed=False)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--kind", choices=["bregman", "reverse", "symmetrized"], default="bregman")
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("selftest", help="run the invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest, out=None)
    return ap


def _origin(exc: BaseException) -> str:
    tb = traceback.extract_tb(exc.__traceback__)
    for frame in reversed(tb):
        if "bregman_voronoi" in frame.filename:
            mod = frame.filename.replace("\\", "/").rsplit("/", 1)[-1].removesuffix(".py")
            return f"bregman_voronoi.{mod}"
    return "bregman_voronoi"


# options whose values may start with "-" (negative coordinates)
_NUMERIC_LIST_OPTS = ("--clip", "--domain", "--p", "--q", "--weights", "--Q")


def _join_negative_values(argv: list) -> list:
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _NUMERIC_LIST_OPTS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args, argv)
    except ValidationError as e:
        print(f"error: {_origin(e)}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"error: {_origin(e)}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BregmanError as e:
        print(f"error: {_origin(e)}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry() -> None:
    sys.exit(main())
