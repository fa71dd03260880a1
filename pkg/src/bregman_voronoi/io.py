"""File formats: point CSV, versioned JSON documents, SVG figures and PPM rasters."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ParseError, ValidationError

FORMAT_VERSION = "bvd-1"

# ColorBrewer "Set3"; cell i uses PALETTE[i % 12]
PALETTE = ("#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
           "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f")
MASKED_RGB = (255, 255, 255)


# ---------------------------------------------------------------------------
# CSV


def parse_points_csv(text: str, dim: Optional[int] = None) -> np.ndarray:
    """One point per line, comma-separated reals.  Lines starting with ``#``
    and blank lines are skipped."""
    rows = []
    width = dim
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise ParseError(f"not a list of numbers: {raw!r}", lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite coordinate", lineno)
        if width is None:
            width = len(vals)
        if len(vals) != width:
            raise ParseError(f"expected {width} coordinates, got {len(vals)}", lineno)
        rows.append(vals)
    if not rows:
        raise ParseError("no points found")
    return np.array(rows, dtype=float)


def read_points_csv(path, dim: Optional[int] = None) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ValidationError(f"cannot read {path}: {e.strerror}") from None
    return parse_points_csv(text, dim)


def write_points_csv(path, pts) -> None:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    Path(path).write_text("".join(",".join(repr(float(v)) for v in row) + "\n" for row in pts))


# ---------------------------------------------------------------------------
# JSON


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
        return v
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(doc: dict) -> str:
    """Deterministic serialisation: sorted keys, shortest round-trip floats."""
    return json.dumps(_plain(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_json(path, doc: dict) -> None:
    Path(path).write_text(dumps(doc))


def read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", e.lineno) from None
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported document version {doc.get('version')!r}")
    return doc


def document(kind: str, payload: dict, generator=None, provenance=None) -> dict:
    doc = {"version": FORMAT_VERSION, "kind": kind, **payload}
    if generator is not None:
        doc["generator"] = dict(generator.spec)
    doc["provenance"] = provenance or {}
    return doc


def diagram_to_json(diagram, provenance=None) -> dict:
    cells = []
    for i, c in enumerate(diagram.cells):
        key = list(c.key) if isinstance(c.key, tuple) else c.key
        entry = {"id": i, "site": key, "polygon": c.polygon,
                 "edge_labels": c.edge_labels, "bounded": c.bounded, "curved": c.curved}
        if c.gradient_polygon is not None:
            entry["gradient_polygon"] = c.gradient_polygon
        cells.append(entry)
    payload = {"type": diagram.kind, "sites": diagram.sites, "clip": list(diagram.clip),
               "cells": cells}
    if diagram.weights is not None:
        payload["weights"] = diagram.weights
    if diagram.k is not None:
        payload["k"] = diagram.k
    if diagram.kind == "second":
        payload["edge_samples"] = diagram.edge_samples
    return document("diagram", payload, diagram.generator, provenance)


def diagram_from_json(doc: dict):
    from .diagram import Cell, PlanarDiagram
    from .divergence import generator_from_spec

    if doc.get("kind") != "diagram":
        raise ParseError("not a diagram document")
    gen = generator_from_spec(doc["generator"])
    cells = []
    for c in doc["cells"]:
        key = tuple(c["site"]) if isinstance(c["site"], list) else c["site"]
        gp = c.get("gradient_polygon")
        cells.append(Cell(key, np.array(c["polygon"], dtype=float).reshape(-1, 2),
                          np.array(c["edge_labels"], dtype=np.int64), c["bounded"],
                          c["curved"], None if gp is None else np.array(gp, float).reshape(-1, 2)))
    return PlanarDiagram(doc["type"], gen, np.array(doc["sites"], dtype=float),
                         tuple(doc["clip"]), cells,
                         None if "weights" not in doc else np.array(doc["weights"], float),
                         doc.get("k"), doc.get("edge_samples", 32))


def triangulation_to_json(tri, provenance=None, edge_samples: int = 0) -> dict:
    payload = {"type": tri.kind, "vertices": tri.vertices, "triangles": tri.triangles,
               "adjacency": tri.adjacency, "edges": sorted(tri.edges())}
    if edge_samples:
        payload["edge_polylines"] = [{"edge": list(e), "points": pts}
                                     for e, pts in tri.edge_polylines(edge_samples).items()]
    return document("triangulation", payload, tri.generator, provenance)


def triangulation_from_json(doc: dict):
    from .divergence import generator_from_spec
    from .triangulation import Triangulation

    if doc.get("kind") != "triangulation":
        raise ParseError("not a triangulation document")
    gen = generator_from_spec(doc["generator"]) if "generator" in doc else None
    return Triangulation(doc["type"], np.array(doc["vertices"], float),
                         np.array(doc["triangles"], np.int64).reshape(-1, 3),
                         np.array(doc["adjacency"], np.int64).reshape(-1, 3), gen)


_NUM = {"type": "number"}
_POINTS = {"type": "array", "items": {"type": "array", "items": _NUM}}

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "bvd-1 document",
    "type": "object",
    "required": ["version", "kind", "provenance"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "kind": {"enum": ["diagram", "triangulation", "raster", "lloyd", "kmeans",
                          "epsnet", "kl", "divergence", "selftest"]},
        "provenance": {"type": "object"},
        "generator": {"type": "object", "required": ["name"]},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "diagram"}}},
         "then": {"required": ["type", "sites", "clip", "cells", "generator"],
                  "properties": {
                      "type": {"enum": ["first", "second", "weighted", "k_order"]},
                      "sites": _POINTS,
                      "clip": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                      "cells": {"type": "array", "items": {
                          "type": "object",
                          "required": ["id", "site", "polygon", "edge_labels", "bounded",
                                       "curved"],
                          "properties": {"polygon": _POINTS,
                                         "bounded": {"type": "boolean"},
                                         "curved": {"type": "boolean"},
                                         "edge_labels": {"type": "array",
                                                         "items": {"type": "integer"}}}}}}}},
        {"if": {"properties": {"kind": {"const": "triangulation"}}},
         "then": {"required": ["type", "vertices", "triangles", "adjacency", "edges"],
                  "properties": {
                      "type": {"enum": ["delaunay", "geodesic"]},
                      "vertices": _POINTS,
                      "triangles": {"type": "array", "items": {
                          "type": "array", "items": {"type": "integer"},
                          "minItems": 3, "maxItems": 3}}}}},
        {"if": {"properties": {"kind": {"const": "raster"}}},
         "then": {"required": ["mode", "clip", "width", "height", "keys", "counts"]}},
        {"if": {"properties": {"kind": {"const": "lloyd"}}},
         "then": {"required": ["sites", "trace", "events", "iterations"]}},
        {"if": {"properties": {"kind": {"const": "kmeans"}}},
         "then": {"required": ["assignments", "centroids", "trace"]}},
        {"if": {"properties": {"kind": {"const": "epsnet"}}},
         "then": {"required": ["points", "epsilon", "error", "trace"]}},
        {"if": {"properties": {"kind": {"const": "kl"}}},
         "then": {"required": ["family", "kl_natural_bregman", "kl_closed_form", "abs_diff"]}},
        {"if": {"properties": {"kind": {"const": "divergence"}}},
         "then": {"required": ["value"]}},
    ],
}


# ---------------------------------------------------------------------------
# SVG


class _Frame:
    def __init__(self, clip, width: int):
        x0, y0, x1, y1 = (float(v) for v in clip)
        self.x0, self.y1 = x0, y1
        self.sx = width / (x1 - x0)
        self.width = width
        self.height = int(round((y1 - y0) * self.sx))

    def pts(self, P) -> str:
        P = np.asarray(P, dtype=float).reshape(-1, 2)
        return " ".join(f"{(x - self.x0) * self.sx:.6f},{(self.y1 - y) * self.sx:.6f}"
                        for x, y in P)


def svg_document(clip, cells=(), sites=None, polylines=(), width: int = 800,
                 stroke: str = "#333333") -> str:
    """SVG text.  ``cells`` is a sequence of ``(color_index, polygon)``;
    ``polylines`` are drawn on top (e.g. geodesic edges)."""
    fr = _Frame(clip, width)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{fr.width}" height="{fr.height}" '
           f'viewBox="0 0 {fr.width} {fr.height}">',
           f'<rect x="0" y="0" width="{fr.width}" height="{fr.height}" fill="#ffffff"/>']
    for idx, poly in cells:
        if len(poly) < 3:
            continue
        out.append(f'<polygon points="{fr.pts(poly)}" fill="{PALETTE[idx % len(PALETTE)]}" '
                   f'stroke="{stroke}" stroke-width="1"/>')
    for line in polylines:
        out.append(f'<polyline points="{fr.pts(line)}" fill="none" stroke="#000000" '
                   f'stroke-width="1.5"/>')
    if sites is not None:
        for x, y in np.asarray(sites, dtype=float).reshape(-1, 2):
            cx, cy = (x - fr.x0) * fr.sx, (fr.y1 - y) * fr.sx
            out.append(f'<circle cx="{cx:.6f}" cy="{cy:.6f}" r="3" fill="#000000"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def diagram_svg(diagram, width: int = 800, overlay=None) -> str:
    cells = []
    for i, c in enumerate(diagram.cells):
        color = c.key if isinstance(c.key, (int, np.integer)) else i
        cells.append((int(color), c.polygon))
    lines = [] if overlay is None else list(overlay.edge_polylines().values())
    return svg_document(diagram.clip, cells, diagram.sites, lines, width)


def triangulation_svg(tri, clip=None, width: int = 800, samples: int = 32) -> str:
    if clip is None:
        lo = tri.vertices.min(axis=0)
        hi = tri.vertices.max(axis=0)
        pad = 0.05 * max(hi - lo)
        clip = (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad)
    return svg_document(clip, (), tri.vertices, tri.edge_polylines(samples).values(), width)


def write_svg(path, text: str) -> None:
    Path(path).write_text(text)


# ---------------------------------------------------------------------------
# PPM


def _hex_rgb(h: str) -> tuple:
    return tuple(int(h[i:i + 2], 16) for i in (1, 3, 5))


def labels_to_rgb(labels: np.ndarray) -> np.ndarray:
    lut = np.array([_hex_rgb(h) for h in PALETTE], dtype=np.uint8)
    rgb = lut[np.mod(labels, len(PALETTE))]
    rgb[labels < 0] = MASKED_RGB
    return rgb


def ppm_bytes(labels: np.ndarray) -> bytes:
    """Binary P6 image; pixel (0, 0) is the clip rectangle's top-left corner."""
    labels = np.asarray(labels)
    h, w = labels.shape
    return f"P6\n{w} {h}\n255\n".encode() + labels_to_rgb(labels).tobytes()


def write_ppm(path, labels: np.ndarray) -> None:
    Path(path).write_bytes(ppm_bytes(labels))


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ParseError("not a binary PPM (P6) file")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)
