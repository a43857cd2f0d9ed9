"""Deterministic figure documents: SVG cylinder iterates and PPM rasters.

Both formats are written byte-for-byte reproducibly from (spec, seed, args),
so tests and the determinism gate can compare payloads directly.  Interval
systems (d = 1) render as stacked rows of segments, one row per level; planar
systems render nested rectangles tagged with their level.
"""

from __future__ import annotations

import numpy as np

from .errors import BudgetError, SchemaError
from .estimator import PointCloud
from .rifs import BoundingBox, RealizationTree, attractor_box, cylinder_rect
from .symbolic import enumerate_level

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_MAX_PRIMITIVES = 200_000


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def render_iterates(tree: RealizationTree, levels: int, *, size: int = 720) -> str:
    """SVG document with the first `levels` cylinder iterates of a realization."""
    spec = tree.spec
    if spec.d > 2:
        raise SchemaError("iterate rendering supports d = 1 or d = 2 only")
    total = sum(spec.N**m for m in range(levels + 1))
    if total > _MAX_PRIMITIVES:
        raise BudgetError(f"{total} primitives exceed the render budget")
    box = attractor_box(spec)
    body = []
    if spec.d == 2:
        w, h = float(box.width[0]), float(box.width[1])
        sx, sy = size / w, size / h
        for m in range(levels + 1):
            color = _PALETTE[m % len(_PALETTE)]
            for word in enumerate_level(spec.N, m):
                rect = cylinder_rect(tree, word, box)
                x0 = (rect.lo[0] - box.lo[0]) * sx
                y0 = (box.hi[1] - rect.hi[1]) * sy
                body.append(
                    f'<rect class="level-{m}" x="{_fmt(x0)}" y="{_fmt(y0)}" '
                    f'width="{_fmt(rect.width[0] * sx)}" height="{_fmt(rect.width[1] * sy)}" '
                    f'fill="{color}" fill-opacity="0.12" stroke="{color}" stroke-width="0.6"/>')
        height = size
    else:
        w = float(box.width[0])
        sx = size / w
        row_h, gap = 26.0, 8.0
        for m in range(levels + 1):
            color = _PALETTE[m % len(_PALETTE)]
            y0 = m * (row_h + gap)
            for word in enumerate_level(spec.N, m):
                rect = cylinder_rect(tree, word, box)
                x0 = (rect.lo[0] - box.lo[0]) * sx
                body.append(
                    f'<rect class="level-{m}" x="{_fmt(x0)}" y="{_fmt(y0)}" '
                    f'width="{_fmt(rect.width[0] * sx)}" height="{_fmt(row_h)}" '
                    f'fill="{color}" stroke="none"/>')
        height = int((levels + 1) * (row_h + gap))
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{height}" '
            f'viewBox="0 0 {size} {height}">\n<rect width="100%" height="100%" fill="white"/>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def render_cloud(cloud: PointCloud, resolution: int, box: BoundingBox) -> bytes:
    """Binary PPM (P6) raster of a planar cloud: white background, black hits."""
    if box.lo.shape[0] != 2:
        raise SchemaError("cloud rasterization needs a planar (d = 2) system")
    img = np.full((resolution, resolution, 3), 255, dtype=np.uint8)
    if cloud.count:
        rel = (cloud.points - box.lo) / box.width
        px = np.clip((rel[:, 0] * resolution).astype(np.int64), 0, resolution - 1)
        py = np.clip(((1.0 - rel[:, 1]) * resolution).astype(np.int64), 0, resolution - 1)
        img[py, px] = 0
    header = f"P6\n{resolution} {resolution}\n255\n".encode("ascii")
    return header + img.tobytes()
