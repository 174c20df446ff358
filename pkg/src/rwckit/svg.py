"""Minimal deterministic SVG 1.1 emission for line charts.

No timestamps, no generated ids, fixed coordinate formatting: identical
inputs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

# fixed 10-color palette; stroke color for cluster c is PALETTE[c % 10]
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _num(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


class SvgCanvas:
    """Accumulates SVG elements and renders one standalone document."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self._parts: list[str] = []

    def line(self, x1, y1, x2, y2, stroke="#333333", width=1.0, cls=None):
        c = f' class="{cls}"' if cls else ""
        self._parts.append(
            f'<line{c} x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" '
            f'y2="{_num(y2)}" stroke="{stroke}" stroke-width="{_num(width)}"/>'
        )

    def polyline(self, points, stroke, width=1.5, cls=None):
        c = f' class="{cls}"' if cls else ""
        coords = " ".join(f"{_num(x)},{_num(y)}" for x, y in points)
        self._parts.append(
            f'<polyline{c} points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_num(width)}"/>'
        )

    def circle(self, cx, cy, r, fill, cls=None):
        c = f' class="{cls}"' if cls else ""
        self._parts.append(
            f'<circle{c} cx="{_num(cx)}" cy="{_num(cy)}" r="{_num(r)}" '
            f'fill="{fill}"/>'
        )

    def ring(self, cx, cy, r, stroke, width=2.0, cls=None):
        c = f' class="{cls}"' if cls else ""
        self._parts.append(
            f'<circle{c} cx="{_num(cx)}" cy="{_num(cy)}" r="{_num(r)}" '
            f'fill="none" stroke="{stroke}" stroke-width="{_num(width)}"/>'
        )

    def text(self, x, y, content, size=11, anchor="middle", fill="#333333"):
        self._parts.append(
            f'<text x="{_num(x)}" y="{_num(y)}" font-family="sans-serif" '
            f'font-size="{size}" text-anchor="{anchor}" fill="{fill}">'
            f"{escape(content)}</text>"
        )

    def render(self) -> str:
        body = "\n".join(self._parts)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">\n'
            f"{body}\n</svg>\n"
        )

    def write(self, path) -> None:
        Path(path).write_text(self.render(), encoding="utf-8")


class LinearScale:
    """Affine map from data range to pixel range."""

    def __init__(self, lo: float, hi: float, px_lo: float, px_hi: float):
        if hi == lo:
            hi = lo + 1.0
        self.lo, self.hi = lo, hi
        self.px_lo, self.px_hi = px_lo, px_hi

    def __call__(self, v: float) -> float:
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.px_lo + frac * (self.px_hi - self.px_lo)


def format_tick(v: float) -> str:
    return f"{v:.4g}"
