"""Deterministic table and chart emission.

Every byte written here is a pure function of the data: floats are
printed with 17 significant digits so parsing them back returns the
same IEEE value, booleans are lowercase words, and the SVG charts are
assembled from the series alone, with no timestamps, font files, or
other environment leakage.  Reruns with the same inputs must produce
identical files; the test suite diffs them byte for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence


__all__ = [
    "format_value",
    "write_csv",
    "read_csv",
    "write_json",
    "render_line_chart",
    "write_text",
]


def format_value(value) -> str:
    """Render one cell: round-trippable floats, bare ints, plain text."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError(f"refusing to emit non-finite value {value!r}")
        return format(value, ".17g")
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        raise ValueError(f"cell text needs quoting, not supported: {text!r}")
    return text


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a table with a fixed column order and LF line endings."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(
                f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Inverse of :func:`write_csv` at the string level."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty table")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"{path}: ragged row {row!r}")
    return header, rows


def write_json(path, obj) -> None:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="ascii")


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="ascii")


_PALETTE = ("#1b6ca8", "#c23b22", "#2e8540", "#7d3c98", "#b7950b", "#117a8b")

_WIDTH = 720
_HEIGHT = 480
_MARGIN_L = 72
_MARGIN_R = 24
_MARGIN_T = 40
_MARGIN_B = 56


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _fmt_tick(v: float) -> str:
    return format(v, ".4g")


def render_line_chart(
    series: Mapping[str, Sequence[tuple[float, float]]],
    *,
    title: str,
    x_label: str,
    y_label: str,
    hline: Optional[tuple[str, float]] = None,
) -> str:
    """Build a self-contained SVG line chart.

    ``series`` maps legend names to (x, y) point lists; an optional
    ``hline`` draws one labeled horizontal reference line.  Output is a
    deterministic function of the arguments.
    """
    pts = [p for s in series.values() for p in s]
    if not pts:
        raise ValueError("nothing to plot")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if hline is not None:
        ys.append(hline[1])
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    pad = (y_hi - y_lo) * 0.08 or max(abs(y_lo), 1.0) * 0.05
    y_lo -= pad
    y_hi += pad
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">')
    out.append(f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>')
    out.append(
        f'<text x="{_WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>')
    out.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#444"/>')
    for tx in _ticks(x_lo, x_hi):
        x = px(tx)
        out.append(
            f'<line x1="{x:.2f}" y1="{_MARGIN_T + plot_h}" x2="{x:.2f}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="#444"/>')
        out.append(
            f'<text x="{x:.2f}" y="{_MARGIN_T + plot_h + 20}" '
            f'text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{_fmt_tick(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        y = py(ty)
        out.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{y:.2f}" x2="{_MARGIN_L}" '
            f'y2="{y:.2f}" stroke="#444"/>')
        out.append(
            f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(ty)}</text>')
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.2f}" y="{_HEIGHT - 12}" '
        f'text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{x_label}</text>')
    out.append(
        f'<text x="18" y="{_MARGIN_T + plot_h / 2:.2f}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {_MARGIN_T + plot_h / 2:.2f})">'
        f'{y_label}</text>')
    if hline is not None:
        name, level = hline
        y = py(level)
        out.append(
            f'<line x1="{_MARGIN_L}" y1="{y:.2f}" '
            f'x2="{_MARGIN_L + plot_w}" y2="{y:.2f}" stroke="#888" '
            f'stroke-dasharray="6 4"/>')
        out.append(
            f'<text x="{_MARGIN_L + plot_w - 4}" y="{y - 5:.2f}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="#666">{name}</text>')
    legend_y = _MARGIN_T + 14
    for pos, (name, data) in enumerate(series.items()):
        color = _PALETTE[pos % len(_PALETTE)]
        path = " ".join(
            f'{"M" if i == 0 else "L"}{px(x):.2f},{py(y):.2f}'
            for i, (x, y) in enumerate(data))
        out.append(
            f'<path d="{path}" fill="none" stroke="{color}" '
            f'stroke-width="1.8"/>')
        for x, y in data:
            out.append(
                f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.6" '
                f'fill="{color}"/>')
        out.append(
            f'<rect x="{_MARGIN_L + 10}" y="{legend_y - 9}" width="14" '
            f'height="4" fill="{color}"/>')
        out.append(
            f'<text x="{_MARGIN_L + 30}" y="{legend_y - 3}" '
            f'font-family="sans-serif" font-size="12">{name}</text>')
        legend_y += 18
    out.append("</svg>")
    return "\n".join(out) + "\n"
