"""Deterministic file emission: CSV/JSON with provenance headers, minimal SVG plots."""
from __future__ import annotations

import json
import math
import os
import tempfile
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 500
_MARGIN = dict(left=90, right=30, top=50, bottom=60)
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def fmt(value) -> str:
    """12 significant digits in scientific notation; integers and strings pass through."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.11e}"
    return str(value)


def _csv_field(value) -> str:
    s = fmt(value)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def csv_text(header_lines, columns, rows) -> str:
    lines = [f"# {h}" for h in header_lines]
    lines.append(",".join(columns))
    lines.extend(",".join(_csv_field(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def json_text(header_lines, payload) -> str:
    # JSON has no comments; the provenance block is the first key instead
    doc = {"header": list(header_lines)}
    doc.update(_jsonable(payload))
    return json.dumps(doc, indent=2) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file so failures leave nothing behind."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".metaspin-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def svg_line_plot(series, *, header_lines=(), title="", xlabel="", ylabel="", vlines=()) -> str:
    """Polyline plot on a fixed 800x500 canvas with linear axes.

    ``series`` is a sequence of ``(label, xs, ys)``; ``vlines`` a sequence of
    ``(x, label)`` drawn dashed.
    """
    xs_all = [float(x) for _, xs, _ in series for x in xs]
    ys_all = [float(y) for _, _, ys in series for y in ys if math.isfinite(float(y))]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all + [0.0]), max(ys_all)
    if y1 == y0:
        y1 = y0 + 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    pw = WIDTH - _MARGIN["left"] - _MARGIN["right"]
    ph = HEIGHT - _MARGIN["top"] - _MARGIN["bottom"]

    def px(x):
        return _MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return _MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f"<!-- {escape(h.replace('--', '- -'))} -->" for h in header_lines]
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    left, top = _MARGIN["left"], _MARGIN["top"]
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 20}" font-size="12" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" font-size="12" text-anchor="end">{t:.3g}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="28" font-size="16" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 15}" font-size="13" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="20" y="{top + ph / 2}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 20 {top + ph / 2})">{escape(ylabel)}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys)
                       if math.isfinite(float(y)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = top + 18 + 18 * i
        out.append(f'<line x1="{left + pw - 150}" y1="{ly}" x2="{left + pw - 125}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 120}" y="{ly + 4}" font-size="12">{escape(label)}</text>')
    for x, label in vlines:
        if x0 <= x <= x1:
            X = px(float(x))
            out.append(f'<line x1="{X:.2f}" y1="{top}" x2="{X:.2f}" y2="{top + ph}" stroke="gray" '
                       f'stroke-dasharray="6,4"/>')
            out.append(f'<text x="{X + 4:.2f}" y="{top + 14}" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
