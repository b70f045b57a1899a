from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

WIDTH, HEIGHT = 480, 320
MARGIN = 48
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Axes:
    """Maps data coordinates into a plotting box of an SVG canvas."""

    def __init__(self, x_range, y_range, left=0.0, top=0.0, width=WIDTH, height=HEIGHT):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.left, self.top = left + MARGIN, top + MARGIN / 2
        self.w, self.h = width - 1.5 * MARGIN, height - 1.5 * MARGIN

    def px(self, x):
        return self.left + (np.asarray(x, dtype=float) - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return self.top + self.h - (np.asarray(y, dtype=float) - self.y0) / (self.y1 - self.y0) * self.h

    def frame(self, title: str, xlabel: str, ylabel: str, n_ticks: int = 5) -> list[str]:
        out = [
            f'<rect x="{_fmt(self.left)}" y="{_fmt(self.top)}" width="{_fmt(self.w)}" height="{_fmt(self.h)}" '
            'fill="none" stroke="#333"/>',
            f'<text x="{_fmt(self.left + self.w / 2)}" y="{_fmt(self.top - 6)}" text-anchor="middle" font-size="13">{escape(title)}</text>',
            f'<text x="{_fmt(self.left + self.w / 2)}" y="{_fmt(self.top + self.h + 34)}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>',
            f'<text x="{_fmt(self.left - 36)}" y="{_fmt(self.top + self.h / 2)}" text-anchor="middle" font-size="11" '
            f'transform="rotate(-90 {_fmt(self.left - 36)} {_fmt(self.top + self.h / 2)})">{escape(ylabel)}</text>',
        ]
        for t in np.linspace(self.x0, self.x1, n_ticks):
            out.append(f'<text x="{_fmt(self.px(t))}" y="{_fmt(self.top + self.h + 14)}" text-anchor="middle" font-size="9">{t:.3g}</text>')
        for t in np.linspace(self.y0, self.y1, n_ticks):
            out.append(f'<text x="{_fmt(self.left - 4)}" y="{_fmt(self.py(t) + 3)}" text-anchor="end" font-size="9">{t:.3g}</text>')
        return out


def _document(body: list[str], width: int = WIDTH, height: int = HEIGHT) -> str:
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def _segments(x: np.ndarray, y: np.ndarray):
    """Runs of consecutive finite values; undefined stretches leave gaps."""
    ok = np.isfinite(x) & np.isfinite(y)
    start = None
    for k, flag in enumerate(np.append(ok, False)):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            yield x[start:k], y[start:k]
            start = None


def _finite_range(arrays, pad: float = 0.05) -> tuple[float, float]:
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo or abs(hi) or 1.0
    return lo - pad * span, hi + pad * span


def line_plot(
    x: np.ndarray,
    series: Sequence[tuple[str, np.ndarray]],
    title: str = "",
    xlabel: str = "r (m)",
    ylabel: str = "",
    band: tuple[np.ndarray, np.ndarray] | None = None,
    dashed: Sequence[str] = (),
) -> str:
    x = np.asarray(x, dtype=float)
    arrays = [s for _, s in series] + (list(band) if band is not None else [])
    ax = _Axes((float(x.min()), float(x.max())), _finite_range(arrays))
    body = ax.frame(title, xlabel, ylabel)

    if band is not None:
        lower, upper = (np.asarray(b, dtype=float) for b in band)
        for (xs, lo), (_, hi) in zip(_segments(x, lower), _segments(x, upper)):
            pts = [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(ax.px(xs), ax.py(hi))]
            pts += [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(ax.px(xs[::-1]), ax.py(lo[::-1]))]
            body.append(f'<polygon points="{" ".join(pts)}" fill="#bbbbbb" fill-opacity="0.6" stroke="none"/>')

    for k, (label, y) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        style = ' stroke-dasharray="5,3"' if label in dashed else ""
        for xs, ys in _segments(x, np.asarray(y, dtype=float)):
            pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(ax.px(xs), ax.py(ys)))
            body.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"{style}/>')
        body.append(
            f'<text x="{_fmt(ax.left + 8)}" y="{_fmt(ax.top + 14 + 12 * k)}" font-size="10" fill="{colour}">{escape(label)}</text>'
        )
    return _document(body)


def envelope_plot(envelope, title: str = "") -> str:
    """Observed curve over the grey pointwise envelope, with the Poisson reference dashed."""
    kind = title or "summary function"
    return line_plot(
        envelope.r.r_values,
        [("observed", envelope.observed), ("Poisson", envelope.reference)],
        title=f"{kind}: {envelope.nsim} simulations",
        ylabel=kind,
        band=(envelope.lower, envelope.upper),
        dashed=("Poisson",),
    )


def curves_plot(functions, title: str = "") -> str:
    """Several summary functions on one r grid, one line each."""
    series = [(f.kind.value, f.value) for f in functions]
    return line_plot(functions[0].r.r_values, series, title=title)


def heatmap(surface, title: str = "intensity") -> str:
    """Grid cells shaded from white (zero) to dark green (maximum)."""
    nx, ny = surface.shape
    aspect = surface.window.height / surface.window.width
    width = WIDTH
    height = int(round(MARGIN * 1.5 + (WIDTH - 1.5 * MARGIN) * aspect))
    ax = _Axes(
        (surface.window.x_min, surface.window.x_max),
        (surface.window.y_min, surface.window.y_max),
        width=width, height=height,
    )
    top = surface.max() or 1.0
    cw, ch = ax.w / nx, ax.h / ny
    body = []
    for i in range(nx):
        for j in range(ny):
            level = surface.values[i, j] / top
            shade = int(round(255 * (1.0 - level)))
            body.append(
                f'<rect x="{_fmt(ax.left + i * cw)}" y="{_fmt(ax.top + ax.h - (j + 1) * ch)}" '
                f'width="{_fmt(cw + 0.05)}" height="{_fmt(ch + 0.05)}" fill="rgb({shade},{min(255, shade + 60)},{shade})"/>'
            )
    body += ax.frame(f"{title} (max {top:.3g} per m²)", "x (m)", "y (m)")
    return _document(body, width, height)


def histogram_counts(values, lo: float, hi: float, width: float) -> tuple[np.ndarray, np.ndarray]:
    """Counts on bins of the given width covering [lo, hi]; the last bin is closed."""
    n_bins = int(round((hi - lo) / width))
    edges = np.linspace(lo, hi, n_bins + 1)
    vals = np.asarray(values, dtype=float)
    counts, _ = np.histogram(vals[np.isfinite(vals)], bins=edges)
    return counts, edges


def pvalue_histogram(p_values, title: str = "p-values") -> str:
    """p-value histogram on [0, 1] with 0.05 bins, next to a zoomed [0, 0.1] panel with 0.005 bins."""
    panels = [
        (histogram_counts(p_values, 0.0, 1.0, 0.05), title),
        (histogram_counts(p_values, 0.0, 0.1, 0.005), f"{title}, zoomed"),
    ]
    body = []
    for k, ((counts, edges), label) in enumerate(panels):
        ax = _Axes((edges[0], edges[-1]), (0.0, float(max(counts.max(initial=0), 1))), left=k * WIDTH)
        for c, a, b in zip(counts, edges[:-1], edges[1:]):
            if c == 0:
                continue
            body.append(
                f'<rect x="{_fmt(ax.px(a))}" y="{_fmt(ax.py(c))}" width="{_fmt(ax.px(b) - ax.px(a))}" '
                f'height="{_fmt(ax.py(0) - ax.py(c))}" fill="{PALETTE[0]}" stroke="white"/>'
            )
        body += ax.frame(label, "p-value", "count")
    return _document(body, 2 * WIDTH, HEIGHT)
