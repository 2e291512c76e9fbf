"""Grouped bar charts with error whiskers, written directly as SVG."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c")


def summarize(values) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != int(v) else str(int(v))


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = min((m * magnitude for m in (1, 2, 2.5, 5, 10) if m * magnitude >= raw), default=raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def bar_chart_svg(groups: dict[str, dict[str, list[float]]], title: str = "", ylabel: str = "value") -> str:
    """Render ``{label: {metric: [samples...]}}`` as a grouped bar chart.

    Each label becomes one ``<g class="bar-group">`` on the x-axis holding a
    bar per metric at the sample mean and a whisker spanning +-1 sample std.
    """
    labels = list(groups)
    metrics = sorted({m for per_label in groups.values() for m in per_label})
    stats = {
        (lab, m): summarize(groups[lab][m]) for lab in labels for m in metrics if groups[lab].get(m)
    }
    lows = [mean - std for mean, std in stats.values()] + [0.0]
    highs = [mean + std for mean, std in stats.values()] + [0.0]
    y_lo, y_hi = min(lows), max(highs)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    ticks = _nice_ticks(y_lo, y_hi)
    y_lo, y_hi = min(y_lo, ticks[0]), max(y_hi, ticks[-1])

    width_per_group = max(60, 28 * len(metrics) + 30)
    left, right, top, bottom = 70, 20 + 140, 40, 60
    plot_w = width_per_group * max(len(labels), 1)
    plot_h = 260
    W, H = left + plot_w + right, top + plot_h + bottom

    def ypos(v: float) -> float:
        return top + plot_h * (y_hi - v) / (y_hi - y_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append('<g class="axes" stroke="black">')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}"/>')
    out.append(f'<line x1="{left}" y1="{ypos(0):.2f}" x2="{left + plot_w}" y2="{ypos(0):.2f}"/>')
    out.append("</g>")
    for t in ticks:
        y = ypos(t)
        out.append(
            f'<g class="tick"><line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>'
            f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t)}</text></g>'
        )
    out.append(
        f'<text x="16" y="{top + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.1f})">{escape(ylabel)}</text>'
    )
    bar_w = 22
    for gi, lab in enumerate(labels):
        x0 = left + gi * width_per_group + (width_per_group - bar_w * len(metrics)) / 2
        out.append(f'<g class="bar-group" data-label="{escape(lab)}">')
        for mi, m in enumerate(metrics):
            if (lab, m) not in stats:
                continue
            mean, std = stats[(lab, m)]
            x = x0 + mi * bar_w
            y_top, y_base = ypos(max(mean, 0.0)), ypos(min(mean, 0.0))
            cx = x + bar_w / 2
            out.append(
                f'<rect class="bar" data-metric="{escape(m)}" data-mean="{mean!r}" data-std="{std!r}" '
                f'data-n="{len(groups[lab][m])}" x="{x + 2:.2f}" y="{y_top:.2f}" width="{bar_w - 4}" '
                f'height="{y_base - y_top:.2f}" fill="{PALETTE[mi % len(PALETTE)]}"/>'
            )
            y1, y2 = ypos(mean + std), ypos(mean - std)
            out.append(
                f'<g class="errorbar" stroke="black"><line x1="{cx:.2f}" y1="{y1:.2f}" x2="{cx:.2f}" y2="{y2:.2f}"/>'
                f'<line x1="{cx - 5:.2f}" y1="{y1:.2f}" x2="{cx + 5:.2f}" y2="{y1:.2f}"/>'
                f'<line x1="{cx - 5:.2f}" y1="{y2:.2f}" x2="{cx + 5:.2f}" y2="{y2:.2f}"/></g>'
            )
        lx = left + gi * width_per_group + width_per_group / 2
        out.append(f'<text class="x-label" x="{lx:.2f}" y="{top + plot_h + 20}" text-anchor="middle">{escape(lab)}</text>')
        out.append("</g>")
    for mi, m in enumerate(metrics):
        y = top + 10 + 18 * mi
        x = left + plot_w + 20
        out.append(
            f'<g class="legend"><rect x="{x}" y="{y - 9}" width="10" height="10" fill="{PALETTE[mi % len(PALETTE)]}"/>'
            f'<text x="{x + 16}" y="{y}">{escape(m)}</text></g>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
