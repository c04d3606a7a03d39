"""Minimal deterministic SVG scatter plot (byte-stable across reruns)."""

from __future__ import annotations


def scatter_svg(
    points: list[tuple[float, float]],
    line: list[tuple[float, float]],
    xlabel: str,
    ylabel: str,
    title: str,
    width: int = 640,
    height: int = 420,
) -> str:
    ml, mr, mt, mb = 60, 20, 36, 48
    pw, ph = width - ml - mr, height - mt - mb
    xs = [p[0] for p in points] + [p[0] for p in line]
    ys = [p[1] for p in points] + [p[1] for p in line] + [0.0]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad_x = 0.05 * (x1 - x0)
    pad_y = 0.08 * (y1 - y0)
    x0, x1 = x0 - pad_x, x1 + pad_x
    y0, y1 = y0 - pad_y, y1 + pad_y

    def px(x: float) -> float:
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y: float) -> float:
        return mt + (y1 - y) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.1f}" y="20" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
    ]
    zero_y = py(0.0)
    if mt <= zero_y <= mt + ph:
        parts.append(
            f'<line x1="{ml}" y1="{zero_y:.2f}" x2="{ml+pw}" y2="{zero_y:.2f}" '
            f'stroke="#bbb" stroke-dasharray="4,3"/>'
        )
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        parts.append(
            f'<text x="{px(xv):.2f}" y="{height-28}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{ml-8}" y="{py(yv)+4:.2f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{ml + pw/2:.1f}" y="{height-8}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{mt + ph/2:.1f}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {mt + ph/2:.1f})">{ylabel}</text>'
    )
    for x, y in points:
        parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3.5" fill="#2266cc" fill-opacity="0.7"/>')
    if line:
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in line)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="#cc3322" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
