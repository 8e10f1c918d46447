"""Minimal self-contained SVG log-log scatter with fitted power-law lines."""

import math

STYLES = {
    "pseudo": ("#d62728", "cross"),
    "oracle": ("#17becf", "triangle"),
    "naive": ("#1f77b4", "circle"),
}


def _marker(kind, x, y, color):
    if kind == "cross":
        return (f'<path d="M{x - 5:.2f},{y - 5:.2f}L{x + 5:.2f},{y + 5:.2f}'
                f'M{x - 5:.2f},{y + 5:.2f}L{x + 5:.2f},{y - 5:.2f}" '
                f'stroke="{color}" stroke-width="2"/>')
    if kind == "triangle":
        return (f'<path d="M{x:.2f},{y - 6:.2f}L{x + 6:.2f},{y + 5:.2f}'
                f'L{x - 6:.2f},{y + 5:.2f}Z" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>')
    return (f'<circle cx="{x:.2f}" cy="{y:.2f}" r="5" fill="none" '
            f'stroke="{color}" stroke-width="1.5"/>')


def loglog_svg(points, fits, width=560, height=420):
    """Render ``points[rule] = [(n, risk), ...]`` and ``fits[rule] = (alpha, intercept)``."""
    margin = 60
    xs = [math.log(n) for pts in points.values() for n, _ in pts]
    ys = [math.log(r) for pts in points.values() for _, r in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    padx = 0.05 * (x1 - x0 or 1.0)
    pady = 0.1 * (y1 - y0 or 1.0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady

    def px(lx):
        return margin + (lx - x0) / (x1 - x0) * (width - 2 * margin)

    def py(ly):
        return height - margin - (ly - y0) / (y1 - y0) * (height - 2 * margin)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
           f'y2="{height - margin}" stroke="black"/>',
           f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
           f'y2="{height - margin}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle" '
           f'font-family="sans-serif" font-size="13">n (log scale)</text>',
           f'<text x="18" y="{height / 2}" text-anchor="middle" '
           f'font-family="sans-serif" font-size="13" '
           f'transform="rotate(-90 18 {height / 2})">excess risk (log scale)</text>']
    for n in sorted({n for pts in points.values() for n, _ in pts}):
        x = px(math.log(n))
        out.append(f'<text x="{x:.2f}" y="{height - margin + 16}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{n}</text>')
    for i, rule in enumerate(sorted(points)):
        color, kind = STYLES.get(rule, ("#555555", "circle"))
        if rule in fits:
            alpha, icpt = fits[rule]
            a, b = x0 + padx, x1 - padx
            out.append(f'<line x1="{px(a):.2f}" y1="{py(icpt - alpha * a):.2f}" '
                       f'x2="{px(b):.2f}" y2="{py(icpt - alpha * b):.2f}" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        for n, r in points[rule]:
            out.append(_marker(kind, px(math.log(n)), py(math.log(r)), color))
        label = rule if rule not in fits else f"{rule} (alpha={fits[rule][0]:.3f})"
        ly = margin + 10 + 18 * i
        out.append(_marker(kind, width - margin - 150, ly, color))
        out.append(f'<text x="{width - margin - 138}" y="{ly + 4}" '
                   f'font-family="sans-serif" font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
