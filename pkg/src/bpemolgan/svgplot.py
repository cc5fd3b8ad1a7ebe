"""Minimal standalone SVG charts: overlaid histograms and labelled scatter plots."""

from __future__ import annotations

from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=60, right=20, top=40, bottom=50)
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728")


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, title: str, xlim, ylim, xlabel: str, ylabel: str):
        self.xlim, self.ylim = xlim, ylim
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        ]
        self._axes(xlabel, ylabel)

    def sx(self, x: float) -> float:
        lo, hi = self.xlim
        span = hi - lo or 1.0
        return MARGIN["left"] + (x - lo) / span * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def sy(self, y: float) -> float:
        lo, hi = self.ylim
        span = hi - lo or 1.0
        return HEIGHT - MARGIN["bottom"] - (y - lo) / span * (HEIGHT - MARGIN["top"] - MARGIN["bottom"])

    def _axes(self, xlabel: str, ylabel: str) -> None:
        x0, x1 = self.sx(self.xlim[0]), self.sx(self.xlim[1])
        y0, y1 = self.sy(self.ylim[0]), self.sy(self.ylim[1])
        self.parts.append(f'<path d="M{x0:.1f},{y1:.1f} V{y0:.1f} H{x1:.1f}" stroke="black" fill="none"/>')
        for k in range(5):
            fx = self.xlim[0] + (self.xlim[1] - self.xlim[0]) * k / 4
            fy = self.ylim[0] + (self.ylim[1] - self.ylim[0]) * k / 4
            px, py = self.sx(fx), self.sy(fy)
            self.parts.append(f'<text x="{px:.1f}" y="{y0 + 16:.1f}" text-anchor="middle">{_fmt(fx)}</text>')
            self.parts.append(f'<text x="{x0 - 6:.1f}" y="{py + 4:.1f}" text-anchor="end">{_fmt(fy)}</text>')
        self.parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
        self.parts.append(
            f'<text transform="translate(16,{(y0 + y1) / 2:.1f}) rotate(-90)" text-anchor="middle">{escape(ylabel)}</text>'
        )

    def legend(self, labels) -> None:
        for k, label in enumerate(labels):
            y = MARGIN["top"] + 4 + 16 * k
            x = WIDTH - MARGIN["right"] - 130
            self.parts.append(f'<rect x="{x}" y="{y}" width="10" height="10" fill="{PALETTE[k % len(PALETTE)]}"/>')
            self.parts.append(f'<text x="{x + 16}" y="{y + 9}">{escape(label)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def histogram_svg(edges, series: dict[str, list[int]], title: str, xlabel: str = "scaled value") -> str:
    """Overlay of count histograms sharing bin edges, each normalised to a fraction."""
    fracs = {}
    for name, counts in series.items():
        total = sum(counts) or 1
        fracs[name] = [c / total for c in counts]
    top = max((max(f) for f in fracs.values() if f), default=1.0) or 1.0
    cv = _Canvas(title, (edges[0], edges[-1]), (0.0, top * 1.1), xlabel, "fraction")
    n = len(series)
    for k, (name, f) in enumerate(fracs.items()):
        colour = PALETTE[k % len(PALETTE)]
        for b, v in enumerate(f):
            lo, hi = cv.sx(edges[b]), cv.sx(edges[b + 1])
            w = (hi - lo) / n
            x = lo + k * w
            y = cv.sy(v)
            h = cv.sy(0.0) - y
            cv.parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{colour}" fill-opacity="0.8"/>')
    cv.legend(list(series))
    return cv.render()


def scatter_svg(labels: list[str], xs, ys, title: str) -> str:
    groups = list(dict.fromkeys(labels))
    pad = lambda lo, hi: (lo - 0.05 * (hi - lo or 1), hi + 0.05 * (hi - lo or 1))
    cv = _Canvas(title, pad(min(xs), max(xs)), pad(min(ys), max(ys)), "PC1", "PC2")
    for label, x, y in zip(labels, xs, ys):
        colour = PALETTE[groups.index(label) % len(PALETTE)]
        cv.parts.append(f'<circle cx="{cv.sx(x):.2f}" cy="{cv.sy(y):.2f}" r="2" fill="{colour}" fill-opacity="0.6"/>')
    cv.legend(groups)
    return cv.render()
