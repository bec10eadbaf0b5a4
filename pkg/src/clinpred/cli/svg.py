"""Plain SVG charts on a fixed 800x600 canvas.

Coordinates are printed with two decimals so the same data always gives the
same bytes.  Every chart has a title, labelled axes and ticks; element
classes (``marker``, ``diagonal``, ``curve``, ``bar``) make the files easy to
inspect in tests.
"""
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 90, 40, 60, 80
INK = "#222222"
ACCENT = "#1f5fa8"
MUTED = "#b0b0b0"


def _f(v):
    return f"{float(v):.2f}"


def _label(v):
    text = f"{v:.3g}"
    return "0" if text == "-0" else text


def nice_ticks(lo, hi, n=8):
    """Round tick positions (steps of 1, 2 or 5 times a power of ten) inside [lo, hi]."""
    span = hi - lo
    raw = span / max(n - 1, 1)
    mag = 10.0 ** np.floor(np.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = np.ceil(lo / step - 1e-9) * step
    ticks = np.arange(first, hi + step * 1e-9, step)
    return [(float(t), _label(round(t / step) * step)) for t in ticks]


class Canvas:
    def __init__(self, title, xlabel, ylabel, xlim=(0.0, 1.0), ylim=(0.0, 1.0), left=LEFT):
        self.left = left
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.xlim = (float(xlim[0]), float(xlim[1]) if xlim[1] > xlim[0] else float(xlim[0]) + 1.0)
        self.ylim = (float(ylim[0]), float(ylim[1]) if ylim[1] > ylim[0] else float(ylim[0]) + 1.0)
        self.body = []

    # data -> pixel
    def x(self, v):
        lo, hi = self.xlim
        return self.left + (float(v) - lo) / (hi - lo) * (WIDTH - self.left - RIGHT)

    def y(self, v):
        lo, hi = self.ylim
        return HEIGHT - BOTTOM - (float(v) - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM)

    def line(self, x0, y0, x1, y1, cls="line", color=INK, dash=None, width=1.5):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.body.append(
            f'<line class="{cls}" x1="{_f(self.x(x0))}" y1="{_f(self.y(y0))}" x2="{_f(self.x(x1))}" '
            f'y2="{_f(self.y(y1))}" stroke="{color}" stroke-width="{width}"{extra}/>'
        )

    def polyline(self, xs, ys, cls="curve", color=ACCENT, width=2):
        pts = " ".join(f"{_f(self.x(a))},{_f(self.y(b))}" for a, b in zip(xs, ys))
        self.body.append(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def circle(self, x, y, r=5, cls="marker", color=ACCENT):
        self.body.append(f'<circle class="{cls}" cx="{_f(self.x(x))}" cy="{_f(self.y(y))}" r="{r}" fill="{color}"/>')

    def rect(self, x0, y0, x1, y1, cls="bar", color=ACCENT):
        px0, px1 = sorted((self.x(x0), self.x(x1)))
        py0, py1 = sorted((self.y(y0), self.y(y1)))
        self.body.append(
            f'<rect class="{cls}" x="{_f(px0)}" y="{_f(py0)}" width="{_f(px1 - px0)}" height="{_f(py1 - py0)}" fill="{color}"/>'
        )

    def text(self, px, py, s, anchor="start", size=14, cls="label", rotate=None):
        tr = f' transform="rotate({rotate} {_f(px)} {_f(py)})"' if rotate is not None else ""
        self.body.append(
            f'<text class="{cls}" x="{_f(px)}" y="{_f(py)}" font-size="{size}" text-anchor="{anchor}" '
            f'font-family="sans-serif" fill="{INK}"{tr}>{escape(str(s))}</text>'
        )

    def _axes(self, xticks=None, yticks=None):
        out = []
        x0, x1 = self.left, WIDTH - RIGHT
        y0, y1 = HEIGHT - BOTTOM, TOP
        out.append(f'<rect class="frame" x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="{INK}" stroke-width="1"/>')
        if xticks is None:
            xticks = nice_ticks(*self.xlim)
        if yticks is None:
            yticks = nice_ticks(*self.ylim)
        for v, lab in xticks:
            px = self.x(v)
            out.append(f'<line class="tick" x1="{_f(px)}" y1="{y0}" x2="{_f(px)}" y2="{y0 + 6}" stroke="{INK}" stroke-width="1"/>')
            out.append(f'<text class="tick" x="{_f(px)}" y="{y0 + 22}" font-size="12" text-anchor="middle" font-family="sans-serif" fill="{INK}">{escape(lab)}</text>')
        for v, lab in yticks:
            py = self.y(v)
            out.append(f'<line class="tick" x1="{x0 - 6}" y1="{_f(py)}" x2="{x0}" y2="{_f(py)}" stroke="{INK}" stroke-width="1"/>')
            out.append(f'<text class="tick" x="{x0 - 10}" y="{_f(py + 4)}" font-size="12" text-anchor="end" font-family="sans-serif" fill="{INK}">{escape(lab)}</text>')
        out.append(f'<text class="title" x="{WIDTH / 2:.2f}" y="32.00" font-size="18" text-anchor="middle" font-family="sans-serif" fill="{INK}">{escape(self.title)}</text>')
        out.append(f'<text class="axis" x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 28:.2f}" font-size="14" text-anchor="middle" font-family="sans-serif" fill="{INK}">{escape(self.xlabel)}</text>')
        cy = (y0 + y1) / 2
        out.append(f'<text class="axis" x="24.00" y="{cy:.2f}" font-size="14" text-anchor="middle" font-family="sans-serif" fill="{INK}" transform="rotate(-90 24.00 {cy:.2f})">{escape(self.ylabel)}</text>')
        return out

    def render(self, xticks=None, yticks=None):
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
        )
        parts = [head, f'<rect class="background" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>']
        parts += self._axes(xticks, yticks)
        parts += self.body
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def _padded(lo, hi, frac=0.05):
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    return lo - frac * span, hi + frac * span


def roc_svg(points, auc_value, title="ROC curve"):
    c = Canvas(title, "1 - specificity", "Sensitivity")
    c.line(0, 0, 1, 1, cls="chance", color=MUTED, dash="6 4")
    pts = np.asarray(points, dtype=float)
    c.polyline(pts[:, 0], pts[:, 1], cls="curve")
    c.text(c.x(0.55), c.y(0.12), f"AUC = {auc_value:.3f}", size=18, cls="annotation")
    return c.render()


def calibration_svg(bins, curve, title="Calibration"):
    """``bins`` holds (mean predicted, observed) pairs; ``curve`` an (m, 2) smoothed curve."""
    c = Canvas(title, "Predicted probability", "Observed proportion")
    c.line(0, 0, 1, 1, cls="diagonal", color=MUTED, dash="6 4")
    curve = np.asarray(curve, dtype=float)
    if curve.size:
        c.polyline(curve[:, 0], np.clip(curve[:, 1], 0, 1), cls="curve")
    for pred, obs in bins:
        c.circle(pred, obs, cls="marker")
    return c.render()


def bars_svg(labels, values, errors=None, title="", ylabel="", lower_is_better=False, highlight=None):
    """Vertical bars, one per label, with optional +/- error whiskers.

    The ``highlight`` bar (default: the best value) is drawn in the accent colour.
    """
    values = np.asarray(values, dtype=float)
    errors = np.zeros_like(values) if errors is None else np.nan_to_num(np.asarray(errors, dtype=float))
    top = float(np.max(values + errors)) if values.size else 1.0
    bottom = 0.0 if np.min(values - errors) >= 0 else float(np.min(values - errors))
    n = len(labels)
    c = Canvas(title, "Model", ylabel, xlim=(0, n), ylim=(bottom, top * 1.1 if top > 0 else 1.0))
    best = highlight
    if best is None:
        best = int(np.argmin(values) if lower_is_better else np.argmax(values)) if n else -1
    for i, (lab, v, e) in enumerate(zip(labels, values, errors)):
        c.rect(i + 0.2, 0.0 if bottom == 0 else bottom, i + 0.8, v, color=ACCENT if i == best else MUTED)
        if e > 0:
            c.line(i + 0.5, v - e, i + 0.5, v + e, cls="whisker", width=1.5)
        c.text(c.x(i + 0.5), c.y(v) - 8 if e == 0 else c.y(v + e) - 8, f"{v:.3f}", anchor="middle", size=12, cls="value")
    return c.render(xticks=[(i + 0.5, str(lab)) for i, lab in enumerate(labels)])


def importance_svg(names, scores, title="Variable importance"):
    """Horizontal bars sorted as given, scores on a 0-100 scale."""
    n = len(names)
    left = max(LEFT, 20 + 7 * max((len(str(m)) for m in names), default=0))
    c = Canvas(title, "Importance (0-100)", "", xlim=(0, 100), ylim=(0, n), left=left)
    for i, (name, s) in enumerate(zip(names, scores)):
        row = n - i - 1
        c.rect(0, row + 0.15, s, row + 0.85)
        c.text(left - 10, c.y(row + 0.5) + 4, name, anchor="end", size=11, cls="name")
    return c.render(yticks=[])


def profile_svg(sizes, values, best, metric, title="Recursive feature elimination"):
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = _padded(float(values.min()), float(values.max()))
    c = Canvas(title, "Number of features", f"{metric} (resampled)", xlim=_padded(sizes.min(), sizes.max()), ylim=(lo, hi))
    c.polyline(sizes, values, cls="curve")
    for s, v in zip(sizes, values):
        c.circle(s, v, r=6 if s == best else 4, cls="best" if s == best else "marker", color="#c0392b" if s == best else ACCENT)
    return c.render(xticks=[(s, f"{int(s)}") for s in sizes])


def qq_svg(points, title="Quantile-quantile plot"):
    """``points`` columns: predicted quantile, observed quantile."""
    pts = np.asarray(points, dtype=float)
    lo, hi = _padded(float(pts.min()), float(pts.max()))
    c = Canvas(title, "Predicted quantiles", "Observed quantiles", xlim=(lo, hi), ylim=(lo, hi))
    c.line(lo, lo, hi, hi, cls="diagonal", color=MUTED, dash="6 4")
    for a, b in pts:
        c.circle(a, b, r=3, cls="marker")
    return c.render()
