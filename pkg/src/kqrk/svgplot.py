"""Minimal deterministic SVG charts, no plotting dependency.

Two chart kinds cover the experiment outputs: semi-log line charts of
error against iteration, and log-log scatters.  Output is a plain SVG
string with fixed formatting (two-decimal pixel coordinates, no ids, no
timestamps) so a rerun with the same data is byte-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Series", "chart", "write_svg", "PALETTE", "THIN_TO"]

# Line colors in a familiar numeric-plotting order.
PALETTE = (
    "#0072bd",
    "#d95319",
    "#edb120",
    "#7e2f8e",
    "#77ac30",
    "#4dbeee",
    "#a2142f",
)
THIN_TO = 2000

_MARGIN = {"left": 64.0, "right": 16.0, "top": 34.0, "bottom": 46.0}
_FONT = "DejaVu Sans, Helvetica, sans-serif"


@dataclass(frozen=True)
class Series:
    """One plotted data set; marker=None draws a line, else dots."""

    label: str
    x: np.ndarray
    y: np.ndarray
    color: str | None = None
    marker: str | None = None


def _thin(idx_len: int, cap: int) -> np.ndarray:
    if idx_len <= cap:
        return np.arange(idx_len)
    return np.unique(np.round(np.linspace(0, idx_len - 1, cap)).astype(np.intp))


def _nice_step(span: float, target: int) -> float:
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if mult * mag >= raw:
            return mult * mag
    return 10.0 * mag


def _linear_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = _nice_step(hi - lo, target)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_decades(lo: float, hi: float) -> list[int]:
    e0 = math.floor(math.log10(lo))
    e1 = math.ceil(math.log10(hi))
    stride = max(1, (e1 - e0) // 8)
    return list(range(e0, e1 + 1, stride))


def _fmt_lin(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 10000 or abs(v) < 0.001:
        return f"{v:.0e}".replace("e+0", "e").replace("e-0", "e-").replace("e+", "e")
    text = f"{v:g}"
    return text


def _px(v: float) -> str:
    return f"{v:.2f}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Axis:
    """Maps data values to pixels, linear or log10."""

    def __init__(self, lo: float, hi: float, px_lo: float, px_hi: float, log: bool):
        self.log = log
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi - lo < 1e-300:
            hi = lo + 1.0
        self.lo, self.hi = lo, hi
        self.px_lo, self.px_hi = px_lo, px_hi

    def __call__(self, v: float) -> float:
        t = (math.log10(v) if self.log else v) - self.lo
        return self.px_lo + (self.px_hi - self.px_lo) * t / (self.hi - self.lo)


def _data_range(values: list[np.ndarray], log: bool) -> tuple[float, float]:
    lo, hi = math.inf, -math.inf
    for arr in values:
        keep = arr[arr > 0] if log else arr[np.isfinite(arr)]
        if keep.size:
            lo = min(lo, float(keep.min()))
            hi = max(hi, float(keep.max()))
    if not math.isfinite(lo):
        return (0.1, 10.0) if log else (0.0, 1.0)
    if log:
        return lo, max(hi, lo * 10.0)
    pad = 0.02 * (hi - lo) if hi > lo else 1.0
    return lo - pad, hi + pad


def chart(
    series: list[Series],
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    xlog: bool = False,
    ylog: bool = True,
    width: int = 720,
    height: int = 540,
    thin_to: int = THIN_TO,
) -> str:
    """Render the series to an SVG string."""
    left, right = _MARGIN["left"], width - _MARGIN["right"]
    top, bottom = _MARGIN["top"], height - _MARGIN["bottom"]

    xs = [np.asarray(s.x, dtype=np.float64).ravel() for s in series]
    ys = [np.asarray(s.y, dtype=np.float64).ravel() for s in series]
    floor = None
    if ylog:
        # points at/below zero get clamped one decade under the positive min
        pos = [a[a > 0] for a in ys]
        smallest = min((float(a.min()) for a in pos if a.size), default=1e-16)
        floor = 10.0 ** (math.floor(math.log10(smallest)) - 1)
        ys = [np.maximum(a, floor) for a in ys]

    x_lo, x_hi = _data_range(xs, xlog)
    y_lo, y_hi = _data_range(ys, ylog)
    ax = _Axis(x_lo, x_hi, left, right, xlog)
    ay = _Axis(y_lo, y_hi, bottom, top, ylog)

    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="#ffffff"/>')

    def grid_and_ticks() -> None:
        if xlog:
            xticks = [(10.0**e, e) for e in _log_decades(x_lo, x_hi)]
        else:
            xticks = [(v, None) for v in _linear_ticks(x_lo, x_hi)]
        if ylog:
            yticks = [(10.0**e, e) for e in _log_decades(y_lo, y_hi)]
        else:
            yticks = [(v, None) for v in _linear_ticks(y_lo, y_hi)]
        for v, e in xticks:
            if not (x_lo <= v <= x_hi or math.isclose(v, x_lo) or math.isclose(v, x_hi)):
                continue
            px = ax(v)
            out.append(
                f'<line x1="{_px(px)}" y1="{_px(top)}" x2="{_px(px)}" y2="{_px(bottom)}" '
                f'stroke="#e0e0e0" stroke-width="1"/>'
            )
            label = _fmt_lin(v) if e is None else f"1e{e}"
            out.append(
                f'<text x="{_px(px)}" y="{_px(bottom + 18)}" font-family="{_FONT}" '
                f'font-size="12" fill="#444444" text-anchor="middle">{label}</text>'
            )
        for v, e in yticks:
            if not (y_lo <= v <= y_hi or math.isclose(v, y_lo) or math.isclose(v, y_hi)):
                continue
            py = ay(v)
            out.append(
                f'<line x1="{_px(left)}" y1="{_px(py)}" x2="{_px(right)}" y2="{_px(py)}" '
                f'stroke="#e0e0e0" stroke-width="1"/>'
            )
            label = _fmt_lin(v) if e is None else f"1e{e}"
            out.append(
                f'<text x="{_px(left - 6)}" y="{_px(py + 4)}" font-family="{_FONT}" '
                f'font-size="12" fill="#444444" text-anchor="end">{label}</text>'
            )

    grid_and_ticks()
    out.append(
        f'<rect x="{_px(left)}" y="{_px(top)}" width="{_px(right - left)}" '
        f'height="{_px(bottom - top)}" fill="none" stroke="#333333" stroke-width="1"/>'
    )

    for i, s in enumerate(series):
        color = s.color or PALETTE[i % len(PALETTE)]
        x, y = xs[i], ys[i]
        keep = np.isfinite(x) & np.isfinite(y)
        if xlog:
            keep &= x > 0
        x, y = x[keep], y[keep]
        if x.size == 0:
            continue
        idx = _thin(x.size, thin_to)
        x, y = x[idx], y[idx]
        if s.marker is None:
            points = " ".join(f"{_px(ax(float(u)))},{_px(ay(float(v)))}" for u, v in zip(x, y))
            out.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                f'stroke-width="1.6" stroke-linejoin="round"/>'
            )
        else:
            for u, v in zip(x, y):
                out.append(
                    f'<circle cx="{_px(ax(float(u)))}" cy="{_px(ay(float(v)))}" '
                    f'r="3.2" fill="{color}" fill-opacity="0.75"/>'
                )

    if title:
        out.append(
            f'<text x="{_px((left + right) / 2)}" y="{_px(top - 12)}" font-family="{_FONT}" '
            f'font-size="15" fill="#111111" text-anchor="middle">{_esc(title)}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{_px((left + right) / 2)}" y="{_px(height - 10)}" font-family="{_FONT}" '
            f'font-size="13" fill="#111111" text-anchor="middle">{_esc(xlabel)}</text>'
        )
    if ylabel:
        cx, cy = 16.0, (top + bottom) / 2
        out.append(
            f'<text x="{_px(cx)}" y="{_px(cy)}" font-family="{_FONT}" font-size="13" '
            f'fill="#111111" text-anchor="middle" transform="rotate(-90 {_px(cx)} {_px(cy)})">'
            f"{_esc(ylabel)}</text>"
        )

    # legend, top-right inside the frame
    if any(s.label for s in series):
        lw = 10 + 8 * max(len(s.label) for s in series) + 34
        lh = 20 * len(series) + 8
        lx, ly = right - lw - 8, top + 8
        out.append(
            f'<rect x="{_px(lx)}" y="{_px(ly)}" width="{_px(lw)}" height="{_px(lh)}" '
            f'fill="#ffffff" fill-opacity="0.85" stroke="#999999" stroke-width="0.8"/>'
        )
        for i, s in enumerate(series):
            color = s.color or PALETTE[i % len(PALETTE)]
            yy = ly + 14 + 20 * i
            if s.marker is None:
                out.append(
                    f'<line x1="{_px(lx + 8)}" y1="{_px(yy)}" x2="{_px(lx + 30)}" y2="{_px(yy)}" '
                    f'stroke="{color}" stroke-width="2"/>'
                )
            else:
                out.append(
                    f'<circle cx="{_px(lx + 19)}" cy="{_px(yy)}" r="3.2" fill="{color}"/>'
                )
            out.append(
                f'<text x="{_px(lx + 36)}" y="{_px(yy + 4)}" font-family="{_FONT}" '
                f'font-size="12" fill="#111111">{_esc(s.label)}</text>'
            )

    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, svg_text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg_text)
