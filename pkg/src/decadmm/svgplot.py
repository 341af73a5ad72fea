"""Tiny self-contained SVG line plots for the run outputs.

Deliberately minimal: polyline series with optional min/max bands, linear or
log axes, a legend. No external plotting dependency so reproductions render
anywhere.
"""

from __future__ import annotations

import math

__all__ = ["LinePlot"]

_COLORS = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
]

_WIDTH, _HEIGHT = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 36, 48


class LinePlot:
    """Accumulates named series, then renders one SVG document."""

    def __init__(
        self,
        title: str = "",
        xlabel: str = "",
        ylabel: str = "",
        logx: bool = False,
        logy: bool = False,
    ):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.logx = logx
        self.logy = logy
        self.series: list[dict] = []

    def add_series(self, name, xs, ys, band_low=None, band_high=None):
        pts = [
            (float(x), float(y))
            for x, y in zip(xs, ys)
            if self._plottable(x, y)
        ]
        band = None
        if band_low is not None and band_high is not None:
            band = [
                (float(x), float(lo), float(hi))
                for x, lo, hi in zip(xs, band_low, band_high)
                if self._plottable(x, lo) and self._plottable(x, hi)
            ]
        self.series.append({"name": str(name), "points": pts, "band": band})

    def _plottable(self, x, y) -> bool:
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            return False
        if self.logx and x <= 0:
            return False
        if self.logy and y <= 0:
            return False
        return True

    # -- scales -----------------------------------------------------------

    def _limits(self):
        xs, ys = [], []
        for s in self.series:
            xs.extend(p[0] for p in s["points"])
            ys.extend(p[1] for p in s["points"])
            for b in s["band"] or []:
                ys.extend(b[1:])
        if not xs:
            xs, ys = [0.0, 1.0], [0.0, 1.0]
        lo_x, hi_x = min(xs), max(xs)
        lo_y, hi_y = min(ys), max(ys)
        if self.logx:
            lo_x, hi_x = math.log10(lo_x), math.log10(hi_x)
        if self.logy:
            lo_y, hi_y = math.log10(lo_y), math.log10(hi_y)
        if hi_x - lo_x < 1e-12:
            hi_x = lo_x + 1.0
        if hi_y - lo_y < 1e-12:
            hi_y = lo_y + 1.0
        pad = 0.04 * (hi_y - lo_y)
        return lo_x, hi_x, lo_y - pad, hi_y + pad

    def _to_px(self, x, y, lims):
        lo_x, hi_x, lo_y, hi_y = lims
        if self.logx:
            x = math.log10(x)
        if self.logy:
            y = math.log10(y)
        px = _MARGIN_L + (x - lo_x) / (hi_x - lo_x) * (_WIDTH - _MARGIN_L - _MARGIN_R)
        py = _HEIGHT - _MARGIN_B - (y - lo_y) / (hi_y - lo_y) * (
            _HEIGHT - _MARGIN_T - _MARGIN_B
        )
        return px, py

    @staticmethod
    def _ticks(lo, hi, log):
        if log:
            start, end = math.floor(lo), math.ceil(hi)
            return [
                (float(t), f"1e{t}") for t in range(int(start), int(end) + 1)
            ]
        span = hi - lo
        step = 10 ** math.floor(math.log10(span / 4)) if span > 0 else 1.0
        for mult in (1, 2, 5, 10):
            if span / (step * mult) <= 6:
                step *= mult
                break
        first = math.ceil(lo / step) * step
        ticks = []
        t = first
        while t <= hi + 1e-12 * abs(step):
            label = f"{t:.6g}"
            ticks.append((t, label))
            t += step
        return ticks

    # -- rendering --------------------------------------------------------

    def render(self) -> str:
        lims = self._limits()
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
            f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        ]
        # axes frame
        x0, y0 = _MARGIN_L, _HEIGHT - _MARGIN_B
        x1, y1 = _WIDTH - _MARGIN_R, _MARGIN_T
        parts.append(
            f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
            'fill="none" stroke="#444" stroke-width="1"/>'
        )
        # ticks
        for tx, label in self._ticks(lims[0], lims[1], self.logx):
            vx = 10**tx if self.logx else tx
            px, _ = self._to_px(vx, 10 ** lims[2] if self.logy else lims[2], lims)
            if x0 - 1 <= px <= x1 + 1:
                parts.append(
                    f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="#444"/>'
                )
                parts.append(
                    f'<text x="{px:.1f}" y="{y0 + 18}" font-size="11" '
                    f'text-anchor="middle" fill="#222">{label}</text>'
                )
        for ty, label in self._ticks(lims[2], lims[3], self.logy):
            vy = 10**ty if self.logy else ty
            _, py = self._to_px(10 ** lims[0] if self.logx else lims[0], vy, lims)
            if y1 - 1 <= py <= y0 + 1:
                parts.append(
                    f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="#444"/>'
                )
                parts.append(
                    f'<text x="{x0 - 8}" y="{py + 4:.1f}" font-size="11" '
                    f'text-anchor="end" fill="#222">{label}</text>'
                )
        # labels and title
        if self.title:
            parts.append(
                f'<text x="{(_WIDTH) / 2}" y="22" font-size="14" '
                f'text-anchor="middle" fill="#000">{self.title}</text>'
            )
        if self.xlabel:
            parts.append(
                f'<text x="{(x0 + x1) / 2}" y="{_HEIGHT - 10}" font-size="12" '
                f'text-anchor="middle" fill="#000">{self.xlabel}</text>'
            )
        if self.ylabel:
            parts.append(
                f'<text x="16" y="{(y0 + y1) / 2}" font-size="12" '
                f'text-anchor="middle" fill="#000" '
                f'transform="rotate(-90 16 {(y0 + y1) / 2})">{self.ylabel}</text>'
            )
        # series
        for idx, s in enumerate(self.series):
            color = _COLORS[idx % len(_COLORS)]
            if s["band"]:
                upper = [self._to_px(x, hi, lims) for x, _, hi in s["band"]]
                lower = [self._to_px(x, lo, lims) for x, lo, _ in s["band"]]
                poly = " ".join(
                    f"{px:.1f},{py:.1f}" for px, py in upper + lower[::-1]
                )
                parts.append(
                    f'<polygon points="{poly}" fill="{color}" opacity="0.15" stroke="none"/>'
                )
            pts = " ".join(
                f"{px:.1f},{py:.1f}"
                for px, py in (self._to_px(x, y, lims) for x, y in s["points"])
            )
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>'
            )
            ly = _MARGIN_T + 14 + 16 * idx
            parts.append(
                f'<line x1="{x1 - 150}" y1="{ly - 4}" x2="{x1 - 122}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{x1 - 116}" y="{ly}" font-size="11" fill="#000">{s["name"]}</text>'
            )
        parts.append("</svg>")
        return "\n".join(parts)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
