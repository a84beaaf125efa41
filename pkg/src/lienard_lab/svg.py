"""Static phase portraits as plain SVG text.

Output depends only on the inputs: coordinates are printed at fixed precision
and elements are emitted in a fixed order, so identical calls give identical
bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidParameters
from .homoclinic import separatrix_arc
from .ode import CROSS_NEG, OdeConfig, PhaseState, SystemParams, TerminalKind, flow

WIDTH, HEIGHT, MARGIN = 800, 600, 40
MAX_BYTES = 5 * 1024 * 1024
GRAPH_POINTS = 801
MIN_PIXEL_STEP = 0.5

ORBIT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class Window:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameters(f"window bounds must be finite: {vals}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidParameters(f"window bounds out of order: {vals}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        sx = (WIDTH - 2 * MARGIN) / (self.x_max - self.x_min)
        sy = (HEIGHT - 2 * MARGIN) / (self.y_max - self.y_min)
        return MARGIN + (x - self.x_min) * sx, HEIGHT - MARGIN - (y - self.y_min) * sy


@dataclass(frozen=True)
class Orbit:
    """A start point traced forward (and optionally backward) for ``t_span``.

    Starts on the negative y-axis stop after one return unless ``full`` is set.
    With ``clip`` each direction is cut at its first exit from the window.
    """

    start: PhaseState
    t_span: float = 50.0
    backward: bool = False
    full: bool = False
    clip: bool = False


@dataclass(frozen=True)
class HomoclinicLoop:
    """Both separatrices drawn as one curve: the unstable arc from the right
    branch of the graph down to the section, then the stable arc out to the left.

    Each arc is integrated in its contracting time direction, so the curve
    hugs the graph at both ends; at d0 the arcs meet on the section.
    """

    x_far: float | None = None


def _until_exit(points, window: Window):
    out = []
    for p in points:
        out.append(p)
        if not window.contains(*p):
            break
    return out


def _segments(points, window: Window) -> list[list[tuple[float, float]]]:
    """Split a polyline where it leaves the window and thin sub-pixel steps."""
    out: list[list[tuple[float, float]]] = []
    cur: list[tuple[float, float]] = []
    pending = None  # last thinned point, kept so segment ends are exact

    def close():
        if pending is not None:
            cur.append(pending)
        if len(cur) > 1:
            out.append(cur)

    for x, y in points:
        if not window.contains(x, y):
            close()
            cur, pending = [], None
            continue
        p = window.to_px(x, y)
        if cur and math.hypot(p[0] - cur[-1][0], p[1] - cur[-1][1]) < MIN_PIXEL_STEP:
            pending = p
            continue
        cur.append(p)
        pending = None
    close()
    return out


def _fmt_points(seg) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in seg)


def trace_loop(params: SystemParams, loop: HomoclinicLoop) -> list[tuple[float, float]]:
    fwd = params if params.time_direction == "forward" else params.reversed()
    unstable = separatrix_arc(fwd, 1, loop.x_far)
    stable = separatrix_arc(fwd, -1, loop.x_far)
    # the unstable arc runs seed -> axis already; the stable one was traced backward
    return unstable + stable[::-1]


def trace_orbit(params: SystemParams, orbit: Orbit, window: Window) -> list[tuple[float, float]]:
    # stop soon after leaving the window: escaping orbits would otherwise run
    # around infinity and re-enter on the far side
    reach = 2 * math.hypot(
        max(abs(window.x_min), abs(window.x_max)), max(abs(window.y_min), abs(window.y_max))
    )
    cfg = OdeConfig(arc_damping=True, t_max=orbit.t_span, blowup_radius=reach)
    on_section = orbit.start.x == 0.0 and orbit.start.y < 0
    events = [CROSS_NEG] if on_section and not orbit.full else []
    pts: list[tuple[float, float]] = []
    fwd = params if params.time_direction == "forward" else params.reversed()
    if orbit.backward:
        back = flow(fwd.reversed(), orbit.start, (), config=cfg, record=True)
        b_pts = [(u[1], u[2]) for u in back.samples]
        if orbit.clip:
            b_pts = _until_exit(b_pts, window)
        pts.extend(reversed(b_pts))
    res = flow(fwd, orbit.start, events, config=cfg, record=True)
    f_pts = [(u[1], u[2]) for u in res.samples[1 if pts else 0 :]]
    pts.extend(_until_exit(f_pts, window) if orbit.clip else f_pts)
    if res.terminal is TerminalKind.EVENT:
        pts.append((orbit.start.x, orbit.start.y))
    return pts


def portrait(
    params: SystemParams,
    window: Window,
    orbits: Sequence[Orbit | HomoclinicLoop] = (),
    title: str | None = None,
) -> str:
    f = params.f
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        safe = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        parts.append(f'<text x="{MARGIN}" y="{MARGIN - 12}" font-size="14">{safe}</text>')

    # axes through the origin when visible
    if window.y_min <= 0 <= window.y_max:
        x0, y0 = window.to_px(window.x_min, 0)
        x1, _ = window.to_px(window.x_max, 0)
        parts.append(f'<line class="axis" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}" stroke="#999"/>')
    if window.x_min <= 0 <= window.x_max:
        xa, ya = window.to_px(0, window.y_max)
        _, yb = window.to_px(0, window.y_min)
        parts.append(f'<line class="axis" x1="{xa:.2f}" y1="{ya:.2f}" x2="{xa:.2f}" y2="{yb:.2f}" stroke="#999"/>')
        if window.y_min < 0:
            _, ys = window.to_px(0, min(0.0, window.y_max))
            parts.append(
                f'<line class="section" x1="{xa:.2f}" y1="{ys:.2f}" x2="{xa:.2f}" y2="{yb:.2f}" '
                'stroke="#000" stroke-width="2" stroke-dasharray="6,4"/>'
            )

    xs = [window.x_min + (window.x_max - window.x_min) * i / (GRAPH_POINTS - 1) for i in range(GRAPH_POINTS)]
    for seg in _segments([(x, f(x)) for x in xs], window):
        d = "M" + " L".join(f"{x:.2f},{y:.2f}" for x, y in seg)
        parts.append(f'<path class="graph" d="{d}" fill="none" stroke="#444" stroke-width="1.5"/>')

    for i, orbit in enumerate(orbits):
        color = ORBIT_COLORS[i % len(ORBIT_COLORS)]
        if isinstance(orbit, HomoclinicLoop):
            pts = trace_loop(params, orbit)
        else:
            pts = trace_orbit(params, orbit, window)
        for seg in _segments(pts, window):
            parts.append(
                f'<polyline class="orbit" data-orbit="{i}" points="{_fmt_points(seg)}" '
                f'fill="none" stroke="{color}" stroke-width="1"/>'
            )

    if window.contains(0.0, 0.0):
        ex, ey = window.to_px(0.0, 0.0)
        parts.append(f'<circle class="equilibrium" cx="{ex:.2f}" cy="{ey:.2f}" r="3" fill="#000"/>')
    parts.append("</svg>")
    doc = "\n".join(parts) + "\n"
    if len(doc.encode()) > MAX_BYTES:
        raise InvalidParameters(f"portrait exceeds the {MAX_BYTES} byte cap; trace fewer orbits")
    return doc
