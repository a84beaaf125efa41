"""Poincaré return map on the section {x = 0, y < 0}.

Orbits run clockwise: from (0, y0) with y0 < 0 the flow moves left, crosses
the positive y-axis once, and comes back to the section.  Along the way the
divergence integral D = ∫ -F'(x(t)) dt is accumulated, which gives the map's
derivative as (y0 / P(y0)) * exp(D).

Displacement convention: delta(y0) = P(y0) - y0, positive means the orbit
moved inward (toward the origin).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidParameters, NoReturn
from .ode import (
    CROSS_NEG,
    CROSS_POS,
    EventKind,
    EventSpec,
    OdeConfig,
    PhaseState,
    SystemParams,
    TerminalKind,
    flow,
)

# orbits falling into a node are stopped well below any cycle the census resolves
RETURN_CONFIG = OdeConfig(arc_damping=True, capture_radius=1e-12)

RETURNED = "returned"
ESCAPE = "escape"
TIMEOUT = "timeout"
CAPTURED = "captured"

CSV_HEADER = "y0,p,t_return,div_integral,status"


@dataclass(frozen=True)
class ReturnSample:
    y0: float
    p: float
    t_return: float
    div_integral: float
    y_tilde: float
    status: str

    @property
    def returned(self) -> bool:
        return self.status == RETURNED

    def csv_row(self) -> str:
        return ",".join(
            [_fmt(self.y0), _fmt(self.p), _fmt(self.t_return), _fmt(self.div_integral), self.status]
        )


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def return_map(params: SystemParams, y0: float, config: OdeConfig = RETURN_CONFIG) -> ReturnSample:
    if not y0 < 0:
        raise InvalidParameters(f"section start must be negative, got y0={y0}")
    res = flow(params, PhaseState(0.0, y0), [CROSS_POS, CROSS_NEG], ["div"], config)
    nan = float("nan")
    crossings = [h for h in res.hits if h.label == CROSS_POS.label]
    y_tilde = crossings[0].state[1] if crossings else nan
    if res.terminal is TerminalKind.EVENT and len(crossings) == 1:
        return ReturnSample(
            y0=y0,
            p=res.end_state.y,
            t_return=abs(res.elapsed),
            div_integral=res.accumulators["div"],
            y_tilde=y_tilde,
            status=RETURNED,
        )
    status = {TerminalKind.BLOW_UP: ESCAPE, TerminalKind.CAPTURED: CAPTURED}.get(res.terminal, TIMEOUT)
    return ReturnSample(y0, nan, abs(res.elapsed), res.accumulators["div"], y_tilde, status)


def _returned(params: SystemParams, y0: float, config: OdeConfig) -> ReturnSample:
    sample = return_map(params, y0, config)
    if not sample.returned:
        raise NoReturn(sample.status, y0)
    return sample


def return_derivative(params: SystemParams, y0: float, config: OdeConfig = RETURN_CONFIG) -> float:
    s = _returned(params, y0, config)
    return (s.y0 / s.p) * math.exp(s.div_integral)


def displacement(params: SystemParams, y0: float, config: OdeConfig = RETURN_CONFIG) -> float:
    s = _returned(params, y0, config)
    return s.p - s.y0


def period(params: SystemParams, y0: float, config: OdeConfig = RETURN_CONFIG) -> float:
    return _returned(params, y0, config).t_return


def finite_difference_derivative(
    params: SystemParams, y0: float, h: float | None = None, config: OdeConfig = RETURN_CONFIG
) -> float:
    """Central difference of P, the independent check on ``return_derivative``."""
    if h is None:
        h = 1e-4 * max(1.0, abs(y0))
    hi = _returned(params, y0 + h, config).p
    lo = _returned(params, y0 - h, config).p
    return (hi - lo) / (2 * h)


def scan(
    params: SystemParams, y_values: Iterable[float], config: OdeConfig = RETURN_CONFIG, jobs: int = 1
) -> list[ReturnSample]:
    ys = list(y_values)
    if jobs > 1 and len(ys) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(return_map, [params] * len(ys), ys, [config] * len(ys)))
    return [return_map(params, y, config) for y in ys]


@dataclass(frozen=True)
class SpreadRow:
    y_tilde: float
    y1: float
    y2: float

    @property
    def forward_ratio(self) -> float:
        return abs(self.y_tilde - self.y1) / math.sqrt(self.y_tilde)

    @property
    def backward_ratio(self) -> float:
        return abs(self.y_tilde - self.y2) / math.sqrt(self.y_tilde)


def spread_bound_probe(
    params: SystemParams, y_tilde_list: Sequence[float], config: OdeConfig = RETURN_CONFIG
) -> list[SpreadRow]:
    """Graph-crossing heights of the orbit through (0, y~), forward (y1) and backward (y2).

    The ratios |y~ - y_i| / sqrt(y~) stay under a common constant for quartic F.
    """
    f = params.f
    if f.degree != 4 or f.leading <= 0:
        raise InvalidParameters("spread probe needs a quartic F with positive leading coefficient")
    rows = []
    # forward the orbit leaves the graph's upper side in x > 0: y - F falls through zero
    graph = EventSpec(EventKind.CROSS_GRAPH_OF_F, direction=-1)
    fwd = params if params.time_direction == "forward" else params.reversed()
    for yt in y_tilde_list:
        if yt < 100:
            raise InvalidParameters(f"spread probe needs y~ >= 100, got {yt}")
        a = flow(fwd, PhaseState(0.0, yt), [graph], config=config)
        b = flow(fwd.reversed(), PhaseState(0.0, yt), [graph], config=config)
        if a.terminal is not TerminalKind.EVENT or b.terminal is not TerminalKind.EVENT:
            raise NoReturn("graph of F not reached", yt)
        rows.append(SpreadRow(yt, a.end_state.y, b.end_state.y))
    return rows
