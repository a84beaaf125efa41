"""Adaptive Dormand-Prince integration of the Liénard field with event location.

The planar field is

    x' = y - F(x)
    y' = -eps * x + e * x**2

optionally run in reverse time.  Path integrals (the divergence -F'(x) and the
elapsed time) are carried as extra state components so they are integrated at
the same order as (x, y).  Events are bracketed on the dense output, bisected
to ``EVENT_TOL`` and polished with one secant step; the reported state is then
recomputed by a genuine RK step of the located length.

Everything works on plain Python floats: the systems are 2- to 5-dimensional,
where list arithmetic beats numpy's per-call overhead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Literal, Sequence

from .errors import InvalidParameters, StepSizeUnderflow
from .poly import Poly

EVENT_TOL = 1e-10
GUARD_BAND = 1e-9

__all__ = [
    "OdeConfig",
    "SystemParams",
    "PhaseState",
    "EventKind",
    "EventSpec",
    "TerminalKind",
    "FlowResult",
    "EventHit",
    "Linearization",
    "flow",
    "integrate",
    "planar_rhs",
    "linearization_at_origin",
    "CROSS_NEG",
    "CROSS_POS",
]

# Dormand-Prince 5(4) tableau with Shampine's 4th-order dense output.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40)
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

# PI step-size controller constants (Hairer & Wanner's DOPRI5 defaults)
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@dataclass(frozen=True)
class OdeConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    t_max: float = 1e3
    blowup_radius: float = 1e6
    max_steps: int = 2_000_000
    capture_radius: float = 0.0
    arc_damping: bool = False
    h0: float | None = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol >= 0 and self.t_max > 0 and self.blowup_radius > 0):
            raise InvalidParameters(f"invalid integrator configuration {self}")


@dataclass(frozen=True)
class SystemParams:
    f: Poly
    eps: float = 1.0
    e: float = 0.0
    time_direction: Literal["forward", "backward"] = "forward"

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidParameters(f"eps must be positive, got {self.eps}")
        if self.time_direction not in ("forward", "backward"):
            raise InvalidParameters(f"unknown time direction {self.time_direction!r}")

    @property
    def sigma(self) -> float:
        return 1.0 if self.time_direction == "forward" else -1.0

    def reversed(self) -> "SystemParams":
        other = "backward" if self.time_direction == "forward" else "forward"
        return replace(self, time_direction=other)

    def with_d(self, d: float) -> "SystemParams":
        cs = list(self.f.coeffs) or [0.0]
        cs[0] = d
        return replace(self, f=Poly(tuple(cs)))


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    t: float = 0.0


class EventKind(Enum):
    CROSS_NEGATIVE_Y_AXIS = "cross_negative_y_axis"
    CROSS_POSITIVE_Y_AXIS = "cross_positive_y_axis"
    CROSS_GRAPH_OF_F = "cross_graph_of_f"
    REACH_X = "reach_x"


@dataclass(frozen=True)
class EventSpec:
    """A crossing of g(state) = 0.

    ``direction`` is the required sign of dg/ds along the integration
    (+1 rising, -1 falling, 0 either), where s runs forward even for
    backward-time flows.
    """

    kind: EventKind
    direction: int = 0
    target: float = 0.0
    terminal: bool = True
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name or self.kind.value


CROSS_NEG = EventSpec(EventKind.CROSS_NEGATIVE_Y_AXIS)
CROSS_POS = EventSpec(EventKind.CROSS_POSITIVE_Y_AXIS, terminal=False)


class TerminalKind(Enum):
    EVENT = "event"
    BLOW_UP = "blow_up"
    TIMEOUT = "timeout"
    MAX_STEPS = "max_steps"
    CAPTURED = "captured"


@dataclass(frozen=True)
class EventHit:
    label: str
    t: float
    state: tuple[float, ...]


@dataclass
class FlowResult:
    terminal: TerminalKind
    end_state: PhaseState
    elapsed: float
    accumulators: dict[str, float]
    event: EventHit | None = None
    hits: list[EventHit] = field(default_factory=list)
    samples: list[tuple[float, ...]] | None = None
    n_steps: int = 0
    full_state: tuple[float, ...] = ()

    @property
    def terminal_label(self) -> str:
        if self.terminal is TerminalKind.EVENT and self.event is not None:
            return self.event.label
        return self.terminal.value


def _poly_funcs(f: Poly):
    cs = f.full
    dcs = (0.0,) + f.deriv_coeffs()
    n = len(cs)

    def F(x):
        acc = 0.0
        for i in range(n - 1, -1, -1):
            acc = acc * x + cs[i]
        return acc

    def dF(x):
        acc = 0.0
        for i in range(n - 1, 0, -1):
            acc = acc * x + dcs[i]
        return acc

    return F, dF


def planar_rhs(params: SystemParams, accumulate: Sequence[str] = ()):
    """Right-hand side for the integration variable s (already direction-signed).

    State layout: (x, y, *accumulators).  Accumulators are integrals over
    the physical, signed time: "div" of -F'(x), "time" of 1.
    """
    F, dF = _poly_funcs(params.f)
    sig = params.sigma
    eps, e = params.eps, params.e
    want_div = "div" in accumulate
    want_time = "time" in accumulate
    unknown = set(accumulate) - {"div", "time"}
    if unknown:
        raise InvalidParameters(f"unknown accumulators {sorted(unknown)}")
    order = list(accumulate)

    if not want_div and not want_time:
        def rhs(s, u):
            x = u[0]
            return [sig * (u[1] - F(x)), sig * (-eps * x + e * x * x)]
        return rhs, order

    def rhs(s, u):
        x = u[0]
        out = [sig * (u[1] - F(x)), sig * (-eps * x + e * x * x)]
        for name in order:
            out.append(sig * -dF(x) if name == "div" else sig)
        return out

    return rhs, order


def _event_function(spec: EventSpec, F) -> Callable[[Sequence[float]], float]:
    k = spec.kind
    if k in (EventKind.CROSS_NEGATIVE_Y_AXIS, EventKind.CROSS_POSITIVE_Y_AXIS):
        return lambda u: u[0]
    if k is EventKind.CROSS_GRAPH_OF_F:
        return lambda u: u[1] - F(u[0])
    if k is EventKind.REACH_X:
        tgt = spec.target
        return lambda u: u[0] - tgt
    raise InvalidParameters(f"unsupported event {k}")


def _event_condition(spec: EventSpec) -> Callable[[Sequence[float]], bool]:
    if spec.kind is EventKind.CROSS_NEGATIVE_Y_AXIS:
        return lambda u: u[1] < 0
    if spec.kind is EventKind.CROSS_POSITIVE_Y_AXIS:
        return lambda u: u[1] > 0
    return lambda u: True


def _rms_norm(err, y_old, y_new, rtol, atol) -> float:
    acc = 0.0
    for e_i, a, b in zip(err, y_old, y_new):
        sc = atol + rtol * max(abs(a), abs(b))
        acc += (e_i / sc) ** 2
    return math.sqrt(acc / len(err))


def _dopri_step(rhs, s, y, k1, h):
    a2, a3, a4, a5, a6 = _A[1], _A[2], _A[3], _A[4], _A[5]
    k2 = rhs(s + _C[1] * h, [v + h * a2[0] * q1 for v, q1 in zip(y, k1)])
    k3 = rhs(s + _C[2] * h, [v + h * (a3[0] * q1 + a3[1] * q2) for v, q1, q2 in zip(y, k1, k2)])
    k4 = rhs(s + _C[3] * h, [
        v + h * (a4[0] * q1 + a4[1] * q2 + a4[2] * q3)
        for v, q1, q2, q3 in zip(y, k1, k2, k3)
    ])
    k5 = rhs(s + _C[4] * h, [
        v + h * (a5[0] * q1 + a5[1] * q2 + a5[2] * q3 + a5[3] * q4)
        for v, q1, q2, q3, q4 in zip(y, k1, k2, k3, k4)
    ])
    k6 = rhs(s + h, [
        v + h * (a6[0] * q1 + a6[1] * q2 + a6[2] * q3 + a6[3] * q4 + a6[4] * q5)
        for v, q1, q2, q3, q4, q5 in zip(y, k1, k2, k3, k4, k5)
    ])
    b1, _, b3, b4, b5, b6 = _B
    y_new = [
        v + h * (b1 * q1 + b3 * q3 + b4 * q4 + b5 * q5 + b6 * q6)
        for v, q1, q3, q4, q5, q6 in zip(y, k1, k3, k4, k5, k6)
    ]
    k7 = rhs(s + h, y_new)
    e1, _, e3, e4, e5, e6, e7 = _E
    err = [
        h * (e1 * q1 + e3 * q3 + e4 * q4 + e5 * q5 + e6 * q6 + e7 * q7)
        for q1, q3, q4, q5, q6, q7 in zip(k1, k3, k4, k5, k6, k7)
    ]
    return y_new, err, (k1, k2, k3, k4, k5, k6, k7)


def _dense(y, ks, h, theta):
    n = len(y)
    powers = (theta, theta * theta, theta ** 3, theta ** 4)
    out = []
    for j in range(n):
        acc = 0.0
        for m in range(7):
            p = _P[m]
            q = p[0] * powers[0] + p[1] * powers[1] + p[2] * powers[2] + p[3] * powers[3]
            if q:
                acc += ks[m][j] * q
        out.append(y[j] + h * acc)
    return out


def _initial_step(rhs, s, y, f0, rtol, atol):
    sc = [atol + rtol * abs(v) for v in y]
    d0 = math.sqrt(sum((v / c) ** 2 for v, c in zip(y, sc)) / len(y))
    d1 = math.sqrt(sum((v / c) ** 2 for v, c in zip(f0, sc)) / len(y))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = [a + h0 * b for a, b in zip(y, f0)]
    f1 = rhs(s + h0, y1)
    d2 = math.sqrt(sum(((b - a) / c) ** 2 for a, b, c in zip(f0, f1, sc)) / len(y)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    # a component starting at 0 under a tiny atol drives the estimate toward 0;
    # an oversized guess is harmless since rejected steps shrink it
    return max(min(100 * h0, h1), 1e-8)


def integrate(
    rhs,
    y0: Sequence[float],
    events: Sequence[tuple[EventSpec, Callable, Callable]] = (),
    config: OdeConfig = OdeConfig(),
    blowup_dims: int = 2,
    record: bool = False,
    time_index: int | None = None,
    sigma: float = 1.0,
    rest_shortcut: bool = True,
):
    """Core DOPRI5 loop on s in [0, t_max].

    ``events`` holds (spec, g, condition) triples.  ``time_index`` names the
    state slot holding physical time when the field is arc-length damped;
    timeouts then apply to that slot instead of s.  ``rest_shortcut`` lets a
    start at rest in the first ``blowup_dims`` slots be extrapolated linearly,
    which is only valid when the remaining slots have constant rates.
    Returns (terminal, s, y, hit, hits, samples, n_steps).
    """
    rtol, atol = config.rtol, config.atol
    radius = config.blowup_radius
    capture = config.capture_radius
    t_max = config.t_max

    s = 0.0
    y = [float(v) for v in y0]
    if not all(math.isfinite(v) for v in y):
        raise InvalidParameters(f"start state not finite: {y}")
    k1 = rhs(s, y)
    samples = [(s,) + tuple(y)] if record else None
    hits: list[EventHit] = []

    def radius_g(u):
        return math.sqrt(sum(u[i] * u[i] for i in range(blowup_dims))) - radius

    if radius_g(y) >= 0:
        return TerminalKind.BLOW_UP, s, y, None, hits, samples, 0

    if rest_shortcut and all(v == 0.0 for v in k1[:blowup_dims]):
        # resting at an equilibrium: nothing moves until the timeout
        if time_index is None:
            y_end = [v + t_max * dv for v, dv in zip(y, k1)]
            if record:
                samples.append((t_max,) + tuple(y_end))
            return TerminalKind.TIMEOUT, t_max, y_end, None, hits, samples, 0

    h = config.h0 or _initial_step(rhs, s, y, k1, rtol, atol)
    err_old = 1e-4
    n_steps = 0
    g_vals = [g(y) for _, g, _ in events]
    r_old = radius_g(y)

    while True:
        if n_steps >= config.max_steps:
            return TerminalKind.MAX_STEPS, s, y, None, hits, samples, n_steps
        clamp = False
        if time_index is None and s + h >= t_max:
            h = t_max - s
            clamp = True
        if h <= 1e-14 * max(1.0, abs(s)):
            if clamp and h >= 0:
                return TerminalKind.TIMEOUT, s, y, None, hits, samples, n_steps
            raise StepSizeUnderflow(sigma * s, y, h)
        y_new, err, ks = _dopri_step(rhs, s, y, k1, h)
        finite = all(math.isfinite(v) for v in y_new)
        en = _rms_norm(err, y, y_new, rtol, atol) if finite else float("inf")
        if not math.isfinite(en):
            h *= 0.2
            continue
        if en > 1.0:
            h *= max(_FAC_MIN, _SAFETY * en ** -_EXPO)
            continue
        n_steps += 1
        s_new = s + h

        # every triggered event inside (s, s_new], resolved in order below
        candidates = []
        for idx, (spec, g, cond) in enumerate(events):
            g0, g1 = g_vals[idx], g(y_new)
            crossed = (g0 < 0 <= g1) or (g0 > 0 >= g1)
            if not crossed:
                continue
            sign = 1 if g1 > g0 else -1
            if spec.direction and sign != spec.direction:
                continue
            theta = _locate(g, y, ks, h, g0, g1)
            if s + theta * h <= GUARD_BAND:
                continue
            candidates.append((theta, "event", idx))
        r_new = radius_g(y_new)
        blow = r_old < 0 <= r_new
        theta_blow = _locate(radius_g, y, ks, h, r_old, r_new) if blow else None
        t_cross = None
        if time_index is not None:
            tg0 = abs(y[time_index]) - t_max
            tg1 = abs(y_new[time_index]) - t_max
            if tg0 < 0 <= tg1:
                t_cross = _locate(lambda u: abs(u[time_index]) - t_max, y, ks, h, tg0, tg1)

        if theta_blow is not None:
            candidates.append((theta_blow, "blow", None))
        if t_cross is not None:
            candidates.append((t_cross, "time", None))
        candidates.sort(key=lambda c: c[0])

        stop = None
        for theta, what, idx in candidates:
            if what == "event":
                spec, g, cond = events[idx]
                y_ev = _exact_at(rhs, s, y, k1, h, theta, ks)
                if not cond(y_ev):
                    continue
                hit = EventHit(spec.label, sigma * (s + theta * h), tuple(y_ev))
                hits.append(hit)
                if spec.terminal:
                    stop = (TerminalKind.EVENT, theta, y_ev, hit)
                    break
            elif what == "blow":
                stop = (TerminalKind.BLOW_UP, theta, _exact_at(rhs, s, y, k1, h, theta, ks), None)
                break
            else:
                stop = (TerminalKind.TIMEOUT, theta, _exact_at(rhs, s, y, k1, h, theta, ks), None)
                break
        if stop is not None:
            kind, theta, y_end, hit = stop
            s_end = s + theta * h
            if record:
                samples.append((s_end,) + tuple(y_end))
            return kind, s_end, y_end, hit, hits, samples, n_steps

        s, y, k1 = s_new, y_new, ks[6]
        if capture and math.sqrt(sum(y[i] * y[i] for i in range(blowup_dims))) < capture:
            if record:
                samples.append((s,) + tuple(y))
            return TerminalKind.CAPTURED, s, y, None, hits, samples, n_steps
        g_vals = [g(y) for _, g, _ in events]
        r_old = r_new
        if record:
            samples.append((s,) + tuple(y))
        if clamp:
            return TerminalKind.TIMEOUT, s, y, None, hits, samples, n_steps

        fac = en ** _EXPO / err_old ** _BETA if en > 0 else 1.0 / _FAC_MAX
        fac = min(1.0 / _FAC_MIN, max(1.0 / _FAC_MAX, fac / _SAFETY))
        h = h / fac
        err_old = max(en, 1e-4)


def _locate(g, y, ks, h, g0, g1) -> float:
    """Root of g along the dense output on [0, 1]: bisection, then a secant polish."""
    lo, hi = 0.0, 1.0
    glo, ghi = g0, g1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(_dense(y, ks, h, mid))
        if abs(gm) < EVENT_TOL or (hi - lo) * abs(h) < 1e-16:
            lo = hi = mid
            glo = ghi = gm
            break
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi, ghi = mid, gm
    if lo == hi:
        return lo
    if ghi != glo:
        sec = lo - glo * (hi - lo) / (ghi - glo)
        if lo <= sec <= hi:
            return sec
    return 0.5 * (lo + hi)


def _exact_at(rhs, s, y, k1, h, theta, ks):
    """State at s + theta*h from a genuine RK step (more accurate than dense output)."""
    if theta >= 1.0:
        return _dense(y, ks, h, 1.0)
    if theta <= 0.0:
        return list(y)
    y_t, _, _ = _dopri_step(rhs, s, y, k1, theta * h)
    return y_t


def flow(
    params: SystemParams,
    start: PhaseState,
    events: Sequence[EventSpec] = (),
    accumulate: Sequence[str] = (),
    config: OdeConfig = OdeConfig(),
    record: bool = False,
) -> FlowResult:
    """Trace the orbit through ``start`` until the first terminal condition."""
    acc = list(accumulate)
    time_index = None
    if config.arc_damping and "time" not in acc:
        acc.append("time")
    rhs, order = planar_rhs(params, acc)
    if config.arc_damping:
        time_index = 2 + order.index("time")
        base = rhs

        def rhs(s, u):
            v = base(s, u)
            factor = 1.0 / (1.0 + math.hypot(v[0], v[1]))
            return [c * factor for c in v]

    F, _ = _poly_funcs(params.f)
    evs = [(spec, _event_function(spec, F), _event_condition(spec)) for spec in events]
    y0 = [start.x, start.y] + [0.0] * len(order)
    kind, s_end, y_end, hit, hits, samples, n = integrate(
        rhs, y0, evs, config, record=record, time_index=time_index, sigma=params.sigma
    )
    sig = params.sigma
    elapsed = y_end[time_index] if time_index is not None else sig * s_end
    accs = {name: y_end[2 + i] for i, name in enumerate(order) if name in accumulate}
    if record and samples is not None:
        if time_index is not None:
            samples = [(start.t + u[1 + time_index],) + tuple(u[1:3]) for u in samples]
        else:
            samples = [(start.t + sig * u[0],) + tuple(u[1:3]) for u in samples]
    if hit is not None and time_index is not None:
        hit = EventHit(hit.label, hit.state[time_index], hit.state)
    hits = [
        EventHit(h_.label, h_.state[time_index], h_.state) if time_index is not None else h_
        for h_ in hits
    ]
    return FlowResult(
        terminal=kind,
        end_state=PhaseState(y_end[0], y_end[1], start.t + elapsed),
        elapsed=elapsed,
        accumulators=accs,
        event=hit,
        hits=hits,
        samples=samples,
        n_steps=n,
        full_state=tuple(y_end),
    )


@dataclass(frozen=True)
class Linearization:
    trace: float
    discriminant: float
    kind: Literal["node", "focus", "weak_focus", "center_candidate"]

    @property
    def unstable(self) -> bool:
        return self.trace > 0

    @property
    def stable(self) -> bool:
        return self.trace < 0


def linearization_at_origin(params: SystemParams) -> Linearization:
    """Jacobian [[-F'(0), 1], [-eps, 0]] at the origin, classified by trace and discriminant."""
    trace = -params.f.deriv(0.0)
    det = params.eps
    disc = trace * trace - 4.0 * det
    if trace == 0.0:
        kind = "center_candidate" if params.f.is_even() and params.e == 0.0 else "weak_focus"
    elif disc >= 0.0:
        kind = "node"
    else:
        kind = "focus"
    return Linearization(trace=trace, discriminant=disc, kind=kind)
