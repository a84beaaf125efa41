"""Separatrices of the saddle at infinity and the homoclinic parameter d0.

For F of even degree with positive leading coefficient, two special orbits
run asymptotically along the graph of F: the stable one in x < 0 and the
unstable one in x > 0.  S and U are where they cross the negative y-axis.
Both are found by shooting from a seed on the graph far out and integrating
toward the axis in the time direction in which neighbouring orbits converge
onto the separatrix; that contraction is so strong that the seed offset is
forgotten long before the axis.  The far cutoff is doubled until the answer
stops moving.

For the quartic family F = a x^4 + b x^3 + c x^2 + d x, h(d) = U(d) - S(d) is
increasing in d and vanishes at exactly one d0: the loop through infinity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

from .errors import (
    Anomalous,
    BracketFailure,
    ConvergenceFailure,
    InvalidParameters,
    NumericalFailure,
)
from .ode import EventKind, EventSpec, OdeConfig, PhaseState, SystemParams, TerminalKind, flow
from .poly import Poly, critical_points
from .sections import RETURN_CONFIG, return_map

log = logging.getLogger(__name__)

STABLE = "stable"
UNSTABLE = "unstable"

SHOOT_CONFIG = OdeConfig(arc_damping=True, t_max=1e7, max_steps=3_000_000, capture_radius=1e-9)
X_FAR_CAP = 1e6
MIN_X_FAR = 1.0
# log of the transverse contraction the first cutoff must provide (e**-40 ~ 4e-18)
SEED_CONTRACTION = 40.0

SCAN_HEADER = "d,U,S,err_U,err_S"
HOMOCLINIC_HEADER = "a,b,c,d0,p0,loop_stable,iterations"


@dataclass(frozen=True)
class SeparatrixResult:
    value: float
    x_far: float
    err_est: float
    branch: str
    history: tuple[tuple[float, float], ...] = ()


def _check_shootable(f: Poly) -> None:
    if f.degree < 2 or f.degree % 2 or f.leading <= 0:
        raise InvalidParameters(
            f"separatrices need even degree and positive leading coefficient, got {f}"
        )


def default_x_far(params: SystemParams, side: int) -> float:
    """First cutoff: past every turning point of F, far enough that the seed is forgotten.

    Along the separatrix neighbouring orbits approach it at rate |F'(x)|
    per unit time, and time runs as dt = |F'(x)| dx / |y'(x)|, so the log
    contraction collected between the turning points and X is the integral
    of F'(x)**2 / |y'(x)| over that stretch.
    """
    f = params.f
    crit = critical_points(f)
    reach = max([0.0] + [abs(x) for x in crit if x * side > 0])
    x = max(MIN_X_FAR, 1.1 * reach, reach + 0.25)
    total, step = 0.0, 0.01 * max(1.0, x)
    u = reach + 1e-9
    while True:
        while u < x:
            v = side * (u + 0.5 * min(step, x - u))
            ydot = abs(-params.eps * v + params.e * v * v)
            if ydot > 0:
                total += f.deriv(v) ** 2 / ydot * min(step, x - u)
            u += step
        if total >= SEED_CONTRACTION or x > X_FAR_CAP:
            return x
        u = x
        x *= 1.1


def _shoot_direction(params: SystemParams, x_seed: float) -> str:
    """Time direction in which |x| decreases just off the graph, on the manifold's side.

    Along the separatrix x' = u with u ≈ y'(x) / F'(x), the gap to the graph.
    """
    f = params.f
    ydot = -params.eps * x_seed + params.e * x_seed * x_seed
    slope = f.deriv(x_seed)
    if slope == 0.0 or ydot == 0.0:
        raise ConvergenceFailure(f"degenerate shooting seed at x={x_seed}")
    xdot = ydot / slope
    return "forward" if xdot * x_seed < 0 else "backward"


def _shoot_once(params: SystemParams, side: int, x_far: float, config: OdeConfig) -> float:
    x0 = side * x_far
    start = PhaseState(x0, params.f(x0))
    p = replace(params, time_direction=_shoot_direction(params, x0))
    res = flow(p, start, [EventSpec(EventKind.REACH_X, target=0.0)], config=config)
    if res.terminal is TerminalKind.CAPTURED:
        # the separatrix ends in the origin (a node) instead of crossing x = 0;
        # its crossing height is the limiting value 0 from below
        return -0.0
    if res.terminal is not TerminalKind.EVENT:
        raise ConvergenceFailure(
            f"shot from x={x0:g} ended with {res.terminal.value} at {res.end_state}"
        )
    return res.end_state.y


def separatrix_arc(
    params: SystemParams, side: int, x_far: float | None = None, config: OdeConfig = SHOOT_CONFIG
) -> list[tuple[float, float]]:
    """Points of one separatrix from its seed on the graph down to the y-axis."""
    _check_shootable(params.f)
    x0 = side * (x_far if x_far is not None else default_x_far(params, side))
    p = replace(params, time_direction=_shoot_direction(params, x0))
    res = flow(
        p, PhaseState(x0, params.f(x0)), [EventSpec(EventKind.REACH_X, target=0.0)],
        config=config, record=True,
    )
    if res.terminal not in (TerminalKind.EVENT, TerminalKind.CAPTURED):
        raise ConvergenceFailure(f"arc from x={x0:g} ended with {res.terminal.value}")
    return [(u[1], u[2]) for u in res.samples]


def _intersection(
    params: SystemParams, side: int, tol: float, x_far: float | None, config: OdeConfig
) -> SeparatrixResult:
    _check_shootable(params.f)
    branch = STABLE if side < 0 else UNSTABLE
    x = x_far if x_far is not None else default_x_far(params, side)
    history = []
    prev = None
    while x <= X_FAR_CAP:
        try:
            value = _shoot_once(params, side, x, config)
        except ConvergenceFailure:
            if prev is None:
                raise
            raise ConvergenceFailure(
                f"{branch} separatrix: cutoff {x:g} unreachable before convergence "
                f"(last change {history[-1]})"
            ) from None
        history.append((x, value))
        if prev is not None:
            err = abs(value - prev)
            if err < tol:
                if value > 0 or (value == 0 and math.copysign(1.0, value) > 0):
                    raise Anomalous(f"{branch} separatrix crosses the y-axis at y={value}", value)
                return SeparatrixResult(value, x, err, branch, tuple(history))
        prev = value
        x *= 2
    raise ConvergenceFailure(f"{branch} separatrix did not converge below cutoff {X_FAR_CAP:g}")


def stable_intersection(
    params: SystemParams, tol: float = 1e-8, x_far: float | None = None, config: OdeConfig = SHOOT_CONFIG
) -> SeparatrixResult:
    """S: crossing of the stable separatrix (asymptotic to the graph in x < 0)."""
    return _intersection(params, -1, tol, x_far, config)


def unstable_intersection(
    params: SystemParams, tol: float = 1e-8, x_far: float | None = None, config: OdeConfig = SHOOT_CONFIG
) -> SeparatrixResult:
    """U: crossing of the unstable separatrix (asymptotic to the graph in x > 0)."""
    return _intersection(params, +1, tol, x_far, config)


@lru_cache(maxsize=2048)
def separatrix_pair(
    params: SystemParams, tol: float = 1e-8, config: OdeConfig = SHOOT_CONFIG
) -> tuple[SeparatrixResult, SeparatrixResult]:
    """(U, S) for ``params``, memoized because bisection and scans revisit them."""
    return unstable_intersection(params, tol, config=config), stable_intersection(
        params, tol, config=config
    )


def quartic(a: float, b: float, c: float, d: float, eps: float = 1.0, e: float = 0.0) -> SystemParams:
    return SystemParams(Poly.from_abcd(a, b, c, d), eps=eps, e=e)


def gap(a: float, b: float, c: float, d: float, tol: float = 1e-8, config: OdeConfig = SHOOT_CONFIG) -> float:
    """h(d) = U(d) - S(d)."""
    u, s = separatrix_pair(quartic(a, b, c, d), tol, config)
    return u.value - s.value


@dataclass
class ScanRow:
    d: float
    u: SeparatrixResult | None
    s: SeparatrixResult | None
    error: str | None = None

    def csv_row(self) -> str:
        if self.u is None or self.s is None:
            return f"{self.d:.17g},nan,nan,nan,nan"
        return ",".join(
            f"{v:.17g}" for v in (self.d, self.u.value, self.s.value, self.u.err_est, self.s.err_est)
        )


@dataclass
class MonotonicScan:
    rows: list[ScanRow]
    violations: list[str] = field(default_factory=list)

    def margins(self) -> list[tuple[float, float, float]]:
        """Per step: (S drop, U rise, 2 * largest err_est of the four values)."""
        out = []
        good = [r for r in self.rows if r.error is None]
        for r0, r1 in zip(good, good[1:]):
            noise = 2 * max(r0.u.err_est, r0.s.err_est, r1.u.err_est, r1.s.err_est)
            out.append((r0.s.value - r1.s.value, r1.u.value - r0.u.value, noise))
        return out


def _scan_row(args) -> ScanRow:
    a, b, c, d, tol, config = args
    try:
        u, s = separatrix_pair(quartic(a, b, c, d), tol, config)
        return ScanRow(d, u, s)
    except NumericalFailure as exc:
        return ScanRow(d, None, None, str(exc))


def monotonic_scan(
    a: float,
    b: float,
    c: float,
    d_grid: Sequence[float],
    tol: float = 1e-8,
    config: OdeConfig = SHOOT_CONFIG,
    jobs: int = 1,
) -> MonotonicScan:
    """U and S over a d grid; flags S failing to decrease or U failing to increase."""
    if not a > 0 or b < 0:
        raise InvalidParameters("monotonic scan needs a > 0 and b >= 0")
    grid = sorted(float(d) for d in d_grid)
    args = [(a, b, c, d, tol, config) for d in grid]
    if jobs > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_row, args))
    else:
        rows = [_scan_row(x) for x in args]
    scan = MonotonicScan(rows)
    good = [r for r in rows if r.error is None]
    for (r0, r1), (s_drop, u_rise, noise) in zip(zip(good, good[1:]), scan.margins()):
        if s_drop < -noise:
            scan.violations.append(f"S rises from d={r0.d:g} to d={r1.d:g} by {-s_drop:.3e}")
        if u_rise < -noise:
            scan.violations.append(f"U falls from d={r0.d:g} to d={r1.d:g} by {-u_rise:.3e}")
    return scan


@dataclass(frozen=True)
class HomoclinicResult:
    a: float
    b: float
    c: float
    d0: float
    bracket: tuple[float, float]
    iterations: int
    loop_stable: bool
    p0: float
    certificate: str | None = None

    def csv_row(self) -> str:
        return (
            f"{self.a:.17g},{self.b:.17g},{self.c:.17g},{self.d0:.17g},{self.p0:.17g},"
            f"{str(self.loop_stable).lower()},{self.iterations}"
        )

    @property
    def interior_d(self) -> float:
        """Bracket end on the U > S side, where the loop has broken inward."""
        return self.bracket[1] if self.b >= 0 else self.bracket[0]


@lru_cache(maxsize=256)
def find_d0(
    a: float,
    b: float,
    c: float,
    tol: float = 1e-6,
    sep_tol: float = 1e-8,
    symmetry_certificate: bool = True,
    config: OdeConfig = SHOOT_CONFIG,
    max_expansions: int = 20,
) -> HomoclinicResult:
    """The unique d0 with U(d0) = S(d0), by bisection on h(d) = U(d) - S(d).

    b = 0 makes F(x) - d x even, and the reflection (x, t) -> (-x, -t) then
    forces d0 = 0; that answer is returned with a certificate unless disabled.
    Negative b is handled on the mirrored side (d0(a, -b, c) = -d0(a, b, c)).
    """
    if not a > 0:
        raise InvalidParameters("find_d0 needs a > 0")
    if not tol > 0:
        raise InvalidParameters("tolerance must be positive")

    def h(d):
        return gap(a, b, c, d, sep_tol, config)

    if b == 0 and symmetry_certificate:
        u, s = separatrix_pair(quartic(a, b, c, 0.0), sep_tol, config)
        log.info("b = 0: d0 = 0 by the reflection symmetry of an even F")
        return HomoclinicResult(
            a, b, c, 0.0, (0.0, 0.0), 0, False, 0.5 * (u.value + s.value),
            certificate="even F: reflection (x,t)->(-x,-t) swaps U and S, so U(0)=S(0)",
        )

    h0 = h(0.0)
    if b > 0 and h0 <= 0:
        raise BracketFailure(f"expected U(0) > S(0) for b > 0, got h(0) = {h0:.3e}")
    if b < 0 and h0 >= 0:
        raise BracketFailure(f"expected U(0) < S(0) for b < 0, got h(0) = {h0:.3e}")
    if b == 0:
        # no preferred side: grow a symmetric bracket
        w = 1.0
        for _ in range(max_expansions):
            if h(-w) < 0 < h(w):
                break
            w *= 2
        else:
            raise BracketFailure(f"no sign change of U - S on [-{w:g}, {w:g}]")
        lo, hi = -w, w
    else:
        # walk away from 0 until h changes sign
        step = -1.0 if h0 > 0 else 1.0
        near, far = 0.0, step
        for _ in range(max_expansions):
            if (h(far) > 0) != (h0 > 0):
                break
            near, far = far, far * 2
        else:
            raise BracketFailure(f"no sign change of U - S up to d = {far:g}")
        lo, hi = min(near, far), max(near, far)

    iterations = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
        iterations += 1
    d0 = 0.5 * (lo + hi)
    u, s = separatrix_pair(quartic(a, b, c, d0), sep_tol, config)
    return HomoclinicResult(
        a, b, c, d0, (lo, hi), iterations, loop_stable=(-d0 > 0), p0=0.5 * (u.value + s.value)
    )


@dataclass(frozen=True)
class AttractivityRow:
    k: int
    y: float
    div_integral: float
    status: str


def loop_attractivity_probe(
    result: HomoclinicResult, k_max: int = 6, config: OdeConfig = RETURN_CONFIG
) -> list[AttractivityRow]:
    """Divergence integrals D(y) for y = p0 + (0 - p0) * 2**-k, approaching the loop."""
    if not result.d0 < 0:
        raise InvalidParameters("no attractive loop to probe: needs d0 < 0 (b > 0)")
    params = quartic(result.a, result.b, result.c, result.d0)
    rows = []
    for k in range(1, k_max + 1):
        y = result.p0 + (0.0 - result.p0) * 2.0 ** -k
        s = return_map(params, y, config)
        rows.append(AttractivityRow(k, y, s.div_integral if s.returned else math.nan, s.status))
    return rows


@dataclass(frozen=True)
class EscapeResult:
    complete: bool
    t_est: float | None = None
    direction: str | None = None

    def __str__(self) -> str:
        if self.complete:
            return "Complete"
        return f"FiniteEscape({self.direction}, t={self.t_est:.6g})"


def escape_analysis(
    params: SystemParams, start: PhaseState, t_max: float = 1e3, blowup_radius: float = 1e6
) -> EscapeResult:
    """Complete iff neither time direction reaches the blow-up radius before |t| = t_max."""
    config = OdeConfig(arc_damping=True, t_max=t_max, blowup_radius=blowup_radius)
    fwd = replace(params, time_direction="forward")
    for p in (fwd, fwd.reversed()):
        res = flow(p, start, config=config)
        if res.terminal is TerminalKind.BLOW_UP:
            return EscapeResult(False, res.elapsed, p.time_direction)
    return EscapeResult(True)
