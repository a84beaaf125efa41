"""Limit cycles as fixed points of the return map.

A census samples the displacement delta(y) = P(y) - y on a grid of the
negative y-axis, refines every sign change by bisection and classifies the
resulting cycles by the return-map derivative.  Tangential zeros (semi-stable
cycles) cannot be seen as sign changes; they are hunted heuristically at
small interior minima of |delta|.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameters, NumericalFailure
from .homoclinic import HomoclinicResult, find_d0, quartic, separatrix_pair, SHOOT_CONFIG
from .ode import OdeConfig, SystemParams
from .poly import Poly, even_odd_decompose, half_line_minima, odd_unique_root
from .sections import RETURN_CONFIG, ReturnSample, return_derivative, return_map, scan

log = logging.getLogger(__name__)

STABLE = "stable"
UNSTABLE = "unstable"
SEMI_STABLE = "semi_stable"

ROOT_WIDTH = 1e-10
SEMI_THRESHOLD = 1e-6
KAPPA = 1e-3
CENTER_TOL = 1e-8

CSV_HEADER = "y_star,stability,p_prime,period,bracket_lo,bracket_hi"


class CycleCountMismatch(NumericalFailure):
    def __init__(self, expected: int, found: list):
        self.expected = expected
        self.found = found
        super().__init__(f"expected {expected} cycle(s), found {len(found)}")


@dataclass(frozen=True)
class CycleRecord:
    y_star: float
    stability: str
    bracket: tuple[float, float]
    p_prime: float
    period: float
    displacement: float = 0.0

    def csv_row(self) -> str:
        return ",".join(
            [
                f"{self.y_star:.17g}",
                self.stability,
                f"{self.p_prime:.17g}",
                f"{self.period:.17g}",
                f"{self.bracket[0]:.17g}",
                f"{self.bracket[1]:.17g}",
            ]
        )


@dataclass
class CensusReport:
    cycles: list[CycleRecord]
    scan_range: tuple[float, float]
    n_samples: int
    no_return_fraction: float
    samples: list[ReturnSample] = field(default_factory=list)
    center: bool = False
    near_misses: list[float] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def parity(self) -> str:
        return "odd" if self.count % 2 else "even"

    @property
    def no_return_rows(self) -> list[ReturnSample]:
        return [s for s in self.samples if not s.returned]


def _delta(params, y, config) -> float | None:
    s = return_map(params, y, config)
    return s.p - y if s.returned else None


def _bisect_root(params, lo, hi, d_lo, d_hi, config) -> tuple[float, float]:
    """Shrink [lo, hi] around a sign change of delta until narrower than ROOT_WIDTH."""
    while hi - lo > ROOT_WIDTH * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        d_mid = _delta(params, mid, config)
        if d_mid is None:
            raise NumericalFailure(f"return map failed inside a cycle bracket at y={mid}")
        if d_mid == 0.0:
            return mid, mid
        if (d_mid > 0) == (d_lo > 0):
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid
    return lo, hi


def _classify(p_prime: float, d_outer: float | None, d_inner: float | None) -> str:
    if p_prime < 1 - KAPPA:
        return STABLE
    if p_prime > 1 + KAPPA:
        return UNSTABLE
    # near-neutral multiplier: read the side signs instead.  Outside the cycle
    # (farther from the origin) delta > 0 pushes inward, toward the cycle.
    if d_outer is None or d_inner is None:
        return STABLE if p_prime < 1 else UNSTABLE
    if d_outer > 0 and d_inner < 0:
        return STABLE
    if d_outer < 0 and d_inner > 0:
        return UNSTABLE
    return SEMI_STABLE


def _record(params, lo, hi, config, stability=None) -> CycleRecord:
    y = 0.5 * (lo + hi)
    s = return_map(params, y, config)
    if not s.returned:
        raise NumericalFailure(f"cycle candidate y={y} does not return")
    p_prime = (s.y0 / s.p) * math.exp(s.div_integral)
    if stability is None:
        width = max(hi - lo, 1e-6 * max(1.0, abs(y)))
        stability = _classify(
            p_prime, _delta(params, y - width, config), _delta(params, y + width, config)
        )
    return CycleRecord(y, stability, (lo, hi), p_prime, s.t_return, s.p - s.y0)


def _golden_min(fn, lo, hi, tol):
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = fn(d)
    return (c, fc) if fc < fd else (d, fd)


def census(
    params: SystemParams,
    y_min: float,
    y_max: float,
    n_samples: int = 64,
    config: OdeConfig = RETURN_CONFIG,
    jobs: int = 1,
) -> CensusReport:
    if not (y_min < y_max < 0):
        raise InvalidParameters(f"need y_min < y_max < 0, got ({y_min}, {y_max})")
    if n_samples < 16:
        raise InvalidParameters("a census needs at least 16 samples")
    ys = [float(v) for v in np.linspace(y_min, y_max, n_samples)]
    samples = scan(params, ys, config, jobs)
    deltas = [s.p - s.y0 if s.returned else None for s in samples]
    no_return = sum(d is None for d in deltas) / n_samples
    report = CensusReport([], (y_min, y_max), n_samples, no_return, samples)

    live = [(y, d) for y, d in zip(ys, deltas) if d is not None]
    if live and all(abs(d) <= CENTER_TOL * max(1.0, abs(y)) for y, d in live):
        log.info("displacement vanishes on every returned sample: center, no isolated cycles")
        report.center = True
        return report

    cycles: list[CycleRecord] = []
    # sign changes between neighbouring grid points that both returned
    for i in range(n_samples - 1):
        d0, d1 = deltas[i], deltas[i + 1]
        if d0 is None or d1 is None:
            continue
        if d0 == 0.0:
            cycles.append(_record(params, ys[i], ys[i], config))
            continue
        if (d0 > 0) != (d1 > 0) and d1 != 0.0:
            lo, hi = _bisect_root(params, ys[i], ys[i + 1], d0, d1, config)
            cycles.append(_record(params, lo, hi, config))

    # tangential zeros: small interior minima of |delta| without a sign change
    for i in range(1, n_samples - 1):
        trio = deltas[i - 1 : i + 2]
        if any(d is None for d in trio):
            continue
        dm, dc, dp = trio
        if not (abs(dc) < SEMI_THRESHOLD and abs(dc) <= abs(dm) and abs(dc) <= abs(dp)):
            continue
        if (dm > 0) != (dc > 0) or (dc > 0) != (dp > 0):
            continue  # already handled as a sign change
        fine = [float(v) for v in np.linspace(ys[i - 1], ys[i + 1], 17)]
        fine_d = [_delta(params, y, config) for y in fine]
        if any(d is None for d in fine_d):
            continue
        split = False
        for j in range(len(fine) - 1):
            a_, b_ = fine_d[j], fine_d[j + 1]
            if (a_ > 0) != (b_ > 0):
                lo, hi = _bisect_root(params, fine[j], fine[j + 1], a_, b_, config)
                rec = _record(params, lo, hi, config)
                if all(abs(rec.y_star - c.y_star) > 1e-8 for c in cycles):
                    cycles.append(rec)
                split = True
        if split:
            continue
        sign = 1.0 if dc > 0 else -1.0

        def objective(y):
            d = _delta(params, y, config)
            return math.inf if d is None else sign * d

        y_best, d_best = _golden_min(objective, ys[i - 1], ys[i + 1], ROOT_WIDTH)
        if abs(d_best) <= 1e-8 * max(1.0, abs(y_best)):
            w = 1e-4 * max(1.0, abs(y_best))
            cycles.append(_record(params, y_best - w, y_best + w, config, stability=SEMI_STABLE))
        else:
            report.near_misses.append(y_best)

    cycles.sort(key=lambda c: abs(c.y_star))
    report.cycles = cycles
    return report


def lemma1_certificate(f: Poly) -> str:
    """"Certified" when F = E + O with O nonzero and vanishing only at x = 0."""
    _, odd = even_odd_decompose(f)
    if odd.coeffs and odd_unique_root(odd):
        return "Certified"
    return "NotApplicable"


@dataclass
class ParityReport:
    count: int
    parity: str
    d0: float
    consistent: bool
    d: float
    census: CensusReport
    homoclinic: HomoclinicResult


def parity_report(
    a: float, b: float, c: float, d: float, n_samples: int = 64, jobs: int = 1
) -> ParityReport:
    """Cycle count parity at d against the side of d0 it falls on (even for d <= d0)."""
    if not (a > 0 and b >= 0 and d < 0):
        raise InvalidParameters("parity report needs a > 0, b >= 0, d < 0")
    hom = find_d0(a, b, c)
    rep = census(quartic(a, b, c, d), hom.p0 * 0.999, -1e-3, n_samples, jobs=jobs)
    expect_even = d <= hom.d0
    consistent = (rep.count % 2 == 0) if expect_even else (rep.count % 2 == 1)
    return ParityReport(rep.count, rep.parity, hom.d0, consistent, d, rep, hom)


def hopf_probe(
    a: float, b: float, c: float, d: float = -0.01, n_samples: int = 64, jobs: int = 1
) -> CycleRecord | None:
    """The small cycle born at the weak focus: exactly one, stable, for slightly negative d."""
    if not (a > 0 and b > 0):
        raise InvalidParameters("the Hopf probe needs a > 0 and b > 0 (b = 0 is the center line)")
    rep = census(quartic(a, b, c, d), -0.5, -1e-4, n_samples, jobs=jobs)
    expected = 1 if d < 0 else 0
    if rep.count != expected:
        raise CycleCountMismatch(expected, rep.cycles)
    return rep.cycles[0] if rep.cycles else None


@dataclass(frozen=True)
class EpsilonRow:
    eps: float
    u: float
    s: float
    m_plus: float
    m_minus: float
    error: str | None = None


def epsilon_limit_check(
    f: Poly, eps_list: Sequence[float], tol: float = 1e-8, config: OdeConfig = SHOOT_CONFIG
) -> list[EpsilonRow]:
    """U(eps), S(eps) next to the half-line minima M+ and M- they tend to as eps -> 0."""
    mins = half_line_minima(f)
    rows = []
    for eps in eps_list:
        try:
            u, s = separatrix_pair(SystemParams(f, eps=eps), tol, config)
            rows.append(EpsilonRow(eps, u.value, s.value, mins.m_plus, mins.m_minus))
        except NumericalFailure as exc:
            rows.append(EpsilonRow(eps, math.nan, math.nan, mins.m_plus, mins.m_minus, str(exc)))
    return rows
