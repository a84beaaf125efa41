"""First integrals of the Liénard field and of its four-dimensional lift.

The lift adds a cotangent pair (z, w) to (x, y).  Two sign conventions for the
z equation are supported:

* ``"hamiltonian"``: z' = w + F'(x) z, w' = -z.  These are Hamilton's
  equations for H = z (y - F(x)) - w x, so H is conserved, and for F = k x so
  is K = y w + x z.
* ``"variational"``: z' = w - F'(x) z, w' = -z.  This is the linearised
  planar flow; (z, w) is a tangent vector and the monodromy built from it has
  determinant exp(D) (Liouville).  H is not conserved in this mode.

phi(x, y) = (y - x^2 + 1/2) exp(-2y) is a first integral of the planar field
for F = x^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

from .errors import InvalidParameters, NoReturn
from .ode import (
    CROSS_NEG,
    OdeConfig,
    PhaseState,
    SystemParams,
    TerminalKind,
    _event_condition,
    _event_function,
    _poly_funcs,
    integrate,
    planar_rhs,
)
from .poly import Poly
from .sections import return_map

Mode = Literal["hamiltonian", "variational"]

# states decay or grow exponentially along these flows, so control is relative
CONSERVED_CONFIG = OdeConfig(rtol=1e-12, atol=1e-30, t_max=1e4, blowup_radius=1e12)

X_SQUARED = Poly((0.0, 1.0))

CSV_HEADER = "t,x,y,z,w,H,extra"


@dataclass(frozen=True)
class State4:
    x: float
    y: float
    z: float
    w: float
    t: float = 0.0

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z, self.w]


@dataclass(frozen=True)
class DriftReport:
    quantity: str
    initial: float
    max_abs_drift: float
    relative_drift: float
    t_span: float
    # largest magnitude of the terms summed into the quantity along the run
    scale: float = 0.0

    @property
    def scaled_drift(self) -> float:
        """Drift relative to the term magnitudes; meaningful when ``initial`` is 0."""
        return self.max_abs_drift / max(1e-30, self.scale, abs(self.initial))


def _report(name: str, values: Sequence[float], t_span: float, scale: float = 0.0) -> DriftReport:
    v0 = values[0]
    drift = max(abs(v - v0) for v in values)
    return DriftReport(name, v0, drift, drift / max(1e-30, abs(v0)), t_span, scale)


def phi(x: float, y: float) -> float:
    return (y - x * x + 0.5) * math.exp(-2.0 * y)


def phi_drift(
    start: PhaseState, t_span: float | None = None, config: OdeConfig = CONSERVED_CONFIG
) -> DriftReport:
    """Drift of phi along the F = x^2 orbit through ``start``.

    Without ``t_span`` the orbit is followed for one period, which needs a
    start on the section {x = 0, y < 0} (or the equilibrium).
    """
    params = SystemParams(X_SQUARED)
    if t_span is None:
        if start.x == 0.0 and start.y == 0.0:
            t_span = 2 * math.pi
        elif start.x == 0.0 and start.y < 0:
            sample = return_map(params, start.y)
            if not sample.returned:
                raise NoReturn(sample.status, start.y)
            t_span = sample.t_return
        else:
            raise InvalidParameters("one-period span needs a start on the negative y-axis")
    if not t_span > 0:
        raise InvalidParameters(f"t_span must be positive, got {t_span}")
    rhs, _ = planar_rhs(params)
    cfg = OdeConfig(config.rtol, config.atol, t_span, config.blowup_radius, config.max_steps)
    _, _, _, _, _, samples, _ = integrate(rhs, [start.x, start.y], config=cfg, record=True)
    return _report("phi", [phi(u[1], u[2]) for u in samples], t_span)


def _lift_rhs(f: Poly, mode: Mode, eps: float = 1.0, e: float = 0.0):
    if mode not in ("hamiltonian", "variational"):
        raise InvalidParameters(f"unknown mode {mode!r}")
    F, dF = _poly_funcs(f)

    if mode == "hamiltonian":
        # H = z (y - F) + w (-eps x + e x^2); (z, w) are the conjugate momenta
        def rhs(s, u):
            x, y, z, w = u
            return [y - F(x), -eps * x + e * x * x, dF(x) * z + (eps - 2 * e * x) * w, -z]
    else:
        def rhs(s, u):
            x, y, z, w = u
            return [y - F(x), -eps * x + e * x * x, w - dF(x) * z, (-eps + 2 * e * x) * z]

    return rhs


def hamiltonian(f: Poly, u: Sequence[float]) -> float:
    x, y, z, w = u[:4]
    return z * (y - f(x)) - w * x


def linear_integral(u: Sequence[float]) -> float:
    x, y, z, w = u[:4]
    return y * w + x * z


def extra_integral(f: Poly) -> tuple[str, Callable[[Sequence[float]], float]] | None:
    """The known second integral for this F, if any: phi for x^2, K for k x."""
    if f == X_SQUARED:
        return "phi", lambda u: phi(u[0], u[1])
    if f.degree <= 1:
        return "K", linear_integral
    return None


def _run4(rhs, start: State4, t_span: float, config: OdeConfig, stride: float | None):
    cfg = OdeConfig(config.rtol, config.atol, t_span, config.blowup_radius, config.max_steps)
    if stride is None:
        kind, _, _, _, _, samples, _ = integrate(
            rhs, start.as_list(), config=cfg, record=True, rest_shortcut=False
        )
        return kind, [(start.t + u[0],) + tuple(u[1:]) for u in samples], samples
    if not stride > 0:
        raise InvalidParameters(f"stride must be positive, got {stride}")
    # restart at every output time so the grid points are integrator nodes
    n = max(1, math.ceil(t_span / stride - 1e-12))
    u = start.as_list()
    t0 = 0.0
    grid = [(start.t,) + tuple(u)]
    fine = [(0.0,) + tuple(u)]
    kind = TerminalKind.TIMEOUT
    for i in range(1, n + 1):
        t1 = min(i * stride, t_span)
        seg = OdeConfig(config.rtol, config.atol, t1 - t0, config.blowup_radius, config.max_steps)
        kind, _, u, _, _, samples, _ = integrate(
            rhs, u, config=seg, record=True, rest_shortcut=False
        )
        fine.extend((t0 + v[0],) + tuple(v[1:]) for v in samples[1:])
        if kind is not TerminalKind.TIMEOUT:
            break
        grid.append((start.t + t1,) + tuple(u))
        t0 = t1
    return kind, grid, fine


def dirac_flow(
    f: Poly,
    start: State4,
    t_span: float,
    mode: Mode = "hamiltonian",
    config: OdeConfig = CONSERVED_CONFIG,
    stride: float | None = None,
) -> tuple[list[tuple[float, ...]], DriftReport]:
    """Trajectory rows (t, x, y, z, w) of the lifted system and the drift of H.

    With ``stride`` the trajectory is reported on the grid t0 + k*stride;
    otherwise at every accepted step.  Drift is always measured on every step.
    """
    if not t_span > 0:
        raise InvalidParameters(f"t_span must be positive, got {t_span}")
    kind, traj, fine = _run4(_lift_rhs(f, mode), start, t_span, config, stride)
    if kind not in (TerminalKind.TIMEOUT,):
        raise InvalidParameters(f"lifted flow stopped early ({kind.value}); shorten t_span")
    values = [hamiltonian(f, u[1:]) for u in fine]
    scale = max(max(abs(u[3] * (u[2] - f(u[1]))), abs(u[4] * u[1])) for u in fine)
    return traj, _report("H", values, t_span, scale)


def linear_case_integral(
    k: float,
    start: State4,
    t_span: float,
    config: OdeConfig = CONSERVED_CONFIG,
    f: Poly | None = None,
    mode: Mode = "hamiltonian",
) -> DriftReport:
    """Drift of K = y w + x z for F = k x.

    ``f`` overrides the damping to run deliberately broken controls.
    """
    poly = Poly((k,)) if f is None else f
    _, fine = _run4(_lift_rhs(poly, mode), start, t_span, config, None)[1:]
    values = [linear_integral(u[1:]) for u in fine]
    scale = max(max(abs(u[2] * u[4]), abs(u[1] * u[3])) for u in fine)
    return _report("K", values, t_span, scale)


@dataclass(frozen=True)
class MonodromyCheck:
    y0: float
    determinant: float
    exp_d: float
    t_return: float

    @property
    def relative_error(self) -> float:
        return abs(self.determinant - self.exp_d) / abs(self.exp_d)


def monodromy_determinant(
    params: SystemParams, y0: float, config: OdeConfig = OdeConfig(rtol=1e-12, atol=1e-20)
) -> MonodromyCheck:
    """det of the planar monodromy over one return, from two variational runs.

    Columns start at (z, w) = (1, 0) and (0, 1); both runs stop at the base
    orbit's return to the negative y-axis, where det should equal exp(D).
    """
    if params.time_direction != "forward":
        raise InvalidParameters("monodromy check runs forward in time")
    sample = return_map(params, y0)
    if not sample.returned:
        raise NoReturn(sample.status, y0)
    rhs = _lift_rhs(params.f, "variational", params.eps, params.e)
    F, _ = _poly_funcs(params.f)
    event = [(CROSS_NEG, _event_function(CROSS_NEG, F), _event_condition(CROSS_NEG))]
    cfg = OdeConfig(config.rtol, config.atol, 10 * sample.t_return, config.blowup_radius)
    cols = []
    for z0, w0 in ((1.0, 0.0), (0.0, 1.0)):
        kind, s, u, _, _, _, _ = integrate(rhs, [0.0, y0, z0, w0], event, cfg, rest_shortcut=False)
        if kind is not TerminalKind.EVENT:
            raise NoReturn(kind.value, y0)
        cols.append((u[2], u[3], s))
    det = cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1]
    return MonodromyCheck(y0, det, math.exp(sample.div_integral), cols[0][2])
