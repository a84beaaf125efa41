import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lienard_lab.errors import InvalidParameters, StepSizeUnderflow
from lienard_lab.ode import (
    CROSS_NEG,
    CROSS_POS,
    EventKind,
    EventSpec,
    OdeConfig,
    PhaseState,
    SystemParams,
    TerminalKind,
    flow,
    linearization_at_origin,
)
from lienard_lab.poly import Poly

X2 = SystemParams(Poly((0, 1)))
X4 = SystemParams(Poly((0, 0, 0, 1)))


def test_harmonic_oscillator_matches_closed_form():
    # F = 0: x = -sin t, y = -cos t from (0, -1)
    res = flow(SystemParams(Poly(())), PhaseState(0.0, -1.0), config=OdeConfig(t_max=10.0))
    assert res.terminal is TerminalKind.TIMEOUT
    assert res.end_state.t == pytest.approx(10.0, abs=1e-12)
    assert res.end_state.x == pytest.approx(-math.sin(10.0), abs=1e-9)
    assert res.end_state.y == pytest.approx(-math.cos(10.0), abs=1e-9)


def test_center_orbit_returns_to_start():
    res = flow(X2, PhaseState(0.0, -0.25), [CROSS_POS, CROSS_NEG])
    assert res.terminal is TerminalKind.EVENT
    assert res.event.label == CROSS_NEG.label
    assert res.end_state.y == pytest.approx(-0.25, abs=1e-9)
    assert abs(res.end_state.x) <= 1e-10
    assert len(res.hits) == 2


def test_equilibrium_start_times_out_in_place():
    res = flow(SystemParams(Poly.from_abcd(1, 1, 1, 1)), PhaseState(0.0, 0.0), [CROSS_NEG])
    assert res.terminal is TerminalKind.TIMEOUT
    assert (res.end_state.x, res.end_state.y) == (0.0, 0.0)


def test_unstable_focus_spirals_outward():
    res = flow(SystemParams(Poly.from_abcd(1, 1, 1, -1)), PhaseState(0.0, -0.01), [CROSS_POS, CROSS_NEG])
    assert res.terminal is TerminalKind.EVENT
    assert abs(res.end_state.y) > 0.01


def test_linearization_examples():
    node = linearization_at_origin(SystemParams(Poly((2, 0, 1))))
    assert node.kind == "node" and node.trace == -2 and node.discriminant == 0
    node5 = linearization_at_origin(SystemParams(Poly((2, 0, 0, 0, 1))))
    assert node5.kind == "node"
    assert linearization_at_origin(X4).kind == "center_candidate"
    foc = linearization_at_origin(SystemParams(Poly((-0.01, 0, 0, 1))))
    assert foc.kind == "focus" and foc.unstable and foc.trace == pytest.approx(0.01)
    weak = linearization_at_origin(SystemParams(Poly((0, 0, 1, 1))))
    assert weak.kind == "weak_focus"


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-0.6, 0.6),
    st.floats(-0.6, 0.6),
    st.floats(0.5, 8.0),
    st.sampled_from([(0, 1), (1, 0, 0, 1), (-0.3, 0, 1), (0.5, 1, 1, 1)]),
)
def test_time_reversibility(x0, y0, duration, cs):
    if abs(x0) + abs(y0) < 1e-3:
        return
    params = SystemParams(Poly(cs))
    cfg = OdeConfig(t_max=duration, blowup_radius=1e3)
    fwd = flow(params, PhaseState(x0, y0), config=cfg)
    if fwd.terminal is not TerminalKind.TIMEOUT:
        return  # left the radius-1e3 disc
    back = flow(params.reversed(), fwd.end_state, config=cfg)
    assert back.terminal is TerminalKind.TIMEOUT
    assert math.hypot(back.end_state.x - x0, back.end_state.y - y0) <= 1e-7
    assert back.end_state.t == pytest.approx(0.0, abs=1e-9)


def test_event_guard_band_prevents_retrigger():
    first = flow(X2, PhaseState(0.0, -0.25), [CROSS_POS, CROSS_NEG])
    again = EventSpec(EventKind.CROSS_NEGATIVE_Y_AXIS, direction=+1, name="opposite")
    res = flow(X2, first.end_state, [again], config=OdeConfig(t_max=1.0))
    assert res.terminal is TerminalKind.TIMEOUT
    same = flow(X2, first.end_state, [CROSS_POS, CROSS_NEG])
    assert same.elapsed == pytest.approx(first.elapsed, rel=1e-8)


def test_event_location_precision():
    res = flow(X4, PhaseState(0.0, -0.4), [CROSS_POS, CROSS_NEG])
    assert abs(res.end_state.x) < 1e-10
    graph = EventSpec(EventKind.CROSS_GRAPH_OF_F)
    g = flow(X4, PhaseState(0.0, -0.4), [graph])
    assert abs(g.end_state.y - g.end_state.x ** 4) < 1e-10
    reach = flow(X4, PhaseState(0.0, -0.4), [EventSpec(EventKind.REACH_X, target=-0.1)])
    assert reach.end_state.x == pytest.approx(-0.1, abs=1e-10)


def test_divergence_vanishes_over_even_center_orbit():
    res = flow(X4, PhaseState(0.0, -0.5), [CROSS_POS, CROSS_NEG], ["div"])
    assert abs(res.accumulators["div"]) <= 1e-7


def test_divergence_accumulator_of_linear_damping():
    # F = k x gives div = -k, so D = -k * elapsed exactly
    p = SystemParams(Poly((0.3,)))
    res = flow(p, PhaseState(0.0, -1.0), [CROSS_POS, CROSS_NEG], ["div", "time"])
    assert res.accumulators["div"] == pytest.approx(-0.3 * res.elapsed, rel=1e-10)
    assert res.accumulators["time"] == pytest.approx(res.elapsed, rel=1e-12)


def test_arc_damping_preserves_orbit_and_time():
    p = SystemParams(Poly.from_abcd(1, 1, 0, -0.3))
    plain = flow(p, PhaseState(0.0, -0.4), [CROSS_POS, CROSS_NEG], ["div"])
    damped = flow(p, PhaseState(0.0, -0.4), [CROSS_POS, CROSS_NEG], ["div"], OdeConfig(arc_damping=True))
    assert damped.end_state.y == pytest.approx(plain.end_state.y, abs=1e-8)
    assert damped.elapsed == pytest.approx(plain.elapsed, rel=1e-8)
    assert damped.accumulators["div"] == pytest.approx(plain.accumulators["div"], abs=1e-8)


def test_backward_time_is_negative():
    res = flow(X2.reversed(), PhaseState(0.0, -0.25), [CROSS_POS, CROSS_NEG])
    assert res.elapsed < 0
    assert res.end_state.y == pytest.approx(-0.25, abs=1e-9)


def test_blow_up_is_a_terminal_event():
    # outside the x^4 period annulus the orbit escapes in finite time
    res = flow(X4, PhaseState(0.0, -2.0), [CROSS_POS, CROSS_NEG], config=OdeConfig(arc_damping=True))
    assert res.terminal is TerminalKind.BLOW_UP
    assert math.hypot(res.end_state.x, res.end_state.y) == pytest.approx(1e6, rel=1e-6)
    assert 0 < res.elapsed < 100


def test_finite_time_escape_in_plain_time_underflows():
    with pytest.raises(StepSizeUnderflow) as exc:
        flow(X4, PhaseState(0.0, -2.0), [CROSS_POS, CROSS_NEG])
    assert exc.value.h > 0 and len(exc.value.state) >= 2


def test_invalid_inputs():
    with pytest.raises(InvalidParameters):
        SystemParams(Poly((1,)), eps=0.0)
    with pytest.raises(InvalidParameters):
        OdeConfig(rtol=-1)
    with pytest.raises(InvalidParameters):
        flow(X2, PhaseState(math.inf, 0.0))
