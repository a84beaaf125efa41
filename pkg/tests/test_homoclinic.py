import math

import numpy as np
import pytest

from lienard_lab import homoclinic
from lienard_lab.census import census
from lienard_lab.errors import Anomalous, ConvergenceFailure, InvalidParameters
from lienard_lab.homoclinic import (
    HOMOCLINIC_HEADER,
    SCAN_HEADER,
    SHOOT_CONFIG,
    _shoot_once,
    escape_analysis,
    find_d0,
    gap,
    loop_attractivity_probe,
    monotonic_scan,
    quartic,
    separatrix_pair,
    stable_intersection,
    unstable_intersection,
)
from lienard_lab.ode import PhaseState, SystemParams
from lienard_lab.poly import Poly


def _sign_changes(values):
    s = np.sign(values)
    return int(np.sum(s[1:] != s[:-1]))


def test_even_quartic_branches_coincide():
    u, s = separatrix_pair(quartic(1, 0, 0, 0))
    assert u.value == pytest.approx(s.value, abs=1e-10)
    assert u.value < 0
    assert u.branch == "unstable" and s.branch == "stable"


def test_gap_signs_at_the_ends():
    assert gap(1, 1, 1, 0) > 0
    assert gap(1, 1, 1, -10) < 0


def test_result_invariants():
    r = stable_intersection(quartic(1, 1, 1, -0.5), tol=1e-8)
    assert r.value < 0
    assert r.err_est <= 1e-8
    assert r.history[-1] == (r.x_far, r.value)


@pytest.mark.parametrize(
    "abcd,side",
    [((1, 1, 1, -0.5), -1), ((1, 1, 1, -0.5), 1), ((1, 1, 0, -1), 1)],
)
def test_cutoff_robustness(abcd, side):
    params = quartic(*abcd)
    fn = stable_intersection if side < 0 else unstable_intersection
    r = fn(params)
    doubled = _shoot_once(params, side, 2 * r.x_far, SHOOT_CONFIG)
    assert abs(doubled - r.value) < 2 * r.err_est


def test_anomalous_crossing_is_surfaced(monkeypatch):
    monkeypatch.setattr(homoclinic, "_shoot_once", lambda *a: 0.25)
    with pytest.raises(Anomalous) as exc:
        stable_intersection(quartic(1, 1, 0, 0.123))
    assert exc.value.value == 0.25


def test_divergent_branch_reports_convergence_failure():
    # e = 2 puts a second equilibrium at x = 1/2 and the unstable shot runs away
    with pytest.raises(ConvergenceFailure):
        unstable_intersection(SystemParams(Poly((0, 0, 0, 1)), e=2.0))


def test_shooting_needs_even_degree():
    with pytest.raises(InvalidParameters):
        stable_intersection(SystemParams(Poly((0, 0, 1))))


def test_node_capture_gives_zero_from_below():
    u, s = separatrix_pair(quartic(1, 1, 0, 3))
    assert u.value == 0.0 and math.copysign(1.0, u.value) < 0
    assert s.value < 0


def test_monotonic_scan_rows_and_margins():
    scan = monotonic_scan(1, 1, 0, [-2.0, -1.5, -1.0, -0.5, 0.0])
    assert scan.violations == []
    s = [r.s.value for r in scan.rows]
    u = [r.u.value for r in scan.rows]
    assert all(a > b for a, b in zip(s, s[1:]))
    assert all(a < b for a, b in zip(u, u[1:]))
    assert SCAN_HEADER == "d,U,S,err_U,err_S"
    assert scan.rows[0].csv_row().startswith("-2,")


def test_reflection_swaps_branches():
    grid = [-0.6, -0.3, 0.0, 0.3, 0.6]
    rows = {r.d: r for r in monotonic_scan(1, 0, 0, grid).rows}
    for d in grid:
        assert rows[d].u.value == pytest.approx(rows[-d].s.value, abs=1e-8)


def test_reflection_maps_b_to_minus_b():
    for d in (-0.7, 0.2):
        u, s = separatrix_pair(quartic(1, 1, 0, d))
        u_m, s_m = separatrix_pair(quartic(1, -1, 0, -d))
        assert u.value == pytest.approx(s_m.value, abs=1e-8)
        assert s.value == pytest.approx(u_m.value, abs=1e-8)


def test_single_point_scan():
    scan = monotonic_scan(1, 1, 0, [0.0])
    assert len(scan.rows) == 1 and scan.violations == []


def test_find_d0_symmetric_cases():
    for c in (0.0, -1.0):
        r = find_d0(1, 0, c)
        assert r.d0 == 0.0
        assert r.certificate
        assert r.iterations == 0
        assert not r.loop_stable


def test_find_d0_matches_grid_oracle():
    grid = np.round(np.arange(-3.0, 0.0001, 0.05), 10)
    h = [gap(1, 1, 0, float(d)) for d in grid]
    assert _sign_changes(h) == 1
    i = int(np.nonzero(np.sign(h[1:]) != np.sign(h[:-1]))[0][0])
    r = find_d0(1, 1, 0)
    assert grid[i] <= r.d0 <= grid[i + 1]
    lo, hi = r.bracket
    assert hi - lo <= 1e-6
    assert gap(1, 1, 0, lo) * gap(1, 1, 0, hi) < 0
    assert r.loop_stable
    assert r.p0 < 0
    assert HOMOCLINIC_HEADER == "a,b,c,d0,p0,loop_stable,iterations"
    assert r.csv_row().startswith("1,1,0,-0.537") and ",true," in r.csv_row()


@pytest.mark.parametrize("abc", [(1, 1, 1), (1, 2, 0)])
def test_gap_has_one_sign_change(abc):
    grid = np.round(np.arange(-3.0, 0.0001, 0.1), 10)
    h = [gap(*abc, float(d)) for d in grid]
    assert _sign_changes(h) == 1


def test_reflection_identity_for_d0():
    r = find_d0(1, 1, 0)
    m = find_d0(1, -1, 0)
    assert abs(r.d0 + m.d0) <= 2e-6
    assert r.loop_stable and not m.loop_stable


def test_no_cycles_for_positive_d():
    params = quartic(1, 1, 0, 0.3)
    s = stable_intersection(params).value
    rep = census(params, 0.999 * s, -1e-3, 32)
    assert rep.count == 0


def test_loop_attractivity_trend():
    rows = loop_attractivity_probe(find_d0(1, 1, 0), k_max=6)
    assert [r.k for r in rows] == list(range(1, 7))
    assert all(r.status == "returned" for r in rows)
    ds = [r.div_integral for r in rows]
    assert all(a > b for a, b in zip(ds, ds[1:]))
    assert ds[5] < ds[0]


def test_loop_attractivity_reaches_deep_contraction():
    rows = loop_attractivity_probe(find_d0(1, 1, 0), k_max=20)
    assert all(r.status == "returned" for r in rows)
    ds = [r.div_integral for r in rows]
    assert all(a > b for a, b in zip(ds, ds[1:]))
    assert ds[-1] < -10


def test_loop_attractivity_refused_for_center():
    with pytest.raises(InvalidParameters):
        loop_attractivity_probe(find_d0(1, 0, 0))


def test_escape_dichotomy():
    r = find_d0(1, 1, 0)
    params = quartic(1, 1, 0, r.interior_d)
    assert escape_analysis(params, PhaseState(0.0, -0.05)).complete
    assert escape_analysis(params, PhaseState(0.0, 0.0)).complete
    out = escape_analysis(params, PhaseState(0.0, 2 * r.p0))
    assert not out.complete and 0 < abs(out.t_est) < 1e3
