import re

import pytest

from lienard_lab import svg
from lienard_lab.errors import InvalidParameters
from lienard_lab.homoclinic import find_d0, quartic, separatrix_arc
from lienard_lab.ode import PhaseState, SystemParams
from lienard_lab.poly import Poly
from lienard_lab.svg import HomoclinicLoop, Orbit, Window, portrait, trace_orbit

QUARTIC = SystemParams(Poly((0, 0, 0, 1)))
WIN = Window(-1.0, 1.0, -1.0, 1.0)


def _polylines(doc):
    out = []
    for m in re.finditer(r'<polyline class="orbit" data-orbit="(\d+)" points="([^"]+)"', doc):
        pts = [tuple(map(float, p.split(","))) for p in m.group(2).split()]
        out.append((int(m.group(1)), pts))
    return out


def _cross(p, q, r, s):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    return orient(p, q, r) * orient(p, q, s) < 0 and orient(r, s, p) * orient(r, s, q) < 0


def test_identical_inputs_give_identical_bytes():
    orbits = [Orbit(PhaseState(0.0, -0.3)), Orbit(PhaseState(0.5, 0.2), t_span=5, backward=True)]
    assert portrait(QUARTIC, WIN, orbits, "x^4") == portrait(QUARTIC, WIN, orbits, "x^4")


def test_center_orbits_are_closed_and_disjoint():
    starts = (-0.2, -0.35, -0.5)
    doc = portrait(QUARTIC, WIN, [Orbit(PhaseState(0.0, y)) for y in starts])
    lines = _polylines(doc)
    assert sorted({i for i, _ in lines}) == [0, 1, 2]
    assert len(lines) == 3  # each orbit stays inside the window in one piece
    for i, pts in lines:
        assert pts[0] == pytest.approx(pts[-1], abs=0.01)
        assert len(pts) > 20
    for a in range(3):
        for b in range(a + 1, 3):
            pa, pb = lines[a][1], lines[b][1]
            assert not any(
                _cross(pa[i], pa[i + 1], pb[j], pb[j + 1])
                for i in range(len(pa) - 1)
                for j in range(len(pb) - 1)
            )


def test_nested_orbits_keep_their_order():
    radii = []
    for y in (-0.2, -0.35, -0.5):
        pts = trace_orbit(QUARTIC, Orbit(PhaseState(0.0, y)), WIN)
        radii.append(max(abs(x) for x, _ in pts))
    assert radii[0] < radii[1] < radii[2]


def test_empty_orbit_list_draws_axes_and_graph_only():
    doc = portrait(QUARTIC, WIN)
    assert "<polyline" not in doc
    assert doc.count('class="axis"') == 2
    assert doc.count('class="graph"') >= 1
    assert 'class="section"' in doc and 'class="equilibrium"' in doc
    assert doc.startswith("<svg") and doc.rstrip().endswith("</svg>")


def test_window_validation():
    with pytest.raises(InvalidParameters):
        Window(1.0, -1.0, -1.0, 1.0)
    with pytest.raises(InvalidParameters):
        Window(-1.0, 1.0, 0.0, 0.0)
    with pytest.raises(InvalidParameters):
        Window(-1.0, float("inf"), -1.0, 1.0)


def test_size_cap(monkeypatch):
    monkeypatch.setattr(svg, "MAX_BYTES", 2000)
    with pytest.raises(InvalidParameters):
        portrait(QUARTIC, WIN, [Orbit(PhaseState(0.0, -0.5))])


def test_title_is_escaped():
    doc = portrait(QUARTIC, WIN, title="a<b & c")
    assert "a&lt;b &amp; c" in doc


def test_homoclinic_loop_hugs_the_graph():
    res = find_d0(1, 1, 0)
    params = quartic(1, 1, 0, res.d0)
    for side in (1, -1):
        arc = separatrix_arc(params, side, 4.0)
        assert arc[-1][0] == pytest.approx(0.0, abs=1e-8)
        assert arc[-1][1] == pytest.approx(res.p0, abs=1e-5)
        gaps = []
        for target in (2.0, 2.5, 3.0, 3.5):
            x, y = min(arc, key=lambda q: abs(abs(q[0]) - target))
            gap = abs(y - params.f(x))
            # the separatrix sits about |x| / F'(x) off the graph
            assert gap == pytest.approx(abs(x / params.f.deriv(x)), rel=0.05)
            gaps.append(gap)
        assert gaps == sorted(gaps, reverse=True)


def test_homoclinic_loop_in_portrait():
    res = find_d0(1, 1, 0)
    params = quartic(1, 1, 0, res.d0)
    doc = portrait(params, Window(-3.0, 3.0, -1.0, 12.0), [HomoclinicLoop(x_far=3.0)])
    (line,) = _polylines(doc)
    pts = line[1]
    # one unbroken curve leaving the window at the top on both sides
    top = svg.MARGIN
    assert pts[0][1] == pytest.approx(top, abs=20) and pts[-1][1] == pytest.approx(top, abs=20)
    assert pts[0][0] > svg.WIDTH / 2 > pts[-1][0]
