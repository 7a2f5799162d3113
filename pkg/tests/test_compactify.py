"""Charts at infinity: maps, fields, the disc field, infinite points."""

import math
import random

import numpy as np
import pytest

from brlab import compactify as cp
from brlab.model import Params, eval_field


def random_plane_point(rng, chart):
    """A plane point inside the footprint of the given chart."""
    a = rng.uniform(0.2, 5.0)
    b = rng.uniform(-5.0, 5.0)
    if chart == cp.U1:
        return a, b
    if chart == cp.V1:
        return -a, b
    if chart == cp.U2:
        return b, a
    if chart == cp.V2:
        return b, -a
    return b, b


# ---------------------------------------------------------------------------
# coordinate maps
# ---------------------------------------------------------------------------


def test_chart_examples():
    cp1 = cp.chart_from_plane(cp.U1, 2.0, 6.0)
    assert (cp1.z1, cp1.z2) == (3.0, 0.5)
    cp2 = cp.chart_transition(cp1, cp.U2)
    assert (cp2.z1, cp2.z2) == pytest.approx((1 / 3, 1 / 6))
    back = cp.chart_transition(cp2, cp.U3)
    assert (back.z1, back.z2) == pytest.approx((2.0, 6.0))


def test_v_chart_examples():
    v1 = cp.chart_from_plane(cp.V1, -2.0, 6.0)
    assert (v1.z1, v1.z2) == (-3.0, 0.5)
    v2 = cp.chart_from_plane(cp.V2, 2.0, -6.0)
    assert (v2.z1, v2.z2) == pytest.approx((1 / 3, 1 / 6))


def test_chart_round_trips():
    rng = random.Random(21)
    for chart in cp.SIDE_CHARTS:
        for _ in range(100):
            x, y = random_plane_point(rng, chart)
            c = cp.chart_from_plane(chart, x, y)
            assert c.z2 > 0
            xx, yy = cp.plane_from_chart(c)
            assert (xx, yy) == pytest.approx((x, y), rel=1e-12, abs=1e-12)


def test_chart_footprint_errors():
    with pytest.raises(cp.ChartError):
        cp.chart_from_plane(cp.U1, -1.0, 0.0)
    with pytest.raises(cp.ChartError):
        cp.chart_from_plane(cp.V1, 1.0, 0.0)
    with pytest.raises(cp.ChartError):
        cp.chart_from_plane(cp.U2, 0.0, -1.0)
    with pytest.raises(cp.ChartError):
        cp.chart_from_plane(cp.V2, 0.0, 1.0)
    with pytest.raises(cp.ChartError):
        cp.ChartPoint(cp.U1, 0.0, -0.5)
    with pytest.raises(cp.ChartError):
        cp.ChartPoint("W9", 0.0, 0.0)


def test_disc_round_trip():
    rng = random.Random(22)
    for _ in range(200):
        x, y = rng.uniform(-20, 20), rng.uniform(-20, 20)
        d = cp.plane_to_disc((x, y))
        assert d.u**2 + d.v**2 < 1
        xx, yy = cp.disc_to_plane(d)
        assert (xx, yy) == pytest.approx((x, y), rel=1e-9, abs=1e-9)


def test_disc_point_validation():
    with pytest.raises(ValueError):
        cp.DiscPoint(1.1, 0.0)
    d = cp.DiscPoint(1.0 + 5e-10, 0.0)  # tiny overshoot tolerated
    assert d.clamped().u <= 1.0
    assert cp.DiscPoint(1.0, 0.0).boundary
    assert not cp.DiscPoint(0.5, 0.5).boundary
    with pytest.raises(ValueError):
        cp.disc_to_plane(cp.DiscPoint(1.0, 0.0))


def test_equator_directions():
    rng = random.Random(23)
    for chart in cp.SIDE_CHARTS:
        for _ in range(50):
            x, y = random_plane_point(rng, chart)
            n = math.hypot(x, y)
            c = cp.chart_from_direction(chart, x / n, y / n)
            assert c.z2 == 0.0
            dx, dy = cp.equator_direction(c)
            assert (dx, dy) == pytest.approx((x / n, y / n), rel=1e-12)


def test_equator_transition_between_charts():
    c = cp.ChartPoint(cp.U1, 2.0, 0.0)  # direction (1, 2)/sqrt(5)
    t = cp.chart_transition(c, cp.U2)
    assert (t.z1, t.z2) == pytest.approx((0.5, 0.0))
    with pytest.raises(cp.ChartError):
        cp.chart_transition(cp.ChartPoint(cp.U1, -1.0, 0.0), cp.U2)
    t2 = cp.chart_transition(cp.ChartPoint(cp.U1, -1.0, 0.0), cp.V2)
    assert (t2.z1, t2.z2) == pytest.approx((1.0, 0.0))


def test_equator_direction_requires_equator():
    with pytest.raises(cp.ChartError):
        cp.equator_direction(cp.ChartPoint(cp.U1, 1.0, 0.5))
    with pytest.raises(cp.ChartError):
        cp.equator_direction(cp.ChartPoint(cp.U3, 1.0, 0.0))


def test_disc_chart_correspondence():
    assert cp.disc_from_chart(cp.ChartPoint(cp.U1, 0.0, 0.0)) == cp.DiscPoint(1.0, 0.0)
    assert cp.disc_from_chart(cp.ChartPoint(cp.V2, 0.0, 0.0)) == cp.DiscPoint(0.0, -1.0)
    c = cp.chart_from_disc(cp.DiscPoint(1.0, 0.0), cp.U1)
    assert (c.z1, c.z2) == (0.0, 0.0)
    rng = random.Random(24)
    for _ in range(50):
        u, v = rng.uniform(-0.6, 0.6), rng.uniform(0.2, 0.7)
        d = cp.DiscPoint(u, v)
        c2 = cp.chart_from_disc(d, cp.U2)
        d2 = cp.disc_from_chart(c2)
        assert (d2.u, d2.v) == pytest.approx((u, v), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# chart fields against the transformation law
# ---------------------------------------------------------------------------


def chart_velocity_oracle(chart, p, x, y):
    """d/dt of the chart coordinates along the plane flow, from the maps.

    Uses the coordinate definitions directly (quotient rule), nothing
    from the field formulas under test.
    """
    dx, dy = eval_field(p, (x, y))
    if chart == cp.U1:
        return (dy * x - y * dx) / x**2, -dx / x**2
    if chart == cp.V1:
        return (dy * x - y * dx) / x**2, dx / x**2
    if chart == cp.U2:
        return (dx * y - x * dy) / y**2, -dy / y**2
    if chart == cp.V2:
        return -(dx * y - x * dy) / y**2, dy / y**2
    raise AssertionError(chart)


@pytest.mark.parametrize("chart", cp.SIDE_CHARTS)
def test_side_fields_are_the_rescaled_pushforward(chart):
    rng = random.Random(31)
    for _ in range(120):
        p = Params(rng.uniform(-0.9, 3), rng.uniform(0.2, 5))
        x, y = random_plane_point(rng, chart)
        c = cp.chart_from_plane(chart, x, y)
        field = cp.chart_field(p, chart)
        gz1, gz2 = field.eval(c.z1, c.z2)
        tz1, tz2 = chart_velocity_oracle(chart, p, x, y)
        # printed field = z2 * true chart velocity
        assert gz1 == pytest.approx(c.z2 * tz1, rel=1e-9, abs=1e-9)
        assert gz2 == pytest.approx(c.z2 * tz2, rel=1e-9, abs=1e-9)
        assert field.time_rescale(c.z1, c.z2) == c.z2


def test_plane_chart_field_is_the_field_itself():
    p = Params(0.5, 1.5)
    f = cp.chart_field(p, cp.U3)
    assert f.eval(1.2, -0.7) == eval_field(p, (1.2, -0.7))
    assert f.time_rescale(1.2, -0.7) == 1.0


@pytest.mark.parametrize("chart", cp.SIDE_CHARTS)
def test_equator_is_invariant(chart):
    p = Params(0.7, 2.3)
    f = cp.chart_field(p, chart)
    for z1 in [-2.0, -0.5, 0.0, 0.3, 1.8]:
        assert f.eval(z1, 0.0)[1] == 0.0


@pytest.mark.parametrize("chart", cp.ALL_CHARTS)
def test_jacobians_match_finite_differences(chart):
    rng = random.Random(37)
    eps = 1e-6
    for _ in range(40):
        p = Params(rng.uniform(-0.9, 3), rng.uniform(0.2, 5))
        f = cp.chart_field(p, chart)
        z1, z2 = rng.uniform(-1.5, 1.5), rng.uniform(0.05, 1.5)
        jac = f.jac(z1, z2)
        for i in range(2):
            for j in range(2):
                dq = [0.0, 0.0]
                dq[j] = eps
                hi = f.eval(z1 + dq[0], z2 + dq[1])[i]
                lo = f.eval(z1 - dq[0], z2 - dq[1])[i]
                fd = (hi - lo) / (2 * eps)
                assert jac[i][j] == pytest.approx(fd, abs=5e-5), (chart, i, j)


def test_linearizations_at_the_vertical_infinite_points():
    rng = random.Random(41)
    for _ in range(30):
        b = rng.uniform(-0.9, 3)
        p = Params(b, rng.uniform(0.2, 5))
        top = cp.field_u2(p).linearization()
        assert top[0][0] == pytest.approx(-b - 1, abs=1e-14)
        assert top[1][1] == pytest.approx(-b, abs=1e-14)
        assert top[0][1] == 0.0 and top[1][0] == 0.0
        bot = cp.chart_field(p, cp.V2).linearization()
        assert bot[0][0] == pytest.approx(b + 1, abs=1e-14)
        assert bot[1][1] == pytest.approx(b, abs=1e-14)


def test_horizontal_infinite_points_are_nilpotent():
    p = Params(1.7, 0.9)
    for chart in (cp.U1, cp.V1):
        jac = cp.chart_field(p, chart).linearization()
        tr = jac[0][0] + jac[1][1]
        det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
        assert tr == 0.0 and det == 0.0
        assert any(jac[i][j] != 0 for i in range(2) for j in range(2))


# ---------------------------------------------------------------------------
# the global disc field
# ---------------------------------------------------------------------------


def test_disc_field_matches_plane_flow_direction_inside():
    rng = random.Random(43)
    for _ in range(150):
        p = Params(rng.uniform(-0.9, 3), rng.uniform(0.2, 5))
        x, y = rng.uniform(-4, 4), rng.uniform(-4, 4)
        dx, dy = eval_field(p, (x, y))
        speed = math.hypot(dx, dy)
        if speed < 1e-6:
            continue
        d = cp.plane_to_disc((x, y))
        du, dv = cp.disc_field(p)(d.u, d.v)
        # pushforward direction via a small step along the plane flow
        eps = 1e-8 / speed
        d2 = cp.plane_to_disc((x + eps * dx, y + eps * dy))
        pu, pv = d2.u - d.u, d2.v - d.v
        cross = du * pv - dv * pu
        dot = du * pu + dv * pv
        norm = math.hypot(du, dv) * math.hypot(pu, pv)
        if norm < 1e-18:
            continue
        assert abs(cross) / norm < 1e-5
        assert dot > 0


def test_disc_field_is_tangent_to_the_boundary():
    p = Params(0.3, 1.2)
    f = cp.disc_field(p)
    for theta in np.linspace(0, 2 * math.pi, 41):
        u, v = math.cos(theta), math.sin(theta)
        du, dv = f(u, v)
        assert abs(u * du + v * dv) < 1e-14


def test_boundary_angular_speed_formula():
    rng = random.Random(47)
    for _ in range(50):
        p = Params(rng.uniform(-0.9, 3), rng.uniform(0.2, 5))
        theta = rng.uniform(0, 2 * math.pi)
        u, v = math.cos(theta), math.sin(theta)
        du, dv = cp.disc_field(p)(u, v)
        measured = u * dv - v * du
        # float(cos, sin) points sit on the circle only to machine epsilon,
        # which leaks an O(sqrt(eps)) term through s = sqrt(1 - u^2 - v^2)
        assert measured == pytest.approx(
            cp.boundary_angular_speed(p, theta), rel=1e-6, abs=1e-7
        )


def test_boundary_flow_runs_bottom_to_top_on_the_right():
    p = Params(1.0, 2.0)
    assert cp.boundary_angular_speed(p, 0.3) > 0      # right half: ccw
    assert cp.boundary_angular_speed(p, math.pi - 0.3) < 0  # left half: cw
    assert cp.boundary_angular_speed(p, 0.0) == 0.0
    assert abs(cp.boundary_angular_speed(p, math.pi / 2)) < 1e-15


def test_disc_field_vectorizes():
    p = Params(0.5, 1.5)
    f = cp.disc_field(p)
    us = np.array([0.0, 0.3, -0.5, 0.9])
    vs = np.array([0.0, 0.4, 0.2, -0.1])
    du, dv = f(us, vs)
    assert du.shape == us.shape
    for k in range(len(us)):
        sdu, sdv = f(float(us[k]), float(vs[k]))
        assert du[k] == pytest.approx(sdu, rel=1e-15, abs=1e-15)
        assert dv[k] == pytest.approx(sdv, rel=1e-15, abs=1e-15)


def test_disc_field_vanishes_exactly_at_the_four_infinite_points():
    p = Params(0.8, 1.7)
    f = cp.disc_field(p)
    for u, v in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        du, dv = f(float(u), float(v))
        assert math.hypot(du, dv) < 1e-15
    du, dv = f(math.cos(1.0), math.sin(1.0))
    assert math.hypot(du, dv) > 1e-3


# ---------------------------------------------------------------------------
# infinite singular points
# ---------------------------------------------------------------------------


def test_infinite_points_positions_and_kinds_node_case():
    pts = {i.id: i for i in cp.infinite_singular_points(Params(1, 3))}
    assert pts["U1"].disc_position == (1.0, 0.0)
    assert pts["V1"].disc_position == (-1.0, 0.0)
    assert pts["U2"].disc_position == (0.0, 1.0)
    assert pts["V2"].disc_position == (0.0, -1.0)
    assert pts["U1"].kind == cp.NILPOTENT_EH
    assert pts["V1"].kind == cp.NILPOTENT_EH
    assert pts["U2"].kind == cp.STABLE_NODE_INF
    assert pts["V2"].kind == cp.UNSTABLE_NODE_INF
    assert pts["U2"].eigenvalues == (-2.0, -1.0)
    assert pts["V2"].eigenvalues == (2.0, 1.0)


def test_infinite_points_saddle_case():
    pts = {i.id: i.kind for i in cp.infinite_singular_points(Params(-0.5, 1))}
    assert pts["U2"] == cp.SADDLE_INF
    assert pts["V2"] == cp.SADDLE_INF


def test_infinite_points_saddle_node_case():
    pts = {i.id: i for i in cp.infinite_singular_points(Params(0, 2))}
    assert pts["U2"].kind == cp.SADDLE_NODE_INF
    assert pts["V2"].kind == cp.SADDLE_NODE_INF
    assert "x=0" in pts["U2"].notes
