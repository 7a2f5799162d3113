"""Compactification of the reduced system onto the closed unit disc.

The plane embeds in the sphere by central projection; the closed
northern hemisphere projects to the unit disc, whose boundary circle
collects the directions at infinity.  Four side charts cover the
equator neighbourhoods.  All four use coordinates with z2 >= 0 on the
northern hemisphere and z2 = 0 on the equator:

    U1 (x > 0): (z1, z2) = ( y/x,  1/x)      (x, y) = ( 1/z2,  z1/z2)
    V1 (x < 0): (z1, z2) = ( y/x, -1/x)      (x, y) = (-1/z2, -z1/z2)
    U2 (y > 0): (z1, z2) = ( x/y,  1/y)      (x, y) = ( z1/z2,  1/z2)
    V2 (y < 0): (z1, z2) = (-x/y, -1/y)      (x, y) = ( z1/z2, -1/z2)

U3 is the plane itself (identity), V3 its southern mirror (identity
bookkeeping only).  In every side chart the transported velocities are
(1/z2) times the polynomial fields below, so the printed fields are the
true flow up to a positive time rescale; integrators recover true time
through dt/dtau = z2.

    U1: dz1 = z2 + (b+1) z1^2 - c z1 z2        dz2 = z2 (z1 - z2)
    U2: dz1 = z1 (c z2 - z1 z2 - b - 1)        dz2 = z2 (c z2 - z1 z2 - z2 - b)
    V1: dz1 = z2 - (b+1) z1^2 - c z1 z2        dz2 = -z2 (z1 + z2)
    V2: dz1 = z1 (1 + b + c z2 + z1 z2)        dz2 = z2 (b - (1-c) z2 + z1 z2)

The equator z2 = 0 is invariant in all four.  Exactly four singular
points sit on it: the chart origins of U1/V1 at disc positions (+-1, 0)
(nilpotent, a union of one elliptic and one hyperbolic sector for every
b > -1) and of U2/V2 at (0, +-1) (linearizations diag(-b-1, -b) and
diag(b+1, b): node/saddle/saddle-node as b crosses 0).

For batched numerics the disc carries a single analytic vector field,
the central-projection pushforward rescaled by s = sqrt(1 - u^2 - v^2):

    du = (P2 + s P1)(s^2 + v^2) - u v (Q2 + s Q1)
    dv = (Q2 + s Q1)(s^2 + u^2) - u v (P2 + s P1)

with P2 = -uv, P1 = u, Q2 = b v^2, Q1 = (1-c) v + u evaluated on disc
coordinates.  It is tangent to the boundary circle, restricts there to
the equator flow (angular speed proportional to (1+b) u v^2), and is a
positive time rescale of the plane flow inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .model import Params

U1, U2, U3 = "U1", "U2", "U3"
V1, V2, V3 = "V1", "V2", "V3"
SIDE_CHARTS = (U1, V1, U2, V2)
ALL_CHARTS = (U1, U2, U3, V1, V2, V3)

NILPOTENT_EH = "nilpotent (elliptic + hyperbolic sectors)"
STABLE_NODE_INF = "stable node"
UNSTABLE_NODE_INF = "unstable node"
SADDLE_INF = "saddle"
SADDLE_NODE_INF = "semi-hyperbolic saddle-node"


class ChartError(ValueError):
    """Point outside the requested chart's footprint."""


@dataclass(frozen=True)
class ChartPoint:
    chart: str
    z1: float
    z2: float

    def __post_init__(self):
        if self.chart not in ALL_CHARTS:
            raise ChartError(f"unknown chart {self.chart!r}")
        if self.chart in SIDE_CHARTS and self.z2 < -1e-12:
            raise ChartError(
                f"{self.chart} uses z2 >= 0 for the northern hemisphere; got {self.z2}"
            )


@dataclass(frozen=True)
class DiscPoint:
    u: float
    v: float

    def __post_init__(self):
        r2 = self.u * self.u + self.v * self.v
        if r2 > 1.0 + 1e-9:
            raise ValueError(f"disc point outside closed unit disc: ({self.u}, {self.v})")

    @property
    def boundary(self) -> bool:
        return self.u * self.u + self.v * self.v >= 1.0 - 1e-12

    def clamped(self) -> "DiscPoint":
        r = math.hypot(self.u, self.v)
        if r > 1.0:
            return DiscPoint(self.u / r, self.v / r)
        return self


def plane_to_disc(q) -> DiscPoint:
    x, y = (q.x, q.y) if hasattr(q, "x") else (q[0], q[1])
    n = math.sqrt(1.0 + x * x + y * y)
    return DiscPoint(x / n, y / n)


def disc_to_plane(d: DiscPoint) -> Tuple[float, float]:
    r2 = d.u * d.u + d.v * d.v
    if r2 >= 1.0 - 1e-15:
        raise ValueError("point at infinity")
    s = math.sqrt(1.0 - r2)
    return d.u / s, d.v / s


def chart_from_plane(chart: str, x: float, y: float) -> ChartPoint:
    if chart in (U3, V3):
        return ChartPoint(chart, x, y)
    if chart == U1:
        if x <= 0:
            raise ChartError(f"U1 covers x > 0, got x={x}")
        return ChartPoint(U1, y / x, 1.0 / x)
    if chart == V1:
        if x >= 0:
            raise ChartError(f"V1 covers x < 0, got x={x}")
        return ChartPoint(V1, y / x, -1.0 / x)
    if chart == U2:
        if y <= 0:
            raise ChartError(f"U2 covers y > 0, got y={y}")
        return ChartPoint(U2, x / y, 1.0 / y)
    if chart == V2:
        if y >= 0:
            raise ChartError(f"V2 covers y < 0, got y={y}")
        return ChartPoint(V2, -x / y, -1.0 / y)
    raise ChartError(f"unknown chart {chart!r}")


def plane_from_chart(cp: ChartPoint) -> Tuple[float, float]:
    if cp.chart in (U3, V3):
        return cp.z1, cp.z2
    if cp.z2 <= 0:
        raise ChartError("point on the equator has no plane preimage")
    if cp.chart == U1:
        return 1.0 / cp.z2, cp.z1 / cp.z2
    if cp.chart == V1:
        return -1.0 / cp.z2, -cp.z1 / cp.z2
    if cp.chart == U2:
        return cp.z1 / cp.z2, 1.0 / cp.z2
    if cp.chart == V2:
        return cp.z1 / cp.z2, -1.0 / cp.z2
    raise ChartError(f"unknown chart {cp.chart!r}")


def equator_direction(cp: ChartPoint) -> Tuple[float, float]:
    """Unit plane direction represented by an equator point (z2 = 0)."""
    if cp.chart not in SIDE_CHARTS or cp.z2 > 1e-12:
        raise ChartError("not an equator point of a side chart")
    z1 = cp.z1
    if cp.chart == U1:
        d = (1.0, z1)
    elif cp.chart == V1:
        d = (-1.0, -z1)
    elif cp.chart == U2:
        d = (z1, 1.0)
    else:
        d = (z1, -1.0)
    n = math.hypot(*d)
    return d[0] / n, d[1] / n


def chart_from_direction(chart: str, dx: float, dy: float) -> ChartPoint:
    """Equator point of a side chart representing plane direction (dx, dy)."""
    if chart == U1:
        if dx <= 0:
            raise ChartError("U1 equator covers directions with dx > 0")
        return ChartPoint(U1, dy / dx, 0.0)
    if chart == V1:
        if dx >= 0:
            raise ChartError("V1 equator covers directions with dx < 0")
        return ChartPoint(V1, dy / dx, 0.0)
    if chart == U2:
        if dy <= 0:
            raise ChartError("U2 equator covers directions with dy > 0")
        return ChartPoint(U2, dx / dy, 0.0)
    if chart == V2:
        if dy >= 0:
            raise ChartError("V2 equator covers directions with dy < 0")
        return ChartPoint(V2, -dx / dy, 0.0)
    raise ChartError(f"{chart} has no equator")


def chart_transition(cp: ChartPoint, target: str) -> ChartPoint:
    """Express a chart point in another chart covering it."""
    if target == cp.chart:
        return cp
    if cp.chart in SIDE_CHARTS and cp.z2 <= 1e-300:
        return chart_from_direction(target, *equator_direction(cp))
    x, y = plane_from_chart(cp)
    return chart_from_plane(target, x, y)


def disc_from_chart(cp: ChartPoint) -> DiscPoint:
    # closed forms: stable arbitrarily close to (and on) the equator, where
    # a round trip through plane coordinates would overflow
    z1, z2 = cp.z1, cp.z2
    if cp.chart in (U3, V3):
        return plane_to_disc((z1, z2))
    n = math.sqrt(1.0 + z1 * z1 + z2 * z2)
    if cp.chart == U1:
        return DiscPoint(1.0 / n, z1 / n)
    if cp.chart == V1:
        return DiscPoint(-1.0 / n, -z1 / n)
    if cp.chart == U2:
        return DiscPoint(z1 / n, 1.0 / n)
    if cp.chart == V2:
        return DiscPoint(z1 / n, -1.0 / n)
    raise ChartError(f"unknown chart {cp.chart!r}")


def chart_from_disc(d: DiscPoint, chart: str) -> ChartPoint:
    if chart in (U3, V3):
        x, y = disc_to_plane(d)
        return ChartPoint(chart, x, y)
    u, v = d.u, d.v
    s = math.sqrt(max(0.0, 1.0 - u * u - v * v))
    if chart == U1:
        if u <= 0:
            raise ChartError(f"U1 covers u > 0, got u={u}")
        return ChartPoint(U1, v / u, s / u)
    if chart == V1:
        if u >= 0:
            raise ChartError(f"V1 covers u < 0, got u={u}")
        return ChartPoint(V1, v / u, -s / u)
    if chart == U2:
        if v <= 0:
            raise ChartError(f"U2 covers v > 0, got v={v}")
        return ChartPoint(U2, u / v, s / v)
    if chart == V2:
        if v >= 0:
            raise ChartError(f"V2 covers v < 0, got v={v}")
        return ChartPoint(V2, -u / v, -s / v)
    raise ChartError(f"unknown chart {chart!r}")


# ---------------------------------------------------------------------------
# Chart vector fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChartField:
    """Polynomial field of one chart; a positive rescale of the true flow.

    eval works on floats or numpy arrays.  time_rescale is dt/dtau, the
    factor turning field time tau back into true time t (z2 for the side
    charts, 1 for the plane).
    """

    chart: str
    b: float
    c: float
    eval: Callable  # (z1, z2) -> (dz1, dz2)
    jac: Callable   # (z1, z2) -> ((a11, a12), (a21, a22)), exact

    def linearization(self, z1: float = 0.0, z2: float = 0.0):
        return self.jac(z1, z2)

    def time_rescale(self, z1, z2):
        if self.chart in SIDE_CHARTS:
            return z2
        return 1.0 if not hasattr(z1, "shape") else np.ones_like(z1)


def chart_field(p: Params, chart: str) -> ChartField:
    b, c = float(p.b), float(p.c)

    if chart == U1:
        def f(z1, z2):
            return (z2 + (b + 1) * z1 * z1 - c * z1 * z2, z2 * (z1 - z2))

        def j(z1, z2):
            return ((2 * (b + 1) * z1 - c * z2, 1 - c * z1),
                    (z2, z1 - 2 * z2))
    elif chart == U2:
        def f(z1, z2):
            w = c * z2 - z1 * z2
            return (z1 * (w - b - 1), z2 * (w - z2 - b))

        def j(z1, z2):
            return ((c * z2 - 2 * z1 * z2 - b - 1, z1 * (c - z1)),
                    (-z2 * z2, 2 * c * z2 - 2 * z1 * z2 - 2 * z2 - b))
    elif chart == V1:
        def f(z1, z2):
            return (z2 - (b + 1) * z1 * z1 - c * z1 * z2, -z2 * (z1 + z2))

        def j(z1, z2):
            return ((-2 * (b + 1) * z1 - c * z2, 1 - c * z1),
                    (-z2, -z1 - 2 * z2))
    elif chart == V2:
        def f(z1, z2):
            return (z1 * (1 + b + c * z2 + z1 * z2), z2 * (b - (1 - c) * z2 + z1 * z2))

        def j(z1, z2):
            return ((1 + b + c * z2 + 2 * z1 * z2, z1 * (c + z1)),
                    (z2 * z2, b - 2 * (1 - c) * z2 + 2 * z1 * z2))
    elif chart in (U3, V3):
        def f(x, y):
            return (x * (1 - y), b * y * y + (1 - c) * y + x)

        def j(x, y):
            return ((1 - y, -x), (1, 2 * b * y + 1 - c))
    else:
        raise ChartError(f"unknown chart {chart!r}")

    return ChartField(chart=chart, b=b, c=c, eval=f, jac=j)


def field_u1(p: Params) -> ChartField:
    return chart_field(p, U1)


def field_u2(p: Params) -> ChartField:
    return chart_field(p, U2)


# ---------------------------------------------------------------------------
# The global disc field (batched numerics)
# ---------------------------------------------------------------------------


def disc_field(p: Params) -> Callable:
    """Analytic field on the closed disc; numpy-vectorized.

    A positive time rescale (by s = height above the disc) of the plane
    flow inside, tangent to and singular only at the four infinite
    points on the boundary circle.
    """
    b, c = float(p.b), float(p.c)

    def f(u, v):
        s2 = 1.0 - u * u - v * v
        s = np.sqrt(np.maximum(s2, 0.0))
        p2 = -u * v
        p1 = u
        q2 = b * v * v
        q1 = (1 - c) * v + u
        pa = p2 + s * p1
        qa = q2 + s * q1
        du = pa * (s * s + v * v) - u * v * qa
        dv = qa * (s * s + u * u) - u * v * pa
        return du, dv

    return f


def boundary_angular_speed(p: Params, theta) -> float:
    """Angular speed of the equator flow at boundary angle theta.

    Positive = counterclockwise.  Proportional to (1+b) u v^2, so the
    right half-circle flows counterclockwise and the left half clockwise
    (bottom point to top point through either side), for every b > -1.
    """
    u = np.cos(theta)
    v = np.sin(theta)
    return (1.0 + float(p.b)) * u * v * v


# ---------------------------------------------------------------------------
# Infinite singular points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfinitePointInfo:
    id: str
    chart: str
    disc_position: Tuple[float, float]
    kind: str
    eigenvalues: Tuple[float, float]
    notes: str = ""


def infinite_singular_points(p: Params, tol: float = 1e-12) -> List[InfinitePointInfo]:
    """The four singular points on the circle at infinity, classified.

    The side-chart origins are the only equator zeros: on z2 = 0 the U1
    field reduces to ((b+1) z1^2, 0), which vanishes only at z1 = 0
    because b > -1 (same for the others).
    """
    b = float(p.b)
    if abs(b) <= tol:
        top_kind = bottom_kind = SADDLE_NODE_INF
        top_note = "center direction points into the disc along the x=0 line"
        bottom_note = top_note
    elif b > 0:
        top_kind, bottom_kind = STABLE_NODE_INF, UNSTABLE_NODE_INF
        top_note = bottom_note = ""
    else:
        top_kind = bottom_kind = SADDLE_INF
        top_note = "interior separatrix leaves along the x=0 line"
        bottom_note = "interior separatrix arrives along the x=0 line"
    return [
        InfinitePointInfo("U1", U1, (1.0, 0.0), NILPOTENT_EH, (0.0, 0.0)),
        InfinitePointInfo("V1", V1, (-1.0, 0.0), NILPOTENT_EH, (0.0, 0.0)),
        InfinitePointInfo("U2", U2, (0.0, 1.0), top_kind, (-b - 1.0, -b), top_note),
        InfinitePointInfo("V2", V2, (0.0, -1.0), bottom_kind, (b + 1.0, b), bottom_note),
    ]
