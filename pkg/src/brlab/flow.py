"""Global flow on the closed Poincare disc.

This module turns the local data of :mod:`brlab.compactify` and
:mod:`brlab.localanalysis` into global objects:

* :func:`integrate` - an adaptive Dormand-Prince 5(4) integrator that
  follows one orbit across coordinate charts, tracking true time, and
  terminates against the known singular points,
* :func:`sector_probe` - ring probing of the local sector structure
  (hyperbolic / parabolic / elliptic) around a degenerate singular point
  of a chart field,
* :func:`trace_separatrices` - assembly of the full separatrix skeleton
  (nodes, directed edges, faces) of one parameter point,
* :func:`count_SR` - the separatrix count S and canonical-region count R
  of a skeleton, with an independent Euler cross-check,
* :func:`signature` / :func:`signatures_equivalent` - a canonical
  combinatorial encoding of the skeleton used to compare phase portraits
  up to orientation-preserving homeomorphisms of the disc (reflection
  allowed, time reversal tracked separately),
* :func:`limit_cycle_scan` - a seeded search for isolated periodic
  orbits with an isolation test that rejects period annuli.

Conventions
-----------
Only the northern hemisphere is kept: disc coordinates (u, v) with
u^2 + v^2 <= 1, the equator being the circle at infinity.  The
integration parameter ``tau`` of :func:`integrate` coincides with true
time while the orbit is in the plane chart; in a side chart true time
advances by ``dt = z2 dtau``.  ``t_max`` caps ``tau``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .compactify import (
    SIDE_CHARTS,
    U1,
    U2,
    U3,
    V1,
    V2,
    ChartField,
    ChartPoint,
    DiscPoint,
    chart_field,
    chart_from_disc,
    chart_transition,
    disc_field,
    disc_from_chart,
    disc_to_plane,
    infinite_singular_points,
    plane_to_disc,
)
from .localanalysis import (
    CENTER,
    DEGENERATE,
    SADDLE,
    SADDLE_NODE,
    STABLE_FOCUS,
    STABLE_NODE,
    UNSTABLE_FOCUS,
    UNSTABLE_NODE,
    classify_finite,
)
from .model import Params, jacobian


class FlowDiagnosticError(RuntimeError):
    """A global-flow computation could not be completed reliably."""


class ProbeError(FlowDiagnosticError):
    """Sector probing failed to stabilise across probe radii."""


# --------------------------------------------------------------------------
# orbits
# --------------------------------------------------------------------------

TERM_SINGULAR = "reached singular point"
TERM_INFINITY = "reached infinity point"
TERM_TMAX = "t_max"
TERM_UNDERFLOW = "step underflow"
TERM_BUDGET = "step budget"

FORWARD = "forward"
BACKWARD = "backward"

_REACH_RADIUS = 1e-6
_ARM_RADIUS = 1e-4
_MONOTONE_RADIUS = 3e-4
_MONOTONE_STREAK = 150


@dataclass(frozen=True)
class Termination:
    kind: str
    target: Optional[str]  # singular-point id for the two "reached" kinds
    t: float               # true time at termination
    tau: float             # integration parameter at termination


@dataclass
class Orbit:
    params: Tuple[float, float]
    direction: str
    samples: List[Tuple[float, DiscPoint]]
    termination: Termination
    chart_history: List[Tuple[float, str]]
    max_switch_jump: float = 0.0
    n_steps: int = 0
    n_rejected: int = 0

    def plane_samples(self, min_s: float = 1e-12) -> List[Tuple[float, float, float]]:
        """(t, x, y) triples for the samples that lie in the finite plane."""
        out = []
        for t, d in self.samples:
            s2 = 1.0 - d.u * d.u - d.v * d.v
            if s2 > min_s * min_s:
                x, y = disc_to_plane(d)
                out.append((t, x, y))
        return out

    @property
    def final(self) -> DiscPoint:
        return self.samples[-1][1]


# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _pick_chart(d: DiscPoint) -> str:
    s2 = 1.0 - d.u * d.u - d.v * d.v
    s = math.sqrt(max(0.0, s2))
    if s > 1e-12:
        x, y = d.u / s, d.v / s
        if max(abs(x), abs(y)) <= 2.5:
            return U3
    if abs(d.u) >= abs(d.v):
        return U1 if d.u > 0 else V1
    return U2 if d.v > 0 else V2


def _switch_target(chart: str, z1: float, z2: float) -> Optional[str]:
    """Chart to move to, if the hysteresis thresholds say we should."""
    if chart == U3:
        x, y = z1, z2
        if max(abs(x), abs(y)) > 2.5:
            if abs(x) >= abs(y):
                return U1 if x > 0 else V1
            return U2 if y > 0 else V2
        return None
    if z2 > 0.5:
        return U3
    if abs(z1) > 2.0:
        if chart == U1:
            return U2 if z1 > 0 else V2
        if chart == V1:
            return V2 if z1 > 0 else U2
        if chart == U2:
            return U1 if z1 > 0 else V1
        if chart == V2:
            return U1 if z1 > 0 else V1
    return None


def _known_targets(p: Params):
    """(id, is_infinite, u, v) for every distinct singular point."""
    out = []
    for info in classify_finite(p):
        d = plane_to_disc(info.location)
        out.append((info.id, False, d.u, d.v))
    for info in infinite_singular_points(p):
        u, v = info.disc_position
        out.append((info.id, True, u, v))
    return out


def integrate(
    p: Params,
    start: Union[DiscPoint, ChartPoint],
    direction: str = FORWARD,
    t_max: float = 50.0,
    tol: float = 1e-9,
    max_steps: int = 200_000,
    targets=None,
    snap_radius: float = 0.0,
) -> Orbit:
    """Follow one orbit of the compactified flow from ``start``.

    ``start`` may be a disc point or (for delicate seeds very close to the
    equator) a chart point used verbatim.  ``direction`` is "forward" or
    "backward"; ``t_max`` caps the integration parameter, which equals
    true time while in the plane chart.  Termination reports whether a
    known singular point (finite or at infinity) was reached, or which
    budget ran out first.

    ``snap_radius`` (off by default) rescues saddle connections: no
    shooting integrator can land inside the tiny reach ball of a saddle,
    because the transverse error blows up like exp(lambda tau) on the
    arrival leg no matter how accurate the seed.  With a snap radius set,
    an orbit that passes within it of a known point and then clearly
    recedes (its distance doubles) is truncated at the closest approach
    and terminated there.  Separatrix tracing uses this; plain orbit
    integration should leave it off.
    """
    if not 1e-12 <= tol <= 1e-3:
        raise ValueError(f"tol must lie in [1e-12, 1e-3], got {tol}")
    if direction not in (FORWARD, BACKWARD):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    sigma = 1.0 if direction == FORWARD else -1.0
    b, c = p.as_floats()

    if isinstance(start, ChartPoint):
        cp = start
        chart = cp.chart
    else:
        chart = _pick_chart(start)
        cp = chart_from_disc(start, chart)

    if targets is None:
        targets = _known_targets(p)
    tg_u = np.array([t[2] for t in targets])
    tg_v = np.array([t[3] for t in targets])
    armed = [False] * len(targets)

    fields: Dict[str, ChartField] = {}

    def get_field(name: str) -> ChartField:
        if name not in fields:
            fields[name] = chart_field(p, name)
        return fields[name]

    cf = get_field(chart)
    z1, z2 = cp.z1, cp.z2
    t = 0.0
    tau = 0.0
    d0 = disc_from_chart(cp)
    samples: List[Tuple[float, DiscPoint]] = [(0.0, d0)]
    chart_history: List[Tuple[float, str]] = [(0.0, chart)]
    max_jump = 0.0

    def distances(u: float, v: float):
        return np.hypot(tg_u - u, tg_v - v)

    dist0 = distances(d0.u, d0.v)
    for i, di in enumerate(dist0):
        armed[i] = di > _ARM_RADIUS

    # a seed sitting on a singular point stays there
    f0 = cf.eval(z1, z2)
    if math.hypot(f0[0], f0[1]) < 1e-12 and len(dist0) and dist0.min() < _REACH_RADIUS:
        i = int(dist0.argmin())
        kind = TERM_INFINITY if targets[i][1] else TERM_SINGULAR
        return Orbit((b, c), direction, samples,
                     Termination(kind, targets[i][0], 0.0, 0.0), chart_history)

    side = chart in SIDE_CHARTS
    h = 1e-4
    n_steps = 0
    n_rejected = 0
    mono_target = -1
    mono_streak = 0
    mono_start_d = 0.0
    prev_d = None
    prev_disc = d0
    fly_min = np.full(len(targets), np.inf)
    fly_idx = np.zeros(len(targets), dtype=int)
    fly_t = np.zeros(len(targets))
    fly_tau = np.zeros(len(targets))
    fly_far = [False] * len(targets)  # only a return pass may snap

    def aug(a1: float, a2: float):
        d1, d2 = cf.eval(a1, a2)
        r = a2 if side else 1.0
        return sigma * d1, sigma * d2, sigma * r

    termination = None
    while termination is None:
        if n_steps + n_rejected >= max_steps:
            termination = Termination(TERM_BUDGET, None, t, tau)
            break
        if h < 1e-14:
            termination = Termination(TERM_UNDERFLOW, None, t, tau)
            break
        hs = min(h, t_max - tau)  # land exactly on t_max

        # one Dormand-Prince step
        k = [aug(z1, z2)]
        for row in _A[1:]:
            s1 = s2 = 0.0
            for aij, ki in zip(row, k):
                s1 += aij * ki[0]
                s2 += aij * ki[1]
            k.append(aug(z1 + hs * s1, z2 + hs * s2))
        s1 = s2 = st = 0.0
        for bi, ki in zip(_B, k):
            s1 += bi * ki[0]
            s2 += bi * ki[1]
            st += bi * ki[2]
        z1n, z2n, tn = z1 + hs * s1, z2 + hs * s2, t + hs * st
        k.append(aug(z1n, z2n))
        e1 = e2 = 0.0
        for ei, ki in zip(_E, k):
            e1 += ei * ki[0]
            e2 += ei * ki[1]
        e1 *= hs
        e2 *= hs
        sc1 = tol * 1e-3 + tol * max(abs(z1), abs(z1n))
        sc2 = tol * 1e-3 + tol * max(abs(z2), abs(z2n))
        err = math.sqrt(((e1 / sc1) ** 2 + (e2 / sc2) ** 2) / 2.0)

        if not math.isfinite(err) or err > 1.0:
            n_rejected += 1
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = hs * min(1.0, fac)
            continue

        d_new = disc_from_chart(ChartPoint(chart, z1n, max(z2n, 0.0) if side else z2n))
        disp = math.hypot(d_new.u - prev_disc.u, d_new.v - prev_disc.v)
        if disp > 0.05:
            n_rejected += 1
            h = hs * 0.4
            continue

        # accept
        n_steps += 1
        z1, z2, t = z1n, z2n, tn
        if side and z2 < 0.0:
            z2 = 0.0  # the equator is invariant; clamp float noise
        tau += hs
        h = hs * min(5.0, max(0.2, 0.9 * (err + 1e-300) ** -0.2))
        h = min(h, 1.0)
        pu, pv = prev_disc.u, prev_disc.v
        prev_disc = d_new
        samples.append((t, d_new))

        # termination against known singular points; reach is tested
        # against the whole step chord, not just its endpoint, so a fast
        # flyby of a saddle (steps much longer than the reach ball) still
        # registers
        dist = distances(d_new.u, d_new.v)
        wx, wy = d_new.u - pu, d_new.v - pv
        l2 = wx * wx + wy * wy
        if l2 > 0.0:
            frac = np.clip(((tg_u - pu) * wx + (tg_v - pv) * wy) / l2, 0.0, 1.0)
            seg_d = np.hypot(pu + frac * wx - tg_u, pv + frac * wy - tg_v)
        else:
            seg_d = dist
        for i, di in enumerate(dist):
            if not armed[i] and di > _ARM_RADIUS:
                armed[i] = True
        best = -1
        best_d = math.inf
        for i, di in enumerate(seg_d):
            if armed[i] and di < best_d:
                best, best_d = i, float(di)
        if best >= 0 and best_d < _REACH_RADIUS:
            kind = TERM_INFINITY if targets[best][1] else TERM_SINGULAR
            samples.append((t, DiscPoint(targets[best][2], targets[best][3])))
            termination = Termination(kind, targets[best][0], t, tau)
            break
        if best >= 0 and best_d < _MONOTONE_RADIUS:
            if best == mono_target and prev_d is not None and best_d < prev_d:
                mono_streak += 1
            else:
                mono_target, mono_streak, mono_start_d = best, 1, best_d
            prev_d = best_d
            if mono_streak >= _MONOTONE_STREAK and best_d < 0.5 * mono_start_d:
                kind = TERM_INFINITY if targets[best][1] else TERM_SINGULAR
                samples.append((t, DiscPoint(targets[best][2], targets[best][3])))
                termination = Termination(kind, targets[best][0], t, tau)
                break
        else:
            mono_target, mono_streak, prev_d = -1, 0, None

        if snap_radius > 0.0:
            for i in range(len(targets)):
                if not fly_far[i]:
                    # the departure leg of a seed leaving this very point
                    # must not look like a close pass
                    fly_far[i] = bool(dist[i] > 10.0 * snap_radius)
                    continue
                if not armed[i]:
                    continue
                if seg_d[i] < fly_min[i]:
                    fly_min[i] = float(seg_d[i])
                    fly_idx[i] = len(samples) - 1
                    fly_t[i], fly_tau[i] = t, tau
                elif fly_min[i] < snap_radius and dist[i] > 2.0 * fly_min[i]:
                    # passed within the snap radius, now clearly receding:
                    # truncate at the closest approach and land there
                    kind = TERM_INFINITY if targets[i][1] else TERM_SINGULAR
                    del samples[int(fly_idx[i]) + 1:]
                    samples.append(
                        (float(fly_t[i]), DiscPoint(targets[i][2], targets[i][3])))
                    termination = Termination(kind, targets[i][0],
                                              float(fly_t[i]), float(fly_tau[i]))
                    break
            if termination is not None:
                break

        if tau >= t_max:
            termination = Termination(TERM_TMAX, None, t, tau)
            break

        # chart switching (hysteresis keeps this from flapping)
        for _ in range(2):
            target_chart = _switch_target(chart, z1, z2)
            if target_chart is None:
                break
            new_cp = chart_transition(ChartPoint(chart, z1, z2), target_chart)
            d_after = disc_from_chart(new_cp)
            max_jump = max(max_jump, math.hypot(d_after.u - prev_disc.u,
                                                d_after.v - prev_disc.v))
            chart = target_chart
            cf = get_field(chart)
            side = chart in SIDE_CHARTS
            z1, z2 = new_cp.z1, new_cp.z2
            prev_disc = d_after
            chart_history.append((t, chart))
            h = min(h, 0.01)

    return Orbit((b, c), direction, samples, termination, chart_history,
                 max_switch_jump=max_jump, n_steps=n_steps, n_rejected=n_rejected)


# --------------------------------------------------------------------------
# sector probing
# --------------------------------------------------------------------------

HYPERBOLIC = "hyperbolic"
ELLIPTIC = "elliptic"
PARABOLIC = "parabolic"

_OUT_POINT = 1
_OUT_AWAY = 2


@dataclass(frozen=True)
class Sector:
    kind: str
    theta_start: float  # chart-plane angle where the sector begins (CCW)
    theta_end: float


@dataclass(frozen=True)
class SectorBoundary:
    theta: float
    kind_before: str
    kind_after: str
    trace_direction: str           # forward | backward
    seed: Tuple[float, float]      # chart coordinates on the probe ring
    on_equator: bool


@dataclass
class SectorProbeResult:
    chart: str
    point: Tuple[float, float]
    radius: float
    sectors: List[Sector]
    boundaries: List[SectorBoundary]
    diagnostics: List[str] = dc_field(default_factory=list)

    def kind_counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for s in self.sectors:
            out[s.kind] = out.get(s.kind, 0) + 1
        return out


def _invariant_locks(eval_fn, point) -> list:
    """Axis lines through the probe point on which the field is exactly
    tangent (component identically zero), e.g. the equator z2 = 0 of a
    side chart.  Orbits starting off such a line can never cross it, so
    the marcher projects away any crossing produced by truncation error:
    a return leg hugging the line exponentially closely would otherwise
    hop to the far side and follow the wrong half-plane's dynamics.
    """
    px, py = point
    off = np.linspace(-1.0, 1.0, 7)
    locks = []
    d1, _ = eval_fn(np.full_like(off, px), py + off)
    if np.all(np.abs(np.asarray(d1, dtype=float)) < 1e-13):
        locks.append((0, px))
    _, d2 = eval_fn(px + off, np.full_like(off, py))
    if np.all(np.abs(np.asarray(d2, dtype=float)) < 1e-13):
        locks.append((1, py))
    return locks


def _ring_outcomes(eval_fn, pts: np.ndarray, sigma: float, point, r_in: float,
                   r_out: float, budget: int, locks=()):
    """March seeds along the normalised field until they stall at the
    probed point or leave its neighbourhood (distance > r_out).

    Returns (cls, bearing) arrays; bearing is the exit angle for AWAY
    outcomes and nan otherwise.  Step length scales with the current
    distance from the probed point, so slow algebraic escapes are cheap.
    Mere proximity never classifies a seed: an orbit sweeping arbitrarily
    close past the point keeps marching and leaves, so only genuine
    convergence (speed decaying to nothing near the point, or still
    sitting there when the budget ends) counts as POINT.
    """
    px, py = point
    z = pts.astype(float).copy()
    n = len(z)
    cls = np.zeros(n, dtype=np.int8)
    bearing = np.full(n, np.nan)
    left_ball = np.zeros(n, dtype=bool)
    probation = np.full(n, -1, dtype=np.int32)
    idx = np.arange(n)
    near = 4.0 * r_in
    r_loc = 50.0 * r_in  # the "local" ball: bearings are taken on its rim
    signs = [np.sign(pts[:, a] - v) for a, v in locks]

    def g(zz):
        d1, d2 = eval_fn(zz[:, 0], zz[:, 1])
        d1 = np.asarray(d1, dtype=float)
        d2 = np.asarray(d2, dtype=float)
        if d1.ndim == 0:
            d1 = np.full(len(zz), float(d1))
        if d2.ndim == 0:
            d2 = np.full(len(zz), float(d2))
        nn = np.hypot(d1, d2)
        spd = nn.copy()
        nn = np.where(nn < 1e-300, 1.0, nn)
        return np.stack([d1 / nn, d2 / nn], axis=1) * sigma, spd

    dist = np.hypot(z[:, 0] - px, z[:, 1] - py)
    for _ in range(budget):
        if not len(z):
            break
        # pure distance-proportional steps: terminal approaches shrink
        # geometrically into the stall window instead of hopping over it,
        # and a sweeper passing at miss-distance d still transits in
        # O(log(r/d)) steps, so no absolute floor is needed
        h = (dist * 0.025)[:, None]
        k1, spd = g(z)
        k2, _ = g(z + 0.5 * h * k1)
        k3, _ = g(z + 0.5 * h * k2)
        k4, _ = g(z + h * k3)
        z = z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        for (a, v), s0 in zip(locks, signs):
            s = s0[idx]
            fix = (s * (z[:, a] - v) < 0.0) | (s == 0.0)
            if fix.any():
                z[fix, a] = v
        prev = dist
        dist = np.hypot(z[:, 0] - px, z[:, 1] - py)
        # remember the direction in which the local ball was left last;
        # it is the sector-relevant bearing even when the orbit later
        # commits to some far attractor of the chart field
        crossed = (prev <= r_loc) & (dist > r_loc)
        if crossed.any():
            bearing[idx[crossed]] = np.arctan2(z[crossed, 1] - py,
                                               z[crossed, 0] - px)
            left_ball[idx[crossed]] = True
        away = dist > r_out
        # a stall near the point is only provisional: an orbit dipping
        # arbitrarily close on its way past (riding an invariant branch)
        # slows below any speed floor there, but it climbs back out of
        # the near zone within O(log(near/miss)) distance-proportional
        # steps, while a genuinely converging orbit never does.  The
        # probation countdown outlasts misses down to ~1e-16.
        stalled = (spd < 1e-11) & (dist < near) & ~away
        probation = np.where((probation < 0) & stalled, 1200, probation)
        probation[(probation >= 0) & (dist >= near)] = -1
        probation[probation >= 0] -= 1
        confirmed = probation == 0
        done = away | confirmed
        if done.any():
            gi = idx[done]
            is_pt = confirmed[done]
            cls[gi[is_pt]] = _OUT_POINT
            cls[gi[~is_pt]] = _OUT_AWAY
            ga = gi[~is_pt]
            fresh = np.isnan(bearing[ga])
            if fresh.any():
                zd = z[done][~is_pt]
                bearing[ga[fresh]] = np.arctan2(zd[fresh, 1] - py,
                                                zd[fresh, 0] - px)
            keep = ~done
            z, idx, dist, probation = (z[keep], idx[keep], dist[keep],
                                       probation[keep])

    if len(z):  # budget leftovers: resolve by final distance
        is_pt = (dist < near) & ~left_ball[idx]
        cls[idx[is_pt]] = _OUT_POINT
        cls[idx[~is_pt]] = _OUT_AWAY
        ga = idx[~is_pt]
        fresh = np.isnan(bearing[ga])
        if fresh.any():
            zd = z[~is_pt]
            bearing[ga[fresh]] = np.arctan2(zd[fresh, 1] - py, zd[fresh, 0] - px)
    return cls, bearing


def _circ_diff(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _outcomes_differ(fc1, fb1, bc1, bb1, fc2, fb2, bc2, bb2) -> bool:
    if fc1 != fc2 or bc1 != bc2:
        return True
    if fc1 == _OUT_AWAY and _circ_diff(fb1, fb2) > 1.0:
        return True
    if bc1 == _OUT_AWAY and _circ_diff(bb1, bb2) > 1.0:
        return True
    return False


def _ring_points(point, r: float, thetas: np.ndarray) -> np.ndarray:
    ct, st = np.cos(thetas), np.sin(thetas)
    ct[np.abs(ct) < 1e-12] = 0.0
    st[np.abs(st) < 1e-12] = 0.0
    return np.stack([point[0] + r * ct, point[1] + r * st], axis=1)


def _probe_angles(n_seeds: int, r: float, pencil: bool) -> np.ndarray:
    """Seed angles: a uniform ring, plus (in side charts) log-spaced
    angles th = khat * r hugging both equator ends.  A wedge bounded by a
    curve z2 = kappa z1^2 has angular width ~ kappa r at ring radius r -
    invisible to uniform seeds - but the pencil seeds hit the parabola
    family kappa = th / r uniformly in log kappa at every radius."""
    th = [np.arange(n_seeds) * (2 * math.pi / n_seeds)]
    if pencil:
        khat = np.logspace(-2.5, 2.0, 34)
        for base in (0.0, math.pi):
            for sgn in (+1.0, -1.0):
                th.append((base + sgn * khat * r) % (2 * math.pi))
    return np.unique(np.concatenate(th))


_R_FAR = 1e6  # an orbit this far out has committed to its escape direction


def _probe_at_radius(field: ChartField, point, r: float, n_seeds: int, budget: int,
                     locks=()):
    thetas = _probe_angles(n_seeds, r, field.chart in SIDE_CHARTS)
    pts = _ring_points(point, r, thetas)
    r_in = 0.12 * r
    fc, fb = _ring_outcomes(field.eval, pts, +1.0, point, r_in, _R_FAR, budget, locks)
    bc, bb = _ring_outcomes(field.eval, pts, -1.0, point, r_in, _R_FAR, budget, locks)
    return thetas, fc, fb, bc, bb


def _segment_runs(thetas, fc, fb, bc, bb):
    """Maximal cyclic runs of seeds with matching outcomes.

    Returns a list of (start_idx, end_idx, length) with end inclusive,
    in cyclic order starting from an arbitrary boundary.
    """
    n = len(thetas)
    cuts = [i for i in range(n)
            if _outcomes_differ(fc[i], fb[i], bc[i], bb[i],
                                fc[(i + 1) % n], fb[(i + 1) % n],
                                bc[(i + 1) % n], bb[(i + 1) % n])]
    if not cuts:
        return [(0, n - 1, n)], []
    runs = []
    for j, cut in enumerate(cuts):
        start = (cuts[j - 1] + 1) % n
        length = (cut - start) % n + 1
        runs.append((start, cut, length))
    return runs, cuts


def _run_kind(fc, bc, i) -> str:
    f_pt, b_pt = fc[i] == _OUT_POINT, bc[i] == _OUT_POINT
    if f_pt and b_pt:
        return ELLIPTIC
    if f_pt or b_pt:
        return PARABOLIC
    return HYPERBOLIC


def sector_probe(
    field: ChartField,
    point: Tuple[float, float] = (0.0, 0.0),
    radii: Sequence[float] = (1e-2, 1e-3, 1e-4),
    n_seeds: int = 720,
    budget: int = 6000,
) -> SectorProbeResult:
    """Sector structure of ``field`` around ``point``, by ring probing.

    Rings of seeds are integrated forward and backward along the
    normalised field; each seed is classified by whether it reaches the
    probed point or leaves its neighbourhood, and (for leavers) by the
    exit bearing.  Maximal runs of matching seeds are the sectors; the
    result is accepted once two consecutive probe radii agree on the
    cyclic sequence of sector kinds and the boundaries are refined at the
    smaller of the two.  Raises :class:`ProbeError` when no two radii
    agree.

    Runs of a single seed are reported as boundaries rather than
    sectors; in side charts they are typically the equator rays, which
    are flagged ``on_equator``.
    """
    locks = _invariant_locks(field.eval, point)
    per_radius = []
    for r in radii:
        thetas, fc, fb, bc, bb = _probe_at_radius(field, point, r, n_seeds, budget,
                                                  locks)
        runs, cuts = _segment_runs(thetas, fc, fb, bc, bb)
        wide = [run for run in runs if run[2] > 1]
        kinds = tuple(_run_kind(fc, bc, run[0]) for run in wide)
        per_radius.append((r, thetas, fc, fb, bc, bb, wide, kinds))

    chosen = None
    for big, small in zip(per_radius, per_radius[1:]):
        if big[7] and _cyclic_equal(big[7], small[7]):
            chosen = small
            break
    if chosen is None:
        seqs = {f"r={pr[0]:g}": list(pr[7]) for pr in per_radius}
        raise ProbeError(
            f"sector probe did not stabilise at {field.chart} around {point}: {seqs}")

    r, thetas, fc, fb, bc, bb, wide, kinds = chosen
    n = len(thetas)
    side_chart = field.chart in SIDE_CHARTS

    sectors = [Sector(k, float(thetas[run[0]]), float(thetas[run[1]]))
               for run, k in zip(wide, kinds)]

    boundaries: List[SectorBoundary] = []
    diagnostics: List[str] = []
    if len(wide) > 1 or (len(wide) == 1 and wide[0][2] < n):
        for j in range(len(wide)):
            left = wide[j]
            right = wide[(j + 1) % len(wide)]
            i_lo, i_hi = left[1], right[0]
            th_lo = float(thetas[i_lo])
            th_hi = float(thetas[i_hi])
            if th_hi <= th_lo:
                th_hi += 2 * math.pi
            ref = (fc[i_lo], fb[i_lo], bc[i_lo], bb[i_lo])
            th_star = _refine_boundary(field, point, r, th_lo, th_hi, ref, budget,
                                       locks)
            r_used = r
            on_eq = False
            if side_chart:
                # Sector edges tangent to the equator ride curves
                # z2 ~ kappa*z1^2, so a genuine edge's ring angle grows
                # linearly with the probe radius, while a cut that is
                # actually glued to the equator only reflects the z2
                # noise floor and its measured angle shrinks as the
                # radius grows.  Near-axis cuts are therefore re-refined
                # at the largest radius, inside a widened bracket, and
                # judged there.
                if abs(math.sin(th_star)) < 5e-3:
                    base = (0.0 if _circ_diff(th_star, 0.0) <
                            _circ_diff(th_star, math.pi) else math.pi)
                    delta = math.remainder(th_star - base, 2 * math.pi)
                    if abs(delta) < 1e-12:
                        on_eq = True
                    else:
                        r_big = radii[0]
                        lo_b = base + delta / 30.0
                        hi_b = base + 30.0 * delta
                        if hi_b < lo_b:
                            lo_b, hi_b = hi_b, lo_b
                        th_star_big = _refine_boundary(field, point, r_big,
                                                       lo_b, hi_b, None,
                                                       budget, locks)
                        if abs(math.sin(th_star_big)) < 5e-5:
                            on_eq = True
                        elif r_big != r:
                            th_star = th_star_big
                            r_used = r_big
            seed = (point[0] + r_used * math.cos(th_star),
                    point[1] + r_used * math.sin(th_star))
            if side_chart and abs(seed[1]) < 1e-18:
                on_eq = True
            trace_dir = _boundary_direction(
                (fc[i_lo], fb[i_lo], bc[i_lo], bb[i_lo]),
                (fc[i_hi], fb[i_hi], bc[i_hi], bb[i_hi]))
            boundaries.append(SectorBoundary(
                theta=th_star % (2 * math.pi),
                kind_before=kinds[j],
                kind_after=kinds[(j + 1) % len(wide)],
                trace_direction=trace_dir,
                seed=seed,
                on_equator=on_eq))

    return SectorProbeResult(field.chart, tuple(point), r, sectors, boundaries,
                             diagnostics)


def _cyclic_equal(a: Tuple[str, ...], b: Tuple[str, ...]) -> bool:
    if len(a) != len(b):
        return False
    if not a:
        return True
    doubled = b + b
    return any(doubled[i:i + len(a)] == a for i in range(len(b)))


def _refine_boundary(field, point, r, th_lo, th_hi, ref_outcome, budget,
                     locks=()) -> float:
    """Narrow a sector boundary down to ~(th_hi-th_lo)/48^2 by two
    batched sub-sampling passes against the outcome at th_lo.  With
    ``ref_outcome=None`` the reference is measured at th_lo first
    (needed when re-refining at a radius the bracket was not built at).
    """
    lo, hi = th_lo, th_hi
    if ref_outcome is None:
        pt = _ring_points(point, r, np.array([lo]))
        fc, fb = _ring_outcomes(field.eval, pt, +1.0, point, 0.12 * r, _R_FAR,
                                budget, locks)
        bc, bb = _ring_outcomes(field.eval, pt, -1.0, point, 0.12 * r, _R_FAR,
                                budget, locks)
        ref_outcome = (fc[0], fb[0], bc[0], bb[0])
    for _ in range(2):
        sub = np.linspace(lo, hi, 50)[1:-1]
        pts = _ring_points(point, r, sub)
        fc, fb = _ring_outcomes(field.eval, pts, +1.0, point, 0.12 * r, _R_FAR,
                                budget, locks)
        bc, bb = _ring_outcomes(field.eval, pts, -1.0, point, 0.12 * r, _R_FAR,
                                budget, locks)
        cross = None
        for i in range(len(sub)):
            if _outcomes_differ(*ref_outcome, fc[i], fb[i], bc[i], bb[i]):
                cross = i
                break
        if cross is None:
            lo = sub[-1]
        elif cross == 0:
            hi = sub[0]
        else:
            lo, hi = sub[cross - 1], sub[cross]
            ref_outcome = (fc[cross - 1], fb[cross - 1], bc[cross - 1], bb[cross - 1])
    return 0.5 * (lo + hi)


def _boundary_direction(left, right) -> str:
    """Which way to trace the separatrix orbit sitting on a boundary."""
    lf, lfb, lb, lbb = left
    rf, rfb, rb, rbb = right
    if lf == _OUT_POINT or rf == _OUT_POINT:
        return BACKWARD
    if lb == _OUT_POINT or rb == _OUT_POINT:
        return FORWARD
    fwd_jump = _circ_diff(lfb, rfb) > 1.0 if (lf == rf == _OUT_AWAY) else False
    bwd_jump = _circ_diff(lbb, rbb) > 1.0 if (lb == rb == _OUT_AWAY) else False
    if bwd_jump and not fwd_jump:
        return FORWARD
    if fwd_jump and not bwd_jump:
        return BACKWARD
    return FORWARD


# --------------------------------------------------------------------------
# skeleton
# --------------------------------------------------------------------------

_SINK = "sink"
_SOURCE = "source"
_LABELS = {
    STABLE_NODE: _SINK,
    STABLE_FOCUS: _SINK,
    UNSTABLE_NODE: _SOURCE,
    UNSTABLE_FOCUS: _SOURCE,
    SADDLE: "saddle",
    SADDLE_NODE: "sn",
    CENTER: "center",
    DEGENERATE: "deg",
}
_REV_LABELS = {_SINK: _SOURCE, _SOURCE: _SINK}


@dataclass
class SkeletonNode:
    id: str
    kind: str
    disc: Tuple[float, float]
    is_infinite: bool

    @property
    def type_label(self) -> str:
        if self.kind.startswith("nilpotent"):
            return "nil"
        return _LABELS.get(self.kind, self.kind)


@dataclass
class SkeletonEdge:
    id: str
    src: str
    dst: str
    points: np.ndarray  # (n, 2) disc polyline, src -> dst
    is_boundary: bool = False
    origin: str = ""


@dataclass
class SkeletonFace:
    id: int
    rep: Tuple[float, float]
    rep_orbit: Optional[np.ndarray] = None
    pixel_area: int = 0


@dataclass
class Skeleton:
    params: Tuple[float, float]
    nodes: List[SkeletonNode]
    edges: List[SkeletonEdge]
    faces: List[SkeletonFace]
    diagnostics: List[str] = dc_field(default_factory=list)
    degenerate_line: bool = False
    limit_cycles: int = 0

    def node_by_id(self, nid: str) -> SkeletonNode:
        for n in self.nodes:
            if n.id == nid:
                return n
        raise KeyError(nid)

    @property
    def interior_edges(self) -> List[SkeletonEdge]:
        return [e for e in self.edges
                if not e.is_boundary and e.origin != "singular-line"]


_ARCS = (
    ("arc_q4", "V2", "U1", -0.5 * math.pi, 0.0),
    ("arc_q1", "U1", "U2", 0.0, 0.5 * math.pi),
    ("arc_q3", "V2", "V1", 1.5 * math.pi, math.pi),
    ("arc_q2", "V1", "U2", math.pi, 0.5 * math.pi),
)


def _arc_edges() -> List[SkeletonEdge]:
    out = []
    for eid, src, dst, th0, th1 in _ARCS:
        th = np.linspace(th0, th1, 48)
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
        out.append(SkeletonEdge(eid, src, dst, pts, is_boundary=True, origin="arc"))
    return out


def _thin_polyline(points: np.ndarray, step: float = 0.002) -> np.ndarray:
    if len(points) <= 2:
        return points
    keep = [0]
    last = points[0]
    for i in range(1, len(points) - 1):
        if math.hypot(points[i][0] - last[0], points[i][1] - last[1]) >= step:
            keep.append(i)
            last = points[i]
    keep.append(len(points) - 1)
    return points[keep]


def _orbit_polyline(orbit: Orbit) -> np.ndarray:
    return np.array([[d.u, d.v] for _, d in orbit.samples])


def _path_proximity(a: np.ndarray, b: np.ndarray, k: int = 33) -> float:
    """Max distance between two polylines compared at matching arc-length
    fractions (b is also tried reversed)."""

    def resample(pts):
        seg = np.hypot(*(np.diff(pts, axis=0).T))
        s = np.concatenate([[0.0], np.cumsum(seg)])
        if s[-1] == 0:
            return np.repeat(pts[:1], k, axis=0)
        f = np.linspace(0.0, s[-1], k)
        return np.stack([np.interp(f, s, pts[:, 0]), np.interp(f, s, pts[:, 1])], axis=1)

    ra, rb = resample(a), resample(b)
    d1 = np.hypot(*(ra - rb).T).max()
    d2 = np.hypot(*(ra - rb[::-1]).T).max()
    return float(min(d1, d2))


def trace_separatrices(p: Params, tol: float = 1e-9, t_max: float = 40_000.0,
                       max_steps: int = 60_000) -> Skeleton:
    """Assemble the separatrix skeleton of the compactified flow at ``p``.

    Nodes are the singular points (finite and infinite), edges the four
    boundary arcs plus every traced hyperbolic-sector separatrix, faces
    the connected components of the complement.  Hyperbolic-sector
    boundaries at non-elementary points are found by sector probing; at
    the fully degenerate parameter point the skeleton of the singular
    line and its transverse connections is written down in closed form.

    The generous ``t_max`` (chart time) matters: separatrices landing on
    the degenerate equator points creep in algebraically, so most of the
    budget is spent on the final approach until the monotone-capture
    rule snaps them onto their endpoint.
    """
    b, c = p.as_floats()
    if abs(b) < 1e-14 and abs(c - 1.0) < 1e-14:
        return _degenerate_line_skeleton(p)

    finite = classify_finite(p)
    inf_pts = infinite_singular_points(p)
    targets = _known_targets(p)

    nodes = [SkeletonNode(i.id, i.kind, _disc_tuple(i.location), False) for i in finite]
    nodes += [SkeletonNode(i.id, i.kind, i.disc_position, True) for i in inf_pts]
    edges = _arc_edges()
    diagnostics: List[str] = []

    jobs: List[Tuple[Union[DiscPoint, ChartPoint], str, str, str]] = []
    # (seed, direction, owner node id, provenance)

    for info in finite:
        if info.kind == SADDLE:
            x0, y0 = info.location
            du = info.separatrix_directions[:2]
            ds = info.separatrix_directions[2:]
            evs = [float(ev.real) for ev in info.eigenvalues]
            jac = jacobian(p, info.location)
            for vx, vy in du:
                jobs.append((_manifold_seed(p, jac, max(evs), x0, y0, vx, vy),
                             FORWARD, info.id, f"saddle:{info.id}"))
            for vx, vy in ds:
                jobs.append((_manifold_seed(p, jac, min(evs), x0, y0, vx, vy),
                             BACKWARD, info.id, f"saddle:{info.id}"))
        elif info.kind == SADDLE_NODE:
            jobs += _probe_jobs(chart_field(p, U3), info.location, info.id)

    for info in inf_pts:
        if info.id in ("U1", "V1"):
            jobs += _tangent_manifold_jobs(p, info.chart, info.id)
        elif info.kind == SADDLE:
            # the transverse eigendirection is the z2 axis, i.e. the
            # x = 0 line: U2 has z2-eigenvalue -b > 0 (trace forward),
            # V2 has z2-eigenvalue b < 0 (trace backward)
            direction = FORWARD if info.id == "U2" else BACKWARD
            jobs.append((ChartPoint(info.chart, 0.0, 1e-7), direction, info.id,
                         f"line:{info.id}"))
        elif info.kind == SADDLE_NODE:
            # only at b = 0, where the zero eigenvalue points along the
            # invariant line: the line is exactly the centre manifold
            # (dz2 = (c-1) z2^2 on the axis in both charts), the disc
            # side is two hyperbolic sectors split by the axis ray, and
            # the nodal fan faces the far hemisphere.  The one interior
            # separatrix is the line orbit itself, leaving the point for
            # c > 1 and arriving for c < 1.  The seed sits farther out
            # than in the hyperbolic case: the on-axis speed is only
            # quadratic, and a closer seed would look stationary.
            direction = FORWARD if c > 1.0 else BACKWARD
            jobs.append((ChartPoint(info.chart, 0.0, 1e-4), direction, info.id,
                         f"line:{info.id}"))

    for seed, direction, owner, origin in jobs:
        orbit = integrate(p, seed, direction, t_max=t_max, tol=tol,
                          max_steps=max_steps, targets=targets,
                          snap_radius=1e-2)
        term = orbit.termination
        if term.kind not in (TERM_SINGULAR, TERM_INFINITY):
            d = orbit.final
            diagnostics.append(
                f"unresolved separatrix from {origin} ({direction}): {term.kind} "
                f"at disc ({d.u:.6f}, {d.v:.6f})")
            continue
        pts = _thin_polyline(_orbit_polyline(orbit))
        owner_node = next(n for n in nodes if n.id == owner)
        start = np.array([owner_node.disc])
        if direction == FORWARD:
            src, dst = owner, term.target
            pts = np.concatenate([start, pts])
        else:
            src, dst = term.target, owner
            pts = np.concatenate([start, pts])[::-1]
        edges.append(SkeletonEdge(f"sep{len(edges)}", src, dst, pts, origin=origin))

    edges = _dedupe_edges(edges, nodes)
    _snap_edges(edges, nodes)

    sk = Skeleton((b, c), nodes, edges, [], diagnostics)
    if not diagnostics:
        sk.faces = _extract_faces(p, sk, tol)
    return sk


def _disc_tuple(loc) -> Tuple[float, float]:
    d = plane_to_disc(loc)
    return (d.u, d.v)


def _plane_seed(x0: float, y0: float, vx: float, vy: float,
                eps: float = 1e-7) -> ChartPoint:
    x = x0 + eps * vx
    y = y0 + eps * vy
    if abs(x) < 1e-12:
        x = 0.0  # seeds meant to sit on the invariant line stay on it
    return ChartPoint(U3, x, y)


def _manifold_seed(p: Params, jac, lam: float, x0: float, y0: float,
                   vx: float, vy: float, eps: float = 1e-7) -> ChartPoint:
    """Seed on the invariant manifold of eigenvalue ``lam``, corrected to
    second order.

    The plane field is exactly quadratic, so a bare eigenvector seed
    sits O(eps^2) off the manifold, and along a long heteroclinic leg
    that transverse error is amplified exponentially - enough to turn a
    saddle connection into an orbit that misses the far saddle and
    circulates.  Solving (J - 2 lam I) q = -Q(v), with Q the quadratic
    part of the field, moves the seed onto the manifold up to O(eps^3).
    """
    q1 = q2 = 0.0
    c1, c2 = -vx * vy, p.b * vy * vy  # Q(v) for the reduced field
    a11 = jac[0][0] - 2.0 * lam
    a12 = jac[0][1]
    a21 = jac[1][0]
    a22 = jac[1][1] - 2.0 * lam
    det = a11 * a22 - a12 * a21
    if abs(det) > 1e-9:  # skip the correction at a 2:1 resonance
        q1 = (-c1 * a22 + c2 * a12) / det
        q2 = (-c2 * a11 + c1 * a21) / det
    x = x0 + eps * vx + eps * eps * q1
    y = y0 + eps * vy + eps * eps * q2
    if abs(x) < 1e-12:
        x = 0.0
    return ChartPoint(U3, x, y)


def _tangent_manifold_jobs(p: Params, chart: str, owner: str):
    """Tracing jobs for the equator-tangent invariant branches at the
    horizontal equator points.

    Substituting w = z2 -/+ (b+1) z1^2 into the U1/V1 chart fields leaves
    dz1 = w, dw = -/+ (b+1) z1^3 +/- (2b+3) z1 w + h.o.t., and the only
    invariant branches through the origin are the equator itself and a
    single parabola z2 = kappa z1^2 with kappa = -(2b+1)/2 at U1 and
    kappa = +(2b+1)/2 at V1.  The parabola faces the disc (kappa > 0)
    at U1 for b < -1/2 and at V1 for b > -1/2.

    Sector layout on the disc side, checked against the sign of dw along
    rays: at U1 the parabola bounds the hyperbolic sector, so both of
    its branches are separatrices - the z1 > 0 branch flows out of the
    point (dz1 = w > 0 on it) and the z1 < 0 branch flows in.  At V1 the
    parabola bounds the elliptic sector (the disc-side flow between its
    branches funnels back to the point both ways), and elliptic-sector
    boundaries are not separatrices, so V1 never yields tracing jobs;
    for b < -1/2 its elliptic sector leans on the equator itself.  When
    kappa <= 0 the hyperbolic sector at U1 is bounded by the equator
    arcs alone and there is nothing to trace either.

    Seeds sit on the cubic-corrected branch z2 = kappa z1^2 + a3 z1^3;
    the correction keeps the transverse error at O(z1^4), which the
    exponential stretch along the heteroclinic legs can afford.
    """
    b, c = p.as_floats()
    if chart == V1:
        return []
    kappa = -(2.0 * b + 1.0) / 2.0
    if kappa <= 0.0:
        return []
    # z1^3 coefficient of the invariant branch (denominator 4b+1 < -1
    # whenever kappa > 0, so the formula is always finite here)
    a3 = -2.0 * kappa * kappa * (2.0 * c - 1.0) / (4.0 * b + 1.0)
    jobs = []
    for s, direction in ((+1.0, FORWARD), (-1.0, BACKWARD)):
        z1 = s * 1e-4
        z2 = kappa * z1 * z1 + a3 * z1 ** 3
        jobs.append((ChartPoint(chart, z1, z2), direction, owner,
                     f"manifold:{owner}"))
    return jobs


def _probe_jobs(field: ChartField, point, owner: str):
    """Tracing jobs for the hyperbolic-sector boundaries around a
    non-elementary point (plane coordinates for U3, chart otherwise)."""
    result = sector_probe(field, point)
    jobs = []
    for bd in result.boundaries:
        if bd.on_equator:
            continue
        if HYPERBOLIC not in (bd.kind_before, bd.kind_after):
            continue
        if field.chart == U3:
            seed = ChartPoint(U3, bd.seed[0], bd.seed[1])
        else:
            if bd.seed[1] <= 0:
                continue  # southern-hemisphere structure: not part of the disc
            seed = ChartPoint(field.chart, bd.seed[0], bd.seed[1])
        jobs.append((seed, bd.trace_direction, owner, f"probe:{owner}"))
    return jobs


def _dedupe_edges(edges: List[SkeletonEdge], nodes) -> List[SkeletonEdge]:
    kept: List[SkeletonEdge] = []
    for e in edges:
        dup = False
        for f in kept:
            if {e.src, e.dst} == {f.src, f.dst} and not f.is_boundary \
                    and not e.is_boundary:
                # generous: a connection traced from both of its endpoints
                # can shear off the true orbit by a few 1e-3 near the far
                # saddle, while genuinely distinct edges between the same
                # pair of points run well apart (lobes, loop halves)
                if _path_proximity(e.points, f.points) < 1e-2:
                    dup = True
                    break
        if not dup:
            kept.append(e)
    return kept


def _snap_edges(edges: List[SkeletonEdge], nodes, radius: float = 1e-5) -> None:
    for e in edges:
        for which, nid in ((0, e.src), (-1, e.dst)):
            n = next(x for x in nodes if x.id == nid)
            if math.hypot(e.points[which][0] - n.disc[0],
                          e.points[which][1] - n.disc[1]) < max(radius, 2e-6):
                e.points[which] = n.disc


def _degenerate_line_skeleton(p: Params) -> Skeleton:
    """Skeleton at the parameter point where the whole line x = 0 is
    singular: every orbit is an exact parabola x = C - (y-1)^2 / 2.

    The node set is the nilpotent point (0, 1) plus the four infinite
    points; the singular segment itself enters as two "singular-line"
    edges (not counted as separatrix orbits), and the critical parabola
    through (0, 1) contributes the two genuine separatrix branches."""
    inf_pts = infinite_singular_points(p)
    nodes = [SkeletonNode("P2", "nilpotent singular segment", _disc_tuple((0.0, 1.0)),
                          False)]
    nodes += [SkeletonNode(i.id, i.kind, i.disc_position, True) for i in inf_pts]
    edges = _arc_edges()
    p2 = _disc_tuple((0.0, 1.0))

    # dense near y = 1, stretched toward infinity
    reach = np.sinh(np.linspace(0.0, 1.0, 900) * 9.0) / math.sinh(9.0) * 4000.0

    # the singular segment of x = 0, split at the nilpotent point (0, 1)
    for eid, ys, src, dst, cap in (
            ("line_low", 1.0 - reach[::-1], "V2", "P2", (0.0, -1.0)),
            ("line_high", 1.0 + reach, "P2", "U2", (0.0, 1.0))):
        disc = _plane_polyline_to_disc(np.stack([np.zeros_like(ys), ys], axis=1))
        if src == "V2":
            disc = np.concatenate([[cap], disc])
            disc[-1] = p2
        else:
            disc = np.concatenate([disc, [cap]])
            disc[0] = p2
        edges.append(SkeletonEdge(eid, src, dst, disc, origin="singular-line"))

    # both branches of the critical parabola x = -(y-1)^2 / 2 touch the
    # equator at V1; the flow runs down in y (dy/dt = x < 0)
    for eid, ys, src, dst in (
            ("par_up", 1.0 + reach[::-1], "V1", "P2"),
            ("par_low", 1.0 - reach, "P2", "V1")):
        x = -0.5 * (ys - 1.0) ** 2
        disc = _plane_polyline_to_disc(np.stack([x, ys], axis=1))
        if src == "V1":
            disc = np.concatenate([[[-1.0, 0.0]], disc])
            disc[-1] = p2
        else:
            disc = np.concatenate([disc, [[-1.0, 0.0]]])
            disc[0] = p2
        edges.append(SkeletonEdge(eid, src, dst, disc, origin="parabola"))

    sk = Skeleton(p.as_floats(), nodes, edges, [], degenerate_line=True)
    sk.faces = _extract_faces(p, sk, 1e-9)
    return sk


def _plane_polyline_to_disc(pts: np.ndarray) -> np.ndarray:
    n = np.sqrt(1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2)
    return np.stack([pts[:, 0] / n, pts[:, 1] / n], axis=1)


# --------------------------------------------------------------------------
# faces
# --------------------------------------------------------------------------

def _extract_faces(p: Params, sk: Skeleton, tol: float) -> List[SkeletonFace]:
    """Connected components of the disc minus the skeleton, by raster
    fill, each with a representative point and a short sample orbit.

    Separatrices that swing close to the equator (or to each other)
    can pinch a face shut at coarse pixel sizes, so the raster is
    retried at doubled resolutions until its component count agrees
    with the Euler count of the embedded graph; the last attempt is
    kept either way and ``count_SR`` re-checks the totals.
    """
    want = len(sk.edges) - len(sk.nodes) + _graph_components(sk)
    faces: List[SkeletonFace] = []
    for n_px in (220, 440, 880):
        faces = _raster_faces(p, sk, n_px)
        if len(faces) == want:
            break
        if len(faces) > want:
            # a face squeezed between near-tangent separatrices can pinch
            # below one pixel and fragment into beads; trust the fill only
            # if everything past the expected count is bead-sized while the
            # expected faces are not
            srt = sorted(faces, key=lambda f: -f.pixel_area)
            if srt[want - 1].pixel_area > 16 and srt[want].pixel_area <= 16:
                faces = [SkeletonFace(i, f.rep, f.rep_orbit, f.pixel_area)
                         for i, f in enumerate(srt[:want])]
                break
    return faces


def _raster_faces(p: Params, sk: Skeleton, n_px: int) -> List[SkeletonFace]:
    blocked = np.zeros((n_px, n_px), dtype=bool)
    px = 2.0 / (n_px - 1)

    def stamp(u: float, v: float, rad: int = 1):
        i = int(round((u + 1.0) / px))
        j = int(round((v + 1.0) / px))
        blocked[max(0, i - rad):i + rad + 1, max(0, j - rad):j + rad + 1] = True

    for e in sk.edges:
        pts = _resample_for_raster(e.points, 0.45 * px)
        for u, v in pts:
            stamp(u, v)
    for node in sk.nodes:
        stamp(node.disc[0], node.disc[1], rad=2)

    ii, jj = np.meshgrid(np.arange(n_px), np.arange(n_px), indexing="ij")
    uu = -1.0 + ii * px
    vv = -1.0 + jj * px
    outside = uu ** 2 + vv ** 2 >= (1.0 - 1.5 * px) ** 2
    open_px = ~(blocked | outside)

    labels = _label_components(open_px)
    faces: List[SkeletonFace] = []
    n_labels = labels.max()
    for lab in range(1, n_labels + 1):
        mask = labels == lab
        area = int(mask.sum())
        if area < 4:
            continue
        interior = _erode(mask)
        pick = interior if interior.any() else mask
        ci, cj = np.argwhere(pick).mean(axis=0)
        i0, j0 = int(round(ci)), int(round(cj))
        if not pick[i0, j0]:
            cand = np.argwhere(pick)
            k = np.argmin((cand[:, 0] - ci) ** 2 + (cand[:, 1] - cj) ** 2)
            i0, j0 = cand[k]
        rep = (-1.0 + i0 * px, -1.0 + j0 * px)
        faces.append(SkeletonFace(len(faces), rep, _rep_orbit(p, rep), area))
    return faces


def _resample_for_raster(pts: np.ndarray, step: float) -> np.ndarray:
    seg = np.hypot(*(np.diff(pts, axis=0).T))
    total = seg.sum()
    if total == 0:
        return pts
    s = np.concatenate([[0.0], np.cumsum(seg)])
    f = np.linspace(0.0, total, max(2, int(total / step) + 2))
    return np.stack([np.interp(f, s, pts[:, 0]), np.interp(f, s, pts[:, 1])], axis=1)


def _label_components(open_px: np.ndarray) -> np.ndarray:
    """4-connected component labelling (small BFS; no external deps)."""
    labels = np.zeros(open_px.shape, dtype=np.int32)
    current = 0
    stack: List[Tuple[int, int]] = []
    ni, nj = open_px.shape
    for si in range(ni):
        for sj in range(nj):
            if open_px[si, sj] and labels[si, sj] == 0:
                current += 1
                stack.append((si, sj))
                labels[si, sj] = current
                while stack:
                    i, j = stack.pop()
                    if i > 0 and open_px[i - 1, j] and labels[i - 1, j] == 0:
                        labels[i - 1, j] = current
                        stack.append((i - 1, j))
                    if i + 1 < ni and open_px[i + 1, j] and labels[i + 1, j] == 0:
                        labels[i + 1, j] = current
                        stack.append((i + 1, j))
                    if j > 0 and open_px[i, j - 1] and labels[i, j - 1] == 0:
                        labels[i, j - 1] = current
                        stack.append((i, j - 1))
                    if j + 1 < nj and open_px[i, j + 1] and labels[i, j + 1] == 0:
                        labels[i, j + 1] = current
                        stack.append((i, j + 1))
    return labels


def _erode(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] &= mask[:-1, :]
    out[:-1, :] &= mask[1:, :]
    out[:, 1:] &= mask[:, :-1]
    out[:, :-1] &= mask[:, 1:]
    return out


def _rep_orbit(p: Params, rep: Tuple[float, float]) -> Optional[np.ndarray]:
    try:
        pieces = []
        for direction in (BACKWARD, FORWARD):
            o = integrate(p, DiscPoint(rep[0], rep[1]), direction,
                          t_max=8.0, tol=1e-6, max_steps=4000)
            pts = _thin_polyline(_orbit_polyline(o), 0.004)
            pieces.append(pts[::-1] if direction == BACKWARD else pts)
        return np.concatenate([pieces[0], pieces[1][1:]])
    except Exception:  # cosmetics only; never fail the skeleton for this
        return None


# --------------------------------------------------------------------------
# S and R
# --------------------------------------------------------------------------

def count_SR(sk: Skeleton) -> Tuple[int, int]:
    """Separatrix count S and canonical-region count R of a skeleton.

    S adds the boundary contribution (four arcs and four infinite
    points), the finite singular points, every traced interior
    separatrix orbit, and any limit cycles.  At the fully degenerate
    parameter point the closed singular segment counts as one element.
    R is the raster face count, cross-checked against the Euler count
    E - V + C of the embedded skeleton graph; a mismatch raises
    :class:`FlowDiagnosticError`.
    """
    if sk.diagnostics:
        raise FlowDiagnosticError(
            "skeleton incomplete: " + "; ".join(sk.diagnostics))
    interior = sk.interior_edges
    if sk.degenerate_line:
        s = 8 + 1 + len(interior) + sk.limit_cycles
    else:
        n_finite = sum(1 for n in sk.nodes if not n.is_infinite)
        s = 8 + n_finite + len(interior) + sk.limit_cycles

    r_fill = len(sk.faces)
    v = len(sk.nodes)
    e = len(sk.edges)
    c = _graph_components(sk)
    r_euler = e - v + c
    if r_fill != r_euler:
        raise FlowDiagnosticError(
            f"face-count mismatch: raster fill found {r_fill}, Euler count "
            f"gives {r_euler} (V={v}, E={e}, components={c})")
    return s, r_fill


def _graph_components(sk: Skeleton) -> int:
    parent = {n.id: n.id for n in sk.nodes}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in sk.edges:
        ra, rb = find(e.src), find(e.dst)
        if ra != rb:
            parent[ra] = rb
    return len({find(n.id) for n in sk.nodes})


# --------------------------------------------------------------------------
# canonical signature
# --------------------------------------------------------------------------

_BOUNDARY_ORDER = ("U1", "U2", "V1", "V2")  # CCW around the disc


@dataclass(frozen=True)
class TopoSignature:
    s: int
    r: int
    degenerate: bool
    canonical: str
    rev_canonical: str

    @property
    def hash_hex(self) -> str:
        return hashlib.sha256(self.canonical.encode()).hexdigest()[:16]


def signature(sk: Skeleton) -> TopoSignature:
    """Canonical combinatorial encoding of a skeleton.

    The encoding fixes the cyclic order of the four infinite nodes on
    the boundary, relabels all nodes by breadth-first traversal, and
    serialises each node's type together with the cyclic order of its
    incident edge ends (with flow direction and arc flags).  The
    canonical string is the minimum over the eight dihedral symmetries
    of the marked disc; cyclic edge order around sinks and sources is
    not trusted (spiralling makes it coordinate-dependent), so their
    incidences are serialised as sorted multisets.  The rotation system
    determines the faces, so face adjacency is carried implicitly; the
    (S, R) pair prefixes the string.  ``rev_canonical`` is the same
    minimum after reversing time (edge directions flipped, sources and
    sinks exchanged).
    """
    s, r = count_SR(sk)
    darts = _build_darts(sk)
    labels = {n.id: n.type_label for n in sk.nodes}
    canonical = _canon_over_dihedral(sk, darts, labels, s, r, rev=False)
    rev_labels = {k: _REV_LABELS.get(v, v) for k, v in labels.items()}
    rev_canonical = _canon_over_dihedral(sk, darts, rev_labels, s, r, rev=True)
    return TopoSignature(s, r, sk.degenerate_line, canonical, rev_canonical)


def signatures_equivalent(a: TopoSignature, b: TopoSignature) -> bool:
    """Equivalence up to disc homeomorphism preserving the flow
    orientation (reflection allowed, simultaneous time reversal not)."""
    return a.canonical == b.canonical


def equivalence_detail(a: TopoSignature, b: TopoSignature) -> Optional[str]:
    """"preserved", "reversed", or None."""
    if a.canonical == b.canonical:
        return "preserved"
    if a.canonical == b.rev_canonical:
        return "reversed"
    return None


def _incidence_angle(edge: SkeletonEdge, at_src: bool, node_pos,
                     radius: float = 1e-3) -> float:
    pts = edge.points if at_src else edge.points[::-1]
    base = np.array(node_pos)
    acc = 0.0
    chosen = pts[-1]
    for i in range(1, len(pts)):
        acc += math.hypot(*(pts[i] - pts[i - 1]))
        if acc >= radius:
            chosen = pts[i]
            break
    d = chosen - base
    return math.atan2(d[1], d[0])


def _build_darts(sk: Skeleton) -> Dict[str, List[Tuple[float, int, bool, str]]]:
    """node id -> CCW-sorted (angle, edge index, outgoing?, other node)."""
    out: Dict[str, List[Tuple[float, int, bool, str]]] = {n.id: [] for n in sk.nodes}
    for idx, e in enumerate(sk.edges):
        na = sk.node_by_id(e.src)
        out[e.src].append((_incidence_angle(e, True, na.disc), idx, True, e.dst))
        nb = sk.node_by_id(e.dst)
        out[e.dst].append((_incidence_angle(e, False, nb.disc), idx, False, e.src))
    for nid in out:
        out[nid].sort(key=lambda d: d[0])
    return out


def _canon_over_dihedral(sk, darts, labels, s, r, rev: bool) -> str:
    best = None
    for anchor_i in range(4):
        for reflect in (False, True):
            text = _serialize(sk, darts, labels, anchor_i, reflect, rev)
            if best is None or text < best:
                best = text
    prefix = f"S{s}R{r}" + ("D" if sk.degenerate_line else "")
    return prefix + "|" + best


def _serialize(sk, darts, labels, anchor_i: int, reflect: bool, rev: bool) -> str:
    order = list(_BOUNDARY_ORDER)
    if reflect:
        order = [order[0]] + order[1:][::-1]
    order = order[anchor_i:] + order[:anchor_i]
    present = [nid for nid in order if any(n.id == nid for n in sk.nodes)]

    index: Dict[str, int] = {}
    queue: List[str] = []
    for nid in present:
        if nid not in index:
            index[nid] = len(index)
            queue.append(nid)
    entry_edge: Dict[str, int] = {}

    pos = 0
    lines: List[str] = []
    while pos < len(queue):
        nid = queue[pos]
        pos += 1
        dart_list = darts[nid]
        if reflect:
            dart_list = dart_list[::-1]
        # anchor the cyclic order at the edge we arrived by (boundary
        # roots anchor at their first arc)
        anchor = 0
        if nid in entry_edge:
            for i, d in enumerate(dart_list):
                if d[1] == entry_edge[nid]:
                    anchor = i
                    break
        else:
            for i, d in enumerate(dart_list):
                if sk.edges[d[1]].is_boundary:
                    anchor = i
                    break
        rotated = dart_list[anchor:] + dart_list[:anchor]
        lab = labels[nid]
        parts = []
        for _, eidx, outgoing, other in rotated:
            if other not in index:
                index[other] = len(index)
                queue.append(other)
                entry_edge[other] = eidx
            dirflag = outgoing ^ rev
            parts.append(f"{index[other]}{'o' if dirflag else 'i'}"
                         f"{'a' if sk.edges[eidx].is_boundary else 's'}")
        if lab in (_SINK, _SOURCE):
            parts = sorted(parts)
        lines.append(f"{lab}[{','.join(parts)}]")

    leftovers = []
    for n in sk.nodes:
        if n.id not in index:
            leftovers.append(labels[n.id])
    for lab in sorted(leftovers):
        lines.append(f"{lab}[]")
    return ";".join(lines)


# --------------------------------------------------------------------------
# limit cycles
# --------------------------------------------------------------------------

@dataclass
class LimitCycleCandidate:
    loop: np.ndarray          # (n, 2) disc polyline around one period
    seed: Tuple[float, float]
    diameter: float
    period_estimate: float    # in true time


@dataclass
class LimitCycleReport:
    cycles: List[LimitCycleCandidate]
    seeds_used: int
    n_converged: int
    n_recurrent_rejected: int

    @property
    def found(self) -> bool:
        return bool(self.cycles)


def _golden_seeds(n: int, r_max: float = 0.93) -> np.ndarray:
    k = np.arange(n) + 0.5
    r = r_max * np.sqrt(k / n)
    th = k * 2.399963229728653
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def limit_cycle_scan(
    p: Optional[Params] = None,
    seeds: int = 100,
    field: Optional[Callable] = None,
    steps: int = 6000,
    arc_step: float = 0.004,
) -> LimitCycleReport:
    """Search for isolated periodic orbits inside the open disc.

    A deterministic spiral of seeds is integrated along the normalised
    disc field; an orbit whose tail keeps re-approaching a reference
    point without shrinking is a recurrence candidate, and a candidate
    counts as a limit cycle only if a neighbour seed (offset by the
    radius ratio 1.01 about the loop centre) converges onto the same
    loop - a period annulus keeps the neighbour on its own loop and is
    rejected.  Scanning runs forward and backward so both attracting and
    repelling cycles are seen.  ``field`` overrides the disc field (used
    by the synthetic self-test fixture).
    """
    if field is None:
        if p is None:
            raise ValueError("need either params or an explicit field")
        field = disc_field(p)
    targets = _known_targets(p) if p is not None else []

    pts = _golden_seeds(seeds)
    if targets:
        tu = np.array([t[2] for t in targets])
        tv = np.array([t[3] for t in targets])
        keep = np.array([np.hypot(tu - u, tv - v).min() > 0.05 for u, v in pts])
        pts = pts[keep]

    cycles: List[LimitCycleCandidate] = []
    n_conv = 0
    n_rej = 0
    for sigma in (+1.0, -1.0):
        paths = _march_disc(field, pts, sigma, steps, arc_step)
        for i in range(len(pts)):
            path = paths[:, i, :]
            verdict, loop = _recurrence_verdict(path, targets)
            if verdict == "converged":
                n_conv += 1
            elif verdict == "candidate":
                if _isolated(field, sigma, loop, steps, arc_step):
                    if not any(_loops_match(loop, c.loop) for c in cycles):
                        period = _loop_period(field, loop)
                        cycles.append(LimitCycleCandidate(
                            loop, (float(pts[i, 0]), float(pts[i, 1])),
                            float(_loop_diameter(loop)), period))
                else:
                    n_rej += 1
    return LimitCycleReport(cycles, len(pts), n_conv, n_rej)


def _march_disc(field, pts, sigma, steps, arc_step):
    """Fixed-arc RK4 marching of many seeds; returns (steps+1, n, 2)."""
    z = pts.astype(float).copy()
    out = np.empty((steps + 1, len(pts), 2))
    out[0] = z

    def g(zz):
        du, dv = field(zz[:, 0], zz[:, 1])
        n = np.hypot(du, dv)
        n = np.where(n < 1e-14, 1.0, n)
        return np.stack([du / n, dv / n], axis=1) * sigma

    h = arc_step
    for s in range(steps):
        k1 = g(z)
        k2 = g(z + 0.5 * h * k1)
        k3 = g(z + 0.5 * h * k2)
        k4 = g(z + h * k3)
        z = z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        rr = np.hypot(z[:, 0], z[:, 1])
        scale = np.where(rr > 0.999, 0.999 / np.maximum(rr, 1e-9), 1.0)
        z = z * scale[:, None]
        out[s + 1] = z
    return out


def _recurrence_verdict(path: np.ndarray, targets):
    tail_at = len(path) // 2
    ref = path[tail_at]
    end = path[-1]
    if targets:
        for _, _, tu, tv in targets:
            if math.hypot(end[0] - tu, end[1] - tv) < 1e-3:
                return "converged", None
    d = np.hypot(path[tail_at + 1:, 0] - ref[0], path[tail_at + 1:, 1] - ref[1])
    minima = []
    for i in range(1, len(d) - 1):
        if d[i] < 0.02 and d[i] <= d[i - 1] and d[i] <= d[i + 1]:
            if not minima or i - minima[-1] > 10:
                minima.append(i)
    if len(minima) < 2:
        return "wandering", None
    i1, i2 = minima[0], minima[1]
    loop = path[tail_at + 1 + i1: tail_at + 2 + i2]
    if _loop_diameter(loop) < 0.05:
        return "converged", None
    # a shrinking spiral is not a cycle: compare first and last windows
    last_loop = path[tail_at + 1 + minima[-2]: tail_at + 2 + minima[-1]]
    if _loop_diameter(last_loop) < 0.8 * _loop_diameter(loop):
        return "converged", None
    return "candidate", loop


def _loop_diameter(loop: np.ndarray) -> float:
    u = loop[:, 0]
    v = loop[:, 1]
    return float(max(u.max() - u.min(), v.max() - v.min()))


def _loops_match(a: np.ndarray, b: np.ndarray) -> bool:
    ca, cb = a.mean(axis=0), b.mean(axis=0)
    return (math.hypot(*(ca - cb)) < 0.05
            and abs(_loop_diameter(a) - _loop_diameter(b)) < 0.05)


def _isolated(field, sigma, loop, steps, arc_step) -> bool:
    """Does a seed offset from the loop converge back onto it?

    A fixed absolute offset is used so that a period annulus (whose
    neighbour orbit keeps its own distance) is distinguished from an
    attracting cycle at every loop size."""
    centre = loop.mean(axis=0)
    rad = loop[0] - centre
    nrm = math.hypot(rad[0], rad[1])
    if nrm < 1e-9:
        return False
    offset = 0.02
    start = loop[0] + (offset / nrm) * rad
    path = _march_disc(field, start[None, :], sigma, steps, arc_step)[:, 0, :]
    tail = path[-max(len(loop) * 2, 50):]
    return _polyline_distance(tail, loop) < 0.3 * offset


def _polyline_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean distance from points of a to the nearest point of b."""
    step = max(1, len(a) // 64)
    pts = a[::step]
    dmin = [np.hypot(b[:, 0] - q[0], b[:, 1] - q[1]).min() for q in pts]
    return float(np.mean(dmin))


def _loop_period(field, loop: np.ndarray) -> float:
    du, dv = field(loop[:, 0], loop[:, 1])
    spd = np.hypot(np.asarray(du, dtype=float), np.asarray(dv, dtype=float))
    seg = np.hypot(*(np.diff(loop, axis=0).T))
    mid = 0.5 * (spd[1:] + spd[:-1])
    mid = np.where(mid < 1e-12, 1e-12, mid)
    return float((seg / mid).sum())
