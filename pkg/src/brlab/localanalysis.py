"""Finite singular points of the reduced system, fully classified.

The system has up to three finite singular points:

    P0 = (0, 0)              eigenvalues 1 and 1-c
    P1 = (0, (c-1)/b)        (only for b != 0)   eigenvalues c-1 and (b-c+1)/b
    P2 = (c-b-1, 1)          eigenvalues (g3 +- sqrt(D1)) / 2

Their types across the parameter plane are decided by the signs of

    g0 = b,  g1 = c-1,  g2 = b-c+1,  g3 = 2b-c+1,  g4 = b+1,
    D1 = c^2 - 4cb + 4b^2 - 6c + 8b + 5,

with the product identity lambda+ * lambda- = -g2 at P2.  On g3 = 0 with
D1 < 0 the point P2 is a genuine center: the system then carries a first
integral whose level sets close around it (see the darboux module), so
no Lyapunov-quantity computation is needed.

At (b, c) = (0, 1) the entire line x = 0 consists of singular points;
the artifact reports that stratum with kind "degenerate" and
isolated=False instead of pretending the points are isolated.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .model import Params, jacobian

UNSTABLE_NODE = "unstable node"
STABLE_NODE = "stable node"
SADDLE = "saddle"
UNSTABLE_FOCUS = "unstable focus"
STABLE_FOCUS = "stable focus"
CENTER = "center"
SADDLE_NODE = "semi-hyperbolic saddle-node"
DEGENERATE = "degenerate"

STRATUM_TOL = 1e-12


def _sign(v, tol: float = STRATUM_TOL) -> int:
    """-1/0/+1 with exact zero tests for exact inputs."""
    if isinstance(v, (int, Fraction)):
        return (v > 0) - (v < 0)
    fv = float(v)
    if abs(fv) <= tol:
        return 0
    return 1 if fv > 0 else -1


@dataclass(frozen=True)
class BifurcationValues:
    g0: object
    g1: object
    g2: object
    g3: object
    g4: object
    D1: object

    @staticmethod
    def from_params(p: Params) -> "BifurcationValues":
        b, c = p.b, p.c
        return BifurcationValues(
            g0=b,
            g1=c - 1,
            g2=b - c + 1,
            g3=2 * b - c + 1,
            g4=b + 1,
            D1=c * c - 4 * c * b + 4 * b * b - 6 * c + 8 * b + 5,
        )

    def signs(self, tol: float = STRATUM_TOL) -> Tuple[int, int, int, int, int]:
        """Signs of (g0, g1, g2, g3, D1); g4 is always positive on the domain."""
        return (
            _sign(self.g0, tol),
            _sign(self.g1, tol),
            _sign(self.g2, tol),
            _sign(self.g3, tol),
            _sign(self.D1, tol),
        )


@dataclass(frozen=True)
class SingularPointInfo:
    id: str
    location: Tuple[float, float]
    eigenvalues: Tuple[complex, ...] = ()
    kind: str = ""
    separatrix_directions: Tuple[Tuple[float, float], ...] = ()
    merged_with: Tuple[str, ...] = ()
    isolated: bool = True
    degenerate: bool = False
    notes: str = ""


def p0_eigenvalues(p: Params) -> Tuple[float, float]:
    return 1.0, float(1 - p.c)


def p1_eigenvalues(p: Params) -> Tuple[float, float]:
    if _sign(p.b) == 0:
        raise ValueError("P1 is undefined at b = 0")
    return float(p.c - 1), float((p.b - p.c + 1) / p.b)


def p2_eigenvalues(p: Params):
    """(g3 +- sqrt(D1))/2; floats for D1 >= 0, complex conjugates for D1 < 0.

    Satisfies lambda+ * lambda- = c - b - 1 = -g2.
    """
    v = BifurcationValues.from_params(p)
    g3, d1 = float(v.g3), float(v.D1)
    if d1 >= 0:
        r = math.sqrt(d1)
        return ((g3 + r) / 2, (g3 - r) / 2)
    r = cmath.sqrt(complex(d1))
    return ((g3 + r) / 2, (g3 - r) / 2)


def finite_singular_points(p: Params, tol: float = STRATUM_TOL) -> List[SingularPointInfo]:
    """Locations (and merges) of P0, P1, P2; no type classification."""
    b, c = p.b, p.c
    located: List[Tuple[str, Tuple[float, float]]] = [("P0", (0.0, 0.0))]
    if _sign(b, tol) != 0:
        located.append(("P1", (0.0, float((c - 1) / b))))
    located.append(("P2", (float(c - b - 1), 1.0)))
    merged: List[SingularPointInfo] = []
    used = [False] * len(located)
    for i, (pid, loc) in enumerate(located):
        if used[i]:
            continue
        twins = []
        for j in range(i + 1, len(located)):
            other = located[j][1]
            if math.hypot(loc[0] - other[0], loc[1] - other[1]) <= tol:
                twins.append(located[j][0])
                used[j] = True
        merged.append(SingularPointInfo(id=pid, location=loc,
                                        merged_with=tuple(twins),
                                        degenerate=bool(twins)))
    return merged


def _unit(vx: float, vy: float) -> Tuple[float, float]:
    n = math.hypot(vx, vy)
    return (vx / n, vy / n)


def _eigendirection(jac, lam: float) -> Tuple[float, float]:
    """A unit eigenvector of the 2x2 matrix for a real eigenvalue."""
    (a, b), (c, d) = jac
    a, b, c, d = float(a), float(b), float(c), float(d)
    cand1 = (b, lam - a)
    cand2 = (lam - d, c)
    v = cand1 if math.hypot(*cand1) >= math.hypot(*cand2) else cand2
    if math.hypot(*v) == 0.0:
        return (1.0, 0.0)
    return _unit(*v)


def _saddle_directions(jac, eigs: Sequence[float]) -> Tuple[Tuple[float, float], ...]:
    lam_u = max(eigs)
    lam_s = min(eigs)
    vu = _eigendirection(jac, lam_u)
    vs = _eigendirection(jac, lam_s)
    return (vu, (-vu[0], -vu[1]), vs, (-vs[0], -vs[1]))


def classify_finite(p: Params, tol: float = STRATUM_TOL) -> List[SingularPointInfo]:
    """Full classification of the finite singular points at p."""
    b, c = p.b, p.c
    v = BifurcationValues.from_params(p)
    s_b = _sign(v.g0, tol)
    s_g1 = _sign(v.g1, tol)
    s_g2 = _sign(v.g2, tol)
    s_g3 = _sign(v.g3, tol)
    s_d1 = _sign(v.D1, tol)
    q1_degenerate = (s_b == 0 and s_g1 == 0)

    out: List[SingularPointInfo] = []

    # ---- P0 ----------------------------------------------------------
    loc0 = (0.0, 0.0)
    eig0 = p0_eigenvalues(p)
    jac0 = jacobian(p, loc0)
    if q1_degenerate:
        out.append(SingularPointInfo(
            "P0", loc0, eig0, DEGENERATE, (), (), isolated=False, degenerate=True,
            notes="the entire line x=0 is singular at (b,c)=(0,1)"))
    elif s_g1 < 0:
        out.append(SingularPointInfo("P0", loc0, eig0, UNSTABLE_NODE))
    elif s_g1 > 0:
        out.append(SingularPointInfo(
            "P0", loc0, eig0, SADDLE, _saddle_directions(jac0, eig0)))
    else:
        # c = 1, b != 0: P1 falls onto the origin; one zero eigenvalue
        dirs = (_eigendirection(jac0, 1.0), tuple(-u for u in _eigendirection(jac0, 1.0)),
                _eigendirection(jac0, 0.0), tuple(-u for u in _eigendirection(jac0, 0.0)))
        out.append(SingularPointInfo(
            "P0", loc0, eig0, SADDLE_NODE, dirs, merged_with=("P1",),
            degenerate=True,
            notes="strong direction first, center direction last (both signs)"))

    # ---- P1 ----------------------------------------------------------
    # (c = 1 merges P1 into P0 above; g2 = 0 merges it into P2 below)
    if s_b != 0 and s_g1 != 0 and s_g2 != 0:
        loc1 = (0.0, float((c - 1) / b))
        eig1 = p1_eigenvalues(p)
        jac1 = jacobian(p, loc1)
        s_t = _sign(eig1[1], tol)  # transverse eigenvalue (b-c+1)/b
        if s_g1 > 0 and s_t > 0:
            out.append(SingularPointInfo("P1", loc1, eig1, UNSTABLE_NODE))
        elif s_g1 < 0 and s_t < 0:
            out.append(SingularPointInfo("P1", loc1, eig1, STABLE_NODE))
        else:
            out.append(SingularPointInfo(
                "P1", loc1, eig1, SADDLE, _saddle_directions(jac1, eig1)))

    # ---- P2 ----------------------------------------------------------
    loc2 = (float(c - b - 1), 1.0)
    eig2 = p2_eigenvalues(p)
    jac2 = jacobian(p, loc2)
    if q1_degenerate:
        out.append(SingularPointInfo(
            "P2", loc2, eig2, DEGENERATE, (), isolated=False, degenerate=True,
            notes="nilpotent point on the singular line x=0 at (b,c)=(0,1)"))
    elif s_g2 == 0:
        # merged with P1 at (0, 1); eigenvalues {0, b}
        dirs = (_eigendirection(jac2, float(b)),
                tuple(-u for u in _eigendirection(jac2, float(b))),
                _eigendirection(jac2, 0.0),
                tuple(-u for u in _eigendirection(jac2, 0.0)))
        out.append(SingularPointInfo(
            "P2", loc2, eig2, SADDLE_NODE, dirs,
            merged_with=("P1",) if s_b != 0 else (),
            degenerate=True,
            notes="strong direction first, center direction last (both signs)"))
    elif s_d1 >= 0:
        # s_d1 == 0 with a float D1 a hair below zero yields complex pairs
        # whose imaginary parts are pure rounding noise; the real parts are
        # the double eigenvalue g3/2
        lam = (complex(eig2[0]).real, complex(eig2[1]).real)
        if s_g2 > 0:
            out.append(SingularPointInfo(
                "P2", loc2, lam, SADDLE, _saddle_directions(jac2, lam)))
        else:
            kind = STABLE_NODE if s_g3 < 0 else UNSTABLE_NODE
            out.append(SingularPointInfo(
                "P2", loc2, lam, kind, degenerate=(s_d1 == 0),
                notes="double eigenvalue" if s_d1 == 0 else ""))
    else:
        if s_g3 > 0:
            out.append(SingularPointInfo("P2", loc2, eig2, UNSTABLE_FOCUS))
        elif s_g3 < 0:
            out.append(SingularPointInfo("P2", loc2, eig2, STABLE_FOCUS))
        else:
            out.append(SingularPointInfo(
                "P2", loc2, eig2, CENTER,
                notes="certified by the catalog first integral on c=2b+1"))

    return out


def point_by_id(infos: Sequence[SingularPointInfo], pid: str) -> Optional[SingularPointInfo]:
    for info in infos:
        if info.id == pid:
            return info
    return None
