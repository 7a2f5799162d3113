"""Parameter-plane arrangement and the census of phase portraits.

The five bifurcation values vanish along five curves in the (c, b)
parameter half-plane (b > -1, c > 0):

    g0 = 0 : b = 0
    g1 = 0 : c = 1
    g2 = 0 : c = b + 1
    g3 = 0 : c = 2b + 1   (enters the domain at b = -1/2, where c = 0)
    D1 = 0 : the parabola b = ((c - 2) +- sqrt(2c - 1)) / 2, rightward
             opening with vertex (c, b) = (1/2, -3/4)

Inside the open domain the curves meet one another only at

    q1 = (c, b) = (1, 0), where all five values vanish at once (the
         parabola is tangent to c = b + 1 there), and
    q2 = (5, 0), where b = 0 crosses the parabola transversally,

while the parabola's lower branch touches the domain boundary b = -1 at
(1, -1) and leaves the domain at that single point.  Cutting the curves
at q1, q2 and the touch point yields 13 one-dimensional cells; the
complement of the curves falls into 12 open regions; with the two
points the arrangement has 27 cells in total.

``build_arrangement`` enumerates the cells, each with a sample point
(region samples are raster centroids pushed clear of every curve,
segment samples sit at parameter midpoints of their arc, exact
rationals wherever the midpoint is rational), ``locate`` maps arbitrary
admissible parameters to their cell, and ``classify_all`` runs the
global-flow pipeline on every cell sample, groups the cells by
topological equivalence of the resulting skeletons and checks the
census of portrait classes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq

from .flow import (
    TopoSignature,
    signature,
    signatures_equivalent,
    trace_separatrices,
)
from .localanalysis import STRATUM_TOL, BifurcationValues
from .model import Params

__all__ = [
    "ArrangementError",
    "Cell",
    "CensusMismatchError",
    "DEFAULT_WINDOW",
    "EXPECTED_CLASS_COUNT",
    "EXPECTED_SR_CENSUS",
    "EXPECTED_SIZE_MULTISET",
    "TopoClass",
    "build_arrangement",
    "classify_all",
    "locate",
]

#: ((c_lo, c_hi), (b_lo, b_hi)); every window must contain this one.
Window = Tuple[Tuple[float, float], Tuple[float, float]]

DEFAULT_WINDOW: Window = ((0.0, 8.0), (-1.0, 4.0))

_Q1 = (1.0, 0.0)
_Q2 = (5.0, 0.0)
_VERTEX = (0.5, -0.75)
_TOUCH = (1.0, -1.0)

_VALUE_NAMES = ("g0", "g1", "g2", "g3", "D1")


class ArrangementError(ValueError):
    """The parameter window or the cell decomposition is unusable."""


class CensusMismatchError(AssertionError):
    """The computed portrait census disagrees with the expected one.

    Carries the computed classes (``classes``) and a line-by-line diff
    (``report``) so the disagreement can be audited without rerunning
    the whole sweep.
    """

    def __init__(self, report: str, classes: List["TopoClass"]):
        super().__init__(report)
        self.report = report
        self.classes = classes


@dataclass(frozen=True)
class Cell:
    """One cell of the arrangement: an open region, an open curve
    segment, or one of the two intersection points."""

    kind: str  # "region" | "segment" | "point"
    sign_vector: Tuple[int, int, int, int, int]  # signs of (g0,g1,g2,g3,D1)
    sample: Params
    canonical_id: str


@dataclass(frozen=True)
class TopoClass:
    """A topological equivalence class of cells (by skeleton signature)."""

    members: Tuple[str, ...]
    S: int
    R: int
    signature: TopoSignature


# ---------------------------------------------------------------------------
# the five curves


def _values(c, b):
    """The five bifurcation values at (c, b); numpy-friendly."""
    g0 = b
    g1 = c - 1.0
    g2 = b - c + 1.0
    g3 = 2.0 * b - c + 1.0
    d1 = c * c - 4.0 * b * c + 4.0 * b * b - 6.0 * c + 8.0 * b + 5.0
    return g0, g1, g2, g3, d1


def _curve_distances(c, b):
    """First-order distances from (c, b) to the five curves."""
    g0, g1, g2, g3, d1 = _values(c, b)
    grad_d1 = np.hypot(2.0 * c - 4.0 * b - 6.0, -4.0 * c + 8.0 * b + 8.0)
    return (
        np.abs(g0),
        np.abs(g1),
        np.abs(g2) / math.sqrt(2.0),
        np.abs(g3) / math.sqrt(5.0),
        np.abs(d1) / np.maximum(grad_d1, 1e-9),
    )


def _b_plus(c: float) -> float:
    return ((c - 2.0) + math.sqrt(2.0 * c - 1.0)) / 2.0


def _b_minus(c: float) -> float:
    return ((c - 2.0) - math.sqrt(2.0 * c - 1.0)) / 2.0


# ---------------------------------------------------------------------------
# window checks


def _check_window(window: Window) -> None:
    (c_lo, c_hi), (b_lo, b_hi) = window
    if not (c_lo < c_hi and b_lo < b_hi):
        raise ArrangementError(f"degenerate window {window}")
    ok = c_lo <= 0.0 and b_lo <= -1.0 and c_hi >= 8.0 and b_hi >= 4.0
    if ok:
        return
    landmarks = (
        ("q1 = (c,b) = (1, 0), common point of all five curves", _Q1),
        ("q2 = (5, 0), crossing of b = 0 with D1 = 0", _Q2),
        ("vertex (1/2, -3/4) of the D1 = 0 parabola", _VERTEX),
        ("touch point (1, -1) of D1 = 0 on the domain boundary", _TOUCH),
    )
    missing = [
        name
        for name, (c, b) in landmarks
        if not (c_lo < c < c_hi and b_lo <= b < b_hi and (b_lo < b or b == -1.0))
    ]
    lines = [
        f"window {window} is too small: it must contain "
        "(0, 8] x (-1, 4] in the (c, b) plane",
    ]
    if missing:
        lines.append("missing intersections/landmarks:")
        lines.extend("  - " + m for m in missing)
    else:
        lines.append(
            "all curve intersections are inside, but the margins around "
            "them are narrower than the minimal window"
        )
    raise ArrangementError("\n".join(lines))


# ---------------------------------------------------------------------------
# region cells


def _region_cells(window: Window, tol: float) -> List[Cell]:
    (c_lo, c_hi), (b_lo, b_hi) = window
    c0, b0 = max(c_lo, 0.0), max(b_lo, -1.0)
    ext_c, ext_b = c_hi - c0, b_hi - b0
    px = max(min(ext_c, ext_b) / 500.0, math.sqrt(ext_c * ext_b / 2.5e6))
    cs = np.arange(c0 + px / 2.0, c_hi, px)
    bs = np.arange(b0 + px / 2.0, b_hi, px)
    cc, bb = np.meshgrid(cs, bs)

    off = np.ones(cc.shape, dtype=bool)
    for d in _curve_distances(cc, bb):
        off &= d > 1.5 * px

    key = np.zeros(cc.shape, dtype=np.int8)
    for bit, v in enumerate(_values(cc, bb)):
        key |= (v > 0).astype(np.int8) << bit

    cells: List[Cell] = []
    for k in np.unique(key[off]):
        mask = off & (key == k)
        labels, ncomp = ndimage.label(mask)
        if ncomp > 1:
            # cusp tips (tangent curves) shed single stray pixels across
            # the guard band; a second component of real extent would
            # mean a genuinely disconnected sign class
            areas = ndimage.sum_labels(mask, labels, range(1, ncomp + 1))
            main = int(np.argmax(areas)) + 1
            stray = areas[np.arange(ncomp) != main - 1]
            if stray.max() > max(25.0, 1e-3 * areas.sum()):
                raise ArrangementError(
                    f"region with sign key {int(k):05b} falls into "
                    f"{ncomp} connected components of sizes "
                    f"{sorted(areas.astype(int), reverse=True)}"
                )
            mask = labels == main
        sv = tuple(1 if (int(k) >> bit) & 1 else -1 for bit in range(5))
        c_ctr = float(cc[mask].mean())
        b_ctr = float(bb[mask].mean())
        c_s, b_s = _push_off_curves(c_ctr, b_ctr)
        sample = Params(b_s, c_s)
        got = BifurcationValues.from_params(sample).signs(tol)
        if got != sv:
            raise ArrangementError(
                f"pushed region sample {(c_s, b_s)} has signs {got}, "
                f"expected {sv}"
            )
        name = "R[" + ",".join(
            f"{n}{'+' if s > 0 else '-'}" for n, s in zip(_VALUE_NAMES, sv)
        ) + "]"
        cells.append(Cell("region", sv, sample, name))

    if len(cells) != 12:
        raise ArrangementError(
            f"expected 12 region cells, found {len(cells)}: "
            + ", ".join(c.canonical_id for c in cells)
        )
    return cells


_MARGIN = 1e-3


def _push_off_curves(c: float, b: float) -> Tuple[float, float]:
    """Move (c, b) until every curve is at least ``_MARGIN`` away."""
    grads = (
        lambda c, b: (0.0, 1.0),
        lambda c, b: (1.0, 0.0),
        lambda c, b: (-1.0, 1.0),
        lambda c, b: (-1.0, 2.0),
        lambda c, b: (2.0 * c - 4.0 * b - 6.0, -4.0 * c + 8.0 * b + 8.0),
    )
    for _ in range(64):
        vals = _values(c, b)
        moved = False
        for v, grad in zip(vals, grads):
            gc, gb = grad(c, b)
            norm = math.hypot(gc, gb)
            if norm < 1e-9:
                continue
            dist = abs(v) / norm
            if dist >= _MARGIN:
                continue
            step = (_MARGIN - dist) * 1.1
            s = 1.0 if v >= 0 else -1.0
            c += s * step * gc / norm
            b += s * step * gb / norm
            moved = True
        if not moved:
            return c, b
    raise ArrangementError(
        f"could not push sample near ({c}, {b}) clear of the curves"
    )


# ---------------------------------------------------------------------------
# segment and point cells


def _d1_window_exit(branch, c_start: float, c_hi: float, b_hi: float) -> float:
    """First c past ``c_start`` where the branch leaves the window."""
    if branch(c_hi) <= b_hi:
        return c_hi
    return brentq(lambda c: branch(c) - b_hi, c_start, c_hi, xtol=1e-13)


def _segment_cells(window: Window, tol: float) -> List[Cell]:
    (c_lo, c_hi), (b_lo, b_hi) = window

    half = Fraction(1, 2)
    specs: List[Tuple[str, Params, int]] = []

    # b = 0, cut at q1 (c = 1) and q2 (c = 5)
    specs.append(("S[g0=0,c<1]", Params(0, half), 0))
    specs.append(("S[g0=0,1<c<5]", Params(0, 3), 0))
    specs.append(("S[g0=0,c>5]", Params(0, (5.0 + c_hi) / 2.0), 0))

    # c = 1, cut at q1 (b = 0); below it reaches the domain edge b = -1
    specs.append(("S[g1=0,b<0]", Params(-half, 1), 1))
    specs.append(("S[g1=0,b>0]", Params(b_hi / 2.0, 1), 1))

    # c = b + 1, cut at q1
    specs.append(("S[g2=0,b<0]", Params(-half, half), 2))
    b_mid = min(b_hi, c_hi - 1.0) / 2.0
    specs.append(("S[g2=0,b>0]", Params(b_mid, b_mid + 1.0), 2))

    # c = 2b + 1 enters the domain at b = -1/2 and is cut at q1
    specs.append(("S[g3=0,b<0]", Params(-Fraction(1, 4), half), 3))
    b_mid = min(b_hi, (c_hi - 1.0) / 2.0) / 2.0
    specs.append(("S[g3=0,b>0]", Params(b_mid, 2.0 * b_mid + 1.0), 3))

    # D1 = 0 parts: the arc through the vertex between q1 and the touch
    # point (1, -1); the lower branch from the touch point to q2 and
    # onward past q2; the upper branch from q1 upward.  Arc midpoints
    # are taken in the c-parameter (signed through the vertex fold).
    specs.append(("S[D1=0,c<1]", Params(-Fraction(3, 4), half), 4))
    c_mid = 3.0
    specs.append(("S[D1=0,b<0]", Params(_b_minus(c_mid), c_mid), 4))
    c_mid = (5.0 + _d1_window_exit(_b_minus, 5.0, c_hi, b_hi)) / 2.0
    specs.append(("S[D1=0,b>0,low]", Params(_b_minus(c_mid), c_mid), 4))
    c_mid = (1.0 + _d1_window_exit(_b_plus, 1.0, c_hi, b_hi)) / 2.0
    specs.append(("S[D1=0,b>0,up]", Params(_b_plus(c_mid), c_mid), 4))

    cells: List[Cell] = []
    for name, sample, zero_at in specs:
        sv = BifurcationValues.from_params(sample).signs(tol)
        if [i for i, s in enumerate(sv) if s == 0] != [zero_at]:
            raise ArrangementError(
                f"segment sample {name} at (c={sample.c}, b={sample.b}) "
                f"has signs {sv}, expected a single zero in slot {zero_at}"
            )
        cells.append(Cell("segment", sv, sample, name))
    return cells


def _point_cells(tol: float) -> List[Cell]:
    out = []
    for name, b, c in (("P[q1]", 0, 1), ("P[q2]", 0, 5)):
        sample = Params(b, c)
        sv = BifurcationValues.from_params(sample).signs(tol)
        out.append(Cell("point", sv, sample, name))
    return out


# ---------------------------------------------------------------------------
# public construction


def build_arrangement(
    window: Window = DEFAULT_WINDOW, tol: float = STRATUM_TOL
) -> List[Cell]:
    """All 27 cells of the arrangement, each with a verified sample.

    The window (in (c, b) coordinates) must contain (0, 8] x (-1, 4];
    a smaller window raises :class:`ArrangementError` naming the curve
    intersections it would lose.  Cell counts do not depend on the
    window beyond that, though samples of unbounded cells do.
    """
    _check_window(window)
    regions = sorted(_region_cells(window, tol), key=lambda c: c.canonical_id)
    segments = _segment_cells(window, tol)
    points = _point_cells(tol)

    cells = regions + segments + points
    counts = {
        kind: sum(1 for c in cells if c.kind == kind)
        for kind in ("region", "segment", "point")
    }
    if counts != {"region": 12, "segment": 13, "point": 2}:
        raise ArrangementError(f"unexpected cell counts {counts}")
    ids = [c.canonical_id for c in cells]
    if len(set(ids)) != len(ids):
        raise ArrangementError("canonical ids collide: " + ", ".join(ids))
    return cells


def locate(
    p: Params,
    cells: Optional[Sequence[Cell]] = None,
    window: Window = DEFAULT_WINDOW,
    tol: float = 1e-12,
) -> Cell:
    """The cell whose closure stratum contains ``p``.

    Stratum membership is decided by the signs of the five bifurcation
    values at ``p`` with tolerance ``tol``; ``p`` itself may lie outside
    the sampling window (cells are unbounded sign strata, the window
    only bounds where their samples are placed).
    """
    if cells is None:
        cells = build_arrangement(window)
    by_id = {c.canonical_id: c for c in cells}
    sv = BifurcationValues.from_params(p).signs(tol)
    zeros = [i for i, s in enumerate(sv) if s == 0]

    if not zeros:
        for cell in cells:
            if cell.kind == "region" and cell.sign_vector == sv:
                return cell
        raise ArrangementError(f"no region cell with sign vector {sv}")

    if len(zeros) >= 2:
        for cell in cells:
            if cell.kind == "point" and cell.sign_vector == sv:
                return cell
        raise ArrangementError(
            f"sign vector {sv} vanishes on several curves but matches "
            "neither intersection point; inconsistent tolerance?"
        )

    (k,) = zeros
    b, c = float(p.b), float(p.c)
    if k == 0:
        name = "S[g0=0,c<1]" if c < 1 else (
            "S[g0=0,1<c<5]" if c < 5 else "S[g0=0,c>5]")
    elif k == 1:
        name = "S[g1=0,b<0]" if b < 0 else "S[g1=0,b>0]"
    elif k == 2:
        name = "S[g2=0,b<0]" if b < 0 else "S[g2=0,b>0]"
    elif k == 3:
        name = "S[g3=0,b<0]" if b < 0 else "S[g3=0,b>0]"
    else:
        if c < 1:
            name = "S[D1=0,c<1]"
        elif b < 0:
            name = "S[D1=0,b<0]"
        else:
            near_up = abs(b - _b_plus(c)) <= abs(b - _b_minus(c))
            name = "S[D1=0,b>0,up]" if near_up else "S[D1=0,b>0,low]"
    return by_id[name]


# ---------------------------------------------------------------------------
# census


#: (S, R) -> number of portrait classes, the two special parameter
#: points aside: q1 is its own degenerate singleton class and q2 merges
#: with ordinary cells.
EXPECTED_SR_CENSUS: Dict[Tuple[int, int], int] = {
    (14, 3): 1,
    (15, 4): 1,
    (16, 3): 1,
    (16, 5): 3,
    (17, 4): 1,
    (17, 6): 1,
    (18, 5): 4,
    (19, 6): 2,
}

EXPECTED_CLASS_COUNT = 15

#: Descending class sizes over all 15 classes.
EXPECTED_SIZE_MULTISET: Tuple[int, ...] = (4, 3, 3, 3, 3, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1)


def _cell_signature(sample: Params) -> TopoSignature:
    return signature(trace_separatrices(sample))


def _workers_from_env() -> int:
    raw = os.environ.get("BRLAB_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"BRLAB_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def classify_all(
    cells: Optional[Sequence[Cell]] = None,
    window: Window = DEFAULT_WINDOW,
    workers: Optional[int] = None,
    check: bool = True,
) -> List[TopoClass]:
    """Group all cells into topological classes of their portraits.

    Runs the separatrix-skeleton pipeline on every cell sample
    (independently per cell; ``workers`` > 1, or BRLAB_THREADS when
    unset, computes them in parallel processes) and groups cells whose
    signatures are equivalent.  With ``check`` set, the resulting
    census is compared against the expected one and a
    :class:`CensusMismatchError` with a full diff is raised on any
    disagreement; the computed classes ride along on the error.
    """
    if cells is None:
        cells = build_arrangement(window)
    if workers is None:
        workers = _workers_from_env()

    samples = [c.sample for c in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            sigs = list(ex.map(_cell_signature, samples))
    else:
        sigs = [_cell_signature(s) for s in samples]

    groups: List[List[int]] = []
    reps: List[TopoSignature] = []
    for i, sig in enumerate(sigs):
        for grp, rep in zip(groups, reps):
            if signatures_equivalent(rep, sig):
                grp.append(i)
                break
        else:
            groups.append([i])
            reps.append(sig)

    classes = [
        TopoClass(
            members=tuple(sorted(cells[i].canonical_id for i in grp)),
            S=rep.s,
            R=rep.r,
            signature=rep,
        )
        for grp, rep in zip(groups, reps)
    ]
    classes.sort(key=lambda t: (t.S, t.R, -len(t.members), t.members))

    if check:
        report = _census_report(classes)
        if report:
            raise CensusMismatchError(report, classes)
    return classes


def _census_report(classes: List[TopoClass]) -> Optional[str]:
    """None if the census matches, else a line-by-line diff."""
    problems: List[str] = []

    q1_classes = [t for t in classes if "P[q1]" in t.members]
    if len(q1_classes) != 1 or len(q1_classes[0].members) != 1:
        problems.append(
            "q1 must form its own singleton class, found "
            + "; ".join(str(t.members) for t in q1_classes)
        )
    ordinary = [t for t in classes if "P[q1]" not in t.members]

    if len(classes) != EXPECTED_CLASS_COUNT:
        problems.append(
            f"expected {EXPECTED_CLASS_COUNT} classes, computed {len(classes)}"
        )

    got: Dict[Tuple[int, int], int] = {}
    for t in ordinary:
        got[(t.S, t.R)] = got.get((t.S, t.R), 0) + 1
    for sr in sorted(set(got) | set(EXPECTED_SR_CENSUS)):
        e, g = EXPECTED_SR_CENSUS.get(sr, 0), got.get(sr, 0)
        if e != g:
            members = "; ".join(
                ",".join(t.members) for t in ordinary if (t.S, t.R) == sr
            )
            problems.append(
                f"(S,R)={sr}: expected {e} class(es), computed {g}"
                + (f"  [{members}]" if members else "")
            )

    sizes = tuple(sorted((len(t.members) for t in classes), reverse=True))
    if sizes != tuple(sorted(EXPECTED_SIZE_MULTISET, reverse=True)):
        problems.append(
            f"class sizes {sizes} != expected {EXPECTED_SIZE_MULTISET}"
        )

    if not problems:
        return None
    lines = ["portrait census mismatch:"]
    lines += ["  " + p for p in problems]
    lines.append("computed classes:")
    for t in classes:
        lines.append(f"  (S={t.S}, R={t.R})  {', '.join(t.members)}")
    return "\n".join(lines)
