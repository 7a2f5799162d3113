"""Finite singular points: eigenvalues, merges, and classification."""

import math
import random
from fractions import Fraction as F

import pytest

from brlab import localanalysis as la
from brlab.model import Params, eval_field, exact_params, jacobian


def kinds(p):
    return {i.id: i.kind for i in la.classify_finite(p)}


# ---------------------------------------------------------------------------
# eigenvalue formulas
# ---------------------------------------------------------------------------


def test_eigenvalue_examples():
    p = Params(1, 3)
    assert la.p0_eigenvalues(p) == (1.0, -2.0)
    assert la.p1_eigenvalues(p) == (2.0, -1.0)
    lam = la.p2_eigenvalues(p)
    assert lam == (1j, -1j)


def test_p2_eigenvalues_at_b0_c1_follow_the_formula():
    # g3 = 0 and D1 = 0 there, so both eigenvalues vanish; the point sits
    # on the fully degenerate stratum where the line x = 0 is singular.
    assert la.p2_eigenvalues(Params(0, 1)) == (0.0, 0.0)


def test_p1_undefined_at_b0():
    with pytest.raises(ValueError):
        la.p1_eigenvalues(Params(0, 2))


def test_p2_product_identity():
    rng = random.Random(5)
    for _ in range(200):
        p = Params(rng.uniform(-0.9, 3), rng.uniform(0.1, 6))
        lam = la.p2_eigenvalues(p)
        prod = lam[0] * lam[1]
        expected = -(p.b - p.c + 1)
        assert abs(complex(prod).real - expected) < 1e-9
        assert abs(complex(prod).imag) < 1e-9


def test_eigenvalues_match_the_jacobian():
    rng = random.Random(6)
    for _ in range(100):
        p = Params(rng.uniform(-0.9, 3), rng.uniform(0.1, 6))
        (a, bb), (cc, d) = jacobian(p, (p.c - p.b - 1, 1.0))
        tr, det = a + d, a * d - bb * cc
        lam = la.p2_eigenvalues(p)
        assert abs((lam[0] + lam[1]) - tr) < 1e-9
        assert abs((lam[0] * lam[1]) - det) < 1e-9


# ---------------------------------------------------------------------------
# bifurcation values
# ---------------------------------------------------------------------------


def test_bifurcation_values_stay_exact():
    v = la.BifurcationValues.from_params(exact_params(1, 3))
    assert (v.g0, v.g1, v.g2, v.g3, v.g4, v.D1) == (1, 2, -1, 0, 2, -4)
    assert isinstance(v.D1, F)
    assert v.signs() == (1, 1, -1, 0, -1)


def test_signs_at_the_cusp_point():
    # (b, c) = (0, 5): both g2-related quantities and D1 vanish together
    v = la.BifurcationValues.from_params(exact_params(0, 5))
    assert v.signs() == (0, 1, -1, -1, 0)
    assert v.D1 == 0


def test_sign_uses_tolerance_for_floats_only():
    assert la._sign(F(1, 10**15)) == 1
    assert la._sign(1e-15) == 0
    assert la._sign(-1e-3) == -1


# ---------------------------------------------------------------------------
# locations and merges
# ---------------------------------------------------------------------------


def test_locations_generic():
    pts = {i.id: i.location for i in la.finite_singular_points(Params(1, 3))}
    assert pts == {"P0": (0.0, 0.0), "P1": (0.0, 2.0), "P2": (1.0, 1.0)}


def test_p1_absent_at_b0():
    ids = [i.id for i in la.finite_singular_points(Params(0, 2))]
    assert ids == ["P0", "P2"]


def test_merge_at_c1():
    pts = la.finite_singular_points(exact_params(1, 1))
    byid = {i.id: i for i in pts}
    assert byid["P0"].merged_with == ("P1",)
    assert byid["P0"].degenerate
    assert "P1" not in byid
    assert byid["P2"].location == (-1.0, 1.0)


def test_merge_on_g2_zero():
    pts = la.finite_singular_points(exact_params(1, 2))
    byid = {i.id: i for i in pts}
    assert byid["P1"].merged_with == ("P2",)
    assert byid["P1"].location == (0.0, 1.0)


# ---------------------------------------------------------------------------
# classification across the twelve open regions
# ---------------------------------------------------------------------------

# representatives chosen inside each open region of the (c, b) plane
REGION_CASES = [
    ("A", (1, F(1, 2)),
     {"P0": la.UNSTABLE_NODE, "P1": la.SADDLE, "P2": la.SADDLE}),
    ("B", (3, 2),
     {"P0": la.SADDLE, "P1": la.UNSTABLE_NODE, "P2": la.SADDLE}),
    ("C", (1, F(21, 10)),
     {"P0": la.SADDLE, "P1": la.SADDLE, "P2": la.UNSTABLE_NODE}),
    ("D", (1, F(5, 2)),
     {"P0": la.SADDLE, "P1": la.SADDLE, "P2": la.UNSTABLE_FOCUS}),
    ("E", (1, F(7, 2)),
     {"P0": la.SADDLE, "P1": la.SADDLE, "P2": la.STABLE_FOCUS}),
    ("F", (1, 8),
     {"P0": la.SADDLE, "P1": la.SADDLE, "P2": la.STABLE_NODE}),
    ("G", (F(-1, 5), F(3, 10)),
     {"P0": la.UNSTABLE_NODE, "P1": la.STABLE_NODE, "P2": la.SADDLE}),
    ("H", (F(-1, 2), F(3, 10)),
     {"P0": la.UNSTABLE_NODE, "P1": la.STABLE_NODE, "P2": la.SADDLE}),
    ("I", (F(-4, 5), F(3, 10)),
     {"P0": la.UNSTABLE_NODE, "P1": la.SADDLE, "P2": la.STABLE_NODE}),
    ("J", (F(-1, 2), F(4, 5)),
     {"P0": la.UNSTABLE_NODE, "P1": la.SADDLE, "P2": la.STABLE_FOCUS}),
    ("K", (F(-1, 2), F(3, 2)),
     {"P0": la.SADDLE, "P1": la.UNSTABLE_NODE, "P2": la.STABLE_FOCUS}),
    ("L", (F(-2, 3), 3),
     {"P0": la.SADDLE, "P1": la.UNSTABLE_NODE, "P2": la.STABLE_NODE}),
]


@pytest.mark.parametrize("label,bc,expected", REGION_CASES)
def test_region_classification(label, bc, expected):
    assert kinds(exact_params(*bc)) == expected


def test_region_sign_vectors_are_the_documented_ones():
    # the five-sign vector (g0, g1, g2, g3, D1) distinguishes the regions
    expected = {
        "A": (1, -1, 1, 1, 1),
        "B": (1, 1, 1, 1, 1),
        "C": (1, 1, -1, 1, 1),
        "D": (1, 1, -1, 1, -1),
        "E": (1, 1, -1, -1, -1),
        "F": (1, 1, -1, -1, 1),
        "G": (-1, -1, 1, 1, 1),
        "H": (-1, -1, 1, -1, 1),
        "I": (-1, -1, -1, -1, 1),
        "J": (-1, -1, -1, -1, -1),
        "K": (-1, 1, -1, -1, -1),
        "L": (-1, 1, -1, -1, 1),
    }
    for label, bc, _ in REGION_CASES:
        v = la.BifurcationValues.from_params(exact_params(*bc))
        assert v.signs() == expected[label], label


# ---------------------------------------------------------------------------
# boundary strata
# ---------------------------------------------------------------------------


def test_center_on_the_g3_line_with_positive_b():
    infos = la.classify_finite(exact_params(1, 3))
    p2 = la.point_by_id(infos, "P2")
    assert p2.kind == la.CENTER
    assert "first integral" in p2.notes


def test_g3_line_with_negative_b_is_a_saddle_not_a_center():
    infos = la.classify_finite(exact_params(F(-1, 4), F(1, 2)))
    p2 = la.point_by_id(infos, "P2")
    assert p2.kind == la.SADDLE
    assert p2.eigenvalues == (0.5, -0.5)


def test_saddle_node_when_P1_meets_P2():
    infos = la.classify_finite(exact_params(1, 2))
    byid = {i.id: i for i in infos}
    assert set(byid) == {"P0", "P2"}
    p2 = byid["P2"]
    assert p2.kind == la.SADDLE_NODE
    assert p2.merged_with == ("P1",)
    assert p2.degenerate
    assert sorted(p2.eigenvalues) == [0.0, 1.0]
    assert len(p2.separatrix_directions) == 4


def test_saddle_node_when_P1_meets_P0():
    infos = la.classify_finite(exact_params(1, 1))
    byid = {i.id: i for i in infos}
    assert set(byid) == {"P0", "P2"}
    p0 = byid["P0"]
    assert p0.kind == la.SADDLE_NODE
    assert p0.merged_with == ("P1",)
    assert tuple(sorted(p0.eigenvalues)) == (0.0, 1.0)
    assert byid["P2"].kind == la.SADDLE


def test_double_eigenvalue_on_the_discriminant():
    # (c, b) = (5/2, 5/4) lies exactly on D1 = 0 with g2 < 0, g3 > 0
    v = la.BifurcationValues.from_params(exact_params(F(5, 4), F(5, 2)))
    assert v.D1 == 0
    infos = la.classify_finite(exact_params(F(5, 4), F(5, 2)))
    p2 = la.point_by_id(infos, "P2")
    assert p2.kind == la.UNSTABLE_NODE
    assert p2.degenerate
    assert "double eigenvalue" in p2.notes
    assert p2.eigenvalues[0] == p2.eigenvalues[1]


def test_fully_degenerate_stratum():
    infos = la.classify_finite(exact_params(0, 1))
    assert [i.id for i in infos] == ["P0", "P2"]
    for info in infos:
        assert info.kind == la.DEGENERATE
        assert not info.isolated
        assert info.degenerate


def test_b0_line_has_two_points():
    assert kinds(exact_params(0, 2)) == {"P0": la.SADDLE, "P2": la.STABLE_FOCUS}


# ---------------------------------------------------------------------------
# separatrix directions
# ---------------------------------------------------------------------------


def test_saddle_directions_are_eigendirections():
    for bc in [(1, 3), (2, F(1, 2)), (F(-1, 2), F(3, 2))]:
        p = exact_params(*bc)
        for info in la.classify_finite(p):
            if info.kind != la.SADDLE:
                continue
            jac = jacobian(Params(*[float(v) for v in bc]), info.location)
            dirs = info.separatrix_directions
            assert len(dirs) == 4
            # opposite pairs
            assert dirs[0] == pytest.approx((-dirs[1][0], -dirs[1][1]))
            assert dirs[2] == pytest.approx((-dirs[3][0], -dirs[3][1]))
            lam = sorted((complex(l).real for l in info.eigenvalues), reverse=True)
            for v, expect in [(dirs[0], lam[0]), (dirs[2], lam[1])]:
                jx = jac[0][0] * v[0] + jac[0][1] * v[1]
                jy = jac[1][0] * v[0] + jac[1][1] * v[1]
                assert (jx, jy) == pytest.approx((expect * v[0], expect * v[1]),
                                                 abs=1e-9)
            assert math.hypot(*dirs[0]) == pytest.approx(1.0)


def test_nodes_report_no_separatrix_directions():
    infos = la.classify_finite(exact_params(1, F(1, 2)))
    p0 = la.point_by_id(infos, "P0")
    assert p0.kind == la.UNSTABLE_NODE
    assert p0.separatrix_directions == ()


def test_point_by_id_missing():
    assert la.point_by_id([], "P0") is None


def test_classified_points_really_are_singular():
    rng = random.Random(9)
    for _ in range(60):
        p = Params(rng.uniform(-0.9, 3), rng.uniform(0.1, 6))
        for info in la.classify_finite(p):
            dx, dy = eval_field(p, info.location)
            assert math.hypot(dx, dy) < 1e-10
