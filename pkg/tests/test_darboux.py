"""Invariant curves, first integrals, and drift along integrated orbits."""

import math
from fractions import Fraction as F

import pytest
from scipy.integrate import solve_ivp

from brlab import darboux as dx
from brlab.exactpoly import X, Y, lie_derivative
from brlab.model import Params, eval_field, exact_params


def orbit_samples(p, start, t_end, n=400):
    """Reference orbit from a high-accuracy library integrator."""
    sol = solve_ivp(
        lambda t, q: eval_field(p, q),
        (0.0, t_end),
        start,
        rtol=1e-11,
        atol=1e-13,
        dense_output=True,
        max_step=0.05,
    )
    assert sol.success
    ts = [t_end * k / (n - 1) for k in range(n)]
    return [(t, *sol.sol(t)) for t in ts]


# ---------------------------------------------------------------------------
# catalog validity and verification
# ---------------------------------------------------------------------------


def test_catalog_entries_present():
    assert [e.id for e in dx.CATALOG] == ["f1", "f2", "f3", "f4", "f5"]
    assert dx.entry("f3").locus == "(b,c) = (-1/4, 1/2)"
    with pytest.raises(KeyError):
        dx.entry("f9")


@pytest.mark.parametrize(
    "b,c,valid_ids",
    [
        (1, 3, ["f1", "f2"]),
        (1, 2, ["f1"]),
        # at (-1/4, 1/2) every locus is satisfied at once
        (F(-1, 4), F(1, 2), ["f1", "f2", "f3", "f4", "f5"]),
        (0, 1, ["f1", "f2", "f5"]),
        (F(1, 3), F(6, 5), ["f1", "f5"]),
        (3, 7, ["f1", "f2"]),
    ],
)
def test_verify_catalog_is_exact_on_each_locus(b, c, valid_ids):
    results = dx.verify_catalog(exact_params(b, c))
    assert [rid for rid, _, _ in results] == valid_ids
    for rid, ok, residual in results:
        assert ok, f"{rid} failed exact verification"
        assert residual.is_zero()


def test_verify_catalog_flags_a_tampered_cofactor():
    p = exact_params(1, 3)
    good = dx.entry("f2")
    bad = dx.CatalogEntry(
        id="f2-tampered",
        locus=good.locus,
        is_valid=good.is_valid,
        curve=good.curve,
        cofactor=lambda pp: good.cofactor(pp) + 1,
    )
    [(rid, ok, residual)] = dx.verify_catalog(p, catalog=[bad])
    assert rid == "f2-tampered"
    assert not ok
    assert residual == -good.curve(p)


def test_float_parameters_fall_back_to_tolerance_with_warning():
    with pytest.warns(UserWarning):
        assert dx.entry("f2").is_valid(Params(0.25, 1.5))
    with pytest.warns(UserWarning):
        assert not dx.entry("f2").is_valid(Params(0.25, 1.7))


# ---------------------------------------------------------------------------
# the named first integral and exponential invariants
# ---------------------------------------------------------------------------


def test_H_value_at_the_center_parameters():
    H = dx.first_integral_H(exact_params(1, 3))
    assert H.label == "H"
    assert H.value(1.0, 1.0) == pytest.approx(-1.0, abs=1e-15)
    # H = 2 x^(2b) f2 pointwise
    f2 = dx.entry("f2").curve(exact_params(1, 3))
    for x, y in [(0.5, 0.5), (2.0, 1.5), (1.0, 3.0)]:
        direct = 2.0 * x**2 * float(f2.eval(F(x), F(y)))
        assert H.value(x, y) == pytest.approx(direct, rel=1e-14)


def test_H_needs_the_f2_locus():
    with pytest.raises(dx.CatalogDomainError):
        dx.first_integral_H(exact_params(1, 2))


def test_invariants_I1_I2_shape():
    i1, i2 = dx.invariants_I1_I2()
    assert (i1.label, i2.label) == ("I1", "I2")
    assert i1.exp_rate == F(-1, 2)
    assert i2.exp_rate == F(1, 2)
    # spot values at t = 0
    assert i1.value(1.0, 0.0) == pytest.approx(4.0)
    assert i2.value(1.0, 2.0) == pytest.approx(4.0)
    # the time factor
    assert i1.value(1.0, 0.0, t=2.0) == pytest.approx(4.0 * math.exp(-1.0))
    with pytest.raises(dx.CatalogDomainError):
        dx.invariants_I1_I2(exact_params(0, 1))


def test_I3_specializes_to_I2_at_c_one_half():
    i3 = dx.invariant_I3(exact_params(F(-1, 4), F(1, 2)))
    _, i2 = dx.invariants_I1_I2()
    assert i3.exp_rate == i2.exp_rate == F(1, 2)
    for x, y in [(1.0, 0.5), (0.3, 2.0), (2.0, -1.0)]:
        assert i3.value(x, y, 0.7) == pytest.approx(i2.value(x, y, 0.7), rel=1e-13)


def test_I3_rate_and_exponent_at_c_six_fifths():
    i3 = dx.invariant_I3(exact_params(F(1, 3), F(6, 5)))
    assert i3.exp_rate == F(-2, 3)
    assert i3.factors[0][1] == F(2, 3)  # exponent of x


def test_I3_locus_guard():
    with pytest.raises(dx.CatalogDomainError):
        dx.invariant_I3(exact_params(1, 3))
    with pytest.raises(dx.CatalogDomainError):
        dx.invariant_I3(exact_params(F(-1, 3), F(3, 2)))  # excluded c = 3/2


def test_value_guards_against_factor_zeros():
    H = dx.first_integral_H(exact_params(1, 3))
    with pytest.raises(ValueError):
        H.value(0.0, 1.0)  # x factor at zero
    i1, _ = dx.invariants_I1_I2()
    with pytest.raises(ValueError):
        i1.value(-1.0, 0.0)  # fractional power needs x > 0
    assert i1.log_abs(-1.0, 0.0) is None


# ---------------------------------------------------------------------------
# drift along numerically integrated orbits
# ---------------------------------------------------------------------------


def test_H_is_constant_along_a_center_orbit():
    p = exact_params(1, 3)
    H = dx.first_integral_H(p)
    orbit = orbit_samples(Params(1.0, 3.0), (0.5, 0.5), t_end=20.0)
    report = dx.verify_along_flow(H, orbit)
    assert report.complete
    assert report.n_used == report.n_samples == 400
    assert report.max_drift < 1e-7
    assert report.fitted_rate == pytest.approx(0.0, abs=1e-8)


def test_I1_I2_decay_at_their_expected_rates():
    p = Params(-0.25, 0.5)
    i1, i2 = dx.invariants_I1_I2()
    orbit = orbit_samples(p, (1.0, 0.5), t_end=6.0)
    r1 = dx.verify_along_flow(i1, orbit)
    r2 = dx.verify_along_flow(i2, orbit)
    assert r1.complete and r2.complete
    assert r1.max_drift < 1e-7
    assert r2.max_drift < 1e-7
    assert r1.fitted_rate == pytest.approx(-0.5, abs=1e-6)
    assert r2.fitted_rate == pytest.approx(0.5, abs=1e-6)


def test_I3_measured_rate_matches():
    # this orbit escapes toward infinity in finite time; stay well short
    i3 = dx.invariant_I3(exact_params(F(1, 3), F(6, 5)))
    orbit = orbit_samples(Params(1 / 3, 1.2), (1.0, 0.5), t_end=2.0)
    report = dx.verify_along_flow(i3, orbit)
    assert report.complete
    assert report.max_drift < 1e-7
    assert report.fitted_rate == pytest.approx(-2 / 3, abs=1e-6)


def test_drift_report_excludes_margin_violations():
    H = dx.first_integral_H(exact_params(1, 3))
    orbit = [(0.0, 1.0, 1.0), (1.0, 1e-12, 1.0), (2.0, 1.0, 1.0)]
    report = dx.verify_along_flow(H, orbit)
    assert not report.complete
    assert report.n_samples == 3
    assert report.n_used == 2
    assert report.excluded_spans == [(1.0, 2.0)]
    assert report.max_drift == pytest.approx(0.0, abs=1e-15)


def test_drift_report_on_empty_and_singleton_orbits():
    H = dx.first_integral_H(exact_params(1, 3))
    empty = dx.verify_along_flow(H, [])
    assert empty.n_samples == 0 and empty.n_used == 0
    assert math.isnan(empty.max_drift)
    single = dx.verify_along_flow(H, [(0.0, 1.0, 1.0)])
    assert single.n_used == 1
    assert single.fitted_rate is None


def test_catalog_lie_identity_doubles_as_drift_zero():
    # A curve with cofactor zero is itself a first integral; f5 at c=1.
    p = exact_params(0, 1)
    f5 = dx.entry("f5").curve(p)
    assert lie_derivative(F(0), F(1), f5).is_zero()
    expr = dx.DarbouxExpr(factors=((f5, F(1)),), exp_rate=F(0), label="f5")
    orbit = orbit_samples(Params(0.0, 1.0), (1.0, 2.0), t_end=8.0)
    report = dx.verify_along_flow(expr, orbit)
    assert report.complete
    assert report.max_drift < 1e-8
