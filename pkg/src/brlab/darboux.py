"""Invariant algebraic curves of the reduced system and what they integrate.

The reduced field admits five invariant algebraic curves (on suitable
parameter loci), each with a degree-one cofactor:

  f1 = x                                        K1 = 1 - y        (always)
  f2 = ((2b+1)/2)y^2 - (2b+1)y + x              K2 = 2b(y-1)      (c = 2b+1)
  f3 = y^2 + 4x                                 K3 = (2-y)/2      (b,c) = (-1/4, 1/2)
  f4 = (y-2)^2 + 4x                             K4 = -y/2         (b,c) = (-1/4, 1/2)
  f5 = 2(3-2c)x + (y-3+2c)^2                    K5 = 2(c-1)y/(3-2c)   (b = (1-c)/(2c-3))

Multiplying powers of these curves produces either a first integral
(when the cofactors cancel exactly) or an exponential invariant
f1^l1 ... fp^lp * e^(s t) (when they sum to a nonzero constant -s):

  H  = x^(2b) ((2b+1)y^2 - 2(2b+1)y + 2x)            on c = 2b+1
  I1 = x^(-1/2) (y^2 + 4x) e^(-t/2)                  at (-1/4, 1/2)
  I2 = x^(-1/2) ((y-2)^2 + 4x) e^(t/2)               at (-1/4, 1/2)
  I3 = x^(2(1-c)/(2c-3)) ((y-(3-2c))^2 + 2(3-2c)x) e^(2(1-c)/(3-2c) t)

Fractional powers of x confine evaluation to the physical half-plane
x > 0.  Everything algebraic here is exact; the only floating point is
in evaluation along numerically integrated orbits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from .exactpoly import BiPoly, X, Y, as_rational, lie_derivative, ExactnessError
from .model import Params


class CatalogDomainError(ValueError):
    """Parameters off the validity locus of the requested object."""


ZERO_MARGIN = 1e-8  # evaluation keeps this far from factor zero sets


def _rat(v) -> Optional[Fraction]:
    try:
        return as_rational(v)
    except ExactnessError:
        return None


def _on_locus(value, target, tol: float) -> bool:
    """Exact comparison when both sides are rational, else tolerance + warning."""
    rv, rt = _rat(value), _rat(target)
    if rv is not None and rt is not None:
        return rv == rt
    warnings.warn(
        "validity locus tested to tolerance %.0e; exact verification needs "
        "rational parameters" % tol,
        stacklevel=3,
    )
    return abs(float(value) - float(target)) <= tol


@dataclass(frozen=True)
class CatalogEntry:
    """One invariant curve: builders plus its parameter validity locus."""

    id: str
    locus: str
    is_valid: Callable[[Params], bool] = field(repr=False)
    curve: Callable[[Params], BiPoly] = field(repr=False)
    cofactor: Callable[[Params], BiPoly] = field(repr=False)


def _f1_valid(p: Params, tol: float = 1e-12) -> bool:
    return True


def _f2_valid(p: Params, tol: float = 1e-12) -> bool:
    # c = 2b + 1; c > 0 keeps 2b+1 away from zero automatically
    rb = _rat(p.b)
    target = 2 * rb + 1 if rb is not None else 2 * float(p.b) + 1
    return _on_locus(p.c, target, tol)


def _quarter_valid(p: Params, tol: float = 1e-12) -> bool:
    return _on_locus(p.b, Fraction(-1, 4), tol) and _on_locus(p.c, Fraction(1, 2), tol)


def _f5_valid(p: Params, tol: float = 1e-12) -> bool:
    c = p.c
    rc = _rat(c)
    if rc is not None:
        if rc == Fraction(3, 2):
            return False
        return _on_locus(p.b, (1 - rc) / (2 * rc - 3), tol)
    cf = float(c)
    if abs(2 * cf - 3) <= tol:
        return False
    return _on_locus(p.b, (1 - cf) / (2 * cf - 3), tol)


def _f2_curve(p: Params) -> BiPoly:
    b = as_rational(p.b)
    return (2 * b + 1) * Fraction(1, 2) * Y**2 - (2 * b + 1) * Y + X


def _f2_cofactor(p: Params) -> BiPoly:
    b = as_rational(p.b)
    return 2 * b * (Y - 1)


def _f5_curve(p: Params) -> BiPoly:
    c = as_rational(p.c)
    return 2 * (3 - 2 * c) * X + (Y - 3 + 2 * c) ** 2


def _f5_cofactor(p: Params) -> BiPoly:
    c = as_rational(p.c)
    return (2 * (c - 1) / (3 - 2 * c)) * Y


CATALOG: Tuple[CatalogEntry, ...] = (
    CatalogEntry("f1", "all parameters", _f1_valid,
                 lambda p: X, lambda p: 1 - Y),
    CatalogEntry("f2", "c = 2b+1", _f2_valid, _f2_curve, _f2_cofactor),
    CatalogEntry("f3", "(b,c) = (-1/4, 1/2)", _quarter_valid,
                 lambda p: Y**2 + 4 * X, lambda p: (2 - Y) * Fraction(1, 2)),
    CatalogEntry("f4", "(b,c) = (-1/4, 1/2)", _quarter_valid,
                 lambda p: (Y - 2) ** 2 + 4 * X, lambda p: -Fraction(1, 2) * Y),
    CatalogEntry("f5", "b = (1-c)/(2c-3)", _f5_valid, _f5_curve, _f5_cofactor),
)


def entry(entry_id: str) -> CatalogEntry:
    for e in CATALOG:
        if e.id == entry_id:
            return e
    raise KeyError(entry_id)


def verify_catalog(p: Params, catalog: Sequence[CatalogEntry] = CATALOG):
    """Exact check of X(f) = K*f for every catalog entry valid at p.

    Returns a list of (id, ok, residual BiPoly); residual is the exact
    difference lie_derivative(f) - K*f, the zero polynomial on success.
    """
    b, c = as_rational(p.b), as_rational(p.c)
    results = []
    for e in catalog:
        if not e.is_valid(p):
            continue
        f = e.curve(p)
        k = e.cofactor(p)
        residual = lie_derivative(b, c, f) - k * f
        results.append((e.id, residual.is_zero(), residual))
    return results


# ---------------------------------------------------------------------------
# Darboux expressions: products of curve powers times an exponential in t
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DarbouxExpr:
    """coefficient * prod f_i^e_i * exp(exp_rate * t)."""

    factors: Tuple[Tuple[BiPoly, Fraction], ...]
    exp_rate: Fraction
    coefficient: Fraction = Fraction(1)
    label: str = ""

    def _check_domain(self, x: float, y: float) -> Optional[str]:
        for poly, expo in self.factors:
            v = float(poly.eval(float(x), float(y)))
            needs_positive = expo.denominator != 1 or expo < 0
            if needs_positive and v < ZERO_MARGIN:
                return f"factor {poly!r} not safely positive at ({x}, {y})"
            if not needs_positive and abs(v) < ZERO_MARGIN:
                return f"factor {poly!r} within margin of zero at ({x}, {y})"
        return None

    def value(self, x: float, y: float, t: float = 0.0) -> float:
        problem = self._check_domain(x, y)
        if problem:
            raise ValueError(problem)
        out = float(self.coefficient)
        for poly, expo in self.factors:
            out *= float(poly.eval(float(x), float(y))) ** float(expo)
        return out * math.exp(float(self.exp_rate) * t)

    def log_abs(self, x: float, y: float, t: float = 0.0) -> Optional[float]:
        """log |expression| at (x, y, t); None within the zero margin."""
        if self._check_domain(x, y):
            return None
        total = math.log(abs(float(self.coefficient)))
        for poly, expo in self.factors:
            total += float(expo) * math.log(abs(float(poly.eval(float(x), float(y)))))
        return total + float(self.exp_rate) * t

    def log_abs_algebraic(self, x: float, y: float) -> Optional[float]:
        """log |coefficient * prod f_i^e_i| without the exponential factor."""
        if self._check_domain(x, y):
            return None
        total = math.log(abs(float(self.coefficient)))
        for poly, expo in self.factors:
            total += float(expo) * math.log(abs(float(poly.eval(float(x), float(y)))))
        return total


def first_integral_H(p: Params) -> DarbouxExpr:
    """H = x^(2b) ((2b+1)y^2 - 2(2b+1)y + 2x) = 2 f1^(2b) f2, on c = 2b+1."""
    if not entry("f2").is_valid(p):
        raise CatalogDomainError("no catalog first integral: parameters not on c = 2b+1")
    b = as_rational(p.b)
    return DarbouxExpr(
        factors=((X, 2 * b), (_f2_curve(p), Fraction(1))),
        exp_rate=Fraction(0),
        coefficient=Fraction(2),
        label="H",
    )


def invariants_I1_I2(p: Optional[Params] = None) -> Tuple[DarbouxExpr, DarbouxExpr]:
    """The exponential invariants at (b,c) = (-1/4, 1/2)."""
    if p is not None and not _quarter_valid(p):
        raise CatalogDomainError("I1, I2 exist only at (b,c) = (-1/4, 1/2)")
    i1 = DarbouxExpr(
        factors=((X, Fraction(-1, 2)), (Y**2 + 4 * X, Fraction(1))),
        exp_rate=Fraction(-1, 2),
        label="I1",
    )
    i2 = DarbouxExpr(
        factors=((X, Fraction(-1, 2)), ((Y - 2) ** 2 + 4 * X, Fraction(1))),
        exp_rate=Fraction(1, 2),
        label="I2",
    )
    return i1, i2


def invariant_I3(p: Params) -> DarbouxExpr:
    """x^(2(1-c)/(2c-3)) ((y-(3-2c))^2 + 2(3-2c)x) e^(2(1-c)/(3-2c) t)."""
    if not entry("f5").is_valid(p):
        raise CatalogDomainError(
            "I3 exists only on the locus b = (1-c)/(2c-3), c != 3/2"
        )
    c = as_rational(p.c)
    expo = 2 * (1 - c) / (2 * c - 3)
    rate = 2 * (1 - c) / (3 - 2 * c)
    return DarbouxExpr(
        factors=((X, expo), (_f5_curve(p), Fraction(1))),
        exp_rate=rate,
        label="I3",
    )


# ---------------------------------------------------------------------------
# Drift measurement along numerically integrated orbits
# ---------------------------------------------------------------------------


@dataclass
class DriftReport:
    """How well an expression stays constant along a sampled orbit."""

    max_drift: float
    fitted_rate: Optional[float]
    n_samples: int
    n_used: int
    excluded_spans: List[Tuple[float, float]]

    @property
    def complete(self) -> bool:
        return not self.excluded_spans


def verify_along_flow(expr: DarbouxExpr, orbit) -> DriftReport:
    """Measure constancy of expr along orbit samples [(t, x, y), ...].

    max_drift is the largest |log expr(t) - log expr(t0)| over usable
    samples (the exponential part included, so a genuine invariant should
    drift only by the integrator's error).  fitted_rate is the measured
    exponential rate: the algebraic part of an invariant decays like
    e^(-s t), so the negated least-squares slope of its log estimates the
    rate s itself.  Samples within the zero margin of any guarded factor
    are excluded and reported as time spans.
    """
    ts, vals, algs = [], [], []
    excluded: List[Tuple[float, float]] = []
    span_start = None
    n = 0
    for (t, x, y) in orbit:
        n += 1
        v = expr.log_abs(x, y, t)
        if v is None:
            if span_start is None:
                span_start = t
            continue
        if span_start is not None:
            excluded.append((span_start, t))
            span_start = None
        ts.append(float(t))
        vals.append(v)
        algs.append(expr.log_abs_algebraic(x, y))
    if span_start is not None and n:
        excluded.append((span_start, span_start))
    if not ts:
        return DriftReport(float("nan"), None, n, 0, excluded)
    v0 = vals[0]
    max_drift = max(abs(v - v0) for v in vals)
    fitted = None
    if len(ts) >= 2 and ts[-1] > ts[0]:
        # alg(t) ~ const - exp_rate * t for an invariant; fit the slope
        tm = sum(ts) / len(ts)
        am = sum(algs) / len(algs)
        num = sum((t - tm) * (a - am) for t, a in zip(ts, algs))
        den = sum((t - tm) ** 2 for t in ts)
        if den > 0:
            fitted = -num / den
    return DriftReport(max_drift, fitted, n, len(ts), excluded)
