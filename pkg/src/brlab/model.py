"""The reduced resource-population system and its parameter space.

The full three-parameter model

    dx/dt = x*(1 - y),    dy/dt = (h - 1)*y^2 + (1 - c)*y + (c/k)*x

describes a renewable resource x and the population-to-resource ratio y
with growth rate c, carrying capacity k and harvesting constant h.  A
pure coordinate scaling X = (c/k)*x (no rescaling of time is needed)
brings it to the two-parameter reduced form studied everywhere else in
this package:

    dx/dt = x*(1 - y),    dy/dt = b*y^2 + (1 - c)*y + x,   b = h - 1,

on the parameter domain b > -1, c > 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .exactpoly import as_rational


class DomainError(ValueError):
    """Parameters outside the admissible domain."""


@dataclass(frozen=True)
class FullParams:
    """Original parameters: growth rate c, carrying capacity k, harvest h."""

    c: float
    k: float
    h: float

    def __post_init__(self):
        if not (self.c > 0 and self.k > 0 and self.h > 0):
            raise DomainError("c, k, h must all be strictly positive")


@dataclass(frozen=True)
class Params:
    """Reduced parameters (b, c) with b > -1 and c > 0.

    Values may be floats or Fractions; exact-arithmetic consumers require
    Fractions and will refuse floats themselves.
    """

    b: object
    c: object

    def __post_init__(self):
        if not (self.b > -1):
            raise DomainError(f"b must exceed -1, got {self.b}")
        if not (self.c > 0):
            raise DomainError(f"c must be positive, got {self.c}")

    def as_floats(self) -> Tuple[float, float]:
        return float(self.b), float(self.c)


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (_finite(self.x) and _finite(self.y)):
            raise ValueError("plane points need finite coordinates")


def _finite(v) -> bool:
    try:
        f = float(v)
    except (TypeError, OverflowError):
        return False
    return f == f and abs(f) != float("inf")


def reduce(fp: FullParams) -> Tuple[Params, float]:
    """Map full parameters to reduced ones plus the x coordinate scale.

    Returns (Params(b=h-1, c), s) with s = c/k, such that X = s*x turns
    the full system into the reduced one exactly.  b > -1 holds
    automatically because h > 0.
    """
    return Params(b=fp.h - 1, c=fp.c), fp.c / fp.k


def eval_field(p: Params, q) -> Tuple[float, float]:
    """Velocity (dx/dt, dy/dt) of the reduced system at q = (x, y)."""
    x, y = _coords(q)
    return x * (1 - y), p.b * y * y + (1 - p.c) * y + x


def eval_full_field(fp: FullParams, q) -> Tuple[float, float]:
    """Velocity of the unreduced system at q = (x, y)."""
    x, y = _coords(q)
    return x * (1 - y), (fp.h - 1) * y * y + (1 - fp.c) * y + (fp.c / fp.k) * x


def jacobian(p: Params, q):
    """Jacobian [[1-y, -x], [1, 2*b*y + 1 - c]] as a nested tuple."""
    x, y = _coords(q)
    return ((1 - y, -x), (1, 2 * p.b * y + 1 - p.c))


def _coords(q) -> Tuple:
    if isinstance(q, PlanePoint):
        return q.x, q.y
    x, y = q
    return x, y


def exact_params(b, c) -> Params:
    """Params carrying Fractions, for the exact-arithmetic pipeline.

    Floats are refused (ExactnessError); pass ints, Fractions or strings
    like "-1/4".
    """
    return Params(b=as_rational(b), c=as_rational(c))
