"""Exact bivariate polynomial arithmetic over the rationals.

Sparse polynomials in two variables (x, y) with ``fractions.Fraction``
coefficients, the Lie derivative of a polynomial along the reduced
vector field, exact cofactor division, and the linear combination solver
that turns a set of cofactors into a first integral or an exponential
invariant.  Everything in this module is exact: no floats enter, no
tolerances exist.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

Rational = Union[int, Fraction, str]


class ExactnessError(TypeError):
    """A parameter that must be an exact rational was supplied as a float."""


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and strings to Fraction; reject floats."""
    if isinstance(value, bool):
        raise ExactnessError("booleans are not rational parameters")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise ExactnessError(
        f"exact arithmetic needs int/Fraction/str, got {type(value).__name__}"
    )


class BiPoly:
    """A bivariate polynomial: finite map (i, j) -> nonzero Fraction.

    The key (i, j) stands for the monomial x^i * y^j.  The zero
    polynomial has an empty map.  Instances are immutable in practice:
    all arithmetic returns new objects and the term map is never handed
    out mutably.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[tuple, Rational]] = None):
        clean = {}
        if terms:
            for (i, j), coef in terms.items():
                if i < 0 or j < 0:
                    raise ValueError(f"negative exponent in monomial ({i},{j})")
                c = as_rational(coef)
                if c != 0:
                    clean[(int(i), int(j))] = c
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @staticmethod
    def const(c: Rational) -> "BiPoly":
        return BiPoly({(0, 0): as_rational(c)})

    @staticmethod
    def zero() -> "BiPoly":
        return BiPoly()

    # -- basic queries ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(i + j for (i, j) in self.terms)

    def coeff(self, i: int, j: int) -> Fraction:
        return self.terms.get((i, j), Fraction(0))

    def monomials(self) -> Iterator[tuple]:
        return iter(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = BiPoly.const(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "BiPoly":
        if isinstance(other, (int, Fraction)):
            other = BiPoly.const(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, Fraction(0)) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        result = BiPoly.__new__(BiPoly)
        result.terms = out
        return result

    __radd__ = __add__

    def __neg__(self) -> "BiPoly":
        result = BiPoly.__new__(BiPoly)
        result.terms = {key: -c for key, c in self.terms.items()}
        return result

    def __sub__(self, other) -> "BiPoly":
        if isinstance(other, (int, Fraction)):
            other = BiPoly.const(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "BiPoly":
        return (-self) + other

    def __mul__(self, other) -> "BiPoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        out: dict = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                key = (i1 + i2, j1 + j2)
                s = out.get(key, Fraction(0)) + c1 * c2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        result = BiPoly.__new__(BiPoly)
        result.terms = out
        return result

    __rmul__ = __mul__

    def scale(self, c: Rational) -> "BiPoly":
        c = as_rational(c)
        if c == 0:
            return BiPoly.zero()
        result = BiPoly.__new__(BiPoly)
        result.terms = {key: coef * c for key, coef in self.terms.items()}
        return result

    def __pow__(self, n: int) -> "BiPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial powers must be nonnegative integers")
        out = BiPoly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- calculus ---------------------------------------------------

    def partial_x(self) -> "BiPoly":
        out = {}
        for (i, j), c in self.terms.items():
            if i > 0:
                out[(i - 1, j)] = c * i
        result = BiPoly.__new__(BiPoly)
        result.terms = out
        return result

    def partial_y(self) -> "BiPoly":
        out = {}
        for (i, j), c in self.terms.items():
            if j > 0:
                out[(i, j - 1)] = c * j
        result = BiPoly.__new__(BiPoly)
        result.terms = out
        return result

    # -- evaluation ---------------------------------------------------

    def eval(self, x, y):
        """Evaluate at (x, y).  Exact for Fraction inputs, float for floats."""
        total = None
        for (i, j), c in self.terms.items():
            term = c * x**i * y**j
            total = term if total is None else total + term
        if total is None:
            return Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
        return total

    # -- display ---------------------------------------------------

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (i, j) in sorted(self.terms, key=lambda k: (-(k[0] + k[1]), -k[0])):
            c = self.terms[(i, j)]
            mono = "".join(
                (f"x^{i}" if i > 1 else "x" if i == 1 else "",
                 f"y^{j}" if j > 1 else "y" if j == 1 else "")
            )
            if not mono:
                parts.append(f"{c}")
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        s = " + ".join(parts).replace("+ -", "- ")
        return s


X = BiPoly({(1, 0): 1})
Y = BiPoly({(0, 1): 1})
ONE = BiPoly.const(1)


def field_polynomials(b: Rational, c: Rational) -> tuple:
    """The two components of the reduced vector field as exact polynomials.

    dx/dt = x(1 - y),  dy/dt = b*y^2 + (1 - c)*y + x.
    """
    b = as_rational(b)
    c = as_rational(c)
    p = X - X * Y
    q = Y * Y * b + Y * (1 - c) + X
    return p, q


def lie_derivative(b: Rational, c: Rational, f: BiPoly) -> BiPoly:
    """P * df/dx + Q * df/dy along the reduced field with rational (b, c)."""
    p, q = field_polynomials(b, c)
    return p * f.partial_x() + q * f.partial_y()


def cofactor_of(b: Rational, c: Rational, f: BiPoly) -> Optional[BiPoly]:
    """The degree-<=1 cofactor K with X(f) = K*f, or None if f is not invariant.

    K = k0 + kx*x + ky*y is treated as three unknowns; matching the
    coefficients of K*f against the Lie derivative gives a small exact
    linear system.  The candidate is verified by exact re-multiplication,
    so an inconsistent or underdetermined system can never leak a wrong
    answer.
    """
    if f.is_zero():
        raise ValueError("the zero polynomial has no cofactor")
    lie = lie_derivative(b, c, f)
    # rows: every monomial that can appear in K*f or that appears in lie
    keys = set(lie.terms)
    for (i, j) in f.terms:
        keys.update({(i, j), (i + 1, j), (i, j + 1)})
    rows = []
    for (i, j) in sorted(keys):
        # coefficient of x^i y^j in (k0 + kx*x + ky*y) * f
        row = [
            f.coeff(i, j),                      # k0
            f.coeff(i - 1, j) if i > 0 else Fraction(0),   # kx
            f.coeff(i, j - 1) if j > 0 else Fraction(0),   # ky
            lie.coeff(i, j),
        ]
        rows.append(row)
    sol = _solve_exact(rows, unknowns=3)
    if sol is None:
        return None
    k0, kx, ky = sol
    k = BiPoly({(0, 0): k0, (1, 0): kx, (0, 1): ky})
    if k * f == lie:
        return k
    return None


def _solve_exact(aug: Sequence[Sequence[Fraction]], unknowns: int):
    """Gaussian elimination on an augmented system; None if inconsistent.

    Free unknowns (only possible in degenerate inputs) are set to zero;
    callers verify the candidate independently.
    """
    rows = [list(map(Fraction, r)) for r in aug]
    n = unknowns
    pivots = []
    r = 0
    for col in range(n):
        piv = next((k for k in range(r, len(rows)) if rows[k][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        rows[r] = [v / rows[r][col] for v in rows[r]]
        for k in range(len(rows)):
            if k != r and rows[k][col] != 0:
                factor = rows[k][col]
                rows[k] = [a - factor * b for a, b in zip(rows[k], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    for k in range(len(rows)):
        if all(v == 0 for v in rows[k][:n]) and rows[k][n] != 0:
            return None
    sol = [Fraction(0)] * n
    for idx, col in enumerate(pivots):
        sol[col] = rows[idx][n]
    return sol


class Combination:
    """Solution of sum(lambda_i * K_i) = -s: multipliers plus the rate s."""

    __slots__ = ("lambdas", "s")

    def __init__(self, lambdas: Iterable[Rational], s: Rational):
        self.lambdas = tuple(as_rational(v) for v in lambdas)
        self.s = as_rational(s)
        if all(v == 0 for v in self.lambdas):
            raise ValueError("a combination needs at least one nonzero multiplier")

    def __repr__(self):
        return f"Combination(lambdas={self.lambdas}, s={self.s})"

    def __eq__(self, other):
        return (
            isinstance(other, Combination)
            and self.lambdas == other.lambdas
            and self.s == other.s
        )


def darboux_combination(cofactors: Sequence[BiPoly], mode: str) -> Optional[Combination]:
    """Solve for multipliers over a list of cofactors.

    mode "first_integral": sum(lambda_i K_i) = 0 with lambda not all zero
    (then s = 0).  mode "invariant": sum(lambda_i K_i) = -s for a rational
    s, preferring solutions with s != 0.  The returned representative is
    scaled so its first nonzero lambda equals 1; solutions are projective,
    so callers should compare up to a scalar.
    """
    if mode not in ("first_integral", "invariant"):
        raise ValueError(f"unknown mode {mode!r}")
    if not cofactors:
        raise ValueError("need at least one cofactor")
    for k in cofactors:
        if k.degree() > 1:
            raise ValueError("cofactors must lie in the span of {1, x, y}")
    n = len(cofactors)
    # rows indexed by monomial; columns by cofactor
    row_x = [k.coeff(1, 0) for k in cofactors]
    row_y = [k.coeff(0, 1) for k in cofactors]
    row_1 = [k.coeff(0, 0) for k in cofactors]
    rows = [row_x, row_y]
    if mode == "first_integral":
        rows.append(row_1)
    basis = _kernel_basis(rows, n)
    if not basis:
        return None
    if mode == "first_integral":
        lam = basis[0]
        return Combination(_normalize(lam), 0)
    # invariant: s = -sum(lambda_i * const coefficient of K_i)
    scored = []
    for lam in basis:
        s = -sum(l * c1 for l, c1 in zip(lam, row_1))
        scored.append((lam, s))
    for lam, s in scored:
        if s != 0:
            lam = _normalize(lam)
            s = -sum(l * c1 for l, c1 in zip(lam, row_1))
            return Combination(lam, s)
    lam, s = scored[0]
    return Combination(_normalize(lam), 0)


def _normalize(vec: Sequence[Fraction]) -> list:
    lead = next(v for v in vec if v != 0)
    return [v / lead for v in vec]


def _kernel_basis(rows: Sequence[Sequence[Fraction]], n: int) -> list:
    """Basis of the kernel of the matrix given by rows (n columns)."""
    mat = [list(map(Fraction, r)) for r in rows]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((k for k in range(r, len(mat)) if mat[k][col] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        mat[r] = [v / mat[r][col] for v in mat[r]]
        for k in range(len(mat)):
            if k != r and mat[k][col] != 0:
                factor = mat[k][col]
                mat[k] = [a - factor * b for a, b in zip(mat[k], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for ridx, pc in enumerate(pivots):
            vec[pc] = -mat[ridx][fc]
        basis.append(vec)
    return basis
