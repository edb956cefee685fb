"""Exact polynomial arithmetic over the Gaussian rationals.

Every symbolic object of the toolkit lives in one sparse polynomial ring over
``QQ_I`` in the variables ``y, v, x, u, lambda`` with the degree reverse
lexicographic order (variable precedence ``y > v > x > u``). Ring elements are
sympy ``PolyElement`` values; their coefficients are ``QQ_I`` elements
(exact ``re + im*i`` with rational parts in lowest terms).
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
from sympy import QQ, QQ_I
from sympy.polys.densebasic import dup_degree, dup_strip
from sympy.polys.densetools import dup_diff
from sympy.polys.euclidtools import dup_gcd
from sympy.polys.orderings import grevlex
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.rings import PolyElement, ring

_LOGGER = logging.getLogger(__name__)

RING, Y, V, X, U, LAM = ring("y,v,x,u,lambda", QQ_I, grevlex)

# Alias for readability in signatures
MultiPoly = PolyElement
GaussRat = Any

VARIABLES: tuple[str, ...] = ("y", "v", "x", "u", "lambda")
INDEX: dict[str, int] = {name: i for i, name in enumerate(VARIABLES)}
GENS: dict[str, PolyElement] = dict(zip(VARIABLES, RING.gens, strict=True))

# Component order of ambient vector fields
COORDS: tuple[str, ...] = ("x", "y", "u", "v")

ZERO_MONOM: tuple[int, ...] = RING.zero_monom
ZERO = RING.zero
ONE = RING.one
I_UNIT = QQ_I(0, 1)

Monomial = tuple[int, ...]


class GizatullinError(Exception):
    """Error to indicate a failure inside the toolkit."""


class PolynomialError(GizatullinError):
    """Error to indicate an invalid polynomial operation."""


# --- coefficients ---


def gauss(re: int | Fraction = 0, im: int | Fraction = 0) -> GaussRat:
    """Build an exact Gaussian rational from rational parts."""
    re_f = Fraction(re)
    im_f = Fraction(im)
    return QQ_I(
        QQ(re_f.numerator, re_f.denominator),
        QQ(im_f.numerator, im_f.denominator),
    )


def gauss_parts(c: GaussRat) -> tuple[Fraction, Fraction]:
    """Return the real and imaginary part of a coefficient as fractions."""
    c = QQ_I.convert(c)
    return (
        Fraction(int(c.x.numerator), int(c.x.denominator)),
        Fraction(int(c.y.numerator), int(c.y.denominator)),
    )


def to_complex(c: GaussRat) -> complex:
    """Convert a coefficient to a complex float."""
    re, im = gauss_parts(c)
    return complex(float(re), float(im))


def is_gauss_integer(c: GaussRat) -> bool:
    """Return True when both parts of the coefficient are integers."""
    re, im = gauss_parts(c)
    return re.denominator == 1 and im.denominator == 1


# --- monomials ---


def monomial(x: int = 0, y: int = 0, u: int = 0, v: int = 0, lam: int = 0) -> Monomial:
    """Build an exponent vector in ring order."""
    return (y, v, x, u, lam)


def monomial_poly(m: Monomial, coeff: GaussRat | int = 1) -> PolyElement:
    """Return the polynomial ``coeff * m``."""
    return RING.term_new(m, QQ_I.convert(coeff))


def is_monomial(p: PolyElement) -> bool:
    """Return True when p is a single term with coefficient one."""
    return len(p) == 1 and p.LC == QQ_I.one


def content_monomial(p: PolyElement) -> Monomial:
    """Return the largest monomial dividing every term of p."""
    if not p:
        return ZERO_MONOM
    exps = list(p.itermonoms())
    return tuple(min(column) for column in zip(*exps, strict=True))


def monomial_divides(a: Monomial, b: Monomial) -> bool:
    """Return True when a divides b."""
    return all(i <= j for i, j in zip(a, b, strict=True))


# --- ring operations ---

_OPS: dict[str, Callable[[Any, Any], PolyElement]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "neg": lambda a, _b: -a,
    "scalar-mul": lambda a, b: a * QQ_I.convert(b),
}


def ring_ops(a: PolyElement, b: Any, op: str) -> PolyElement:
    """Apply a ring operation.

    Args:
        a: Left operand.
        b: Right operand (polynomial, scalar for ``scalar-mul``, integer
            exponent for ``pow``; ignored for ``neg``).
        op: One of ``add, sub, mul, neg, scalar-mul, pow``.

    Raises:
        PolynomialError: On a negative exponent or an unknown operation.
    """
    if op == "pow":
        if not isinstance(b, int) or b < 0:
            raise PolynomialError(f"Exponent must be a non-negative integer, got {b!r}")
        return a**b
    try:
        return _OPS[op](a, b)
    except KeyError as err:
        raise PolynomialError(f"Unknown ring operation {op!r}") from err


def _gen(var: str) -> PolyElement:
    try:
        return GENS[var]
    except KeyError as err:
        raise PolynomialError(f"Unknown variable {var!r}") from err


def derive(p: PolyElement, var: str) -> PolyElement:
    """Return the formal partial derivative of p in var."""
    return p.diff(_gen(var))


def substitute(p: PolyElement, assignment: Mapping[str, PolyElement]) -> PolyElement:
    """Simultaneously substitute variables of p by polynomials."""
    if not assignment:
        return p
    replacements = [(_gen(var), RING.ring_new(image)) for var, image in assignment.items()]
    return p.compose(replacements)


def exact_divide(p: PolyElement, d: PolyElement) -> PolyElement | None:
    """Return q with p = d*q, or None when d does not divide p.

    Raises:
        PolynomialError: If d is zero.
    """
    if not d:
        raise PolynomialError("Division by the zero polynomial")
    if not p:
        return RING.zero
    try:
        q = p.exquo(d)
    except ExactQuotientFailed:
        return None
    if q * d != p:
        return None
    return q


def eval_complex(p: PolyElement, point: Mapping[str, complex]) -> complex:
    """Evaluate p at a complex point by Horner's rule in each variable (not exact).

    Raises:
        PolynomialError: If a variable occurring in p is unassigned.
    """
    used = [i for i in range(RING.ngens) if p.degree(RING.gens[i]) > 0]
    values = [0j] * RING.ngens
    for i in used:
        name = VARIABLES[i]
        if name not in point:
            raise PolynomialError(f"Variable {name!r} is not assigned")
        values[i] = complex(point[name])
    terms = [(monom, to_complex(coeff)) for monom, coeff in p.iterterms()]
    return _horner(terms, used, values)


def _horner(terms: list[tuple[Monomial, complex]], used: list[int], values: list[complex]) -> complex:
    if not used:
        return sum((c for _, c in terms), 0j)
    i, rest = used[0], used[1:]
    by_power: dict[int, list[tuple[Monomial, complex]]] = {}
    for monom, c in terms:
        by_power.setdefault(monom[i], []).append((monom, c))
    total = 0j
    for power in range(max(by_power), -1, -1):
        total *= values[i]
        if power in by_power:
            total += _horner(by_power[power], rest, values)
    return total


def swap_poly(p: PolyElement) -> PolyElement:
    """Exchange x with u and y with v."""
    return RING.from_dict({(m[1], m[0], m[3], m[2], m[4]): c for m, c in p.iterterms()})


def variables_of(p: PolyElement) -> set[str]:
    """Return the names of the variables occurring in p."""
    return {VARIABLES[i] for i in range(RING.ngens) if p.degree(RING.gens[i]) > 0}


# --- univariate polynomials ---


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial P(x) or Q(u), coefficients listed from degree 0."""

    coeffs: tuple[GaussRat, ...]
    var: str = "x"

    def __post_init__(self) -> None:
        coeffs = [QQ_I.convert(c) for c in self.coeffs]
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))
        _gen(self.var)

    @classmethod
    def from_poly(cls, p: PolyElement, var: str) -> UniPoly:
        """Read a univariate polynomial out of a ring element.

        Raises:
            PolynomialError: If p involves a variable other than var.
        """
        others = variables_of(p) - {var}
        if others:
            raise PolynomialError(
                f"Expected a polynomial in {var} only, found {', '.join(sorted(others))}"
            )
        index = INDEX[var]
        coeffs = [QQ_I.zero] * (p.degree(_gen(var)) + 1 if p else 0)
        for monom, coeff in p.iterterms():
            coeffs[monom[index]] = coeff
        return cls(tuple(coeffs), var)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def at_zero(self) -> GaussRat:
        return self.coeffs[0] if self.coeffs else QQ_I.zero

    def in_var(self, var: str) -> UniPoly:
        return UniPoly(self.coeffs, var)

    def derivative(self) -> UniPoly:
        return UniPoly(tuple(c * i for i, c in enumerate(self.coeffs) if i), self.var)

    def compose(self, arg: PolyElement) -> PolyElement:
        """Return self(arg) by Horner's rule."""
        result = RING.zero
        for c in reversed(self.coeffs):
            result = result * arg + c
        return result

    def as_poly(self) -> PolyElement:
        return self.compose(_gen(self.var))

    def __call__(self, value: complex) -> complex:
        result = 0j
        for c in reversed(self.coeffs):
            result = result * value + to_complex(c)
        return result

    def numpy_coeffs(self) -> np.ndarray:
        """Coefficients highest degree first, as numpy complex values."""
        return np.array([to_complex(c) for c in reversed(self.coeffs)], dtype=complex)

    def dense(self) -> list[GaussRat]:
        return dup_strip(list(reversed(self.coeffs)))


def simple_roots(P: UniPoly) -> bool:
    """Return True iff gcd(P, P') is constant.

    Raises:
        PolynomialError: If P is the zero polynomial.
    """
    if P.is_zero:
        raise PolynomialError("The zero polynomial has no well defined roots")
    f = P.dense()
    g = dup_gcd(f, dup_diff(f, 1, QQ_I), QQ_I)
    return dup_degree(g) <= 0


# --- fractions with monomial denominators ---


@dataclass(frozen=True)
class MonomialFraction:
    """A polynomial divided by a monomial."""

    num: PolyElement
    den: Monomial = ZERO_MONOM

    @classmethod
    def of(cls, value: MonomialFraction | PolyElement | GaussRat | int) -> MonomialFraction:
        if isinstance(value, MonomialFraction):
            return value
        return cls(RING.ring_new(value))

    @property
    def is_polynomial(self) -> bool:
        return self.den == ZERO_MONOM

    def simplified(self) -> MonomialFraction:
        """Cancel the common monomial factor of numerator and denominator."""
        if not self.num:
            return MonomialFraction(RING.zero)
        common = tuple(
            min(a, b) for a, b in zip(content_monomial(self.num), self.den, strict=True)
        )
        if common == ZERO_MONOM:
            return self
        num = RING.from_dict(
            {RING.monomial_div(m, common): c for m, c in self.num.iterterms()}
        )
        return MonomialFraction(num, RING.monomial_div(self.den, common))

    def _over(self, den: Monomial) -> PolyElement:
        return self.num.mul_monom(RING.monomial_div(den, self.den))

    def __add__(self, other: Any) -> MonomialFraction:
        other = MonomialFraction.of(other)
        den = RING.monomial_lcm(self.den, other.den)
        return MonomialFraction(self._over(den) + other._over(den), den).simplified()

    __radd__ = __add__

    def __neg__(self) -> MonomialFraction:
        return MonomialFraction(-self.num, self.den)

    def __sub__(self, other: Any) -> MonomialFraction:
        return self + (-MonomialFraction.of(other))

    def __rsub__(self, other: Any) -> MonomialFraction:
        return MonomialFraction.of(other) - self

    def __mul__(self, other: Any) -> MonomialFraction:
        other = MonomialFraction.of(other)
        return MonomialFraction(
            self.num * other.num, RING.monomial_mul(self.den, other.den)
        ).simplified()

    __rmul__ = __mul__

    def diff(self, var: str) -> MonomialFraction:
        """Partial derivative by the quotient rule."""
        gen = _gen(var)
        index = INDEX[var]
        exponent = self.den[index]
        if not exponent:
            return MonomialFraction(self.num.diff(gen), self.den).simplified()
        num = gen * self.num.diff(gen) - self.num * exponent
        den = list(self.den)
        den[index] += 1
        return MonomialFraction(num, tuple(den)).simplified()

    def substitute(self, assignment: Mapping[str, MonomialFraction]) -> MonomialFraction:
        """Substitute variables of the numerator by fractions."""
        result = MonomialFraction(RING.zero)
        for monom, coeff in self.num.iterterms():
            term = MonomialFraction(RING.term_new(_strip(monom, assignment), coeff))
            for var, image in assignment.items():
                power = monom[INDEX[var]]
                if power:
                    term = term * _power(image, power)
            result = result + term
        return result * MonomialFraction(RING.one, self.den)

    def eval_complex(self, point: Mapping[str, complex]) -> complex:
        den = eval_complex(RING.term_new(self.den, QQ_I.one), point)
        return eval_complex(self.num, point) / den


def _strip(monom: Monomial, assignment: Mapping[str, Any]) -> Monomial:
    out = list(monom)
    for var in assignment:
        out[INDEX[var]] = 0
    return tuple(out)


def _power(base: MonomialFraction, n: int) -> MonomialFraction:
    result = MonomialFraction(RING.one)
    for _ in range(n):
        result = result * base
    return result


# --- vectorized numeric evaluation ---


class CompiledPoly:
    """Numeric form of a polynomial for repeated evaluation with numpy."""

    def __init__(self, p: PolyElement) -> None:
        terms = list(p.iterterms())
        self.exponents = np.array(
            [[m[INDEX[name]] for name in COORDS] for m, _ in terms] or np.zeros((0, 4)),
            dtype=np.int64,
        ).reshape(-1, 4)
        self.coeffs = np.array([to_complex(c) for _, c in terms], dtype=complex)
        if any(m[INDEX["lambda"]] for m, _ in terms):
            raise PolynomialError("Numeric evaluation requires an instantiated lambda")

    def __call__(self, z: np.ndarray) -> complex:
        """Evaluate at z = (x, y, u, v)."""
        if not len(self.coeffs):
            return 0j
        return complex(np.sum(self.coeffs * np.prod(np.power(z, self.exponents), axis=1)))


def compile_all(polys: Iterable[PolyElement]) -> list[CompiledPoly]:
    return [CompiledPoly(p) for p in polys]
