"""Tests for exact polynomial arithmetic."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from gizatullin.algebra import (
    GENS,
    RING,
    CompiledPoly,
    MonomialFraction,
    PolynomialError,
    UniPoly,
    content_monomial,
    eval_complex,
    exact_divide,
    gauss,
    gauss_parts,
    monomial,
    ring_ops,
    simple_roots,
    swap_poly,
    to_complex,
)

x, y, u, v = GENS["x"], GENS["y"], GENS["u"], GENS["v"]


class TestCoefficients:
    """Test Gaussian rational coefficients."""

    def test_gauss_parts(self) -> None:
        """Test parts survive a round trip through the domain."""
        c = gauss(Fraction(-3, 2), 1)
        assert gauss_parts(c) == (Fraction(-3, 2), Fraction(1))

    def test_to_complex(self) -> None:
        """Test conversion to floating point."""
        assert to_complex(gauss(1, -2)) == complex(1, -2)


class TestRingOps:
    """Test ring operations."""

    def test_pow(self) -> None:
        """Test non-negative powers."""
        assert ring_ops(x + 1, 2, "pow") == x**2 + 2 * x + 1

    def test_negative_exponent(self) -> None:
        """Test negative exponents are rejected."""
        with pytest.raises(PolynomialError):
            ring_ops(x, -1, "pow")

    def test_unknown_op(self) -> None:
        """Test unknown operation names are rejected."""
        with pytest.raises(PolynomialError):
            ring_ops(x, x, "div")

    def test_exact_divide(self) -> None:
        """Test exact division and its failure."""
        assert exact_divide(x**2 - 1, x - 1) == x + 1
        assert exact_divide(x**2 + 1, x - 1) is None
        assert exact_divide(RING.zero, x) == RING.zero

    def test_divide_by_zero(self) -> None:
        """Test division by the zero polynomial raises."""
        with pytest.raises(PolynomialError):
            exact_divide(x, RING.zero)

    def test_content_monomial(self) -> None:
        """Test the common monomial factor."""
        assert content_monomial(x**2 * y + x * y**3) == monomial(x=1, y=1)

    def test_swap_poly(self) -> None:
        """Test the coordinate swap exchanges x with u and y with v."""
        assert swap_poly(x**2 * v + y) == u**2 * y + v


class TestUniPoly:
    """Test univariate polynomials."""

    def test_trailing_zeros_stripped(self) -> None:
        """Test the degree ignores zero leading coefficients."""
        assert UniPoly((1, 2, 0, 0)).degree == 1

    def test_from_poly_rejects_foreign_variable(self) -> None:
        """Test a polynomial in u cannot be read as one in x."""
        with pytest.raises(PolynomialError):
            UniPoly.from_poly(x + u, "x")

    def test_derivative_and_value(self) -> None:
        """Test the derivative and complex evaluation."""
        P = UniPoly((1, -3, 1))
        assert P.derivative() == UniPoly((-3, 2))
        assert P(2) == complex(-1)

    @pytest.mark.parametrize(
        ("coeffs", "expected"),
        [((-1, 1), True), ((0, 0, 1), False), ((0, 1, -2, 1), False), ((2, -3, 1), True)],
    )
    def test_simple_roots(self, coeffs: tuple[int, ...], expected: bool) -> None:
        """Test gcd(P, P') detection of repeated roots."""
        assert simple_roots(UniPoly(coeffs)) is expected

    def test_simple_roots_zero(self) -> None:
        """Test the zero polynomial is rejected."""
        with pytest.raises(PolynomialError):
            simple_roots(UniPoly(()))


class TestMonomialFraction:
    """Test fractions with monomial denominators."""

    def test_simplify(self) -> None:
        """Test common monomial factors cancel."""
        f = MonomialFraction(x * y**2 + x**2 * y, monomial(y=2))
        assert f.simplified() == MonomialFraction(x * y + x**2, monomial(y=1))

    def test_quotient_rule(self) -> None:
        """Test d/dy of x/y is -x/y^2."""
        f = MonomialFraction(x, monomial(y=1))
        assert f.diff("y") == MonomialFraction(-x, monomial(y=2))

    def test_substitute(self) -> None:
        """Test substituting u = x/y into u*y gives x."""
        f = MonomialFraction(u * y)
        image = f.substitute({"u": MonomialFraction(x, monomial(y=1))})
        assert image == MonomialFraction(x)


class TestEvalComplex:
    """Test floating evaluation by nested Horner's rule."""

    def test_sparse_powers(self) -> None:
        """Test gaps in the powers of each variable."""
        p = x**5 * y - 4 * x**2 * y**3 + 7 * u + 2
        point = {"x": 2, "y": -1, "u": 1j, "v": 9}
        assert abs(eval_complex(p, point) - (-32 + 16 + 7j + 2)) < 1e-12

    def test_matches_compiled(self) -> None:
        """Test agreement with the vectorized evaluation."""
        p = (x - 1) ** 6 * (u + 2 * y) ** 3 - v**4 + 3
        z = np.array([1.5 - 0.5j, 2j, -0.25, 1 + 1j])
        point = dict(zip(("x", "y", "u", "v"), z, strict=True))
        expected = CompiledPoly(p)(z)
        assert abs(eval_complex(p, point) - expected) < 1e-9 * max(1.0, abs(expected))

    def test_constant_and_zero(self) -> None:
        """Test polynomials without variables need no assignment."""
        assert eval_complex(RING(5), {}) == 5
        assert eval_complex(RING.zero, {}) == 0

    def test_unassigned(self) -> None:
        """Test a variable missing from the point is rejected."""
        with pytest.raises(PolynomialError):
            eval_complex(x * v, {"x": 1})


class TestCompiledPoly:
    """Test numeric evaluation."""

    def test_matches_exact(self) -> None:
        """Test numpy evaluation at a point."""
        p = 3 * x**2 * v - y * u + 1
        z = np.array([1 + 1j, 2, -1, 0.5j])
        expected = 3 * (1 + 1j) ** 2 * 0.5j - 2 * -1 + 1
        assert abs(CompiledPoly(p)(z) - expected) < 1e-12

    def test_lambda_rejected(self) -> None:
        """Test lambda must be instantiated before numeric evaluation."""
        with pytest.raises(PolynomialError):
            CompiledPoly(GENS["lambda"] * x)
