"""Tests for the polynomial text grammar."""

from __future__ import annotations

from fractions import Fraction

import pytest

from gizatullin.algebra import GENS, UniPoly, gauss
from gizatullin.grammar import (
    PolySyntaxError,
    WrongVariableError,
    format_coeff,
    format_complex,
    format_poly,
    parse_point_text,
    parse_poly,
    parse_value,
)

x, y, u = GENS["x"], GENS["y"], GENS["u"]


class TestParsePoly:
    """Test parse_poly."""

    def test_quadratic(self) -> None:
        """Test rational coefficients are read exactly."""
        P = parse_poly("x^2 - 3/2*x + 1", "P")
        assert P == UniPoly((1, gauss(Fraction(-3, 2)), 1), "x")

    def test_q_context(self) -> None:
        """Test Q is read in u."""
        assert parse_poly("u - 1", "Q") == UniPoly((-1, 1), "u")

    def test_wrong_variable(self) -> None:
        """Test P may not mention y."""
        with pytest.raises(WrongVariableError):
            parse_poly("x + y", "P")

    def test_gaussian_coefficient(self) -> None:
        """Test the imaginary unit."""
        assert parse_poly("(1 + 2*i)*x") == gauss(1, 2) * x

    def test_free_context(self) -> None:
        """Test multivariate text without a context."""
        assert parse_poly("y*u - x^2 + x") == y * u - x**2 + x

    @pytest.mark.parametrize(
        ("text", "position"),
        [("x +", 3), ("x ^ y", 4), ("(x + 1", 6), ("x % 2", 2), ("x / x", 2), ("z", 0)],
    )
    def test_syntax_error_position(self, text: str, position: int) -> None:
        """Test errors carry the offending position."""
        with pytest.raises(PolySyntaxError) as err:
            parse_poly(text)
        assert err.value.position == position

    def test_empty(self) -> None:
        """Test empty text is rejected."""
        with pytest.raises(PolySyntaxError):
            parse_poly("")

    @pytest.mark.parametrize(
        "text", ["x^2 - 3/2*x + 1", "y*u - x^2 + x", "(1 + 2*i)*x*y - i", "-x^3*u^2 + 7"]
    )
    def test_print_then_parse(self, text: str) -> None:
        """Test printed text parses back to the same value."""
        p = parse_poly(text)
        assert parse_poly(format_poly(p)) == p


class TestFormat:
    """Test printing."""

    def test_format_poly(self) -> None:
        """Test the fixed term order."""
        assert format_poly(parse_poly("x - 1", "P")) == "x - 1"

    def test_format_zero(self) -> None:
        """Test the zero polynomial."""
        assert format_poly(x - x) == "0"

    @pytest.mark.parametrize(
        ("value", "text"),
        [(gauss(3), "3"), (gauss(0, 1), "i"), (gauss(0, -2), "-2*i"), (gauss(1, -1), "(1 - i)")],
    )
    def test_format_coeff(self, value: object, text: str) -> None:
        """Test coefficient printing."""
        assert format_coeff(value) == text

    def test_format_complex(self) -> None:
        """Test float printing keeps the sign of the imaginary part."""
        assert format_complex(complex(0.5, -1.25)) == "0.5-1.25i"


class TestPoints:
    """Test coordinate parsing."""

    def test_exact_value(self) -> None:
        """Test grammar constants stay exact."""
        assert parse_value("3/2") == gauss(Fraction(3, 2))

    def test_float_value(self) -> None:
        """Test decimals fall back to complex floats."""
        assert parse_value("0.5+1.5i") == complex(0.5, 1.5)

    def test_bad_value(self) -> None:
        """Test unreadable coordinates are rejected."""
        with pytest.raises(PolySyntaxError):
            parse_value("abc")

    def test_point_text(self) -> None:
        """Test four comma separated coordinates."""
        assert parse_point_text("1,0,1,0") == (gauss(1), gauss(0), gauss(1), gauss(0))

    def test_point_text_arity(self) -> None:
        """Test the coordinate count is checked."""
        with pytest.raises(PolySyntaxError):
            parse_point_text("1,2,3")
