"""Text grammar for polynomials and points.

Variables ``x y u v``, the symbol ``lambda``, the imaginary unit ``i``,
integers, ``a/b`` rationals, the operators ``+ - * / ^`` and parentheses.
Multiplication is always explicit; ``/`` only divides by nonzero constants.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Literal

from sympy import QQ_I

from .algebra import (
    COORDS,
    GENS,
    INDEX,
    RING,
    GaussRat,
    GizatullinError,
    MultiPoly,
    UniPoly,
    gauss_parts,
)

Context = Literal["P", "Q"] | None

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_]+)|(\S))")
_NAMES = frozenset({"x", "y", "u", "v", "lambda"})
_PRINT_ORDER = (*COORDS, "lambda")
_CONTEXT_VAR = {"P": "x", "Q": "u"}


class PolySyntaxError(GizatullinError):
    """Error to indicate malformed polynomial text."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


class WrongVariableError(GizatullinError):
    """Error to indicate a variable not allowed in the parsing context."""


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            break
        number, name, symbol = match.groups()
        start = match.start(match.lastindex or 0)
        if number is not None:
            tokens.append(_Token("num", number, start))
        elif name is not None:
            if name != "i" and name not in _NAMES:
                raise PolySyntaxError(f"Unknown name {name!r}", start)
            tokens.append(_Token("name", name, start))
        elif symbol is not None:
            if symbol not in "+-*/^()":
                raise PolySyntaxError(f"Unexpected character {symbol!r}", start)
            tokens.append(_Token("op", symbol, start))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent parser producing ring elements."""

    def __init__(self, text: str) -> None:
        self._tokens = _tokenize(text)
        self._index = 0

    @property
    def _current(self) -> _Token:
        return self._tokens[self._index]

    def _accept(self, text: str) -> bool:
        if self._current.kind == "op" and self._current.text == text:
            self._index += 1
            return True
        return False

    def parse(self) -> MultiPoly:
        if self._current.kind == "end":
            raise PolySyntaxError("Empty expression", 0)
        result = self._expr()
        if self._current.kind != "end":
            raise PolySyntaxError(f"Unexpected {self._current.text!r}", self._current.position)
        return result

    def _expr(self) -> MultiPoly:
        result = self._term()
        while True:
            if self._accept("+"):
                result = result + self._term()
            elif self._accept("-"):
                result = result - self._term()
            else:
                return result

    def _term(self) -> MultiPoly:
        result = self._unary()
        while True:
            if self._accept("*"):
                result = result * self._unary()
            elif self._current.kind == "op" and self._current.text == "/":
                position = self._current.position
                self._index += 1
                divisor = self._unary()
                if not divisor.is_ground or not divisor:
                    raise PolySyntaxError("Division by a non-constant or zero", position)
                result = result.quo_ground(divisor.LC)
            else:
                return result

    def _unary(self) -> MultiPoly:
        if self._accept("-"):
            return -self._unary()
        if self._accept("+"):
            return self._unary()
        return self._power()

    def _power(self) -> MultiPoly:
        base = self._atom()
        if self._accept("^"):
            token = self._current
            if token.kind != "num":
                raise PolySyntaxError("Exponent must be a non-negative integer", token.position)
            self._index += 1
            return base ** int(token.text)
        return base

    def _atom(self) -> MultiPoly:
        token = self._current
        if token.kind == "num":
            self._index += 1
            return RING(int(token.text))
        if token.kind == "name":
            self._index += 1
            if token.text == "i":
                return RING(QQ_I(0, 1))
            return GENS[token.text]
        if self._accept("("):
            inner = self._expr()
            if not self._accept(")"):
                raise PolySyntaxError("Missing ')'", self._current.position)
            return inner
        raise PolySyntaxError(
            f"Unexpected {token.text or 'end of input'!r}", token.position
        )


def parse_poly(text: str, context: Context = None) -> MultiPoly | UniPoly:
    """Parse polynomial text.

    Args:
        text: Text in the polynomial grammar.
        context: ``"P"`` for a univariate polynomial in x, ``"Q"`` for one in u,
            None for an unrestricted polynomial.

    Raises:
        PolySyntaxError: On malformed text.
        WrongVariableError: On a variable outside the context.
    """
    poly = _Parser(text).parse()
    if context is None:
        return poly
    var = _CONTEXT_VAR[context]
    used = {name for name in _NAMES if poly.degree(GENS[name]) > 0}
    if used - {var}:
        raise WrongVariableError(
            f"{context} must be a polynomial in {var} only, found {', '.join(sorted(used - {var}))}"
        )
    return UniPoly.from_poly(poly, var)


def format_coeff(c: GaussRat) -> str:
    """Format a coefficient in the grammar."""
    re_part, im_part = gauss_parts(c)
    if not im_part:
        return str(re_part)
    imag = "i" if im_part == 1 else "-i" if im_part == -1 else f"{im_part}*i"
    if not re_part:
        return imag
    sign = "-" if im_part < 0 else "+"
    magnitude = "i" if abs(im_part) == 1 else f"{abs(im_part)}*i"
    return f"({re_part} {sign} {magnitude})"


def _format_monomial(monom: tuple[int, ...]) -> str:
    factors = []
    for name in _PRINT_ORDER:
        power = monom[INDEX[name]]
        if power == 1:
            factors.append(name)
        elif power > 1:
            factors.append(f"{name}^{power}")
    return "*".join(factors)


def format_poly(p: MultiPoly | UniPoly) -> str:
    """Print a polynomial deterministically, terms in monomial order."""
    if isinstance(p, UniPoly):
        p = p.as_poly()
    if not p:
        return "0"
    out: list[str] = []
    for monom, coeff in p.terms():
        re_part, im_part = gauss_parts(coeff)
        negative = re_part < 0 or (not re_part and im_part < 0)
        magnitude = QQ_I.convert(-coeff) if negative else coeff
        mono = _format_monomial(monom)
        text = format_coeff(magnitude)
        if mono:
            text = mono if text == "1" else f"{text}*{mono}"
        if not out:
            out.append(f"-{text}" if negative else text)
        else:
            out.append(f" - {text}" if negative else f" + {text}")
    return "".join(out)


def parse_value(text: str) -> GaussRat | complex:
    """Parse a point coordinate: exact grammar constant or complex float ``a+bi``."""
    stripped = text.strip()
    try:
        poly = _Parser(stripped).parse()
    except PolySyntaxError:
        poly = None
    if poly is not None and (not poly or poly.is_ground):
        return poly.LC if poly else QQ_I.zero
    try:
        return complex(stripped.replace(" ", "").replace("i", "j"))
    except ValueError as err:
        raise PolySyntaxError(f"Cannot read coordinate {stripped!r}", 0) from err


def parse_point_text(text: str) -> tuple[GaussRat | complex, ...]:
    """Parse ``x,y,u,v`` into four coordinates."""
    parts = text.split(",")
    if len(parts) != 4:
        raise PolySyntaxError(f"Expected four comma separated coordinates, got {len(parts)}", 0)
    return tuple(parse_value(part) for part in parts)


def format_complex(z: complex) -> str:
    """Format a complex float as ``a+bi``."""
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"
