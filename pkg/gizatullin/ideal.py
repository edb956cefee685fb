"""Gröbner bases, normal forms and division by monomials modulo an ideal."""

from __future__ import annotations

import itertools
import logging
import threading
from collections.abc import Sequence
from dataclasses import dataclass, field

from .algebra import RING, Monomial, MultiPoly, monomial_poly

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class MonomialOrder:
    """Degree reverse lexicographic order with y > v > x > u."""

    kind: str = "degrevlex"
    precedence: tuple[str, ...] = ("y", "v", "x", "u")

    def key(self, monom: Monomial) -> tuple:
        return RING.order(monom)


ORDER = MonomialOrder()


@dataclass(frozen=True)
class NFResult:
    """Remainder and per-basis-element cofactors of a reduction."""

    remainder: MultiPoly
    cofactors: tuple[MultiPoly, ...]

    @property
    def in_ideal(self) -> bool:
        return not self.remainder


@dataclass(frozen=True)
class GroebnerBasis:
    """Reduced Gröbner basis with each element expressed in the source generators."""

    generators: tuple[MultiPoly, ...]
    source: tuple[MultiPoly, ...]
    representations: tuple[tuple[MultiPoly, ...], ...]
    _augmented: dict[Monomial, GroebnerBasis] = field(
        default_factory=dict, compare=False, repr=False
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def lift(self, cofactors: Sequence[MultiPoly]) -> tuple[MultiPoly, ...]:
        """Turn cofactors against the basis into cofactors against the source."""
        out = [RING.zero] * len(self.source)
        for c, rep in zip(cofactors, self.representations, strict=True):
            if not c:
                continue
            for j, r in enumerate(rep):
                if r:
                    out[j] += c * r
        return tuple(out)

    def reduce(self, p: MultiPoly) -> MultiPoly:
        """Return the normal form of p."""
        return normal_form(p, self).remainder

    def contains(self, p: MultiPoly) -> bool:
        return not self.reduce(p)

    def augmented(self, m: Monomial) -> GroebnerBasis:
        """Basis of the source generators together with the monomial m (cached)."""
        with self._lock:
            cached = self._augmented.get(m)
        if cached is not None:
            return cached
        basis = buchberger((*self.source, monomial_poly(m)))
        with self._lock:
            self._augmented[m] = basis
        return basis


class _Tracked:
    """Polynomial together with its representation in the source generators."""

    __slots__ = ("poly", "rep")

    def __init__(self, poly: MultiPoly, rep: list[MultiPoly]) -> None:
        self.poly = poly
        self.rep = rep

    def monic(self) -> _Tracked:
        lc = self.poly.LC
        return _Tracked(self.poly.quo_ground(lc), [r.quo_ground(lc) for r in self.rep])


def _divide(
    p: MultiPoly, divisors: Sequence[MultiPoly]
) -> tuple[list[MultiPoly], MultiPoly]:
    """Full multivariate division of p by monic divisors."""
    quotients = [RING.zero] * len(divisors)
    remainder = RING.zero
    leads = [d.LM for d in divisors]
    while p:
        lm = p.LM
        lc = p.LC
        for i, lead in enumerate(leads):
            shift = RING.monomial_div(lm, lead)
            if shift is not None:
                quotients[i] = quotients[i] + RING.term_new(shift, lc)
                p = p - divisors[i].mul_term((shift, lc))
                break
        else:
            remainder = remainder + RING.term_new(lm, lc)
            p = p - RING.term_new(lm, lc)
    return quotients, remainder


def _reduce_tracked(item: _Tracked, basis: Sequence[_Tracked]) -> _Tracked:
    quotients, remainder = _divide(item.poly, [b.poly for b in basis])
    rep = list(item.rep)
    for q, b in zip(quotients, basis, strict=True):
        if q:
            rep = [r - q * br for r, br in zip(rep, b.rep, strict=True)]
    return _Tracked(remainder, rep)


def _spoly(a: _Tracked, b: _Tracked) -> _Tracked:
    lcm = RING.monomial_lcm(a.poly.LM, b.poly.LM)
    ma = RING.monomial_div(lcm, a.poly.LM)
    mb = RING.monomial_div(lcm, b.poly.LM)
    return _Tracked(
        a.poly.mul_monom(ma) - b.poly.mul_monom(mb),
        [ra.mul_monom(ma) - rb.mul_monom(mb) for ra, rb in zip(a.rep, b.rep, strict=True)],
    )


def buchberger(gens: Sequence[MultiPoly]) -> GroebnerBasis:
    """Compute the reduced Gröbner basis of gens with cofactor tracking.

    Pairs are processed lowest lcm total degree first, ties broken by the
    order in which they were created. Pairs with coprime leading monomials
    are skipped.

    Args:
        gens: Nonzero generators.

    Returns:
        The reduced, monic basis. Each element carries its expression in gens.
    """
    source = tuple(RING.ring_new(g) for g in gens)
    n = len(source)
    basis: list[_Tracked] = []
    for i, g in enumerate(source):
        if not g:
            continue
        rep = [RING.zero] * n
        rep[i] = RING.one
        basis.append(_Tracked(g, rep).monic())

    counter = itertools.count()
    pairs: list[tuple[int, int, int, int]] = []

    def add_pairs(new: int) -> None:
        for old in range(new):
            lead_a = basis[old].poly.LM
            lead_b = basis[new].poly.LM
            lcm = RING.monomial_lcm(lead_a, lead_b)
            if RING.monomial_mul(lead_a, lead_b) == lcm:
                continue
            pairs.append((sum(lcm), next(counter), old, new))

    for i in range(len(basis)):
        add_pairs(i)

    processed = 0
    while pairs:
        pairs.sort()
        _, _, a, b = pairs.pop(0)
        processed += 1
        h = _reduce_tracked(_spoly(basis[a], basis[b]), basis)
        if h.poly:
            basis.append(h.monic())
            add_pairs(len(basis) - 1)
    _LOGGER.debug("Buchberger processed %s pairs, %s elements before reduction", processed, len(basis))

    # Drop elements whose leading monomial is divisible by another's
    minimal: list[_Tracked] = []
    for i, item in enumerate(basis):
        lead = item.poly.LM
        redundant = False
        for j, other in enumerate(basis):
            if i == j:
                continue
            other_lead = other.poly.LM
            if RING.monomial_div(lead, other_lead) is not None and (
                other_lead != lead or j < i
            ):
                redundant = True
                break
        if not redundant:
            minimal.append(item)

    reduced: list[_Tracked] = []
    for i, item in enumerate(minimal):
        others = minimal[:i] + minimal[i + 1 :]
        reduced.append(_reduce_tracked(item, others).monic())

    reduced.sort(key=lambda t: RING.order(t.poly.LM), reverse=True)
    return GroebnerBasis(
        generators=tuple(t.poly for t in reduced),
        source=source,
        representations=tuple(tuple(t.rep) for t in reduced),
    )


def normal_form(p: MultiPoly, gb: GroebnerBasis) -> NFResult:
    """Reduce p by the basis, returning remainder and cofactors.

    The result satisfies p = sum(cofactors[i] * gb.generators[i]) + remainder.
    """
    quotients, remainder = _divide(RING.ring_new(p), gb.generators)
    return NFResult(remainder=remainder, cofactors=tuple(quotients))


def divide_by_monomial_mod(f: MultiPoly, m: Monomial, gb: GroebnerBasis) -> MultiPoly | None:
    """Find g with f - m*g in the ideal of gb.source, or None.

    The cofactor of m in a standard representation of f over the augmented
    ideal is the candidate; it is accepted only after f - m*g reduces to
    zero against gb.
    """
    if not f:
        return RING.zero
    augmented = gb.augmented(m)
    result = normal_form(f, augmented)
    if not result.in_ideal:
        return None
    lifted = augmented.lift(result.cofactors)
    g = gb.reduce(lifted[-1])
    if gb.reduce(f - monomial_poly(m) * g):
        _LOGGER.warning("Monomial division candidate failed re-verification for %s", m)
        return None
    return g


def s_polynomial(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    lcm = tuple(max(i, j) for i, j in zip(a.LM, b.LM, strict=True))
    ta = tuple(l - i for l, i in zip(lcm, a.LM, strict=True))
    tb = tuple(l - j for l, j in zip(lcm, b.LM, strict=True))
    return monomial_poly(ta) * a.monic() - monomial_poly(tb) * b.monic()


def is_groebner(gb: GroebnerBasis) -> bool:
    """Every S-polynomial of basis pairs and every source generator reduces to zero."""
    pairs = itertools.combinations(gb.generators, 2)
    if any(gb.reduce(s_polynomial(a, b)) for a, b in pairs):
        return False
    return all(gb.contains(g) for g in gb.source)
