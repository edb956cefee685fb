"""Derivations of the coordinate ring and the catalog of complete fields."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

from .algebra import (
    COORDS,
    GENS,
    RING,
    GaussRat,
    GizatullinError,
    MultiPoly,
    exact_divide,
)
from .const import (
    CATALOG_IDS,
    CHART_CHI,
    CHART_PHI,
    CHART_PSI,
    CHI_XU_DU,
    CHI_XU_DX,
    PHI_XY_DX,
    PHI_XY_DY,
    PHI_Y2_DX,
    PHI_Y_DX_LND,
    PSI_UV_DU,
    PSI_UV_DV,
    PSI_V2_DU,
    PSI_V_DU_LND,
    REASON_CHART_FLOW,
    REASON_LND,
)
from .ideal import normal_form
from .surface import AmbientField, Surface, pushforward

_LOGGER = logging.getLogger(__name__)

Verdict = Literal["yes", "no", "unknown"]

x, y, u, v = (GENS[name] for name in COORDS)

# Chart and chart-field coefficients of every catalog entry
CHART_FIELDS: dict[str, tuple[str, tuple[MultiPoly, MultiPoly]]] = {
    PHI_Y2_DX: (CHART_PHI, (y**2, RING.zero)),
    PHI_XY_DX: (CHART_PHI, (x * y, RING.zero)),
    PHI_XY_DY: (CHART_PHI, (RING.zero, x * y)),
    PSI_V2_DU: (CHART_PSI, (v**2, RING.zero)),
    PSI_UV_DU: (CHART_PSI, (u * v, RING.zero)),
    PSI_UV_DV: (CHART_PSI, (RING.zero, u * v)),
    CHI_XU_DX: (CHART_CHI, (x * u, RING.zero)),
    CHI_XU_DU: (CHART_CHI, (RING.zero, x * u)),
    PHI_Y_DX_LND: (CHART_PHI, (y, RING.zero)),
    PSI_V_DU_LND: (CHART_PSI, (v, RING.zero)),
}


class TangencyError(GizatullinError):
    """Error to indicate a tangency witness failed to re-verify."""


class PolynomializationError(GizatullinError):
    """Error to indicate a field expected to extend did not polynomialize."""


@dataclass(frozen=True)
class Derivation:
    """Polynomial vector field tangent to the surface.

    ``witnesses[i][j]`` is the cofactor of generator j in V(g_i).
    """

    surface: Surface
    components: tuple[MultiPoly, MultiPoly, MultiPoly, MultiPoly]
    witnesses: tuple[tuple[MultiPoly, ...], ...]

    def apply(self, f: MultiPoly) -> MultiPoly:
        """V(f) in normal form."""
        total = RING.zero
        for name, comp in zip(COORDS, self.components, strict=True):
            if comp:
                partial = f.diff(GENS[name])
                if partial:
                    total += comp * partial
        return self.surface.reduce(total)

    def apply_raw(self, f: MultiPoly) -> MultiPoly:
        total = RING.zero
        for name, comp in zip(COORDS, self.components, strict=True):
            if comp:
                total += comp * f.diff(GENS[name])
        return total

    def verify(self) -> bool:
        """Re-check V(g_i) = sum_j c_ij g_j as exact polynomial identities."""
        gens = self.surface.generators
        for g, cofactors in zip(gens, self.witnesses, strict=True):
            combo = RING.zero
            for c, h in zip(cofactors, gens, strict=True):
                combo += c * h
            if self.apply_raw(g) != combo:
                return False
        return True

    @property
    def is_zero(self) -> bool:
        return not any(self.components)

    def as_field(self) -> AmbientField:
        return AmbientField.from_polys(*self.components)

    def __add__(self, other: Derivation) -> Derivation:
        return Derivation(
            self.surface,
            tuple(a + b for a, b in zip(self.components, other.components, strict=True)),
            tuple(
                tuple(a + b for a, b in zip(wa, wb, strict=True))
                for wa, wb in zip(self.witnesses, other.witnesses, strict=True)
            ),
        )

    def scale(self, c: GaussRat | int) -> Derivation:
        return Derivation(
            self.surface,
            tuple(comp * c for comp in self.components),
            tuple(tuple(w * c for w in ws) for ws in self.witnesses),
        )

    def __neg__(self) -> Derivation:
        return self.scale(-1)

    def __sub__(self, other: Derivation) -> Derivation:
        return self + (-other)

    def multiply(self, f: MultiPoly) -> Derivation:
        """The product f*V, re-certified."""
        return require_tangent(
            AmbientField.from_polys(*(f * comp for comp in self.components)), self.surface
        )


def tangency_check(V: AmbientField, S: Surface) -> Derivation | None:
    """Certify that a polynomial field is tangent to S.

    Returns:
        A Derivation with normal-form components and witnesses, or None when
        some V(g_i) is outside the ideal.
    """
    polys = tuple(S.reduce(c) for c in V.polys)
    candidate = Derivation(S, polys, ())
    witnesses = []
    for g in S.generators:
        result = normal_form(candidate.apply_raw(g), S.gb)
        if not result.in_ideal:
            return None
        witnesses.append(S.gb.lift(result.cofactors))
    derivation = Derivation(S, polys, tuple(witnesses))
    if not derivation.verify():
        raise TangencyError("Tangency witnesses failed to re-verify")
    return derivation


def require_tangent(V: AmbientField, S: Surface) -> Derivation:
    derivation = tangency_check(V, S)
    if derivation is None:
        raise TangencyError("Field is not tangent to the surface")
    return derivation


def chart_derivation(
    S: Surface, chart: str, chart_field: tuple[MultiPoly, MultiPoly]
) -> Derivation:
    """Push a chart field forward and certify it.

    Raises:
        PolynomializationError: If the push-forward keeps a denominator.
        TangencyError: If the result is not tangent.
    """
    field = pushforward(S, chart, chart_field)
    if not field.is_polynomial:
        raise PolynomializationError(f"Chart field on {chart} does not extend to {S}")
    return require_tangent(field, S)


def bracket(V: Derivation, W: Derivation) -> Derivation:
    """Lie bracket [V, W] with components V(W_j) - W(V_j).

    Raises:
        TangencyError: If the recomputed witnesses do not verify.
    """
    S = V.surface
    comps = tuple(
        V.apply(wj) - W.apply(vj) for vj, wj in zip(V.components, W.components, strict=True)
    )
    return require_tangent(AmbientField.from_polys(*comps), S)


@dataclass(frozen=True)
class CatalogEntry:
    """A certified complete field with the reason it is complete."""

    id: str
    derivation: Derivation
    reason: str


def catalog(S: Surface) -> list[CatalogEntry]:
    """The eight chart fields plus the LND fields present on S.

    Raises:
        PolynomializationError: If a catalog field fails to extend.
    """
    return S.cached("catalog", lambda: _build_catalog(S))


def _build_catalog(S: Surface) -> list[CatalogEntry]:
    entries = []
    for field_id in CATALOG_IDS:
        if field_id == PHI_Y_DX_LND and not S.p0_zero:
            continue
        if field_id == PSI_V_DU_LND and not S.q0_zero:
            continue
        chart, chart_field = CHART_FIELDS[field_id]
        derivation = chart_derivation(S, chart, chart_field)
        reason = REASON_LND if field_id in (PHI_Y_DX_LND, PSI_V_DU_LND) else REASON_CHART_FLOW
        entries.append(CatalogEntry(field_id, derivation, reason))
    _LOGGER.debug("Catalog for %s has %s entries", S, len(entries))
    return entries


def catalog_entry(S: Surface, field_id: str) -> CatalogEntry:
    """Look up a catalog entry by id.

    Raises:
        KeyError: If the id is not in the catalog of S.
    """
    for entry in catalog(S):
        if entry.id == field_id:
            return entry
    raise KeyError(f"{field_id} is not in the catalog of {S}")


def shear_complete(theta: Derivation, f: MultiPoly) -> bool:
    """True iff theta(theta(f)) vanishes on the surface, so f*theta is complete."""
    return not theta.apply(theta.apply(f))


def locally_nilpotent(V: Derivation, cap: int) -> Verdict:
    """Test local nilpotency on the coordinate functions.

    ``yes`` when V kills each of x, y, u, v within cap applications; ``no``
    when some iterate h satisfies V(h) = q*h with q nonzero (impossible for a
    locally nilpotent derivation); ``unknown`` otherwise.
    """
    verdict: Verdict = "yes"
    for name in COORDS:
        current = V.surface.reduce(GENS[name])
        for _ in range(cap):
            image = V.apply(current)
            if not image:
                break
            if current:
                quotient = exact_divide(image, current)
                if quotient:
                    _LOGGER.debug("Eigen pattern on %s: V(h) is a multiple of h", name)
                    return "no"
            current = image
        else:
            verdict = "unknown"
    return verdict
