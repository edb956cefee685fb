"""The surfaces S_{P,Q}, their points, charts and ambient vector fields."""

from __future__ import annotations

import logging
import threading
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from sympy import QQ_I
from sympy.polys.matrices import DomainMatrix

from .algebra import (
    COORDS,
    GENS,
    RING,
    U,
    X,
    GaussRat,
    GizatullinError,
    MonomialFraction,
    MultiPoly,
    UniPoly,
    eval_complex,
    simple_roots,
    swap_poly,
    to_complex,
)
from .const import CHART_CHI, CHART_PHI, CHART_PSI, DEFAULT_RESIDUAL_TOL
from .ideal import GroebnerBasis, buchberger, divide_by_monomial_mod

_LOGGER = logging.getLogger(__name__)

PointKind = Literal["exact", "numeric"]


class InvalidSurfaceError(GizatullinError):
    """Error to indicate P or Q cannot define a surface of this family."""


class ChartDomainError(GizatullinError):
    """Error to indicate chart parameters outside the chart domain."""


class SingularPointError(GizatullinError):
    """Error to indicate the Jacobian does not have rank two at a point."""


class NotOnSurfaceError(GizatullinError):
    """Error to indicate a point does not satisfy the surface equations."""


@dataclass(frozen=True)
class Surface:
    """S_{P,Q}: yu = xP(x), xv = uQ(u), yv = P(x)Q(u)."""

    P: UniPoly
    Q: UniPoly
    generators: tuple[MultiPoly, MultiPoly, MultiPoly]
    gb: GroebnerBasis = field(compare=False, repr=False)
    smooth: bool = field(compare=False)
    p0_zero: bool = field(compare=False)
    q0_zero: bool = field(compare=False)
    simple_p: bool = field(compare=False, repr=False)
    simple_q: bool = field(compare=False, repr=False)
    cache: dict[Any, Any] = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.RLock = field(
        default_factory=threading.RLock, init=False, compare=False, repr=False
    )

    def cached(self, key: Any, build: Callable[[], Any]) -> Any:
        """Return cache[key], building it once under the surface lock."""
        with self._lock:
            if key not in self.cache:
                self.cache[key] = build()
            return self.cache[key]

    @property
    def P_x(self) -> MultiPoly:
        return self.P.as_poly()

    @property
    def Q_u(self) -> MultiPoly:
        return self.Q.as_poly()

    @property
    def dP_x(self) -> MultiPoly:
        return self.P.derivative().as_poly()

    @property
    def dQ_u(self) -> MultiPoly:
        return self.Q.derivative().as_poly()

    def reduce(self, p: MultiPoly) -> MultiPoly:
        return self.gb.reduce(p)

    def contains(self, p: MultiPoly) -> bool:
        return self.gb.contains(p)

    def singular_reason(self) -> str | None:
        """Name the violated smoothness condition, None when smooth."""
        reasons = []
        if not self.simple_p:
            reasons.append("P has non-simple roots")
        if not self.simple_q:
            reasons.append("Q has non-simple roots")
        if self.p0_zero and self.q0_zero:
            reasons.append("P(0) = Q(0) = 0")
        return "; ".join(reasons) or None

    def __str__(self) -> str:
        from .grammar import format_poly

        return f"S[P={format_poly(self.P)}, Q={format_poly(self.Q)}]"


def make_surface(P: UniPoly, Q: UniPoly) -> Surface:
    """Build S_{P,Q} with its Gröbner basis and smoothness flags.

    Raises:
        InvalidSurfaceError: If P or Q is constant.
    """
    if P.degree < 1 or Q.degree < 1:
        raise InvalidSurfaceError(
            "P and Q must have degree at least one (constant P or Q gives a Danielewski surface)"
        )
    P = P.in_var("x")
    Q = Q.in_var("u")
    Px = P.as_poly()
    Qu = Q.as_poly()
    g1 = GENS["y"] * U - X * Px
    g2 = X * GENS["v"] - U * Qu
    g3 = GENS["y"] * GENS["v"] - Px * Qu
    gb = buchberger((g1, g2, g3))
    simple_p = simple_roots(P)
    simple_q = simple_roots(Q)
    p0_zero = not P.at_zero()
    q0_zero = not Q.at_zero()
    smooth = simple_p and simple_q and not (p0_zero and q0_zero)
    _LOGGER.debug("Surface basis has %s elements, smooth=%s", len(gb.generators), smooth)
    return Surface(
        P=P,
        Q=Q,
        generators=(g1, g2, g3),
        gb=gb,
        smooth=smooth,
        p0_zero=p0_zero,
        q0_zero=q0_zero,
        simple_p=simple_p,
        simple_q=simple_q,
    )


# --- points ---

Value = GaussRat | complex


def _is_exact(value: Any) -> bool:
    return not isinstance(value, complex | float)


def eval_exact(p: MultiPoly, values: Mapping[str, GaussRat]) -> GaussRat:
    """Evaluate p exactly at Gaussian rational values."""
    image = p.compose([(GENS[name], RING(value)) for name, value in values.items()])
    if image and not image.is_ground:
        raise NotOnSurfaceError("Exact evaluation left unassigned variables")
    return image.LC if image else QQ_I.zero


@dataclass(frozen=True)
class SurfacePoint:
    """Point (x, y, u, v), exact or numeric."""

    coords: tuple[Value, Value, Value, Value]
    kind: PointKind = "exact"
    residual_tol: float = 0.0

    def as_dict(self) -> dict[str, Value]:
        return dict(zip(COORDS, self.coords, strict=True))

    def to_numpy(self) -> np.ndarray:
        return np.array([self.complex_coord(i) for i in range(4)], dtype=complex)

    def complex_coord(self, index: int) -> complex:
        value = self.coords[index]
        return complex(value) if not _is_exact(value) else to_complex(value)

    def numeric(self, tol: float = DEFAULT_RESIDUAL_TOL) -> SurfacePoint:
        return SurfacePoint(tuple(self.to_numpy()), "numeric", tol)

    def __getattr__(self, name: str) -> Value:
        if name in COORDS:
            return self.coords[COORDS.index(name)]
        raise AttributeError(name)


def residuals(S: Surface, z: np.ndarray) -> np.ndarray:
    """Absolute values of the three generators at a numeric point."""
    point = dict(zip(COORDS, z, strict=True))
    return np.array([abs(eval_complex(g, point)) for g in S.generators])


def make_point(
    S: Surface, coords: Sequence[Value], tol: float = DEFAULT_RESIDUAL_TOL
) -> SurfacePoint:
    """Validate coordinates against the surface equations.

    Raises:
        NotOnSurfaceError: If the point is off the surface.
    """
    if len(coords) != 4:
        raise NotOnSurfaceError(f"Expected four coordinates, got {len(coords)}")
    if all(_is_exact(c) for c in coords):
        exact = tuple(QQ_I.convert(c) for c in coords)
        values = dict(zip(COORDS, exact, strict=True))
        if any(eval_exact(g, values) for g in S.generators):
            raise NotOnSurfaceError(f"Point {coords} does not lie on {S}")
        return SurfacePoint(exact, "exact", 0.0)
    z = np.array([complex(c) if not _is_exact(c) else to_complex(c) for c in coords])
    worst = float(residuals(S, z).max())
    if worst > tol:
        raise NotOnSurfaceError(f"Point residual {worst:.3e} exceeds tolerance {tol:.1e}")
    return SurfacePoint(tuple(complex(c) for c in z), "numeric", tol)


# --- charts ---


@dataclass(frozen=True)
class Chart:
    """A parametrization of a dense open subset of the surface.

    Each solved coordinate w satisfies d*w = N where d is a chart parameter
    and N is a polynomial in the parameters and earlier solved coordinates.
    """

    tag: str
    params: tuple[str, str]
    solved: tuple[tuple[str, str, MultiPoly], ...]
    nonzero: tuple[str, ...]

    def forward_fractions(self) -> dict[str, MonomialFraction]:
        """Solved coordinates as fractions in the parameters only."""
        images: dict[str, MonomialFraction] = {}
        for var, den, num in self.solved:
            numerator = MonomialFraction.of(num).substitute(images)
            images[var] = numerator * MonomialFraction(RING.one, GENS[den].LM)
        return images


def _build_chart(S: Surface, tag: str) -> Chart:
    Px, Qu = S.P_x, S.Q_u
    if tag == CHART_PHI:
        chart = Chart(tag, ("x", "y"), (("u", "y", X * Px), ("v", "y", Px * Qu)), ("y",))
    elif tag == CHART_PSI:
        chart = Chart(tag, ("u", "v"), (("x", "v", U * Qu), ("y", "v", Qu * Px)), ("v",))
    elif tag == CHART_CHI:
        chart = Chart(tag, ("x", "u"), (("y", "u", X * Px), ("v", "x", U * Qu)), ("x", "u"))
    else:
        raise ChartDomainError(f"Unknown chart {tag!r}")
    images = chart.forward_fractions()
    for g in S.generators:
        residual = MonomialFraction.of(g).substitute(images)
        if residual.num:
            raise GizatullinError(f"Chart {tag} does not land on {S}")
    return chart


def get_chart(S: Surface, tag: str) -> Chart:
    """Return the chart with the given tag, verified on first use."""
    return S.cached(f"chart:{tag}", lambda: _build_chart(S, tag))


def chart_embed(S: Surface, chart: Chart | str, params: Sequence[Value]) -> SurfacePoint:
    """Map chart parameters to a point of S.

    Raises:
        ChartDomainError: If a parameter required to be nonzero vanishes.
    """
    if isinstance(chart, str):
        chart = get_chart(S, chart)
    values: dict[str, Value] = dict(zip(chart.params, params, strict=True))
    exact = all(_is_exact(p) for p in params)
    if exact:
        values = {k: QQ_I.convert(v) for k, v in values.items()}
    for name in chart.nonzero:
        value = values[name]
        if (not value) if exact else abs(complex(value)) == 0:
            raise ChartDomainError(f"Chart {chart.tag} requires {name} != 0")
    for var, den, num in chart.solved:
        if exact:
            values[var] = QQ_I.exquo(eval_exact(num, values), values[den])
        else:
            numeric = {k: complex(v) for k, v in values.items()}
            values[var] = eval_complex(num, numeric) / numeric[den]
    coords = tuple(values[name] for name in COORDS)
    if exact:
        return SurfacePoint(coords, "exact", 0.0)
    return SurfacePoint(tuple(complex(c) for c in coords), "numeric", DEFAULT_RESIDUAL_TOL)


def chart_coords(chart: Chart, p: SurfacePoint) -> tuple[Value, Value]:
    """Project a point to the chart parameters."""
    return (getattr(p, chart.params[0]), getattr(p, chart.params[1]))


# --- ambient vector fields ---


@dataclass(frozen=True)
class AmbientField:
    """Vector field on 4-space, components along x, y, u, v."""

    components: tuple[MonomialFraction, MonomialFraction, MonomialFraction, MonomialFraction]

    @classmethod
    def from_polys(cls, *polys: MultiPoly) -> AmbientField:
        return cls(tuple(MonomialFraction.of(p) for p in polys))

    @classmethod
    def zero(cls) -> AmbientField:
        return cls.from_polys(RING.zero, RING.zero, RING.zero, RING.zero)

    @property
    def is_polynomial(self) -> bool:
        return all(c.is_polynomial for c in self.components)

    @property
    def polys(self) -> tuple[MultiPoly, ...]:
        if not self.is_polynomial:
            raise GizatullinError("Field has non-trivial denominators")
        return tuple(c.num for c in self.components)

    def apply(self, f: MultiPoly) -> MonomialFraction:
        """Derivative of f along the field."""
        total = MonomialFraction(RING.zero)
        for name, comp in zip(COORDS, self.components, strict=True):
            partial = f.diff(GENS[name])
            if partial:
                total = total + comp * partial
        return total

    def __add__(self, other: AmbientField) -> AmbientField:
        return AmbientField(
            tuple(a + b for a, b in zip(self.components, other.components, strict=True))
        )

    def __neg__(self) -> AmbientField:
        return AmbientField(tuple(-c for c in self.components))

    def __sub__(self, other: AmbientField) -> AmbientField:
        return self + (-other)

    def scale(self, f: MultiPoly | MonomialFraction | GaussRat | int) -> AmbientField:
        factor = MonomialFraction.of(f)
        return AmbientField(tuple(c * factor for c in self.components))

    def swap(self) -> AmbientField:
        """Transport along (x, y, u, v) -> (u, v, x, y)."""
        cx, cy, cu, cv = self.components
        return AmbientField(tuple(_swap_fraction(c) for c in (cu, cv, cx, cy)))

    def eval_complex(self, point: Mapping[str, complex]) -> np.ndarray:
        return np.array([c.eval_complex(point) for c in self.components], dtype=complex)


def _swap_fraction(c: MonomialFraction) -> MonomialFraction:
    den = c.den
    return MonomialFraction(swap_poly(c.num), (den[1], den[0], den[3], den[2], den[4]))


ChartField = tuple[MultiPoly | MonomialFraction, MultiPoly | MonomialFraction]


def chart_partials(chart: Chart) -> dict[str, dict[str, MonomialFraction]]:
    """Partial derivatives of solved coordinates by implicit differentiation.

    From d*w = N: dw/dp = (dN/dp + sum dN/dw' * dw'/dp - w * dd/dp) / d, with
    earlier solved coordinates w' kept as ambient variables.
    """
    partials: dict[str, dict[str, MonomialFraction]] = {}
    for var, den, num in chart.solved:
        partials[var] = {}
        inverse = MonomialFraction(RING.one, GENS[den].LM)
        for param in chart.params:
            total = MonomialFraction.of(num.diff(GENS[param]))
            for earlier, earlier_partials in partials.items():
                if earlier == var:
                    continue
                total = total + earlier_partials[param] * num.diff(GENS[earlier])
            if param == den:
                total = total - GENS[var]
            partials[var][param] = total * inverse
    return partials


def polynomialize(S: Surface, V: AmbientField) -> AmbientField:
    """Clear monomial denominators modulo the ideal where possible.

    Components that cannot be polynomialized keep their rational form.
    """
    components = []
    for comp in V.components:
        if comp.is_polynomial:
            components.append(MonomialFraction(S.reduce(comp.num)))
            continue
        g = divide_by_monomial_mod(comp.num, comp.den, S.gb)
        if g is None:
            _LOGGER.debug("Component with denominator %s did not polynomialize", comp.den)
            components.append(comp)
        else:
            components.append(MonomialFraction(g))
    return AmbientField(tuple(components))


def pushforward(S: Surface, chart: Chart | str, chart_field: ChartField) -> AmbientField:
    """Express a chart vector field as an ambient field.

    Args:
        S: The surface.
        chart: Chart or chart tag.
        chart_field: Coefficients of the two parameter derivations. They may
            involve ambient coordinates, read as functions on the chart.

    Returns:
        The polynomialized field when every component polynomializes,
        otherwise the rational form.
    """
    if isinstance(chart, str):
        chart = get_chart(S, chart)
    coeffs = dict(zip(chart.params, (MonomialFraction.of(c) for c in chart_field), strict=True))
    partials = chart_partials(chart)
    by_name: dict[str, MonomialFraction] = dict(coeffs)
    for var, _, _ in chart.solved:
        total = MonomialFraction(RING.zero)
        for param, coeff in coeffs.items():
            total = total + coeff * partials[var][param]
        by_name[var] = total
    rational = AmbientField(tuple(by_name[name] for name in COORDS))
    polished = polynomialize(S, rational)
    return polished if polished.is_polynomial else rational


# --- tangent spaces ---


def jacobian_exact(S: Surface, p: SurfacePoint) -> DomainMatrix:
    values = p.as_dict()
    rows = [
        [eval_exact(g.diff(GENS[name]), values) for name in COORDS] for g in S.generators
    ]
    return DomainMatrix(rows, (3, 4), QQ_I)


def tangent_basis(S: Surface, p: SurfacePoint) -> tuple[tuple[Value, ...], tuple[Value, ...]]:
    """Two vectors spanning the tangent plane at p.

    Raises:
        SingularPointError: If the Jacobian rank differs from two.
    """
    if p.kind == "exact":
        jac = jacobian_exact(S, p)
        rank = jac.rank()
        if rank != 2:
            raise SingularPointError(f"Jacobian has rank {rank} at {p.coords}")
        kernel = jac.nullspace().to_list()
        return tuple(kernel[0]), tuple(kernel[1])
    point = dict(zip(COORDS, p.to_numpy(), strict=True))
    jac_n = np.array(
        [[eval_complex(g.diff(GENS[name]), point) for name in COORDS] for g in S.generators]
    )
    _, sigma, vh = np.linalg.svd(jac_n)
    scale = max(1.0, float(sigma[0]))
    rank = int(np.sum(sigma > 1e-9 * scale))
    if rank != 2:
        raise SingularPointError(f"Jacobian has numeric rank {rank} at {p.coords}")
    return tuple(vh[2].conj()), tuple(vh[3].conj())


# --- symmetry ---


@dataclass(frozen=True)
class SwapResult:
    """The swapped surface and the transport maps onto it."""

    surface: Surface

    @staticmethod
    def point(p: SurfacePoint) -> SurfacePoint:
        x, y, u, v = p.coords
        return SurfacePoint((u, v, x, y), p.kind, p.residual_tol)

    @staticmethod
    def field(V: AmbientField) -> AmbientField:
        return V.swap()

    @staticmethod
    def poly(f: MultiPoly) -> MultiPoly:
        return swap_poly(f)


def swap_symmetry(S: Surface) -> SwapResult:
    """The (x, y, P) <-> (u, v, Q) symmetry, S_{P,Q} -> S_{Q,P}."""
    return SwapResult(S.cached("swap", lambda: make_surface(S.Q.in_var("x"), S.P.in_var("u"))))
