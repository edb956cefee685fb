"""Flows of the catalog fields, the isomorphisms Theta and transitivity planning."""

from __future__ import annotations

import cmath
import logging
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from numpy.polynomial import Polynomial
from sympy import QQ_I
from sympy.polys.densetools import dup_diff
from sympy.polys.euclidtools import dup_gcd
from sympy.polys.factortools import dup_factor_list

from .algebra import (
    COORDS,
    GENS,
    RING,
    CompiledPoly,
    GaussRat,
    GizatullinError,
    MultiPoly,
    UniPoly,
    compile_all,
    eval_complex,
    exact_divide,
    gauss,
    to_complex,
)
from .const import (
    CHART_CHI,
    CHART_PHI,
    CHART_PSI,
    CHART_ZERO_TOL,
    CHI_XU_DU,
    CHI_XU_DX,
    DEFAULT_MOVE_TOL,
    DEFAULT_RESIDUAL_TOL,
    DEFAULT_TOL,
    MODE_ALGEBRAIC,
    MODE_FLOWS,
    PHI_XY_DX,
    PHI_XY_DY,
    PHI_Y2_DX,
    PHI_Y_DX_LND,
    PSI_UV_DU,
    PSI_UV_DV,
    PSI_V2_DU,
    PSI_V_DU_LND,
    WORD_SCHEMA,
)
from .fields import Derivation, catalog_entry
from .grammar import format_coeff, format_complex, format_poly, parse_value
from .integrate import DormandPrince, StepUnderflowError
from .surface import (
    ChartDomainError,
    Surface,
    SurfacePoint,
    SwapResult,
    chart_coords,
    chart_embed,
    eval_exact,
    get_chart,
    make_surface,
    swap_symmetry,
)

_LOGGER = logging.getLogger(__name__)

__all__ = [
    "AutoWord",
    "Flow",
    "FlowResult",
    "Iso",
    "StepUnderflowError",
    "Swap",
    "closed_flow",
    "execute_word",
    "normalize",
    "numeric_flow",
    "plan_transitivity",
    "project_to_surface",
    "require_smooth",
    "theta",
    "verify_theta",
]

x, y, u, v = (GENS[name] for name in COORDS)
LAM = GENS["lambda"]

Direction = Literal["fwd", "bwd"]
Time = GaussRat | complex


class ResidualError(GizatullinError):
    """Error to indicate a flow drifted off the surface."""

    def __init__(self, message: str, trace: Sequence[tuple[float, float]] = ()) -> None:
        super().__init__(message)
        self.trace = list(trace)


class NotSmoothError(GizatullinError):
    """Error to indicate the surface violates a smoothness condition."""

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class InvalidStepError(GizatullinError):
    """Error to indicate a word step that is invalid on the current surface."""


class PlanningError(GizatullinError):
    """Error to indicate the planner found no word."""


class ThetaError(GizatullinError):
    """Error to indicate a difference quotient of Theta is not polynomial."""


# --- words ---


@dataclass(frozen=True)
class Flow:
    id: str
    t: Time


@dataclass(frozen=True)
class Iso:
    lam: GaussRat
    direction: Direction = "fwd"


@dataclass(frozen=True)
class Swap:
    pass


Step = Flow | Iso | Swap


def next_surface(S: Surface, step: Step) -> Surface:
    """Surface reached after a step."""
    if isinstance(step, Swap):
        return swap_symmetry(S).surface
    if isinstance(step, Iso):
        return theta(S, _signed(step)).target
    return S


def _signed(step: Iso) -> GaussRat:
    lam = QQ_I.convert(step.lam)
    return lam if step.direction == "fwd" else -lam


def _invert(step: Step) -> Step:
    if isinstance(step, Flow):
        return Flow(step.id, -step.t)
    if isinstance(step, Iso):
        return Iso(step.lam, "bwd" if step.direction == "fwd" else "fwd")
    return step


@dataclass(frozen=True)
class AutoWord:
    """A composition of flows, isomorphisms Theta and the coordinate swap."""

    surface: Surface
    steps: tuple[Step, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[Step]:
        return iter(self.steps)

    def end_surface(self) -> Surface:
        S = self.surface
        for step in self.steps:
            S = next_surface(S, step)
        return S

    def inverse(self) -> AutoWord:
        return AutoWord(self.end_surface(), tuple(_invert(s) for s in reversed(self.steps)))

    def then(self, other: AutoWord) -> AutoWord:
        return AutoWord(self.surface, self.steps + other.steps)


@dataclass(frozen=True)
class FlowResult:
    """Endpoint of a flow or word with its drift statistics."""

    endpoint: SurfacePoint
    max_residual: float
    steps: int
    surface: Surface | None = None


# --- residuals ---


def _compiled_generators(S: Surface) -> list[tuple[CompiledPoly, int]]:
    return S.cached(
        "compiled",
        lambda: [
            (CompiledPoly(g), max(sum(m) for m in g.itermonoms())) for g in S.generators
        ],
    )


def scaled_residual(S: Surface, z: np.ndarray) -> float:
    """Largest generator value, relative to the size of the point."""
    scale = max(1.0, float(np.max(np.abs(z))))
    return max(abs(g(z)) / scale**degree for g, degree in _compiled_generators(S))


def _jacobian(S: Surface) -> list[list[CompiledPoly]]:
    return S.cached(
        "compiled_jacobian",
        lambda: [
            [CompiledPoly(g.diff(GENS[name])) for name in COORDS] for g in S.generators
        ],
    )


# --- closed flows ---


def _is_exact(value: Any) -> bool:
    return not isinstance(value, complex | float)


def _shift(a: Any, b: Any, t: Any) -> tuple[Any, Any]:
    return a + t * b * b, b


def _lnd_shift(a: Any, b: Any, t: Any) -> tuple[Any, Any]:
    return a + t * b, b


def _scale_first(a: complex, b: complex, t: complex) -> tuple[complex, complex]:
    return a * cmath.exp(t * b), b


def _scale_second(a: complex, b: complex, t: complex) -> tuple[complex, complex]:
    return a, b * cmath.exp(t * a)


# chart, flow on the chart parameters, polynomial in t
CLOSED_FLOWS: dict[str, tuple[str, Callable[..., tuple[Any, Any]], bool]] = {
    PHI_Y2_DX: (CHART_PHI, _shift, True),
    PHI_XY_DX: (CHART_PHI, _scale_first, False),
    PHI_XY_DY: (CHART_PHI, _scale_second, False),
    PSI_V2_DU: (CHART_PSI, _shift, True),
    PSI_UV_DU: (CHART_PSI, _scale_first, False),
    PSI_UV_DV: (CHART_PSI, _scale_second, False),
    CHI_XU_DX: (CHART_CHI, _scale_first, False),
    CHI_XU_DU: (CHART_CHI, _scale_second, False),
    PHI_Y_DX_LND: (CHART_PHI, _lnd_shift, True),
    PSI_V_DU_LND: (CHART_PSI, _lnd_shift, True),
}


def closed_flow(S: Surface, field_id: str, t: Time, p: SurfacePoint) -> SurfacePoint:
    """Time-t map of a catalog field through its chart formula.

    Raises:
        InvalidStepError: If the field is not in the catalog of S.
        ChartDomainError: If p is outside the chart where the formula holds.
    """
    try:
        catalog_entry(S, field_id)
    except KeyError as err:
        raise InvalidStepError(str(err)) from err
    tag, flow, polynomial = CLOSED_FLOWS[field_id]
    chart = get_chart(S, tag)
    for name in chart.nonzero:
        if abs(p.complex_coord(COORDS.index(name))) < CHART_ZERO_TOL:
            raise ChartDomainError(f"{field_id} needs {name} != 0 for its closed form")
    a, b = chart_coords(chart, p)
    if polynomial and p.kind == "exact" and _is_exact(t):
        return chart_embed(S, chart, flow(a, b, QQ_I.convert(t)))
    a, b = p.complex_coord(COORDS.index(chart.params[0])), p.complex_coord(
        COORDS.index(chart.params[1])
    )
    return chart_embed(S, chart, flow(a, b, _as_complex(t)))


def _as_complex(t: Time) -> complex:
    return complex(t) if not _is_exact(t) else to_complex(t)


# --- numeric flows ---

# The surface has codimension two, so the Jacobian of the three generators has
# rank two at smooth points; a third singular value only measures the drift.
SURFACE_CODIM = 2
RANK_RTOL = 1e-10
PROJECTION_ITERATIONS = 6


def project_to_surface(S: Surface, z: np.ndarray) -> np.ndarray:
    """Gauss-Newton steps onto S until the scaled residual stops decreasing.

    Each step uses the pseudo-inverse of the Jacobian truncated to rank two.
    """
    gens = [g for g, _ in _compiled_generators(S)]
    jac = _jacobian(S)
    residual = scaled_residual(S, z)
    for _ in range(PROJECTION_ITERATIONS):
        g = np.array([c(z) for c in gens], dtype=complex)
        J = np.array([[c(z) for c in row] for row in jac], dtype=complex)
        left, sv, right = np.linalg.svd(J)
        if not sv[0]:
            break
        rank = min(SURFACE_CODIM, int(np.count_nonzero(sv > RANK_RTOL * sv[0])))
        delta = right[:rank].conj().T @ ((left[:, :rank].conj().T @ g) / sv[:rank])
        candidate = z - delta
        improved = scaled_residual(S, candidate)
        if improved >= residual:
            break
        z, residual = candidate, improved
    return z


def numeric_flow(
    S: Surface,
    V: Derivation,
    t: Time,
    p: SurfacePoint,
    tol: float = DEFAULT_RESIDUAL_TOL,
    project: bool = True,
) -> FlowResult:
    """Integrate V along the segment from 0 to t in the time plane.

    After every accepted step the residuals of the three generators are
    checked; with ``project`` the state is first pulled back onto S.

    Raises:
        ResidualError: If the scaled residual exceeds tol.
        StepUnderflowError: If the integrator cannot make progress.
    """
    z0 = p.to_numpy()
    tc = _as_complex(t)
    if tc == 0 or V.is_zero:
        return FlowResult(p.numeric(), scaled_residual(S, z0), 0, S)
    comps = compile_all(V.components)
    trace: list[tuple[float, float]] = []

    def rhs(z: np.ndarray) -> np.ndarray:
        return tc * np.array([c(z) for c in comps], dtype=complex)

    def monitor(s: float, z: np.ndarray) -> np.ndarray:
        if project:
            z = project_to_surface(S, z)
        residual = scaled_residual(S, z)
        trace.append((s, residual))
        if residual > tol:
            raise ResidualError(
                f"Residual {residual:.3e} exceeds {tol:.1e} at s={s:.6g}", trace
            )
        return z

    result = DormandPrince().solve(rhs, z0, monitor)
    worst = max((r for _, r in trace), default=0.0)
    return FlowResult(SurfacePoint(tuple(result.z), "numeric", tol), worst, result.steps, S)


# --- Theta ---


@dataclass(frozen=True)
class ThetaMap:
    """The automorphism Theta of 4-space restricted to a surface.

    With ``lam`` None the components carry the ring variable lambda.
    """

    source: Surface
    lam: GaussRat | None
    components: tuple[MultiPoly, MultiPoly, MultiPoly, MultiPoly]
    target_generators: tuple[MultiPoly, MultiPoly, MultiPoly]
    target: Surface | None = field(default=None, compare=False)

    def apply(self, p: SurfacePoint) -> SurfacePoint:
        if self.lam is None:
            raise ThetaError("Instantiate lambda before applying Theta to a point")
        if p.kind == "exact":
            values = p.as_dict()
            return SurfacePoint(tuple(eval_exact(c, values) for c in self.components), "exact")
        point = dict(zip(COORDS, p.to_numpy(), strict=True))
        coords = tuple(eval_complex(c, point) for c in self.components)
        return SurfacePoint(coords, "numeric", p.residual_tol)

    def pullback(self, g: MultiPoly) -> MultiPoly:
        return g.compose(list(zip((x, y, u, v), self.components, strict=True)))


def _quotient(num: MultiPoly, den: MultiPoly, what: str) -> MultiPoly:
    q = exact_divide(num, den)
    if q is None:
        raise ThetaError(f"The {what} difference quotient is not a polynomial")
    return q


def _theta_components(
    P: UniPoly,
    Q: Callable[[MultiPoly], MultiPoly],
    Qt: Callable[[MultiPoly], MultiPoly],
    lam: MultiPoly,
) -> tuple[MultiPoly, MultiPoly, MultiPoly, MultiPoly]:
    Px = P.as_poly()
    X = x + lam * y
    PX = P.compose(X)
    U = u + _quotient(X * PX - x * Px, y, "U")
    Ubar = u + lam * (Px + x * P.derivative().as_poly())
    V = (
        v
        + _quotient(PX * Qt(U) - Px * Qt(Ubar), y, "first V")
        + u * _quotient(Qt(Ubar) - Q(u), x, "second V")
    )
    return X, y, U, V


def theta(S: Surface, lam: GaussRat | int | None = None) -> ThetaMap:
    """Theta for S and lambda, with its target S_{P,Q~}, Q~(u) = Q(u - lambda P(0)).

    Raises:
        ThetaError: If a difference quotient fails to divide exactly.
    """
    key = ("theta", None if lam is None else QQ_I.convert(lam))
    return S.cached(key, lambda: _build_theta(S, key[1]))


def _build_theta(S: Surface, lam_value: GaussRat | None) -> ThetaMap:
    lam_poly = LAM if lam_value is None else RING(lam_value)
    shift = lam_poly * S.P.at_zero()

    def Qt(w: MultiPoly) -> MultiPoly:
        return S.Q.compose(w - shift)

    components = _theta_components(S.P, S.Q.compose, Qt, lam_poly)
    Px = S.P_x
    Qtu = Qt(u)
    target_generators = (y * u - x * Px, x * v - u * Qtu, y * v - Px * Qtu)
    target = None
    if lam_value is not None:
        Qt_uni = UniPoly.from_poly(Qtu, "u")
        target = S if Qt_uni == S.Q else make_surface(S.P, Qt_uni)
    return ThetaMap(S, lam_value, components, target_generators, target)


def _inverse_components(S: Surface, lam_poly: MultiPoly) -> tuple[MultiPoly, ...]:
    shift = lam_poly * S.P.at_zero()

    def Qt(w: MultiPoly) -> MultiPoly:
        return S.Q.compose(w - shift)

    return _theta_components(S.P, Qt, S.Q.compose, -lam_poly)


@dataclass(frozen=True)
class ThetaReport:
    """Exact and numeric checks of Theta for one lambda."""

    lam: GaussRat | None
    pullback_ok: bool
    inverse_ok: bool
    max_residual: float
    samples: int

    @property
    def ok(self) -> bool:
        return self.pullback_ok and self.inverse_ok


def sample_points(S: Surface, count: int, seed: int) -> list[SurfacePoint]:
    """Seeded numeric points of S taken in the phi-chart with |y| >= 1/2."""
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < count:
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        if abs(b) < 0.5:
            continue
        points.append(chart_embed(S, CHART_PHI, (complex(a), complex(b))))
    return points


def verify_theta(
    S: Surface, lam: GaussRat | int | None = None, samples: int = 100, seed: int = 0
) -> ThetaReport:
    """Check Theta exactly and on seeded numeric points.

    The pullback of every target generator must lie in the ideal of S, and
    Theta built on the target with -lambda must compose with Theta to the
    identity modulo that ideal. For symbolic lambda the numeric check uses
    lambda = 1.
    """
    m = theta(S, lam)
    pullback_ok = all(not S.reduce(m.pullback(g)) for g in m.target_generators)
    lam_poly = LAM if m.lam is None else RING(m.lam)
    inverse = _inverse_components(S, lam_poly)
    composed = [m.pullback(c) for c in inverse]
    inverse_ok = all(not S.reduce(c - gen) for c, gen in zip(composed, (x, y, u, v), strict=True))
    if not inverse_ok:
        _LOGGER.warning("Theta built with -lambda does not invert Theta on %s", S)
    numeric = m if m.lam is not None else theta(S, 1)
    worst = 0.0
    for p in sample_points(S, samples, seed):
        image = numeric.apply(p).to_numpy()
        worst = max(worst, scaled_residual(numeric.target, image))
    return ThetaReport(m.lam, pullback_ok, inverse_ok, worst, samples)


def v1_identity(S: Surface, lam: GaussRat | int | None = None) -> bool:
    """At (0, 0, u0, 0) the last component of Theta is lambda P'(0) (Q(u0) + 2 u0 Q'(u0)).

    Holds modulo u0 Q(u0) = 0 on surfaces with P(0) = 0.

    Raises:
        ThetaError: If P(0) != 0.
    """
    if S.P.at_zero():
        raise ThetaError("The v1 formula assumes P(0) = 0")
    m = theta(S, lam)
    lam_poly = LAM if m.lam is None else RING(m.lam)
    restricted = m.components[3].compose([(x, RING.zero), (y, RING.zero), (v, RING.zero)])
    dP0 = S.P.derivative().at_zero()
    expected = lam_poly * dP0 * (S.Q_u + 2 * u * S.dQ_u)
    return exact_divide(restricted - expected, u * S.Q_u) is not None


def normalize(S: Surface) -> AutoWord:
    """A word carrying S to a surface with P(0) = 0.

    With P(0) != 0 and Q(0) != 0 this is Swap, Theta with lambda = -r/Q(0)
    for an exact root r of P, then Swap; S_{x-1,u-1} lands on S_{x,u-1}.

    Raises:
        PlanningError: If P has no Gaussian rational root.
    """
    if S.p0_zero:
        return AutoWord(S)
    if S.q0_zero:
        return AutoWord(S, (Swap(),))
    roots = [r for r in _roots(S.P) if _is_exact(r)]
    if not roots:
        raise PlanningError(f"P has no exact root to normalize {S}")
    lam = QQ_I.quo(-roots[0], S.Q.at_zero())
    _LOGGER.debug("Normalizing %s with lambda=%s", S, format_coeff(lam))
    return AutoWord(S, (Swap(), Iso(lam), Swap()))


# --- special points ---


def _roots(poly: UniPoly) -> list[GaussRat | complex]:
    """Distinct roots; the Gaussian rational ones come exactly from the linear factors."""
    if poly.degree < 1:
        return []
    _, factors = dup_factor_list(poly.dense(), QQ_I)
    found: list[GaussRat | complex] = [
        QQ_I.quo(-f[1], f[0]) for f, _ in factors if len(f) == 2
    ]
    for r in np.roots(poly.numpy_coeffs()):
        if any(abs(_as_complex(f) - r) < CHART_ZERO_TOL for f in found):
            continue
        found.append(complex(r))
    return found


def lambda_locus(S: Surface) -> list[SurfacePoint]:
    """The points (x0, 0, u0, 0) of S with x0 P(x0) = u0 Q(u0) = 0."""
    xs = _with_zero(_roots(S.P))
    us = _with_zero(_roots(S.Q))
    points = []
    for x0 in xs:
        for u0 in us:
            coords = (x0, QQ_I.zero, u0, QQ_I.zero)
            if all(_is_exact(c) for c in coords):
                values = dict(zip(COORDS, coords, strict=True))
                if any(eval_exact(g, values) for g in S.generators):
                    continue
                points.append(SurfacePoint(coords, "exact"))
                continue
            numeric = SurfacePoint(tuple(_as_complex(c) for c in coords), "numeric")
            if scaled_residual(S, numeric.to_numpy()) <= DEFAULT_TOL:
                points.append(numeric)
    return points


def _with_zero(roots: list[GaussRat | complex]) -> list[GaussRat | complex]:
    if any(abs(_as_complex(r)) < CHART_ZERO_TOL for r in roots):
        return roots
    return [QQ_I.zero, *roots]


def _multiple_roots(poly: UniPoly) -> list[GaussRat | complex]:
    f = poly.dense()
    g = dup_gcd(f, dup_diff(f, 1, QQ_I), QQ_I)
    return _roots(UniPoly(tuple(reversed(g)), poly.var))


def _describe(value: GaussRat | complex) -> str:
    return format_coeff(value) if _is_exact(value) else format_complex(complex(value))


def require_smooth(S: Surface) -> None:
    """Raise NotSmoothError naming the violated condition and the points no word can move."""
    reason = S.singular_reason()
    if reason is None:
        return
    fixed = [
        f"({_describe(x0)}, 0, {_describe(u0)}, 0)"
        for x0 in _multiple_roots(S.P)
        for u0 in _multiple_roots(S.Q)
    ]
    if fixed:
        reason += "; points over multiple roots such as " + ", ".join(fixed) + " cannot be moved"
    raise NotSmoothError(reason)


def reference_point(S: Surface) -> SurfacePoint:
    """chi(a, c) for the first positive integers (a, c) with P(a) Q(c) != 0."""
    for total in range(2, 64):
        for a in range(1, total):
            c = total - a
            if S.P.compose(RING(a)) and S.Q.compose(RING(c)):
                return chart_embed(S, CHART_CHI, (gauss(a), gauss(c)))
    raise PlanningError(f"No reference point found on {S}")


# --- execution ---


def apply_step(
    S: Surface, step: Step, p: SurfacePoint, tol: float = DEFAULT_TOL
) -> tuple[Surface, SurfacePoint, float, int]:
    """Apply one step; returns the new surface, point, residual and integrator steps.

    Raises:
        InvalidStepError: If a flow id is not in the catalog of S.
        ResidualError: If the point leaves the surface.
    """
    integrator_steps = 0
    if isinstance(step, Swap):
        target, q = swap_symmetry(S).surface, SwapResult.point(p)
    elif isinstance(step, Iso):
        m = theta(S, _signed(step))
        target, q = m.target, m.apply(p)
    elif isinstance(step, Flow):
        target = S
        try:
            q = closed_flow(S, step.id, step.t, p)
            integrator_steps = 1
        except ChartDomainError:
            entry = catalog_entry(S, step.id)
            result = numeric_flow(S, entry.derivation, step.t, p, tol)
            q, integrator_steps = result.endpoint, result.steps
    else:
        raise InvalidStepError(f"Unknown step {step!r}")
    residual = scaled_residual(target, q.to_numpy())
    if residual > tol:
        raise ResidualError(f"Residual {residual:.3e} after {step!r} exceeds {tol:.1e}")
    return target, q, residual, integrator_steps


def execute_word(word: AutoWord, p: SurfacePoint, tol: float = DEFAULT_TOL) -> FlowResult:
    """Apply the steps of a word in order, monitoring residuals.

    Raises:
        InvalidStepError: On a step that does not apply to the current surface.
        ResidualError: If any step drifts off its surface.
    """
    S = word.surface
    point = p
    worst = scaled_residual(S, p.to_numpy())
    total = 0
    for step in word:
        S, point, residual, steps = apply_step(S, step, point, tol)
        worst = max(worst, residual)
        total += steps
    return FlowResult(point, worst, total, S)


# --- planning ---


def _nonzero(value: complex) -> bool:
    return abs(value) >= CHART_ZERO_TOL


def _open_orbit(p: SurfacePoint) -> bool:
    z = p.to_numpy()
    return _nonzero(z[1]) or _nonzero(z[3])


class _Walker:
    """Applies planned steps as they are chosen, so later choices see the actual point."""

    def __init__(self, S: Surface, p: SurfacePoint, tol: float) -> None:
        self.surface = S
        self.point = p
        self.tol = tol
        self.steps: list[Step] = []

    @property
    def z(self) -> np.ndarray:
        return self.point.to_numpy()

    def push(self, step: Step) -> None:
        if isinstance(step, Flow) and _as_complex(step.t) == 0:
            return
        self.surface, self.point, _, _ = apply_step(self.surface, step, self.point, self.tol)
        self.steps.append(step)
        _LOGGER.debug("Planned %s", step)


def _shear_time(start: complex, speed: complex, avoid: UniPoly) -> int:
    """Smallest k >= 1 with start + k*speed away from 0 and from the roots of avoid."""
    for k in range(1, 64):
        target = start + k * speed
        if _nonzero(target) and _nonzero(avoid(target)):
            return k
    raise PlanningError("No shear time avoids the degenerate values")


def _core_flows(w: _Walker) -> None:
    """Move the point into the chi-chart, assuming P(0) != 0 on the current surface."""
    P, Q = w.surface.P, w.surface.Q.in_var("x")
    for _ in range(6):
        x0, y0, u0, v0 = w.z
        if _nonzero(x0) and _nonzero(u0):
            return
        if _nonzero(x0) or (not _nonzero(u0) and _nonzero(y0)):
            # u = 0: shear along x while y != 0, else scale x
            if _nonzero(y0):
                w.push(Flow(PHI_Y2_DX, _shear_time(x0, y0 * y0, P)))
            else:
                w.push(Flow(PHI_XY_DX, 1))
        elif _nonzero(u0) or _nonzero(v0):
            if _nonzero(v0):
                w.push(Flow(PSI_V2_DU, _shear_time(u0, v0 * v0, Q)))
            else:
                w.push(Flow(PSI_UV_DU, 1))
        else:
            # origin, where phi_*(y^2 d/dx) = P(0)^2 Q'(0) d/dv
            _LOGGER.debug("Leaving the origin along d/dv")
            w.push(Flow(PHI_Y2_DX, 1))
    raise PlanningError("Flows did not reach the chi-chart")


def _chi_to(w: _Walker, ref: SurfacePoint) -> None:
    target = ref.to_numpy()
    x0, _, u0, _ = w.z
    w.push(Flow(CHI_XU_DX, cmath.log(target[0] / x0) / u0))
    x1, _, u1, _ = w.z
    w.push(Flow(CHI_XU_DU, cmath.log(target[2] / u1) / x1))


def _match(A: UniPoly, B: UniPoly, s: complex, target: complex, near: complex) -> complex:
    """Solve A(a) * B(a A(a) / s) / s = target for a, closest to near.

    On the phi-chart this finds the x with v = target for fixed y = s; with
    the roles of P and Q exchanged it finds u on the psi-chart.
    """
    a_poly = Polynomial(A.numpy_coeffs()[::-1])
    ident = Polynomial([0, 1])
    db = B.degree
    total = Polynomial([0])
    for i, b in enumerate(B.numpy_coeffs()[::-1]):
        total = total + b * (ident * a_poly) ** i * s ** (db - i)
    equation = a_poly * total - target * s ** (db + 1)
    roots = np.roots(equation.coef[::-1])
    if not len(roots):
        raise PlanningError("Matching equation has no roots")
    return complex(min(roots, key=lambda r: (abs(r - near), r.real, r.imag)))


def _lnd_to(w: _Walker, ref: SurfacePoint) -> None:
    """Reach ref with the two shear flows, from a point with y != 0 or v != 0."""
    S = w.surface
    a, y_ref, c, v_ref = ref.to_numpy()
    x0, y0, u0, v0 = w.z
    if np.max(np.abs(w.z - ref.to_numpy())) < CHART_ZERO_TOL:
        return
    if _nonzero(y0):
        x1 = _match(S.P, S.Q.in_var("x"), y0, v_ref, x0)
        w.push(Flow(PHI_Y2_DX, (x1 - x0) / (y0 * y0)))
        w.push(Flow(PSI_V2_DU, (c - w.z[2]) / (v_ref * v_ref)))
    elif _nonzero(v0):
        u1 = _match(S.Q.in_var("x"), S.P, v0, y_ref, u0)
        w.push(Flow(PSI_V2_DU, (u1 - u0) / (v0 * v0)))
        w.push(Flow(PHI_Y2_DX, (a - w.z[0]) / (y_ref * y_ref)))
    else:
        raise PlanningError("Shear flows cannot move a point with y = v = 0")


def _leave_locus(w: _Walker) -> None:
    """Carry a point with y = v = 0 to the open orbit through Theta and back."""
    for use_swap in (False, True):
        for lam in range(1, 9):
            S = swap_symmetry(w.surface).surface if use_swap else w.surface
            p = SwapResult.point(w.point) if use_swap else w.point
            if not _open_orbit(theta(S, lam).apply(p)):
                continue
            _LOGGER.debug("Leaving the locus with lambda=%s swap=%s", lam, use_swap)
            if use_swap:
                w.push(Swap())
            w.push(Iso(gauss(lam)))
            _lnd_to(w, reference_point(w.surface))
            w.push(Iso(gauss(lam), "bwd"))
            if use_swap:
                w.push(Swap())
            return
    raise PlanningError("No lambda in 1..8 moves the point off the locus")


def route(S: Surface, p: SurfacePoint, mode: str, tol: float = DEFAULT_TOL) -> AutoWord:
    """A word taking p to reference_point(S)."""
    w = _Walker(S, p, tol)
    if mode == MODE_FLOWS:
        if not S.P.at_zero():
            w.push(Swap())
            _core_flows(w)
            w.push(Swap())
        else:
            _core_flows(w)
        _chi_to(w, reference_point(S))
    elif mode == MODE_ALGEBRAIC:
        if not _open_orbit(w.point):
            _leave_locus(w)
        _lnd_to(w, reference_point(S))
    else:
        raise PlanningError(f"Unknown mode {mode!r}")
    return AutoWord(S, tuple(w.steps))


def plan_transitivity(
    S: Surface,
    p: SurfacePoint,
    q: SurfacePoint,
    mode: str = MODE_FLOWS,
    tol: float = DEFAULT_TOL,
) -> AutoWord:
    """A word mapping p to q, through a common reference point.

    Raises:
        NotSmoothError: If S has non-simple roots or P(0) = Q(0) = 0.
        PlanningError: If no word is found.
    """
    require_smooth(S)
    if mode not in (MODE_FLOWS, MODE_ALGEBRAIC):
        raise PlanningError(f"Unknown mode {mode!r}")
    if np.max(np.abs(p.to_numpy() - q.to_numpy())) == 0:
        return AutoWord(S)
    to_ref = route(S, p, mode, tol)
    from_ref = route(S, q, mode, tol).inverse()
    return to_ref.then(from_ref)


def endpoint_error(result: FlowResult, q: SurfacePoint) -> float:
    """Distance of an endpoint from q relative to max(1, |q|)."""
    target = q.to_numpy()
    scale = max(1.0, float(np.max(np.abs(target))))
    return float(np.max(np.abs(result.endpoint.to_numpy() - target))) / scale


def within(result: FlowResult, q: SurfacePoint, tol: float = DEFAULT_MOVE_TOL) -> bool:
    return endpoint_error(result, q) <= tol


# --- serialization ---


def _format_time(t: Time) -> str:
    return format_coeff(t) if _is_exact(t) else format_complex(complex(t))


def word_json(word: AutoWord) -> dict[str, Any]:
    """Word as ``word-v1`` JSON data."""
    steps: list[dict[str, Any]] = []
    for step in word:
        if isinstance(step, Flow):
            steps.append({"flow": {"id": step.id, "t": _format_time(step.t)}})
        elif isinstance(step, Iso):
            steps.append({"iso": {"lambda": format_coeff(step.lam), "dir": step.direction}})
        else:
            steps.append({"swap": True})
    return {
        "schema": WORD_SCHEMA,
        "surface": {"P": format_poly(word.surface.P), "Q": format_poly(word.surface.Q)},
        "steps": steps,
    }


def parse_word(data: dict[str, Any], S: Surface) -> AutoWord:
    """Read ``word-v1`` JSON data for the surface S.

    Raises:
        InvalidStepError: On an unknown step shape or schema.
    """
    if data.get("schema") != WORD_SCHEMA:
        raise InvalidStepError(f"Expected schema {WORD_SCHEMA}")
    steps: list[Step] = []
    for item in data.get("steps", []):
        if "flow" in item:
            steps.append(Flow(item["flow"]["id"], parse_value(item["flow"]["t"])))
        elif "iso" in item:
            lam = parse_value(item["iso"]["lambda"])
            if not _is_exact(lam):
                raise InvalidStepError("Iso steps need an exact lambda")
            steps.append(Iso(lam, item["iso"].get("dir", "fwd")))
        elif item.get("swap"):
            steps.append(Swap())
        else:
            raise InvalidStepError(f"Unknown step {item!r}")
    return AutoWord(S, tuple(steps))
