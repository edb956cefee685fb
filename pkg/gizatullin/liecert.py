"""Certificates that an ideal multiple of phi_*(d/dy) is a Lie combination of complete fields.

A certificate is a tree whose leaves are catalog fields or shear products
f*Theta with Theta(Theta(f)) = 0, and whose inner nodes are brackets and
constant-coefficient linear combinations. Every node caches its value as a
certified Derivation in normal form, so a tree re-verifies bottom-up.

The span engine works in the phi-chart: a tangent field is determined by its
d/dx and d/dy coefficients on the chart, and the monomial fields

* x^a y^b d/dx with a = 0, b >= 2, or a = 1, b >= 1, or a, b >= 2,
* x^a y^b d/dy with b >= 3, or a >= 1, b = 1,

are all produced from the catalog, on demand, by the bracket steps below.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from sympy import QQ_I
from sympy.polys.matrices import DomainMatrix

from .algebra import (
    COORDS,
    GENS,
    INDEX,
    RING,
    GaussRat,
    GizatullinError,
    MonomialFraction,
    MultiPoly,
    content_monomial,
    exact_divide,
    gauss,
    monomial,
    monomial_poly,
    swap_poly,
)
from .const import (
    CERT_SCHEMA,
    CHART_CHI,
    CHART_PHI,
    CHI_XU_DX,
    PHI_XY_DX,
    PHI_XY_DY,
    PHI_Y2_DX,
    SWAP_IDS,
)
from .fields import (
    Derivation,
    PolynomializationError,
    bracket,
    catalog,
    catalog_entry,
    chart_derivation,
    require_tangent,
    shear_complete,
)
from .grammar import format_coeff, format_poly
from .ideal import divide_by_monomial_mod
from .surface import (
    AmbientField,
    Surface,
    SurfacePoint,
    eval_exact,
    get_chart,
    jacobian_exact,
    pushforward,
    swap_symmetry,
)

_LOGGER = logging.getLogger(__name__)

x, y, u, v = (GENS[name] for name in COORDS)

OP_LEAF = "leaf"
OP_SHEAR = "shear-mult"
OP_BRACKET = "bracket"
OP_LINCOMB = "lincomb"

VERDICT_EXACT = "exact"
VERDICT_SCALAR = "scalar-match"
VERDICT_MISMATCH = "mismatch"

IDENTITIES: dict[str, int] = {"D1": 1, "D2": 2, "D3": 2, "E1": 3, "E2": 3}


class CertificateError(GizatullinError):
    """Error to indicate an invalid certificate node."""


class SpanExtensionError(GizatullinError):
    """Error to indicate a step whose remainder is outside the certified span."""

    def __init__(self, message: str, remainder: AmbientField | None = None) -> None:
        super().__init__(message)
        self.remainder = remainder


class ExtractionError(GizatullinError):
    """Error to indicate the monomial factorization of a field does not hold."""

    def __init__(self, message: str, leftover: MultiPoly | None = None) -> None:
        super().__init__(message)
        self.leftover = leftover


class InvalidParametersError(GizatullinError):
    """Error to indicate identity parameters outside their range."""


# --- certificate trees ---


@dataclass(eq=False)
class CertNode:
    """Node of a certificate tree with its cached value."""

    op: str
    value: Derivation
    children: tuple[CertNode, ...] = ()
    coeffs: tuple[GaussRat, ...] = ()
    catalog_id: str | None = None
    f: MultiPoly | None = None

    def walk(self) -> Iterator[CertNode]:
        """Nodes in post-order, each shared node once."""
        seen: set[int] = set()
        stack: list[tuple[CertNode, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in seen:
                continue
            if expanded:
                seen.add(id(node))
                yield node
                continue
            stack.append((node, True))
            for child in reversed(node.children):
                if id(child) not in seen:
                    stack.append((child, False))


def leaf(S: Surface, catalog_id: str) -> CertNode:
    return CertNode(OP_LEAF, catalog_entry(S, catalog_id).derivation, catalog_id=catalog_id)


def shear_leaf(S: Surface, catalog_id: str, f: MultiPoly) -> CertNode:
    """The complete field f*Theta for a catalog field Theta.

    Raises:
        CertificateError: If Theta(Theta(f)) does not vanish.
    """
    theta = catalog_entry(S, catalog_id).derivation
    if not shear_complete(theta, f):
        raise CertificateError(f"Shear criterion fails for {catalog_id}")
    return CertNode(OP_SHEAR, theta.multiply(f), catalog_id=catalog_id, f=f)


def bracket_node(a: CertNode, b: CertNode) -> CertNode:
    return CertNode(OP_BRACKET, bracket(a.value, b.value), children=(a, b))


def lincomb_node(coeffs: Sequence[GaussRat], nodes: Sequence[CertNode]) -> CertNode:
    coeffs = tuple(QQ_I.convert(c) for c in coeffs)
    value = nodes[0].value.scale(coeffs[0])
    for c, node in zip(coeffs[1:], nodes[1:], strict=True):
        value = value + node.value.scale(c)
    return CertNode(OP_LINCOMB, value, children=tuple(nodes), coeffs=coeffs)


def recompute(node: CertNode, S: Surface, values: dict[int, Derivation]) -> Derivation:
    """Value of a node computed from the recomputed values of its children."""
    if node.op == OP_LEAF:
        return catalog_entry(S, node.catalog_id).derivation
    if node.op == OP_SHEAR:
        theta = catalog_entry(S, node.catalog_id).derivation
        if not shear_complete(theta, node.f):
            raise CertificateError(f"Shear criterion fails for {node.catalog_id}")
        return theta.multiply(node.f)
    kids = [values[id(child)] for child in node.children]
    if node.op == OP_BRACKET:
        return bracket(kids[0], kids[1])
    if node.op == OP_LINCOMB:
        total = kids[0].scale(node.coeffs[0])
        for c, kid in zip(node.coeffs[1:], kids[1:], strict=True):
            total = total + kid.scale(c)
        return total
    raise CertificateError(f"Unknown node op {node.op!r}")


def verify_tree(root: CertNode, S: Surface) -> bool:
    """Recompute every node from the catalog upwards and compare with the cache."""
    values: dict[int, Derivation] = {}
    for node in root.walk():
        value = recompute(node, S, values)
        if value.components != node.value.components:
            _LOGGER.warning("Certificate node %s does not recompute", node.op)
            return False
        values[id(node)] = value
    return True


def transport(root: CertNode, S: Surface) -> CertNode:
    """Move a certificate built on swap(S) onto S."""
    made: dict[int, CertNode] = {}
    for node in root.walk():
        value = require_tangent(node.value.as_field().swap(), S)
        children = tuple(made[id(child)] for child in node.children)
        made[id(node)] = CertNode(
            node.op,
            value,
            children=children,
            coeffs=node.coeffs,
            catalog_id=SWAP_IDS[node.catalog_id] if node.catalog_id else None,
            f=swap_poly(node.f) if node.f is not None else None,
        )
    return made[id(root)]


# --- identities ---


@dataclass(frozen=True)
class _ChartTerm:
    chart: str
    field: tuple[MultiPoly, MultiPoly]
    phi: tuple[MultiPoly, MultiPoly]


def _phi_term(a: MultiPoly, b: MultiPoly) -> _ChartTerm:
    return _ChartTerm(CHART_PHI, (RING(a), RING(b)), (RING(a), RING(b)))


@dataclass(frozen=True)
class IdentityReport:
    """Comparison of a computed bracket combination with the displayed one."""

    name: str
    params: tuple[int, ...]
    lhs: Derivation
    rhs: Derivation
    verdict: str
    scalar: GaussRat | None = None
    difference: Derivation | None = None
    oracle_agrees: bool = True

    @property
    def accepted(self) -> bool:
        return self.verdict in (VERDICT_EXACT, VERDICT_SCALAR)


def _identity(
    S: Surface, name: str, params: tuple[int, ...]
) -> tuple[list[tuple[Fraction, _ChartTerm, _ChartTerm | None]], tuple[MultiPoly, MultiPoly]]:
    if name not in IDENTITIES:
        raise InvalidParametersError(f"Unknown identity {name!r}")
    if len(params) != IDENTITIES[name] or any(p < 0 for p in params):
        raise InvalidParametersError(f"{name} takes {IDENTITIES[name]} non-negative parameters")
    zero = RING.zero
    Px = S.P_x
    PP = Px + x * S.dP_x
    if name == "D1":
        (k,) = params
        terms = [
            (Fraction(1), _phi_term(y ** (k + 2), zero), _phi_term(zero, x * y)),
            (Fraction(k + 2), _phi_term(x * y ** (k + 2), zero), None),
        ]
        return terms, (zero, y ** (k + 3))
    if name == "D2":
        j, k = params
        if j < 1:
            raise InvalidParametersError("D2 needs j >= 1")
        terms = [
            (Fraction(1, k + 2), _phi_term(zero, y ** (k + 3)), _phi_term(zero, x**j * y)),
        ]
        return terms, (zero, x**j * y ** (k + 3))
    if name == "D3":
        j, k = params
        if j < 1:
            raise InvalidParametersError("D3 needs j >= 1")
        terms = [
            (Fraction(1, k + 2), _phi_term(zero, x**j * y), _phi_term(x * y ** (k + 2), zero)),
            (Fraction(j, k + 2), _phi_term(zero, x**j * y ** (k + 3)), None),
        ]
        return terms, (x ** (j + 1) * y ** (k + 2), zero)
    j, k, ell = params
    if name == "E1":
        chi_field = _ChartTerm(
            CHART_CHI, (x * u ** (ell + 1), zero), (x * u ** (ell + 1), PP * x * u**ell)
        )
        terms = [(Fraction(1), chi_field, _phi_term(zero, x**j * y ** (k + 5)))]
        rhs = (
            (ell + 1) * x ** (j + 2) * Px * y ** (k + 3) * u**ell,
            j * x**j * y ** (k + 5) * u ** (ell + 1)
            + (k + ell + 5) * x ** (j + 1) * PP * y ** (k + 4) * u**ell,
        )
        return terms, rhs
    # E2
    if j < 1:
        raise InvalidParametersError("E2 needs j >= 1")
    terms = [
        (
            Fraction(1),
            _phi_term(zero, x**j * y ** (k + 3) * u ** (ell + 1)),
            _phi_term(y**2, zero),
        )
    ]
    rhs = (
        2 * x**j * y ** (k + 4) * u ** (ell + 1),
        -j * x ** (j - 1) * y ** (k + 5) * u ** (ell + 1),
    )
    return terms, rhs


def _to_gauss(c: Fraction) -> GaussRat:
    return gauss(c)


def _phi_fractions(S: Surface, pair: tuple[MultiPoly, MultiPoly]) -> tuple[MonomialFraction, ...]:
    images = get_chart(S, CHART_PHI).forward_fractions()
    return tuple(MonomialFraction.of(c).substitute(images) for c in pair)


def chart_bracket(
    a: tuple[MonomialFraction, ...], b: tuple[MonomialFraction, ...]
) -> tuple[MonomialFraction, ...]:
    """Bracket of two fields on the (x, y) chart plane."""
    out = []
    for i in range(2):
        total = MonomialFraction(RING.zero)
        for p, name in enumerate(("x", "y")):
            total = total + a[p] * b[i].diff(name) - b[p] * a[i].diff(name)
        out.append(total)
    return tuple(out)


def _oracle(S: Surface, terms: list) -> AmbientField:
    total = (MonomialFraction(RING.zero), MonomialFraction(RING.zero))
    for coeff, left, right in terms:
        a = _phi_fractions(S, left.phi)
        value = a if right is None else chart_bracket(a, _phi_fractions(S, right.phi))
        scale = MonomialFraction(RING(_to_gauss(coeff)))
        total = tuple(t + scale * c for t, c in zip(total, value, strict=True))
    return pushforward(S, CHART_PHI, total)


def _same_mod_ideal(S: Surface, field_: AmbientField, D: Derivation) -> bool:
    if not field_.is_polynomial:
        return False
    return all(
        not S.reduce(p - q) for p, q in zip(field_.polys, D.components, strict=True)
    )


def _compare(lhs: Derivation, rhs: Derivation) -> tuple[str, GaussRat | None, Derivation | None]:
    difference = lhs - rhs
    if difference.is_zero:
        return VERDICT_EXACT, None, None
    for comp_l, comp_r in zip(lhs.components, rhs.components, strict=True):
        if comp_r:
            monom, coeff = comp_r.terms()[0]
            c = QQ_I.exquo(comp_l.get(monom, QQ_I.zero), coeff)
            if c and (lhs - rhs.scale(c)).is_zero:
                return VERDICT_SCALAR, c, None
            break
    return VERDICT_MISMATCH, None, difference


def verify_identity(S: Surface, name: str, params: tuple[int, ...]) -> IdentityReport:
    """Compute a displayed bracket combination exactly and compare with its right-hand side.

    Args:
        S: The surface.
        name: One of D1, D2, D3, E1, E2.
        params: (k,) for D1, (j, k) for D2/D3, (j, k, l) for E1/E2.

    Raises:
        InvalidParametersError: On unknown names or parameters out of range.
    """
    params = tuple(params)
    terms, rhs_pair = _identity(S, name, params)
    lhs: Derivation | None = None
    for coeff, left, right in terms:
        value = chart_derivation(S, left.chart, left.field)
        if right is not None:
            value = bracket(value, chart_derivation(S, right.chart, right.field))
        value = value.scale(_to_gauss(coeff))
        lhs = value if lhs is None else lhs + value
    rhs = chart_derivation(S, CHART_PHI, rhs_pair)
    verdict, scalar, difference = _compare(lhs, rhs)
    oracle_agrees = _same_mod_ideal(S, _oracle(S, terms), lhs)
    if verdict != VERDICT_EXACT:
        _LOGGER.warning("Identity %s%s: verdict %s", name, params, verdict)
    return IdentityReport(name, params, lhs, rhs, verdict, scalar, difference, oracle_agrees)


# --- certified span ---

Key = tuple[int, tuple[int, ...]]
Vector = dict[Key, GaussRat]


def vector_of(D: Derivation) -> Vector:
    return {(i, m): c for i, comp in enumerate(D.components) for m, c in comp.iterterms()}


def field_of(vec: Vector) -> AmbientField:
    comps = [RING.zero] * 4
    for (i, m), c in vec.items():
        comps[i] += monomial_poly(m, c)
    return AmbientField.from_polys(*comps)


def _axpy(target: dict, c: GaussRat, source: dict) -> None:
    for k, value in source.items():
        new = target.get(k, QQ_I.zero) + c * value
        if new:
            target[k] = new
        else:
            target.pop(k, None)


@dataclass(frozen=True)
class Ranges:
    """Inclusive maxima of the exponent parameters j, k, l, m."""

    j: int = 1
    k: int = 1
    ell: int = 1
    m: int = 1


@dataclass
class StepRecord:
    """One replayed construction step."""

    key: tuple
    rule: str
    scalar: GaussRat
    corrections: int


@dataclass
class CertifiedSpan:
    """Certified elements with an incremental echelon form for membership queries."""

    surface: Surface
    elements: list[tuple[Derivation, CertNode]] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)
    reports: list[IdentityReport] = field(default_factory=list)
    _rows: dict[Key, tuple[Vector, dict[int, GaussRat]]] = field(default_factory=dict)
    _registry: dict[tuple, int] = field(default_factory=dict)
    _pending: set[tuple] = field(default_factory=set)
    _mirror: CertifiedSpan | None = None

    # --- linear algebra ---

    def _reduce(self, vec: Vector) -> tuple[Vector, dict[int, GaussRat]]:
        work = dict(vec)
        combo: dict[int, GaussRat] = {}
        while True:
            pivots = [k for k in work if k in self._rows]
            if not pivots:
                return work, combo
            pivot = max(pivots)
            c = work[pivot]
            row, row_combo = self._rows[pivot]
            _axpy(work, -c, row)
            _axpy(combo, c, row_combo)

    def add(self, D: Derivation, node: CertNode) -> int:
        """Append an element; returns its index."""
        index = len(self.elements)
        self.elements.append((D, node))
        remainder, combo = self._reduce(vector_of(D))
        if remainder:
            pivot = max(remainder)
            scale = QQ_I.exquo(QQ_I.one, remainder[pivot])
            row_combo = {index: QQ_I.one}
            _axpy(row_combo, -QQ_I.one, combo)
            self._rows[pivot] = (
                {k: c * scale for k, c in remainder.items()},
                {k: c * scale for k, c in row_combo.items()},
            )
        return index

    def solve(self, D: Derivation) -> dict[int, GaussRat] | None:
        """Coefficients c_i with D = sum c_i * element_i, or None."""
        remainder, combo = self._reduce(vector_of(D))
        return None if remainder else combo

    def contains(self, D: Derivation) -> bool:
        return self.solve(D) is not None

    def remainder(self, D: Derivation) -> AmbientField:
        return field_of(self._reduce(vector_of(D))[0])

    def verify(self) -> bool:
        """Every element re-verifies from its certificate."""
        return all(verify_tree(node, self.surface) for _, node in self.elements)

    # --- element production ---

    def _register(self, key: tuple, node: CertNode) -> CertNode:
        self._registry[key] = self.add(node.value, node)
        return node

    def node(self, key: tuple) -> CertNode:
        """Certificate for a registered element, producing it on demand."""
        if key in self._registry:
            return self.elements[self._registry[key]][1]
        if key in self._pending:
            raise SpanExtensionError(f"Cyclic dependency while producing {key}")
        self._pending.add(key)
        try:
            return self._register(key, self._produce(key))
        finally:
            self._pending.discard(key)

    def _produce(self, key: tuple) -> CertNode:
        kind, *idx = key
        S = self.surface
        if kind == "dx":
            a, b = idx
            if a == 0 and b >= 2:
                return leaf(S, PHI_Y2_DX) if b == 2 else shear_leaf(S, PHI_Y2_DX, y ** (b - 2))
            if a == 1 and b >= 1:
                return leaf(S, PHI_XY_DX) if b == 1 else shear_leaf(S, PHI_XY_DX, y ** (b - 1))
            if a >= 2 and b >= 2:
                j, k = a - 1, b - 2
                return self._step(
                    key,
                    "D3",
                    (x ** (j + 1) * y ** (k + 2), RING.zero),
                    self.node(("dy", j, 1)),
                    self.node(("dx", 1, k + 2)),
                    Fraction(1, k + 2),
                )
        elif kind == "dy":
            a, b = idx
            if b == 1 and a >= 1:
                return leaf(S, PHI_XY_DY) if a == 1 else shear_leaf(S, PHI_XY_DY, x ** (a - 1))
            if b >= 3 and a == 0:
                k = b - 3
                return self._step(
                    key,
                    "D1",
                    (RING.zero, y ** (k + 3)),
                    self.node(("dx", 0, k + 2)),
                    self.node(("dy", 1, 1)),
                    Fraction(1),
                )
            if b >= 3:
                k = b - 3
                return self._step(
                    key,
                    "D2",
                    (RING.zero, x**a * y ** (k + 3)),
                    self.node(("dy", 0, k + 3)),
                    self.node(("dy", a, 1)),
                    Fraction(-1, k + 2),
                )
        elif kind == "chi":
            (ell,) = idx
            return leaf(S, CHI_XU_DX) if ell == 0 else shear_leaf(S, CHI_XU_DX, u**ell)
        elif kind == "uy":
            a, b, c = idx
            if a >= 1 and b >= 5 and c >= 1:
                return self._step(
                    key,
                    "E1",
                    (RING.zero, x**a * y**b * u**c),
                    self.node(("chi", c - 1)),
                    self.node(("dy", a, b)),
                    Fraction(1, a),
                )
        elif kind == "ux":
            a, b, c = idx
            if a >= 1 and b >= 6 and c >= 1:
                return self._step(
                    key,
                    "E2",
                    (x**a * y**b * u**c, RING.zero),
                    self.node(("uy", a, b - 1, c)),
                    self.node(("dx", 0, 2)),
                    Fraction(1, 2),
                )
        elif kind in ("psi_u", "psi_v"):
            mirror = self.mirror()
            swapped = mirror.node(("ux" if kind == "psi_u" else "uy", *idx))
            return transport(swapped, S)
        raise SpanExtensionError(f"No construction produces {key}")

    def mirror(self) -> CertifiedSpan:
        """Span on the swapped surface, used for the psi-side elements."""
        if self._mirror is None:
            self._mirror = _seed(swap_symmetry(self.surface).surface)
        return self._mirror

    def _step(
        self,
        key: tuple,
        rule: str,
        target_field: tuple[MultiPoly, MultiPoly],
        left: CertNode,
        right: CertNode,
        scalar: Fraction,
    ) -> CertNode:
        """target = scalar*[left, right] + (combination of certified elements)."""
        S = self.surface
        target = chart_derivation(S, CHART_PHI, target_field)
        br = bracket_node(left, right)
        c = _to_gauss(scalar)
        residual = target - br.value.scale(c)
        nodes: list[CertNode] = [br]
        coeffs: list[GaussRat] = [c]
        if not residual.is_zero:
            for needed in self._phi_keys(residual):
                self.node(needed)
            combo = self.solve(residual)
            if combo is None:
                raise SpanExtensionError(
                    f"Step {rule} for {key} leaves a remainder outside the span",
                    self.remainder(residual),
                )
            for index, coeff in sorted(combo.items()):
                nodes.append(self.elements[index][1])
                coeffs.append(coeff)
        result = lincomb_node(coeffs, nodes)
        if result.value.components != target.components:
            raise SpanExtensionError(f"Step {rule} for {key} does not reproduce its target")
        self.steps.append(StepRecord(key, rule, c, len(nodes) - 1))
        _LOGGER.debug("Produced %s by %s with %s corrections", key, rule, len(nodes) - 1)
        return result

    def _phi_keys(self, D: Derivation) -> list[tuple]:
        """Monomial phi-chart fields whose combination gives D on the chart."""
        keys = []
        for comp, kind in ((0, "dx"), (1, "dy")):
            frac = _phi_fractions(self.surface, (D.components[comp], RING.zero))[0]
            shift = frac.den[INDEX["y"]]
            for m, _ in frac.num.iterterms():
                a, b = m[INDEX["x"]], m[INDEX["y"]] - shift
                if b < 0 or m[INDEX["lambda"]]:
                    raise SpanExtensionError(
                        f"Chart coefficient x^{a}*y^{b} is not polynomial", field_of(vector_of(D))
                    )
                keys.append((kind, a, b))
        return sorted(set(keys))

    def express(self, target_field: tuple[MultiPoly, MultiPoly]) -> CertNode | None:
        """Certificate for a phi-chart field from chart monomials, or None."""
        try:
            target = chart_derivation(self.surface, CHART_PHI, target_field)
            for needed in self._phi_keys(target):
                self.node(needed)
        except (SpanExtensionError, PolynomializationError):
            return None
        combo = self.solve(target)
        if combo is None:
            return None
        items = sorted(combo.items())
        return lincomb_node([c for _, c in items], [self.elements[i][1] for i, _ in items])

    # --- named elements ---

    def t_y(self, j: int, k: int, ell: int) -> CertNode:
        """phi_*(x^(2+j) y^(7+k) u^(1+l) d/dy)."""
        return self.node(("uy", 2 + j, 7 + k, 1 + ell))

    def t_x(self, j: int, k: int, ell: int) -> CertNode:
        """phi_*(x^(2+j) y^(7+k) u^(1+l) d/dx)."""
        return self.node(("ux", 2 + j, 7 + k, 1 + ell))

    def psi_u(self, j: int, k: int, ell: int) -> CertNode:
        """psi_*(u^(2+j) v^(7+k) x^(1+l) d/du)."""
        return self.node(("psi_u", 2 + j, 7 + k, 1 + ell))

    def psi_v(self, j: int, k: int, ell: int) -> CertNode:
        """psi_*(u^(2+j) v^(7+k) x^(1+l) d/dv)."""
        return self.node(("psi_v", 2 + j, 7 + k, 1 + ell))


_SEED_KEYS: dict[str, tuple] = {
    PHI_Y2_DX: ("dx", 0, 2),
    PHI_XY_DX: ("dx", 1, 1),
    PHI_XY_DY: ("dy", 1, 1),
    CHI_XU_DX: ("chi", 0),
}


def _seed(S: Surface) -> CertifiedSpan:
    span = CertifiedSpan(S)
    for entry in catalog(S):
        node = CertNode(OP_LEAF, entry.derivation, catalog_id=entry.id)
        span._register(_SEED_KEYS.get(entry.id, ("leaf", entry.id)), node)
    return span


def build_span(S: Surface, ranges: Ranges | None) -> CertifiedSpan:
    """Seed the catalog and replay the bracket chain up to the given ranges.

    With ranges None the span holds the catalog leaves only.

    Raises:
        SpanExtensionError: If a step leaves a remainder outside the span.
    """
    span = _seed(S)
    if ranges is None:
        return span
    for k in range(ranges.k + 1):
        span.node(("dx", 0, k + 2))
        span.node(("dx", 1, k + 1))
        span.node(("dy", 0, k + 3))
        span.reports.append(verify_identity(S, "D1", (k,)))
        for j in range(1, ranges.j + 1):
            span.node(("dy", j, 1))
            span.node(("dy", j, k + 3))
            span.node(("dx", j + 1, k + 2))
            span.reports.append(verify_identity(S, "D2", (j, k)))
            span.reports.append(verify_identity(S, "D3", (j, k)))
    for ell in range(ranges.ell + 1):
        span.node(("chi", ell))
        for j in range(ranges.j + 1):
            for k in range(ranges.k + 1):
                span.reports.append(verify_identity(S, "E1", (2 + j, 2 + k, ell)))
                span.reports.append(verify_identity(S, "E2", (2 + j, 3 + k, ell)))
                span.t_y(j, k, ell)
                span.t_x(j, k, ell)
                span.psi_u(j, k, ell)
                span.psi_v(j, k, ell)
    _LOGGER.debug("Span on %s has %s elements after %s steps", S, len(span.elements), len(span.steps))
    return span


def get_span(S: Surface) -> CertifiedSpan:
    """Span shared by the Lambda and final generator constructions."""
    return S.cached("span", lambda: build_span(S, None))


# --- Lambda and the final generator ---


@dataclass
class LambdaResult:
    """The field Lambda with its extracted phi-chart factorization."""

    field: Derivation
    R: MultiPoly
    node: CertNode
    s: int
    r: int
    m: int
    displayed_residue: MultiPoly

    def __iter__(self) -> Iterator[Any]:
        return iter((self.field, self.R))


def _lambda_node(span: CertifiedSpan, j: int, k: int, ell: int, x_multiplier: bool) -> CertNode:
    """x*Psi_u + (Q + uQ')*Psi_v, or with v in place of x.

    Multiplying by x (= uQ/v on the psi-chart) raises the x-exponent of the
    psi-chart field, by v its v-exponent, and (Q + uQ') = sum (i+1) q_i u^i
    shifts the u-exponent, so both are constant combinations of span elements.
    """
    S = span.surface
    first = span.psi_u(j, k, ell + 1) if x_multiplier else span.psi_u(j, k + 1, ell)
    nodes = [first]
    coeffs: list[GaussRat] = [QQ_I.one]
    for i, q in enumerate(S.Q.coeffs):
        if q:
            nodes.append(span.psi_v(j + i, k, ell))
            coeffs.append(q * (i + 1))
    return lincomb_node(coeffs, nodes)


def _extract(S: Surface, component: MultiPoly) -> tuple[int, int, int, MultiPoly]:
    """Write a d/dy coefficient as x^(1+s) u^(2+r) v^(1+m) R(x, u) on the chi-chart."""
    images = get_chart(S, CHART_CHI).forward_fractions()
    frac = MonomialFraction.of(component).substitute(images)
    num = frac.num
    if not num:
        raise ExtractionError("Lambda has a vanishing d/dy coefficient", component)
    Qu = S.Q_u
    power = 0
    while True:
        quotient = exact_divide(num, Qu)
        if quotient is None:
            break
        num = quotient
        power += 1
    if power == 0:
        raise ExtractionError("No factor v = uQ(u)/x can be split off", component)
    content = content_monomial(num)
    R = RING.from_dict({RING.monomial_div(m, content): c for m, c in num.iterterms()})
    x_exp = content[INDEX["x"]] - frac.den[INDEX["x"]] + power
    u_exp = content[INDEX["u"]] - frac.den[INDEX["u"]] - power
    if R.degree(GENS["y"]) > 0 or R.degree(GENS["v"]) > 0:
        raise ExtractionError("R depends on y or v", R)
    return x_exp - 1, u_exp - 2, power - 1, R


def build_lambda(S: Surface, j: int, k: int, ell: int) -> LambdaResult:
    """Form Lambda from the psi-side elements and factor its phi-chart expression.

    The displayed multiplier v leaves a d/dx part; it is evaluated and kept as
    ``displayed_residue``. The construction uses the multiplier x, for which
    the d/dx part vanishes identically.

    Raises:
        ExtractionError: If the d/dx part does not vanish or R cannot be split off.
    """
    span = get_span(S)
    displayed = _lambda_node(span, j, k, ell, x_multiplier=False)
    residue = displayed.value.components[0]
    if residue:
        _LOGGER.warning("Displayed Lambda multiplier leaves a d/dx part with %s terms", len(residue))
    node = _lambda_node(span, j, k, ell, x_multiplier=True)
    lam = node.value
    if lam.components[0]:
        raise ExtractionError("Lambda has a d/dx part", lam.components[0])
    s, r, m, R = _extract(S, lam.components[1])
    _LOGGER.debug("Lambda(%s, %s, %s): s=%s r=%s m=%s", j, k, ell, s, r, m)
    return LambdaResult(lam, R, node, s, r, m, residue)


@dataclass
class FinalGenerator:
    """T with its certificate; iterates as (T, certificate)."""

    T: MultiPoly
    certificate: CertNode
    multiplier: tuple[int, ...]
    y_shift: int
    lam: LambdaResult

    def __iter__(self) -> Iterator[Any]:
        return iter((self.T, self.certificate))


def final_generator(S: Surface, j: int, k: int, ell: int, m: int) -> FinalGenerator:
    """Bracket x^(2+j) y^(3+k) u^(1+l) d/dy with Lambda and factor out x^(1+j) y^(1+k) u^(1+l) v^m.

    Lambda is built with exponents (0, m, 0); its v-exponent is 7 + m, so the
    factor v^m divides. When x^(2+j) y^(3+k) u^(1+l) d/dy is not reachable from
    the chart monomials, y^(7+k) is used and ``y_shift`` records the extra y^4.

    Raises:
        ExtractionError: If the factorization fails or T vanishes.
    """
    span = get_span(S)
    lam = build_lambda(S, 0, m, 0)
    y_shift = 0
    first = span.express((RING.zero, x ** (2 + j) * y ** (3 + k) * u ** (1 + ell)))
    if first is None:
        y_shift = 4
        first = span.t_y(j, k, ell)
    root = bracket_node(first, lam.node)
    if root.value.components[0]:
        raise ExtractionError("Final bracket has a d/dx part", root.value.components[0])
    multiplier = monomial(x=1 + j, y=1 + k, u=1 + ell, v=m)
    T = divide_by_monomial_mod(root.value.components[1], multiplier, S.gb)
    if T is None:
        raise ExtractionError("Final bracket is not divisible by the monomial", root.value.components[1])
    if not T:
        raise ExtractionError("T vanishes identically")
    return FinalGenerator(T, root, multiplier, y_shift, lam)


def ideal_element(S: Surface, T: MultiPoly, multiplier: tuple[int, ...]) -> Derivation:
    """(multiplier * T) * phi_*(d/dy) as a certified derivation."""
    return chart_derivation(S, CHART_PHI, (RING.zero, monomial_poly(multiplier) * T))


def matches_root(S: Surface, result: FinalGenerator) -> bool:
    """The ideal element built from T agrees with the certificate root."""
    element = ideal_element(S, result.T, result.multiplier)
    return element.components == result.certificate.value.components


# --- generating sets ---


class GeneratingCheckError(GizatullinError):
    """Error to indicate the generating-set check preconditions fail."""


def generating_check(S: Surface, p0: SurfacePoint, mu: Derivation) -> bool:
    """Does the shear of phi_*(y^2 d/dx) by y - y0 make mu(p0) a generating set?

    The time-1 map acts on T_p0 by w -> w + y0^2 phi_*(d/dx)(p0); the check is
    that mu(p0) and its image span the tangent plane.

    Raises:
        GeneratingCheckError: If y0 = 0, mu(p0) = 0 or p0 is not exact.
    """
    if p0.kind != "exact":
        raise GeneratingCheckError("The generating-set check needs an exact point")
    values = p0.as_dict()
    y0 = values["y"]
    if not y0:
        raise GeneratingCheckError("The point must have y != 0")
    mu_p = [eval_exact(c, values) for c in mu.components]
    if not any(mu_p):
        raise GeneratingCheckError("mu vanishes at the point")
    d_dx = pushforward(S, CHART_PHI, (RING.one, RING.zero))
    dx_p = []
    for comp in d_dx.components:
        den = eval_exact(monomial_poly(comp.den), values)
        dx_p.append(QQ_I.exquo(eval_exact(comp.num, values), den))
    image = [a + y0 * y0 * b for a, b in zip(mu_p, dx_p, strict=True)]
    jac = jacobian_exact(S, p0)
    for vec in (mu_p, image):
        column = DomainMatrix([[c] for c in vec], (4, 1), QQ_I)
        if not (jac * column).is_zero_matrix:
            raise GeneratingCheckError("Vector is not tangent at the point")
    rank = DomainMatrix([mu_p, image], (2, 4), QQ_I).rank()
    return rank == 2


# --- serialization ---


def certificate_json(root: CertNode, S: Surface) -> dict[str, Any]:
    """Node table with child indices, schema ``cert-v1``."""
    index: dict[int, int] = {}
    nodes = []
    for node in root.walk():
        index[id(node)] = len(nodes)
        entry: dict[str, Any] = {
            "op": node.op,
            "children": [index[id(child)] for child in node.children],
            "value": [format_poly(c) for c in node.value.components],
        }
        if node.coeffs:
            entry["coeff"] = [format_coeff(c) for c in node.coeffs]
        if node.catalog_id:
            entry["catalog_id"] = node.catalog_id
        if node.f is not None:
            entry["f"] = format_poly(node.f)
        nodes.append(entry)
    return {
        "schema": CERT_SCHEMA,
        "surface": {"P": format_poly(S.P), "Q": format_poly(S.Q)},
        "root": index[id(root)],
        "nodes": nodes,
    }


def report_json(report: IdentityReport) -> dict[str, Any]:
    out: dict[str, Any] = {
        "name": report.name,
        "params": list(report.params),
        "verdict": report.verdict,
        "oracle_agrees": report.oracle_agrees,
    }
    if report.scalar is not None:
        out["scalar"] = format_coeff(report.scalar)
    if report.difference is not None:
        out["difference"] = [format_poly(c) for c in report.difference.components]
    return out
