"""Verification suites run by the coordinator."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .algebra import COORDS, GENS, RING, UniPoly, gauss, monomial
from .autoflow import (
    NotSmoothError,
    closed_flow,
    endpoint_error,
    execute_word,
    lambda_locus,
    normalize,
    numeric_flow,
    plan_transitivity,
    sample_points,
    v1_identity,
    verify_theta,
)
from .config import RunConfig
from .const import (
    CHART_CHI,
    CHART_PHI,
    CHART_PSI,
    DEFAULT_MOVE_TOL,
    DEFAULT_RESIDUAL_TOL,
    MODE_ALGEBRAIC,
    MODE_FLOWS,
    PHI_XY_DX,
    PHI_XY_DY,
    PHI_Y2_DX,
    REASON_LND,
    SUITE_BRACKETS,
    SUITE_CHARTS,
    SUITE_FLOWS,
    SUITE_GENERATING,
    SUITE_IDEAL,
    SUITE_ISO,
    SUITE_LND,
    SUITE_TRANSITIVITY,
    THETA_IMAGE_TOL,
)
from .fields import catalog, catalog_entry, locally_nilpotent, shear_complete
from .grammar import format_coeff, format_poly
from .ideal import divide_by_monomial_mod, is_groebner, normal_form
from .liecert import (
    ExtractionError,
    GeneratingCheckError,
    Ranges,
    build_span,
    final_generator,
    generating_check,
    matches_root,
    report_json,
    verify_tree,
)
from .surface import (
    ChartDomainError,
    NotOnSurfaceError,
    Surface,
    SurfacePoint,
    chart_embed,
    make_point,
    make_surface,
)

_LOGGER = logging.getLogger(__name__)

x, y, u, v = (GENS[name] for name in COORDS)

FLOW_TIMES = (0.3 + 0.1j, -0.2 + 0.25j)


@dataclass
class SuiteResult:
    """Outcome of one suite: failures go to findings, informational records to details."""

    name: str
    findings: list[dict[str, Any]] = field(default_factory=list)
    details: list[dict[str, Any]] = field(default_factory=list)
    elapsed: float | None = None
    exit_code: int | None = None

    @property
    def passed(self) -> bool:
        return not self.findings

    def fail(self, check: str, **info: Any) -> None:
        self.findings.append({"check": check, **info})

    def as_dict(self, timings: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "pass": self.passed,
            "findings": self.findings,
            "details": self.details,
        }
        if timings and self.elapsed is not None:
            out["seconds"] = round(self.elapsed, 3)
        return out


def _random_uni(rng: np.random.Generator, var: str) -> UniPoly:
    degree = int(rng.integers(1, 5))
    roots = rng.choice(np.arange(-3, 4), size=degree, replace=False)
    gen = GENS[var]
    poly = RING(int(rng.integers(1, 4)))
    for r in roots:
        poly *= gen - int(r)
    return UniPoly.from_poly(poly, var)


def random_surfaces(count: int, seed: int) -> list[Surface]:
    """Seeded surfaces with simple integer roots, P(0) and Q(0) not both zero."""
    rng = np.random.default_rng(seed)
    surfaces = []
    while len(surfaces) < count:
        P, Q = _random_uni(rng, "x"), _random_uni(rng, "u")
        if not P.at_zero() and not Q.at_zero():
            continue
        surfaces.append(make_surface(P, Q))
    return surfaces


def _exact_chart_points(S: Surface, count: int, seed: int) -> list[SurfacePoint]:
    rng = np.random.default_rng(seed)
    points = []
    for tag in (CHART_PHI, CHART_PSI, CHART_CHI):
        for _ in range(count):
            a, b = (int(n) for n in rng.integers(1, 6, size=2))
            points.append(chart_embed(S, tag, (gauss(a), gauss(b))))
    return points


def run_charts(S: Surface, config: RunConfig) -> SuiteResult:
    """Catalog fields polynomialize and verify on S and on seeded random surfaces."""
    result = SuiteResult(SUITE_CHARTS)
    for surface in (S, *random_surfaces(config.samples, config.seed)):
        entries = catalog(surface)
        expected = 8 + surface.p0_zero + surface.q0_zero
        if len(entries) != expected:
            result.fail("catalog-size", surface=str(surface), found=len(entries))
        for entry in entries:
            if not entry.derivation.verify():
                result.fail("tangency", surface=str(surface), field=entry.id)
    for p in _exact_chart_points(S, 3, config.seed):
        try:
            make_point(S, p.coords)
        except NotOnSurfaceError as err:
            result.fail("chart-embed", point=[format_coeff(c) for c in p.coords], error=str(err))
    result.details.append({"random_surfaces": config.samples})
    return result


def run_brackets(S: Surface, config: RunConfig) -> SuiteResult:
    """Replay the bracket chain; every identity must hold up to a scalar or lie in the span."""
    result = SuiteResult(SUITE_BRACKETS)
    r = config.range
    span = build_span(S, Ranges(j=max(r, 1), k=r, ell=r, m=r))
    for report in span.reports:
        record = report_json(report)
        if report.verdict != "exact":
            result.details.append(record)
        if not report.oracle_agrees:
            result.fail("oracle", **record)
        elif not report.accepted and not span.contains(report.difference):
            result.fail("identity", **record)
    if not span.verify():
        result.fail("span-certificates")
    result.details.append({"span_elements": len(span.elements), "steps": len(span.steps)})
    return result


def run_ideal(S: Surface, config: RunConfig) -> SuiteResult:
    """Basis invariants, membership and monomial division on S."""
    result = SuiteResult(SUITE_IDEAL)
    gb = S.gb
    if not is_groebner(gb):
        result.fail("s-polynomials")
    g1, g2, _ = S.generators
    if not normal_form(y * g2 - v * g1, gb).in_ideal:
        result.fail("membership")
    for f, m, expected in (
        (x * S.P_x, monomial(y=1), u),
        (S.P_x * S.Q_u, monomial(y=1), v),
    ):
        g = divide_by_monomial_mod(f, m, gb)
        if g is None or S.reduce(g - expected):
            result.fail("monomial-division", f=format_poly(f))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.samples):
        exps = rng.integers(0, 3, size=(3, 4))
        p = RING.zero
        element = RING.zero
        for row, g in zip(exps, S.generators, strict=True):
            term = x ** int(row[0]) * y ** int(row[1]) * u ** int(row[2]) * v ** int(row[3])
            p += term
            element += term * g
        if S.reduce(p + element) != S.reduce(p):
            result.fail("normal-form-class", p=format_poly(p))
    result.details.append({"basis_size": len(gb.generators)})
    return result


def run_iso(S: Surface, config: RunConfig) -> SuiteResult:
    """Theta pulls the target ideal back, inverts, and maps sample points onto the target."""
    result = SuiteResult(SUITE_ISO)
    word = normalize(S)
    surfaces = [S] if word.end_surface() == S else [S, word.end_surface()]
    result.details.append({"normalized": str(word.end_surface()), "steps": len(word)})
    for surface in surfaces:
        for lam in (None, 1):
            report = verify_theta(surface, lam, samples=4 * config.samples, seed=config.seed)
            label = "symbolic" if lam is None else str(lam)
            if not report.pullback_ok:
                result.fail("pullback", surface=str(surface), lam=label)
            if not report.inverse_ok:
                result.fail("inverse", surface=str(surface), lam=label)
            if report.max_residual > THETA_IMAGE_TOL:
                result.fail(
                    "image-residual",
                    surface=str(surface),
                    lam=label,
                    residual=float(report.max_residual),
                )
        if surface.p0_zero and not v1_identity(surface):
            result.fail("v1", surface=str(surface))
    if not word.end_surface().p0_zero:
        result.fail("normalize", surface=str(S))
    return result


def run_lnd(S: Surface, config: RunConfig) -> SuiteResult:
    """LND entries are locally nilpotent and shear products are complete."""
    result = SuiteResult(SUITE_LND)
    target = normalize(S).end_surface()
    for surface in dict.fromkeys((S, target)):
        cap = 4 * (surface.P.degree + surface.Q.degree + 2)
        for entry in catalog(surface):
            if entry.reason != REASON_LND:
                continue
            verdict = locally_nilpotent(entry.derivation, cap)
            result.details.append({"surface": str(surface), "field": entry.id, "verdict": verdict})
            if verdict != "yes":
                result.fail("lnd", surface=str(surface), field=entry.id, verdict=verdict)
    if locally_nilpotent(catalog_entry(S, PHI_XY_DY).derivation, 4) != "no":
        result.fail("eigen-pattern", field=PHI_XY_DY)
    xy_dy = catalog_entry(S, PHI_XY_DY).derivation
    for j in range(config.range + 2):
        if not shear_complete(xy_dy, x**j):
            result.fail("shear", field=PHI_XY_DY, f=format_poly(x**j))
    if not shear_complete(catalog_entry(S, PHI_Y2_DX).derivation, y):
        result.fail("shear", field=PHI_Y2_DX, f="y")
    if shear_complete(catalog_entry(S, PHI_XY_DX).derivation, x):
        result.fail("shear-negative", field=PHI_XY_DX, f="x")
    return result


def run_flows(S: Surface, config: RunConfig) -> SuiteResult:
    """Closed flows obey the group law and agree with the integrator."""
    result = SuiteResult(SUITE_FLOWS)
    points = sample_points(S, min(config.samples, 10), config.seed)
    s, t = FLOW_TIMES
    worst = 0.0
    for entry in catalog(S):
        for p in points:
            try:
                closed = closed_flow(S, entry.id, s, p)
                stepped = closed_flow(S, entry.id, t, closed)
                joined = closed_flow(S, entry.id, s + t, p)
            except ChartDomainError:
                continue
            group = _distance(stepped, joined)
            numeric = numeric_flow(S, entry.derivation, s, p, DEFAULT_RESIDUAL_TOL)
            agree = _distance(numeric.endpoint, closed)
            worst = max(worst, group, agree)
            if group > config.tol:
                result.fail("group-law", field=entry.id, error=group)
            if agree > config.tol:
                result.fail("closed-vs-numeric", field=entry.id, error=agree)
    result.details.append({"max_error": float(worst)})
    return result


def _distance(p: SurfacePoint, q: SurfacePoint) -> float:
    a, b = p.to_numpy(), q.to_numpy()
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def run_generating(S: Surface, config: RunConfig) -> SuiteResult:
    """Final generators re-verify, and their root fields pass the generating-set check."""
    result = SuiteResult(SUITE_GENERATING)
    top = min(config.range, 1)
    root = None
    for j, k, ell, m in itertools.product(range(top + 1), repeat=4):
        try:
            final = final_generator(S, j, k, ell, m)
        except ExtractionError as err:
            result.fail("final-generator", params=[j, k, ell, m], error=str(err))
            continue
        if not verify_tree(final.certificate, S):
            result.fail("certificate", params=[j, k, ell, m])
        if not matches_root(S, final):
            result.fail("ideal-element", params=[j, k, ell, m])
        result.details.append(
            {"params": [j, k, ell, m], "T": format_poly(final.T), "y_shift": final.y_shift}
        )
        if root is None:
            root = final.certificate.value
    if root is None:
        return result
    rng = np.random.default_rng(config.seed)
    checked = 0
    while checked < min(config.samples, 20):
        a, b = (int(n) for n in rng.integers(1, 8, size=2))
        p = chart_embed(S, CHART_PHI, (gauss(a), gauss(b)))
        try:
            ok = generating_check(S, p, root)
        except GeneratingCheckError:
            continue
        checked += 1
        if not ok:
            result.fail("generating", point=[format_coeff(c) for c in p.coords])
    return result


def run_transitivity(S: Surface, config: RunConfig) -> SuiteResult:
    """Seeded point pairs, the locus points included, are connected in both modes."""
    result = SuiteResult(SUITE_TRANSITIVITY)
    points = [*lambda_locus(S), *sample_points(S, config.samples, config.seed)]
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    for mode in (MODE_FLOWS, MODE_ALGEBRAIC):
        for _ in range(config.samples):
            i, j = (int(n) for n in rng.integers(0, len(points), size=2))
            p, q = points[i], points[j]
            try:
                word = plan_transitivity(S, p, q, mode, config.tol)
            except NotSmoothError as err:
                result.fail("smoothness", reason=err.reason)
                return result
            error = endpoint_error(execute_word(word, p, config.tol), q)
            worst = max(worst, error)
            if error > DEFAULT_MOVE_TOL:
                result.fail("endpoint", mode=mode, pair=[i, j], error=error)
    result.details.append({"pairs": 2 * config.samples, "max_error": float(worst)})
    return result


SUITE_RUNNERS: dict[str, Callable[[Surface, RunConfig], SuiteResult]] = {
    SUITE_BRACKETS: run_brackets,
    SUITE_CHARTS: run_charts,
    SUITE_FLOWS: run_flows,
    SUITE_GENERATING: run_generating,
    SUITE_IDEAL: run_ideal,
    SUITE_ISO: run_iso,
    SUITE_LND: run_lnd,
    SUITE_TRANSITIVITY: run_transitivity,
}

__all__ = ["SUITE_RUNNERS", "SuiteResult", "random_surfaces"]
