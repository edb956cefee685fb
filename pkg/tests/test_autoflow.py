"""Tests for flows, Theta, words and transitivity planning."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from gizatullin.algebra import gauss
from gizatullin.autoflow import (
    AutoWord,
    Flow,
    InvalidStepError,
    Iso,
    NotSmoothError,
    Swap,
    ThetaError,
    closed_flow,
    endpoint_error,
    execute_word,
    lambda_locus,
    normalize,
    numeric_flow,
    parse_word,
    plan_transitivity,
    project_to_surface,
    reference_point,
    sample_points,
    scaled_residual,
    theta,
    v1_identity,
    verify_theta,
    within,
    word_json,
)
from gizatullin.const import (
    CHART_PHI,
    DEFAULT_MOVE_TOL,
    DEFAULT_RESIDUAL_TOL,
    MODE_ALGEBRAIC,
    MODE_FLOWS,
    PHI_XY_DY,
    PHI_Y2_DX,
    PHI_Y_DX_LND,
    WORD_SCHEMA,
)
from gizatullin.fields import catalog, catalog_entry
from gizatullin.surface import ChartDomainError, Surface, SurfacePoint, chart_embed

from .conftest import build

FLOW_S, FLOW_T = 0.3 + 0.1j, -0.2 + 0.25j


@pytest.fixture
def point_far(surface_minus: Surface) -> SurfacePoint:
    """phi(3, 2) = (3, 2, 3, 2) on S_{x-1,u-1}."""
    return chart_embed(surface_minus, CHART_PHI, (gauss(3), gauss(2)))


class TestFlows:
    """Test closed-form and integrated flows."""

    def test_closed_matches_numeric(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test the chart formula agrees with integration."""
        t = 0.3 + 0.1j
        closed = closed_flow(surface_minus, PHI_XY_DY, t, point_minus)
        V = catalog_entry(surface_minus, PHI_XY_DY).derivation
        result = numeric_flow(surface_minus, V, t, point_minus)
        assert np.max(np.abs(closed.to_numpy() - result.endpoint.to_numpy())) < 1e-7
        assert result.max_residual <= 1e-8

    def test_exact_group_law(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test the polynomial shear composes exactly: flow t then -t is the identity."""
        forward = closed_flow(surface_minus, PHI_Y2_DX, gauss(2), point_minus)
        assert forward.kind == "exact"
        assert forward.coords == (gauss(4), gauss(1), gauss(12), gauss(33))
        back = closed_flow(surface_minus, PHI_Y2_DX, gauss(-2), forward)
        assert back.coords == point_minus.coords

    def test_not_in_catalog(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test the LND shear is refused when P(0) != 0."""
        with pytest.raises(InvalidStepError):
            closed_flow(surface_minus, PHI_Y_DX_LND, 1, point_minus)

    def test_outside_chart(self, surface_minus: Surface) -> None:
        """Test the closed form needs y != 0 on the phi-chart."""
        on_axis = SurfacePoint((gauss(1), gauss(0), gauss(2), gauss(2)), "exact")
        with pytest.raises(ChartDomainError):
            closed_flow(surface_minus, PHI_Y2_DX, 1, on_axis)

    def test_zero_time(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test a zero-time integration returns the start point."""
        V = catalog_entry(surface_minus, PHI_XY_DY).derivation
        result = numeric_flow(surface_minus, V, 0, point_minus)
        assert result.steps == 0
        assert np.allclose(result.endpoint.to_numpy(), point_minus.to_numpy())


@pytest.fixture(params=["surface_minus", "surface_zero"])
def any_surface(request: pytest.FixtureRequest) -> Surface:
    """Each of the two test surfaces."""
    return request.getfixturevalue(request.param)


def _distance(p: SurfacePoint, q: SurfacePoint) -> float:
    a, b = p.to_numpy(), q.to_numpy()
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


class TestCatalogFlows:
    """Test every catalog field on ten seeded points."""

    def test_integrator_stays_on_surface(self, any_surface: Surface) -> None:
        """Test integration keeps the scaled residual within 1e-9 for every field."""
        for entry in catalog(any_surface):
            for p in sample_points(any_surface, 10, 0):
                result = numeric_flow(any_surface, entry.derivation, FLOW_S, p, DEFAULT_RESIDUAL_TOL)
                assert result.max_residual <= DEFAULT_RESIDUAL_TOL, entry.id

    def test_group_law_and_agreement(self, any_surface: Surface) -> None:
        """Test closed flows compose additively and match the integrator within 1e-8."""
        for entry in catalog(any_surface):
            for p in sample_points(any_surface, 10, 0):
                try:
                    closed = closed_flow(any_surface, entry.id, FLOW_S, p)
                    stepped = closed_flow(any_surface, entry.id, FLOW_T, closed)
                    joined = closed_flow(any_surface, entry.id, FLOW_S + FLOW_T, p)
                except ChartDomainError:
                    continue
                assert _distance(stepped, joined) <= 1e-8, entry.id
                numeric = numeric_flow(any_surface, entry.derivation, FLOW_S, p)
                assert _distance(numeric.endpoint, closed) <= 1e-8, entry.id

    def test_projection(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test a point pushed off the surface is pulled back to roundoff level."""
        z = point_minus.to_numpy() + np.array([1e-6, -2e-6j, 3e-6, 1e-6 + 1e-6j])
        assert scaled_residual(surface_minus, z) > 1e-7
        projected = project_to_surface(surface_minus, z)
        assert scaled_residual(surface_minus, projected) < 1e-13
        assert np.max(np.abs(projected - point_minus.to_numpy())) < 1e-5

    def test_projection_on_surface(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test a point on the surface is left where it is."""
        z = point_minus.to_numpy()
        assert np.array_equal(project_to_surface(surface_minus, z), z)


class TestTheta:
    """Test the automorphism Theta."""

    def test_target(self, surface_minus: Surface, surface_zero: Surface) -> None:
        """Test Theta lands on S_{P,Q(u - lambda P(0))}."""
        assert theta(surface_minus, 1).target == build("x - 1", "u")
        assert theta(surface_zero, 1).target is surface_zero

    @pytest.mark.parametrize("lam", [None, 1, 2])
    def test_verify_minus(self, surface_minus: Surface, lam: int | None) -> None:
        """Test pullbacks and inverses hold exactly on S_{x-1,u-1}."""
        report = verify_theta(surface_minus, lam, samples=5, seed=0)
        assert report.ok
        assert report.max_residual < 1e-8

    def test_verify_zero(self, surface_zero: Surface) -> None:
        """Test pullbacks and inverses hold exactly on S_{x,u-1}."""
        assert verify_theta(surface_zero, None, samples=5, seed=1).ok

    def test_symbolic_apply(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test Theta with symbolic lambda cannot move a point."""
        with pytest.raises(ThetaError):
            theta(surface_minus).apply(point_minus)

    def test_v1(self, surface_zero: Surface) -> None:
        """Test the last component on the u-axis."""
        assert v1_identity(surface_zero)
        assert v1_identity(surface_zero, 2)

    def test_v1_needs_p0_zero(self, surface_minus: Surface) -> None:
        """Test the u-axis formula is refused when P(0) != 0."""
        with pytest.raises(ThetaError):
            v1_identity(surface_minus)

    def test_samples_seeded(self, surface_minus: Surface) -> None:
        """Test sample points repeat for a seed and lie on the surface."""
        first = sample_points(surface_minus, 3, 7)
        second = sample_points(surface_minus, 3, 7)
        assert [p.coords for p in first] == [p.coords for p in second]
        assert all(scaled_residual(surface_minus, p.to_numpy()) < 1e-10 for p in first)


class TestWords:
    """Test words, normalization and serialization."""

    def test_normalize(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test S_{x-1,u-1} is carried to S_{x,u-1} exactly."""
        word = normalize(surface_minus)
        assert word.steps == (Swap(), Iso(gauss(1)), Swap())
        assert word.end_surface() == build("x", "u - 1")
        result = execute_word(word, point_minus)
        assert result.surface == build("x", "u - 1")
        assert result.endpoint.kind == "exact"
        assert result.max_residual == 0

    def test_normalize_short(self, surface_zero: Surface) -> None:
        """Test the trivial and swap-only cases."""
        assert len(normalize(surface_zero)) == 0
        assert normalize(build("x - 1", "u")).steps == (Swap(),)

    def test_inverse(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test a word followed by its inverse returns the start point."""
        word = AutoWord(surface_minus, (Flow(PHI_Y2_DX, gauss(1)),)).then(normalize(surface_minus))
        forward = execute_word(word, point_minus)
        back = execute_word(word.inverse(), forward.endpoint)
        assert back.endpoint.coords == point_minus.coords
        assert back.surface == surface_minus

    def test_json(self, surface_minus: Surface) -> None:
        """Test word JSON reads back to the same word."""
        word = AutoWord(
            surface_minus, (Flow(PHI_Y2_DX, gauss(2)), Iso(gauss(1), "bwd"), Swap())
        )
        data = word_json(word)
        assert data["schema"] == WORD_SCHEMA
        assert data["steps"][1] == {"iso": {"lambda": "1", "dir": "bwd"}}
        assert parse_word(data, surface_minus) == word

    def test_json_rejects(self, surface_minus: Surface) -> None:
        """Test unknown schemas and step shapes are rejected."""
        with pytest.raises(InvalidStepError):
            parse_word({"schema": "word-v0", "steps": []}, surface_minus)
        with pytest.raises(InvalidStepError):
            parse_word({"schema": WORD_SCHEMA, "steps": [{"jump": 1}]}, surface_minus)


class TestTransitivity:
    """Test special points and planning."""

    def test_locus(self, surface_minus: Surface) -> None:
        """Test the points with y = v = 0 over the roots of xP and uQ."""
        locus = lambda_locus(surface_minus)
        expected = [
            (gauss(0), gauss(0), gauss(1), gauss(0)),
            (gauss(1), gauss(0), gauss(0), gauss(0)),
            (gauss(1), gauss(0), gauss(1), gauss(0)),
        ]
        assert len(locus) == 3
        assert all(c in [p.coords for p in locus] for c in expected)

    def test_reference_point(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test chi(2, 2) is the reference point of S_{x-1,u-1}."""
        assert reference_point(surface_minus).coords == point_minus.coords

    def test_same_point(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test the empty word connects a point to itself."""
        assert len(plan_transitivity(surface_minus, point_minus, point_minus)) == 0

    @pytest.mark.parametrize("mode", [MODE_FLOWS, MODE_ALGEBRAIC])
    def test_connects(
        self,
        surface_minus: Surface,
        point_minus: SurfacePoint,
        point_far: SurfacePoint,
        mode: str,
    ) -> None:
        """Test planned words reach the target point."""
        word = plan_transitivity(surface_minus, point_far, point_minus, mode)
        result = execute_word(word, point_far)
        assert endpoint_error(result, point_minus) <= DEFAULT_MOVE_TOL
        assert within(result, point_minus)

    def test_not_smooth(self, surface_double: Surface) -> None:
        """Test surfaces with multiple roots are refused with the stuck points named."""
        p = SurfacePoint((gauss(1), gauss(0), gauss(1), gauss(0)), "exact")
        with pytest.raises(NotSmoothError, match="cannot be moved"):
            plan_transitivity(surface_double, p, p)

    @pytest.mark.parametrize("mode", [MODE_FLOWS, MODE_ALGEBRAIC])
    def test_locus_to_chart_point(self, surface_minus: Surface, mode: str) -> None:
        """Test (1, 0, 1, 0) on the y = v = 0 stratum reaches (0, 1, 0, 1)."""
        p = SurfacePoint((gauss(1), gauss(0), gauss(1), gauss(0)), "exact")
        q = SurfacePoint((gauss(0), gauss(1), gauss(0), gauss(1)), "exact")
        word = plan_transitivity(surface_minus, p, q, mode)
        result = execute_word(word, p)
        assert endpoint_error(result, q) <= DEFAULT_MOVE_TOL
        assert result.max_residual <= 1e-8

    def test_exact_roots_with_large_denominators(self) -> None:
        """Test a root 1/1024 stays exact in the locus and in normalization."""
        S = build("1024*x - 1", "u - 1")
        root = gauss(Fraction(1, 1024))
        locus = lambda_locus(S)
        assert len(locus) == 3
        assert all(p.kind == "exact" for p in locus)
        assert (root, gauss(0), gauss(0), gauss(0)) in [p.coords for p in locus]
        word = normalize(S)
        assert word.steps == (Swap(), Iso(root), Swap())
        assert word.end_surface().p0_zero
