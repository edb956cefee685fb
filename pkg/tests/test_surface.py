"""Tests for surfaces, points, charts and push-forwards."""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from gizatullin.algebra import GENS, RING, UniPoly, gauss
from gizatullin.const import CHART_CHI, CHART_PHI, CHART_PSI
from gizatullin.surface import (
    ChartDomainError,
    InvalidSurfaceError,
    NotOnSurfaceError,
    SingularPointError,
    Surface,
    SurfacePoint,
    SwapResult,
    chart_embed,
    make_point,
    make_surface,
    pushforward,
    residuals,
    swap_symmetry,
    tangent_basis,
)

from .conftest import build

x, y, u, v = GENS["x"], GENS["y"], GENS["u"], GENS["v"]


class TestMakeSurface:
    """Test surface construction."""

    def test_smooth(self, surface_minus: Surface) -> None:
        """Test S_{x-1,u-1} is smooth."""
        assert surface_minus.smooth
        assert surface_minus.singular_reason() is None

    def test_origin_condition(self) -> None:
        """Test P(0) = Q(0) = 0 is flagged."""
        S = build("x", "u")
        assert not S.smooth
        assert S.singular_reason() == "P(0) = Q(0) = 0"

    def test_non_simple_roots(self, surface_double: Surface) -> None:
        """Test repeated roots are flagged on both sides."""
        reason = surface_double.singular_reason()
        assert reason is not None
        assert "P has non-simple roots" in reason
        assert "Q has non-simple roots" in reason

    def test_constant_rejected(self) -> None:
        """Test constant P gives a Danielewski surface, not ours."""
        with pytest.raises(InvalidSurfaceError):
            make_surface(UniPoly((1,), "x"), UniPoly((-1, 1), "u"))

    def test_str(self, surface_minus: Surface) -> None:
        """Test the printed form."""
        assert str(surface_minus) == "S[P=x - 1, Q=u - 1]"


class TestPoints:
    """Test point validation."""

    def test_exact_point(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test an exact point is accepted."""
        assert make_point(surface_minus, point_minus.coords) == point_minus

    def test_off_surface(self, surface_minus: Surface) -> None:
        """Test an exact point off the surface is rejected."""
        with pytest.raises(NotOnSurfaceError):
            make_point(surface_minus, (gauss(1), gauss(1), gauss(1), gauss(1)))

    def test_numeric_tolerance(self, surface_minus: Surface) -> None:
        """Test numeric points are checked against the tolerance."""
        point = make_point(surface_minus, (2.0, 1.0, 2.0, 1.0 + 1e-12))
        assert point.kind == "numeric"
        with pytest.raises(NotOnSurfaceError):
            make_point(surface_minus, (2.0, 1.0, 2.0, 1.1))

    def test_attribute_access(self, point_minus: SurfacePoint) -> None:
        """Test coordinates by name."""
        assert point_minus.x == gauss(2)
        assert point_minus.v == gauss(1)


class TestCharts:
    """Test chart embeddings."""

    @pytest.mark.parametrize("tag", [CHART_PHI, CHART_PSI, CHART_CHI])
    def test_embed_lands_on_surface(self, surface_minus: Surface, tag: str) -> None:
        """Test exact embeddings satisfy all three equations."""
        p = chart_embed(surface_minus, tag, (gauss(3), gauss(2)))
        make_point(surface_minus, p.coords)

    def test_phi_values(self, surface_minus: Surface) -> None:
        """Test phi(2, 1) = (2, 1, 2, 1)."""
        p = chart_embed(surface_minus, CHART_PHI, (gauss(2), gauss(1)))
        assert p.coords == (gauss(2), gauss(1), gauss(2), gauss(1))

    def test_numeric_embed(self, surface_minus: Surface) -> None:
        """Test numeric embeddings have small residuals."""
        p = chart_embed(surface_minus, CHART_CHI, (0.3 + 1j, -2.0 + 0.5j))
        assert residuals(surface_minus, p.to_numpy()).max() < 1e-12

    def test_chart_domain(self, surface_minus: Surface) -> None:
        """Test phi needs y != 0."""
        with pytest.raises(ChartDomainError):
            chart_embed(surface_minus, CHART_PHI, (gauss(1), gauss(0)))


class TestPushforward:
    """Test chart push-forwards."""

    def test_d_dx_is_rational(self, surface_minus: Surface) -> None:
        """Test phi_*(d/dx) keeps a denominator."""
        assert not pushforward(surface_minus, CHART_PHI, (RING.one, RING.zero)).is_polynomial

    def test_y2_dx(self, surface_minus: Surface) -> None:
        """Test phi_*(y^2 d/dx) = y^2 d/dx + y(2x-1) d/du + ... is polynomial."""
        field = pushforward(surface_minus, CHART_PHI, (y**2, RING.zero))
        assert field.is_polynomial
        cx, cy, cu, _ = field.polys
        assert cx == y**2
        assert cy == RING.zero
        assert not surface_minus.reduce(cu - y * (2 * x - 1))


class TestTangentSpace:
    """Test tangent bases."""

    def test_exact_basis(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test the kernel has two vectors."""
        a, b = tangent_basis(surface_minus, point_minus)
        assert len(a) == len(b) == 4

    def test_numeric_basis(self, surface_minus: Surface, point_minus: SurfacePoint) -> None:
        """Test the numeric basis is orthogonal to the generator gradients."""
        a, _ = tangent_basis(surface_minus, point_minus.numeric())
        assert np.linalg.norm(np.array(a)) > 0.5

    def test_singular_origin(self) -> None:
        """Test the origin of S_{x,u} is singular."""
        S = build("x", "u")
        origin = SurfacePoint((gauss(0),) * 4, "exact")
        with pytest.raises(SingularPointError):
            tangent_basis(S, origin)


class TestSwap:
    """Test the coordinate swap."""

    def test_swapped_surface(self, surface_zero: Surface) -> None:
        """Test S_{x,u-1} swaps to S_{x-1,u}."""
        swapped = swap_symmetry(surface_zero).surface
        assert swapped == build("x - 1", "u")

    def test_point(self, surface_zero: Surface) -> None:
        """Test points swap onto the swapped surface."""
        p = chart_embed(surface_zero, CHART_PHI, (gauss(2), gauss(1)))
        q = SwapResult.point(p)
        make_point(swap_symmetry(surface_zero).surface, q.coords)


class TestCache:
    """Test the per-surface cache."""

    def test_built_once_across_threads(self) -> None:
        """Test concurrent lookups build an entry once and share it."""
        S = build("x - 2", "u + 1")
        calls = []
        guard = threading.Lock()

        def slow_build() -> list[int]:
            with guard:
                calls.append(1)
            time.sleep(0.01)
            return [len(calls)]

        with ThreadPoolExecutor(max_workers=8) as pool:
            values = list(pool.map(lambda _: S.cached("entry", slow_build), range(16)))
        assert len(calls) == 1
        assert all(value is values[0] for value in values)

    def test_nested_build(self) -> None:
        """Test a build may itself read the cache."""
        S = build("x - 2", "u + 1")
        outer = S.cached("outer", lambda: ("wrapped", S.cached("inner", lambda: 7)))
        assert outer == ("wrapped", 7)
        assert S.cache["inner"] == 7

    def test_swap_shared(self) -> None:
        """Test the swapped surface is built once when requested from several threads."""
        S = build("x - 2", "u + 1")
        with ThreadPoolExecutor(max_workers=4) as pool:
            swapped = list(pool.map(lambda _: swap_symmetry(S).surface, range(4)))
        assert all(s is swapped[0] for s in swapped)
