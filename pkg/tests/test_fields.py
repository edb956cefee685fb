"""Tests for derivations and the catalog of complete fields."""

from __future__ import annotations

import pytest

from gizatullin.algebra import GENS, RING
from gizatullin.const import (
    CHART_PHI,
    PHI_XY_DX,
    PHI_XY_DY,
    PHI_Y2_DX,
    PHI_Y_DX_LND,
    PSI_V_DU_LND,
    REASON_CHART_FLOW,
    REASON_LND,
)
from gizatullin.fields import (
    bracket,
    catalog,
    catalog_entry,
    chart_derivation,
    locally_nilpotent,
    shear_complete,
    tangency_check,
)
from gizatullin.suites import random_surfaces
from gizatullin.surface import AmbientField, Surface

from .conftest import build

x, y = GENS["x"], GENS["y"]


class TestTangency:
    """Test tangency certificates."""

    def test_zero_field(self, surface_minus: Surface) -> None:
        """Test the zero field is tangent with zero witnesses."""
        D = tangency_check(AmbientField.zero(), surface_minus)
        assert D is not None
        assert D.is_zero
        assert all(not c for row in D.witnesses for c in row)

    def test_d_dx_not_tangent(self, surface_minus: Surface) -> None:
        """Test d/dx alone leaves the surface."""
        field = AmbientField.from_polys(RING.one, RING.zero, RING.zero, RING.zero)
        assert tangency_check(field, surface_minus) is None

    def test_witnesses_verify(self, surface_minus: Surface) -> None:
        """Test catalog witnesses re-verify."""
        assert all(entry.derivation.verify() for entry in catalog(surface_minus))


class TestCatalog:
    """Test the catalog of complete fields."""

    def test_eight_entries(self, surface_minus: Surface) -> None:
        """Test P(0), Q(0) nonzero gives the eight chart fields."""
        entries = catalog(surface_minus)
        assert len(entries) == 8
        assert {e.reason for e in entries} == {REASON_CHART_FLOW}

    def test_lnd_entry(self, surface_zero: Surface) -> None:
        """Test P(0) = 0 adds phi_*(y d/dx)."""
        entries = catalog(surface_zero)
        assert len(entries) == 9
        assert catalog_entry(surface_zero, PHI_Y_DX_LND).reason == REASON_LND

    def test_psi_lnd_entry(self) -> None:
        """Test Q(0) = 0 adds psi_*(v d/du)."""
        S = build("x - 1", "u")
        assert catalog_entry(S, PSI_V_DU_LND).reason == REASON_LND

    def test_random_surfaces(self) -> None:
        """Test every catalog field extends and is tangent on seeded random surfaces."""
        for S in random_surfaces(10, 3):
            assert S.P.degree <= 4
            assert S.Q.degree <= 4
            entries = catalog(S)
            assert len(entries) == 8 + S.p0_zero + S.q0_zero
            assert all(entry.derivation.verify() for entry in entries), str(S)

    def test_missing_entry(self, surface_minus: Surface) -> None:
        """Test lookups of absent ids raise."""
        with pytest.raises(KeyError):
            catalog_entry(surface_minus, PHI_Y_DX_LND)


class TestBracket:
    """Test Lie brackets."""

    def test_antisymmetry(self, surface_minus: Surface) -> None:
        """Test [V, V] = 0 and [V, W] = -[W, V]."""
        V = catalog_entry(surface_minus, PHI_Y2_DX).derivation
        W = catalog_entry(surface_minus, PHI_XY_DY).derivation
        assert bracket(V, V).is_zero
        assert bracket(V, W).components == (-bracket(W, V)).components

    def test_first_chain_identity(self, surface_minus: Surface) -> None:
        """Test [y^2 dx, xy dy] + 2xy^2 dx = y^3 dy in the phi-chart."""
        S = surface_minus
        V = catalog_entry(S, PHI_Y2_DX).derivation
        W = catalog_entry(S, PHI_XY_DY).derivation
        lhs = bracket(V, W) + catalog_entry(S, PHI_XY_DX).derivation.multiply(y).scale(2)
        rhs = chart_derivation(S, CHART_PHI, (RING.zero, y**3))
        assert lhs.components == rhs.components

    def test_jacobi(self, surface_minus: Surface) -> None:
        """Test the Jacobi identity on three catalog fields."""
        S = surface_minus
        A = catalog_entry(S, PHI_Y2_DX).derivation
        B = catalog_entry(S, PHI_XY_DY).derivation
        C = catalog_entry(S, PHI_XY_DX).derivation
        total = bracket(A, bracket(B, C)) + bracket(B, bracket(C, A)) + bracket(C, bracket(A, B))
        assert total.is_zero


class TestCompleteness:
    """Test the shear criterion and local nilpotency."""

    def test_shear_y(self, surface_minus: Surface) -> None:
        """Test y * phi_*(y^2 d/dx) is complete."""
        assert shear_complete(catalog_entry(surface_minus, PHI_Y2_DX).derivation, y)

    @pytest.mark.parametrize("j", [0, 1, 2])
    def test_shear_x_powers(self, surface_minus: Surface, j: int) -> None:
        """Test x^j * phi_*(xy d/dy) is complete."""
        assert shear_complete(catalog_entry(surface_minus, PHI_XY_DY).derivation, x**j)

    def test_shear_fails(self, surface_minus: Surface) -> None:
        """Test x * phi_*(xy d/dx) fails the criterion."""
        assert not shear_complete(catalog_entry(surface_minus, PHI_XY_DX).derivation, x)

    def test_lnd(self, surface_minus: Surface) -> None:
        """Test phi_*(y^2 d/dx) is locally nilpotent."""
        assert locally_nilpotent(catalog_entry(surface_minus, PHI_Y2_DX).derivation, 12) == "yes"

    def test_eigen_pattern(self, surface_minus: Surface) -> None:
        """Test phi_*(xy d/dy) has V(y) = x*y."""
        assert locally_nilpotent(catalog_entry(surface_minus, PHI_XY_DY).derivation, 4) == "no"

    def test_zero_is_lnd(self, surface_minus: Surface) -> None:
        """Test the zero derivation."""
        D = tangency_check(AmbientField.zero(), surface_minus)
        assert D is not None
        assert locally_nilpotent(D, 1) == "yes"

    def test_lnd_when_p0_vanishes(self, surface_zero: Surface) -> None:
        """Test phi_*(y d/dx) is locally nilpotent when P(0) = 0."""
        D = catalog_entry(surface_zero, PHI_Y_DX_LND).derivation
        cap = 4 * (surface_zero.P.degree + surface_zero.Q.degree + 2)
        assert locally_nilpotent(D, cap) == "yes"
