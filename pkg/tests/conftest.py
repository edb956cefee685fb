"""Shared surfaces and points for the Gizatullin toolkit tests."""

from __future__ import annotations

import pytest

from gizatullin.algebra import gauss
from gizatullin.config import RunConfig
from gizatullin.grammar import parse_poly
from gizatullin.surface import Surface, SurfacePoint, make_surface

# The two test surfaces used throughout: P(0), Q(0) both nonzero, and P(0) = 0
P_MINUS, Q_MINUS = "x - 1", "u - 1"
P_ZERO = "x"
# Non-simple roots on both sides
P_DOUBLE, Q_DOUBLE = "x*(x-1)^2", "u*(u-1)^2"


def build(P: str, Q: str) -> Surface:
    return make_surface(parse_poly(P, "P"), parse_poly(Q, "Q"))


@pytest.fixture(scope="session")
def surface_minus() -> Surface:
    """S_{x-1,u-1}."""
    return build(P_MINUS, Q_MINUS)


@pytest.fixture(scope="session")
def surface_zero() -> Surface:
    """S_{x,u-1}, where P(0) = 0."""
    return build(P_ZERO, Q_MINUS)


@pytest.fixture(scope="session")
def surface_double() -> Surface:
    """S_{x(x-1)^2,u(u-1)^2}, not smooth."""
    return build(P_DOUBLE, Q_DOUBLE)


@pytest.fixture
def point_minus() -> SurfacePoint:
    """(2, 1, 2, 1) on S_{x-1,u-1}: yu = 2 = x(x-1), xv = 2 = u(u-1), yv = 1 = (x-1)(u-1)."""
    return SurfacePoint((gauss(2), gauss(1), gauss(2), gauss(1)), "exact")


@pytest.fixture
def small_config() -> RunConfig:
    """A configuration small enough for unit tests."""
    return RunConfig(P=P_MINUS, Q=Q_MINUS, range=0, samples=2, seed=0)
