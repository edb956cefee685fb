"""Exact and numeric tools for the Gizatullin surfaces S_{P,Q}.

The surfaces are cut out of 4-space by yu = xP(x), xv = uQ(u), yv = P(x)Q(u).
"""

from __future__ import annotations

import logging
from typing import Any

from .config import RunConfig, build_config
from .coordinator import SuiteCoordinator
from .suites import SuiteResult
from .surface import Surface, make_surface

_LOGGER = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "SuiteCoordinator",
    "SuiteResult",
    "Surface",
    "async_run_config",
    "build_config",
    "make_surface",
]


async def async_run_config(config: RunConfig) -> tuple[dict[str, Any], int]:
    """Build the surface of a config, run its suites and return the report with its exit code."""
    surface = config.surface()
    coordinator = SuiteCoordinator(config, surface)
    results = await coordinator.async_run()
    _LOGGER.debug("Finished %s suites on %s", len(results), surface)
    return coordinator.report(results), coordinator.exit_code(results)
