"""Suite coordinator for the Gizatullin surface toolkit."""

from __future__ import annotations

import asyncio
import logging
import time
from typing import Any

import numpy as np

from .algebra import PolynomialError
from .autoflow import (
    InvalidStepError,
    NotSmoothError,
    PlanningError,
    ResidualError,
    StepUnderflowError,
    ThetaError,
)
from .config import RunConfig, worker_count
from .const import EXIT_FINDING, EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, REPORT_SCHEMA
from .grammar import format_poly
from .suites import SUITE_RUNNERS, SuiteResult
from .surface import (
    ChartDomainError,
    InvalidSurfaceError,
    NotOnSurfaceError,
    SingularPointError,
    Surface,
)

_LOGGER = logging.getLogger(__name__)

NUMERIC_ERRORS: tuple[type[Exception], ...] = (
    ResidualError,
    StepUnderflowError,
    PlanningError,
    SingularPointError,
    np.linalg.LinAlgError,
)
INVALID_ERRORS: tuple[type[Exception], ...] = (
    NotSmoothError,
    InvalidStepError,
    InvalidSurfaceError,
    ChartDomainError,
    NotOnSurfaceError,
    PolynomialError,
    ThetaError,
)


class SuiteCoordinator:
    """Run the selected suites on a bounded worker pool."""

    def __init__(self, config: RunConfig, surface: Surface, workers: int | None = None) -> None:
        """Initialize the coordinator.

        Args:
            config: Validated run configuration.
            surface: The surface built from config.
            workers: Pool size; defaults to GIZ_THREADS or the capped CPU count.
        """
        self.config = config
        self.surface = surface
        self.workers = workers or worker_count()
        self._semaphore = asyncio.Semaphore(self.workers)

    def _run_suite(self, name: str) -> SuiteResult:
        started = time.perf_counter()
        result = SUITE_RUNNERS[name](self.surface, self.config)
        result.elapsed = time.perf_counter() - started
        return result

    def _stopped(self, name: str, err: Exception, code: int) -> SuiteResult:
        result = SuiteResult(name, exit_code=code)
        result.fail("error", error=type(err).__name__, message=str(err), exit_code=code)
        return result

    async def _async_run_suite(self, name: str) -> SuiteResult:
        """Run one suite in a worker thread.

        A numeric or input error stops only this suite; it is recorded as an
        ``error`` finding carrying its exit code.
        """
        async with self._semaphore:
            _LOGGER.debug("Starting suite %s on %s", name, self.surface)
            try:
                return await asyncio.to_thread(self._run_suite, name)
            except NUMERIC_ERRORS as err:
                _LOGGER.error("Suite %s hit a numeric failure: %s", name, err)
                return self._stopped(name, err, EXIT_NUMERIC)
            except INVALID_ERRORS as err:
                _LOGGER.error("Suite %s rejected its input: %s", name, err)
                return self._stopped(name, err, EXIT_INVALID)

    async def async_run(self) -> list[SuiteResult]:
        """Run every selected suite; results come back ordered by suite name."""
        names = sorted(self.config.suites)
        return list(await asyncio.gather(*(self._async_run_suite(name) for name in names)))

    @staticmethod
    def exit_code(results: list[SuiteResult]) -> int:
        """The worst outcome: a stopped suite, then a finding, then success."""
        stopped = [r.exit_code for r in results if r.exit_code is not None]
        if stopped:
            return max(stopped)
        return EXIT_OK if all(r.passed for r in results) else EXIT_FINDING

    def report(self, results: list[SuiteResult]) -> dict[str, Any]:
        """The ``report-v1`` document for a finished run."""
        return {
            "schema": REPORT_SCHEMA,
            "surface": {"P": format_poly(self.surface.P), "Q": format_poly(self.surface.Q)},
            "seed": self.config.seed,
            "range": self.config.range,
            "tol": self.config.tol,
            "suites": {r.name: r.as_dict(self.config.timings) for r in results},
        }
