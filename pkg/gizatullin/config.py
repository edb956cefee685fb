"""Run configuration for the verification front end."""

from __future__ import annotations

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import voluptuous as vol

from .algebra import GizatullinError
from .const import (
    CONF_OUT,
    CONF_P,
    CONF_Q,
    CONF_RANGE,
    CONF_SAMPLES,
    CONF_SEED,
    CONF_SUITES,
    CONF_TIMINGS,
    CONF_TOL,
    DEFAULT_RANGE,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_THREADS_CAP,
    DEFAULT_TOL,
    SUITE_ALL,
    SUITES,
    THREADS_ENV,
)
from .grammar import parse_poly
from .surface import Surface, make_surface

_LOGGER = logging.getLogger(__name__)

MAX_RANGE = 6


class InvalidConfigError(GizatullinError):
    """Error to indicate a configuration that fails validation."""


def _expand_suites(value: Any) -> tuple[str, ...]:
    names = vol.Schema([vol.In((*SUITES, SUITE_ALL))])(list(value))
    if SUITE_ALL in names:
        return SUITES
    return tuple(sorted(set(names)))


CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_P): vol.All(str, vol.Length(min=1)),
        vol.Required(CONF_Q): vol.All(str, vol.Length(min=1)),
        vol.Optional(CONF_SUITES, default=[]): _expand_suites,
        vol.Optional(CONF_RANGE, default=DEFAULT_RANGE): vol.All(
            vol.Coerce(int), vol.Range(min=0, max=MAX_RANGE)
        ),
        vol.Optional(CONF_TOL, default=DEFAULT_TOL): vol.All(
            vol.Coerce(float), vol.Range(min=0, min_included=False)
        ),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(CONF_OUT, default=None): vol.Any(None, vol.Coerce(Path)),
        vol.Optional(CONF_SAMPLES, default=DEFAULT_SAMPLES): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_TIMINGS, default=False): bool,
    }
)


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one run of the suites."""

    P: str
    Q: str
    suites: tuple[str, ...] = ()
    range: int = DEFAULT_RANGE
    tol: float = DEFAULT_TOL
    seed: int = DEFAULT_SEED
    out: Path | None = None
    samples: int = DEFAULT_SAMPLES
    timings: bool = False

    def surface(self) -> Surface:
        """Parse P and Q and build the surface.

        Raises:
            PolySyntaxError: On malformed polynomial text.
            WrongVariableError: If P or Q uses a foreign variable.
            InvalidSurfaceError: If P or Q is constant.
        """
        return make_surface(parse_poly(self.P, "P"), parse_poly(self.Q, "Q"))


def build_config(data: Mapping[str, Any]) -> RunConfig:
    """Validate a mapping of settings into a RunConfig.

    Raises:
        InvalidConfigError: If the schema rejects the mapping.
    """
    try:
        validated = CONFIG_SCHEMA(dict(data))
    except vol.Invalid as err:
        raise InvalidConfigError(str(err)) from err
    return RunConfig(
        P=validated[CONF_P],
        Q=validated[CONF_Q],
        suites=validated[CONF_SUITES],
        range=validated[CONF_RANGE],
        tol=validated[CONF_TOL],
        seed=validated[CONF_SEED],
        out=validated[CONF_OUT],
        samples=validated[CONF_SAMPLES],
        timings=validated[CONF_TIMINGS],
    )


def worker_count() -> int:
    """Size of the suite pool: GIZ_THREADS if set, else the CPU count capped."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            _LOGGER.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
    return max(1, min(os.cpu_count() or 1, DEFAULT_THREADS_CAP))
