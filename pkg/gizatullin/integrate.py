"""Embedded Dormand-Prince 5(4) integrator for complex autonomous systems."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .algebra import GizatullinError
from .const import DEFAULT_RTOL

_LOGGER = logging.getLogger(__name__)

RHS = Callable[[np.ndarray], np.ndarray]
AfterStep = Callable[[float, np.ndarray], np.ndarray]

# Butcher tableau; the 5th order weights propagate, the 4th order ones estimate the error
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


class StepUnderflowError(GizatullinError):
    """Error to indicate the step size collapsed below machine resolution."""


@dataclass(frozen=True)
class Integration:
    """Endpoint of an integration with its step statistics."""

    z: np.ndarray
    steps: int
    rejected: int


class DormandPrince:
    """Adaptive explicit Runge-Kutta pair of orders 5 and 4.

    Integrates dz/ds = f(z) over s in [0, 1]; complex flow times are folded
    into f by the caller, so the independent variable stays real.
    """

    def __init__(
        self,
        rtol: float = DEFAULT_RTOL,
        atol: float = 1e-12,
        h0: float = 0.05,
        max_steps: int = 200_000,
    ) -> None:
        self.rtol = rtol
        self.atol = atol
        self.h0 = h0
        self.max_steps = max_steps

    def _attempt(self, f: RHS, z: np.ndarray, h: float) -> tuple[np.ndarray, float]:
        k = np.zeros((7, z.shape[0]), dtype=complex)
        k[0] = f(z)
        for stage in range(1, 7):
            increment = np.zeros_like(z)
            for j, a in enumerate(_A[stage]):
                if a:
                    increment = increment + a * k[j]
            k[stage] = f(z + h * increment)
        z5 = z + h * (_B5 @ k)
        z4 = z + h * (_B4 @ k)
        scale = self.atol + np.maximum(np.abs(z), np.abs(z5)) * self.rtol
        err = float(np.max(np.abs(z5 - z4) / scale))
        return z5, err

    def solve(self, f: RHS, z0: np.ndarray, after_step: AfterStep | None = None) -> Integration:
        """Integrate from s = 0 to s = 1.

        Args:
            f: Right-hand side.
            z0: Initial state.
            after_step: Called with (s, z) after every accepted step; its
                return value replaces z (projection hook).

        Raises:
            StepUnderflowError: If the step size underflows or the step budget runs out.
        """
        z = np.asarray(z0, dtype=complex)
        s = 0.0
        h = self.h0
        steps = rejected = 0
        while s < 1.0:
            h = min(h, 1.0 - s)
            z_new, err = self._attempt(f, z, h)
            if not np.all(np.isfinite(z_new)):
                err = np.inf
            if err <= 1.0:
                s += h
                z = z_new
                steps += 1
                if after_step is not None:
                    z = after_step(s, z)
                factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** (-0.2))
                h *= factor
            else:
                rejected += 1
                factor = 0.1 if not np.isfinite(err) else max(0.1, 0.9 * err ** (-0.25))
                h *= factor
                if s + h == s or h < 1e-14:
                    raise StepUnderflowError(f"Step size underflow at s={s:.6g}")
            if steps + rejected > self.max_steps:
                raise StepUnderflowError(f"Step budget of {self.max_steps} exhausted at s={s:.6g}")
        _LOGGER.debug("Integration finished: %s steps, %s rejected", steps, rejected)
        return Integration(z, steps, rejected)
