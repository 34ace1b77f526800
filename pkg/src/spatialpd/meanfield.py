"""Well-mixed (mean-field) prediction for the Monte Carlo rule.

Without spatial structure the cooperator density obeys

    drho/dt = -rho (1 - rho) / (1 - rho + rho/b + 1/(b d)),

which has fixed points at 0 and 1 and is negative in between, so any
interior start decays to full defection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .game import DEGREE

DEFAULT_DT = 0.01


def _check_rho(rho: float) -> None:
    if not 0.0 <= rho <= 1.0:
        raise InvalidInputError(f"density {rho} outside [0, 1]")


def mf_avg_payoffs(rho: float, b: float, d: int = DEGREE) -> tuple[float, float]:
    """Average returns (cooperator, defector) in a well-mixed population."""
    _check_rho(rho)
    return d * rho, b * d * rho


def mf_derivative(rho: float, b: float, d: int = DEGREE) -> float:
    _check_rho(rho)
    if not b > 1:
        raise InvalidParameterError(f"temptation must exceed 1, got {b}")
    if d < 1:
        raise InvalidParameterError(f"degree must be >= 1, got {d}")
    return -rho * (1.0 - rho) / (1.0 - rho + rho / b + 1.0 / (b * d))


def _rhs(rho: float, b: float, d: int) -> float:
    # same expression as mf_derivative without the domain checks, for the RK stages
    return -rho * (1.0 - rho) / (1.0 - rho + rho / b + 1.0 / (b * d))


@dataclass(frozen=True)
class MeanFieldState:
    rho: float
    t: float


@dataclass(frozen=True, eq=False)
class MeanFieldTrajectory:
    t: np.ndarray
    rho: np.ndarray

    def __iter__(self) -> Iterator[MeanFieldState]:
        for t, rho in zip(self.t, self.rho):
            yield MeanFieldState(rho=float(rho), t=float(t))

    def __len__(self):
        return len(self.t)


def mf_integrate(
    rho0: float,
    b: float,
    d: int = DEGREE,
    dt: float = DEFAULT_DT,
    T: float = 1000,
    sample: float = 1.0,
) -> MeanFieldTrajectory:
    """Classical fixed-step RK4 from ``rho0`` up to ``T``.

    The state is recorded every ``sample`` time units (whole rounds by
    default); ``sample`` must be a whole number of steps.
    """
    _check_rho(rho0)
    if not (dt > 0 and T > 0 and sample > 0):
        raise InvalidParameterError(f"dt, T and sample must be positive, got dt={dt}, T={T}, sample={sample}")
    per_sample = round(sample / dt)
    if per_sample < 1 or abs(per_sample * dt - sample) > 1e-9 * sample:
        raise InvalidParameterError(f"sample interval {sample} is not a whole number of steps dt={dt}")
    mf_derivative(rho0, b, d)  # validates b and d

    n_samples = int(np.floor(T / sample + 1e-9))
    rho = np.empty(n_samples + 1)
    rho[0] = y = float(rho0)
    for k in range(1, n_samples + 1):
        for _ in range(per_sample):
            k1 = _rhs(y, b, d)
            k2 = _rhs(y + 0.5 * dt * k1, b, d)
            k3 = _rhs(y + 0.5 * dt * k2, b, d)
            k4 = _rhs(y + dt * k3, b, d)
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho[k] = y
    return MeanFieldTrajectory(t=np.arange(n_samples + 1) * sample, rho=rho)
