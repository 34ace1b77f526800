"""Least-squares fits of cooperator density against temptation.

Three families are supported: a power law with explicit scale and support
``x < b_cr``, a quadratic, and a sine with offset. Each is fitted by
multi-start Nelder-Mead on the sum of squared residuals. Internally ``x`` is
centred and scaled so the simplex works on well-conditioned coordinates;
fitted parameters are always reported in the original ``x`` units.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .errors import FitFailureError, InvalidInputError, UndefinedMetricError

TWO_PI = 2.0 * math.pi


class Family(enum.Enum):
    POWER_LAW = "power-law"
    QUADRATIC = "quadratic"
    TRIG = "trigonometric"

    @classmethod
    def parse(cls, text: str) -> "Family":
        key = text.strip().lower()
        for fam in cls:
            if key in (fam.value, fam.name.lower(), fam.value.split("-")[0], fam.value[:4]):
                return fam
        raise InvalidInputError(f"unknown model family {text!r}")


# -- models -------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLaw:
    """``scale * (b_cr - x) ** beta`` below ``b_cr``, zero at and above it."""

    b_cr: float
    beta: float
    scale: float

    family = Family.POWER_LAW
    names = ("b_cr", "beta", "scale")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        gap = np.clip(self.b_cr - x, 0.0, None)
        with np.errstate(invalid="ignore", divide="ignore"):
            body = self.scale * gap**self.beta
        return np.where(x < self.b_cr, body, 0.0)

    @property
    def params(self) -> tuple[float, ...]:
        return (self.b_cr, self.beta, self.scale)


@dataclass(frozen=True)
class Quadratic:
    a: float
    b: float
    c: float

    family = Family.QUADRATIC
    names = ("a", "b", "c")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return (self.a * x + self.b) * x + self.c

    @property
    def params(self) -> tuple[float, ...]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class Trig:
    """``amplitude * sin(frequency * x + phase) + offset``."""

    amplitude: float
    frequency: float
    phase: float
    offset: float

    family = Family.TRIG
    names = ("amplitude", "frequency", "phase", "offset")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.sin(self.frequency * x + self.phase) + self.offset

    @property
    def params(self) -> tuple[float, ...]:
        return (self.amplitude, self.frequency, self.phase, self.offset)

    def canonical(self) -> "Trig":
        """Same curve with ``amplitude >= 0``, ``frequency >= 0`` and phase in [0, 2pi)."""
        A, w, phi = self.amplitude, self.frequency, self.phase
        if w < 0:
            A, w, phi = -A, -w, -phi
        if A < 0:
            A, phi = -A, phi + math.pi
        return Trig(A, w, phi % TWO_PI, self.offset)


FitModel = Union[PowerLaw, Quadratic, Trig]

MODEL_TYPES = {Family.POWER_LAW: PowerLaw, Family.QUADRATIC: Quadratic, Family.TRIG: Trig}

# values reported for the simulated Monte Carlo curve; used as extra starts
REFERENCE_MODELS = {
    Family.POWER_LAW: PowerLaw(b_cr=1.31, beta=0.923, scale=1.0),
    Family.QUADRATIC: Quadratic(a=-2.7363, b=4.8644, c=-1.7205),
    Family.TRIG: Trig(amplitude=-0.2568, frequency=7.2462, phase=-2.5603, offset=0.1314),
}


def evaluate_model(model: FitModel, x) -> np.ndarray:
    return model(x)


# -- metrics ------------------------------------------------------------------


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise InvalidInputError(f"length mismatch: {y.size} observations vs {yhat.size} fitted values")
    if y.size == 0:
        raise InvalidInputError("empty data")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return math.sqrt(float(np.sum((y - yhat) ** 2)) / y.size)


def goodness_of_fit(y, yhat) -> float:
    """``1 - sqrt(SSE / sum(y**2))``; equals 1 only for a perfect fit."""
    y, yhat = _pair(y, yhat)
    total = float(np.sum(y**2))
    if total == 0.0:
        raise UndefinedMetricError("goodness of fit is undefined when every observation is zero")
    return 1.0 - math.sqrt(float(np.sum((y - yhat) ** 2)) / total)


# -- internal coordinates ------------------------------------------------------
#
# Each family maps an unconstrained vector theta (in scaled coordinates
# z = (x - centre) / spread) to a model in x units and back.


@dataclass(frozen=True)
class _Frame:
    centre: float
    spread: float

    @classmethod
    def of(cls, x: np.ndarray) -> "_Frame":
        lo, hi = float(x.min()), float(x.max())
        spread = (hi - lo) / 2.0
        return cls((hi + lo) / 2.0, spread if spread > 0 else 1.0)

    def z(self, x):
        return (x - self.centre) / self.spread


def _to_model(family: Family, theta: np.ndarray, f: _Frame) -> FitModel:
    m, s = f.centre, f.spread
    if family is Family.QUADRATIC:
        al, be, ga = map(float, theta)
        return Quadratic(al / s**2, be / s - 2 * al * m / s**2, al * m**2 / s**2 - be * m / s + ga)
    if family is Family.TRIG:
        A, W, psi, d = map(float, theta)
        return Trig(A, W / s, psi - W * m / s, d)
    zc, log_beta, scale = map(float, theta)
    # the spread factor keeps `scale` in x units
    return PowerLaw(m + s * zc, math.exp(log_beta), scale)


def _from_model(model: FitModel, f: _Frame) -> np.ndarray:
    m, s = f.centre, f.spread
    if isinstance(model, Quadratic):
        a, b, c = model.params
        return np.array([a * s**2, (2 * a * m + b) * s, (a * m + b) * m + c])
    if isinstance(model, Trig):
        A, w, phi, d = model.params
        return np.array([A, w * s, phi + w * m, d])
    return np.array([(model.b_cr - m) / s, math.log(max(model.beta, 1e-12)), model.scale])


def _best_power_scale(x, y, b_cr, beta) -> float:
    basis = PowerLaw(b_cr, beta, 1.0)(x)
    denom = float(basis @ basis)
    return float(basis @ y) / denom if denom > 0 else 0.0


def _random_starts(family: Family, x, y, f: _Frame, rng: np.random.Generator, n: int) -> list[np.ndarray]:
    span = float(y.max() - y.min()) or max(float(np.abs(y).max()), 1.0)
    starts = []
    for _ in range(n):
        if family is Family.QUADRATIC:
            starts.append(np.array([rng.uniform(-2, 2) * span, rng.uniform(-2, 2) * span,
                                    rng.uniform(y.min() - span, y.max() + span)]))
        elif family is Family.TRIG:
            starts.append(np.array([rng.uniform(0.25, 2.0) * span, rng.uniform(0.2, TWO_PI),
                                    rng.uniform(0.0, TWO_PI), rng.uniform(y.min(), y.max())]))
        else:
            positive = x[y > 0]
            lo = float(f.z(positive.max())) if positive.size else -1.0
            zc = rng.uniform(lo, max(lo, 1.0) + 0.5)
            beta = math.exp(rng.uniform(math.log(0.2), math.log(3.0)))
            scale = _best_power_scale(x, y, f.centre + f.spread * zc, beta)
            starts.append(np.array([zc, math.log(beta), scale]))
    return starts


def _fixed_starts(family: Family, x, y, f: _Frame) -> list[np.ndarray]:
    ref = REFERENCE_MODELS[family]
    if family is Family.POWER_LAW:
        ref = PowerLaw(ref.b_cr, ref.beta, _best_power_scale(x, y, ref.b_cr, ref.beta))
    starts = [_from_model(ref, f)]
    if family is Family.QUADRATIC and len(x) >= 3:
        starts.append(np.polyfit(f.z(x), y, 2))
    return starts


# -- fitting --------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    family: Family
    model: Optional[FitModel]
    rmse: float
    goodness: float
    sse: float
    best_start_sse: float = math.nan
    n_points: int = 0
    error: Optional[str] = None
    diagnostics: tuple[str, ...] = field(default=(), repr=False)

    @property
    def ok(self) -> bool:
        return self.model is not None


_COARSE = dict(xatol=1e-6, fatol=1e-12, maxiter=2000, maxfev=2000, adaptive=True)
_FINE = dict(xatol=1e-12, fatol=1e-20, maxiter=15000, maxfev=15000, adaptive=True)


def _curve(family: Family, theta: np.ndarray, z: np.ndarray, spread: float) -> np.ndarray:
    # the family's curve evaluated directly in scaled coordinates
    if family is Family.QUADRATIC:
        return (theta[0] * z + theta[1]) * z + theta[2]
    if family is Family.TRIG:
        return theta[0] * np.sin(theta[1] * z + theta[2]) + theta[3]
    gap = np.clip(theta[0] - z, 0.0, None) * spread
    return theta[2] * gap ** math.exp(theta[1])


def _objective(family: Family, x, y, f: _Frame) -> Callable[[np.ndarray], float]:
    z = f.z(x)
    spread = f.spread

    def sse(theta):
        if family is Family.POWER_LAW and abs(theta[1]) > 50:
            return math.inf
        with np.errstate(all="ignore"):
            r = y - _curve(family, theta, z, spread)
            val = float(r @ r)
        return val if math.isfinite(val) else math.inf

    return sse


def _descend(sse, theta0, rounds=4):
    """Nelder-Mead, restarted from its own optimum until it stops improving."""
    res = minimize(sse, theta0, method="Nelder-Mead", options=_FINE)
    best_x, best_f = res.x, res.fun
    for _ in range(rounds):
        res = minimize(sse, best_x, method="Nelder-Mead", options=_FINE)
        if not res.fun < best_f:
            break
        improved = best_f - res.fun
        best_x, best_f = res.x, res.fun
        if improved <= 1e-15 * max(best_f, 1e-300):
            break
    return best_x, best_f


def fit_model(
    family: Union[Family, str],
    x: Sequence[float],
    y: Sequence[float],
    starts: int = 50,
    seed: int = 0,
    positive_only: bool = False,
    polish: int = 3,
) -> FitResult:
    """Fit one family by multi-start simplex descent and report RMSE and R.

    All starts get one Nelder-Mead pass; the ``polish`` best are then
    restarted until they stop improving. ``positive_only`` drops points with
    ``y <= 0`` before fitting.
    """
    if not isinstance(family, Family):
        family = Family.parse(family)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InvalidInputError(f"x and y differ in length ({x.size} vs {y.size})")
    if positive_only:
        keep = y > 0
        x, y = x[keep], y[keep]
    n_free = len(MODEL_TYPES[family].names)
    if x.size < n_free + 1:
        raise InvalidInputError(f"{family.value} fit needs at least {n_free + 1} points, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InvalidInputError("data contain non-finite values")

    f = _Frame.of(x)
    sse = _objective(family, x, y, f)
    rng = np.random.default_rng(seed)
    thetas = _fixed_starts(family, x, y, f) + _random_starts(family, x, y, f, rng, starts)

    diagnostics = []
    best_start = math.inf
    candidates = []
    for i, theta in enumerate(thetas):
        start_val = sse(theta)
        best_start = min(best_start, start_val)
        try:
            res = minimize(sse, theta, method="Nelder-Mead", options=_COARSE)
        except (FloatingPointError, OverflowError, ValueError) as exc:
            diagnostics.append(f"start {i}: {exc}")
            continue
        if not math.isfinite(res.fun):
            diagnostics.append(f"start {i}: diverged")
            continue
        candidates.append((res.fun, res.x))
    if not candidates:
        raise FitFailureError(f"all {len(thetas)} starts of the {family.value} fit diverged", diagnostics)

    candidates.sort(key=lambda c: c[0])
    best_theta, best_val = candidates[0][1], candidates[0][0]
    for _, theta in candidates[:polish]:
        t, v = _descend(sse, theta)
        if v < best_val:
            best_theta, best_val = t, v

    model = _to_model(family, best_theta, f)
    yhat = model(x)
    try:
        good = goodness_of_fit(y, yhat)
    except UndefinedMetricError:
        good = math.nan
    return FitResult(
        family=family,
        model=model,
        rmse=rmse(y, yhat),
        goodness=good,
        sse=float(np.sum((y - yhat) ** 2)),
        best_start_sse=best_start,
        n_points=int(x.size),
        diagnostics=tuple(diagnostics),
    )


def compare_fits(x, y, starts: int = 50, seed: int = 0, positive_only: bool = False) -> list[FitResult]:
    """Fit all three families and rank by ascending RMSE; failed families go last."""
    results = []
    for family in Family:
        try:
            results.append(fit_model(family, x, y, starts=starts, seed=seed, positive_only=positive_only))
        except (FitFailureError, InvalidInputError) as exc:
            results.append(FitResult(family, None, math.nan, math.nan, math.nan, error=str(exc)))
    return sorted(results, key=lambda r: (not r.ok, r.rmse))
