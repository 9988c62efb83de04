"""Two-parameter diffusion curves fitted to cumulative popularity.

The adoption fraction F(t) solves b(t) / (1 - F(t)) = p + q F(t) with
F(0) = 0, where b = F' is the instantaneous fraction.  In closed form

    F(t) = (1 - exp(-(p+q) t)) / (1 + (q/p) exp(-(p+q) t)).

Fits run on the cumulative curve normalized to end at 1, so the market-size
parameter is fixed at one and only (p, q) remain free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .numerics import NlsFit, damped_least_squares
from .series import TimeSeries, cumulative_normalized

__all__ = [
    "GRID_P",
    "GRID_Q",
    "P_BOUNDS",
    "Q_BOUNDS",
    "BassParams",
    "BassFit",
    "BassItem",
    "BassBatch",
    "bass_cumulative",
    "bass_remaining",
    "bass_instantaneous",
    "bass_residual_jacobian",
    "fit_cumulative",
    "fit_bass",
    "batch_bass",
]

# multi-start grid spanning slow to fast adoption
GRID_P = (0.001, 0.01, 0.03, 0.1)
GRID_Q = (0.01, 0.1, 0.38, 0.8)

P_BOUNDS = (1e-6, 1.0)
Q_BOUNDS = (0.0, 5.0)

# a window below this many points cannot support a meaningful curve fit
MIN_FIT_POINTS = 20

_REFINE_STARTS = 3
_FIT_MAX_ITER = 200
_FIT_TOL = 1e-12


@dataclass(frozen=True)
class BassParams:
    """Innovation (p) and imitation (q) rates."""

    p: float
    q: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError("parameters must be finite")
        if not P_BOUNDS[0] <= self.p <= P_BOUNDS[1]:
            raise ValueError(f"p must lie in [{P_BOUNDS[0]}, {P_BOUNDS[1]}]")
        if not Q_BOUNDS[0] <= self.q <= Q_BOUNDS[1]:
            raise ValueError(f"q must lie in [{Q_BOUNDS[0]}, {Q_BOUNDS[1]}]")

    @property
    def peak_time(self) -> float | None:
        """Time of the adoption-rate peak, defined only when q > p."""
        if self.q <= self.p:
            return None
        return math.log(self.q / self.p) / (self.p + self.q)


@dataclass(frozen=True)
class BassFit:
    params: BassParams
    residual_norm: float
    rmse: float
    converged: bool
    n_points: int
    platform: str | None = None


@dataclass(frozen=True)
class BassItem:
    song_id: str
    short_video: BassFit | None = None
    web_search: BassFit | None = None
    error: str | None = None


@dataclass(frozen=True)
class BassBatch:
    items: tuple[BassItem, ...]

    @property
    def n_total(self) -> int:
        return len(self.items)

    @property
    def n_failed(self) -> int:
        return sum(1 for it in self.items if it.error is not None)

    @property
    def n_fits(self) -> int:
        return sum(
            (it.short_video is not None) + (it.web_search is not None)
            for it in self.items
        )


def bass_cumulative(params: BassParams, t):
    """Adoption fraction F(t); accepts a scalar or an array of times."""
    times = np.asarray(t, dtype=np.float64)
    decay = np.exp(-(params.p + params.q) * times)
    ratio = params.q / params.p
    out = (1.0 - decay) / (1.0 + ratio * decay)
    return float(out) if np.ndim(t) == 0 else out


def bass_remaining(params: BassParams, t):
    """1 - F(t) computed without cancellation, usable deep in the tail."""
    times = np.asarray(t, dtype=np.float64)
    decay = np.exp(-(params.p + params.q) * times)
    ratio = params.q / params.p
    out = (1.0 + ratio) * decay / (1.0 + ratio * decay)
    return float(out) if np.ndim(t) == 0 else out


def bass_instantaneous(params: BassParams, t):
    """Adoption rate b(t) = (p + q F(t)) (1 - F(t))."""
    cumulative = bass_cumulative(params, t)
    remaining = bass_remaining(params, t)
    out = (params.p + params.q * np.asarray(cumulative)) * np.asarray(remaining)
    return float(out) if np.ndim(t) == 0 else out


def _cumulative_for(p: float, q: float, times: np.ndarray) -> np.ndarray:
    decay = np.exp(-(p + q) * times)
    return (1.0 - decay) / (1.0 + (q / p) * decay)


def bass_residual_jacobian(theta: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Analytic Jacobian of the cumulative curve w.r.t. (p, q).

    Matches the central-difference Jacobian of the residual to high accuracy
    at interior points; used by the fitter because finite differences probe
    outside p > 0 near the lower bound.
    """
    p, q = float(theta[0]), float(theta[1])
    decay = np.exp(-(p + q) * times)
    ratio = q / p
    denom = 1.0 + ratio * decay
    d_decay = -times * decay  # same for p and q
    one_minus = 1.0 - decay
    d_p = (-d_decay * denom - one_minus * (-(q / p**2) * decay + ratio * d_decay)) / denom**2
    d_q = (-d_decay * denom - one_minus * ((1.0 / p) * decay + ratio * d_decay)) / denom**2
    return np.column_stack([d_p, d_q])


def fit_cumulative(
    times: np.ndarray,
    observed: np.ndarray,
    platform: str | None = None,
) -> BassFit:
    """Least-squares (p, q) for observed cumulative fractions at given times.

    All grid starts are scored by their initial residual norm; the best few
    are refined with the damped Gauss-Newton solver and the smallest refined
    residual wins, so the result never trails any grid start.
    """
    times = np.asarray(times, dtype=np.float64)
    observed = np.asarray(observed, dtype=np.float64)
    if times.ndim != 1 or observed.ndim != 1 or times.shape != observed.shape:
        raise ValueError("times and observed must be 1-d arrays of equal length")
    if times.size < 2:
        raise ValueError("need at least two observations to fit")

    def residual(theta: np.ndarray) -> np.ndarray:
        return _cumulative_for(theta[0], theta[1], times) - observed

    def jacobian(theta: np.ndarray) -> np.ndarray:
        return bass_residual_jacobian(theta, times)

    scored = []
    for i, (p0, q0) in enumerate((p, q) for p in GRID_P for q in GRID_Q):
        r0 = residual(np.array([p0, q0]))
        if np.all(np.isfinite(r0)):
            scored.append((float(np.linalg.norm(r0)), i, (p0, q0)))
    if not scored:
        raise ValueError("unfittable series")
    scored.sort()

    best: NlsFit | None = None
    for _, _, start in scored[:_REFINE_STARTS]:
        fit = damped_least_squares(
            residual,
            np.array(start),
            jacobian=jacobian,
            bounds=[P_BOUNDS, Q_BOUNDS],
            max_iter=_FIT_MAX_ITER,
            tol=_FIT_TOL,
        )
        if best is None or fit.residual_norm < best.residual_norm:
            best = fit

    params = BassParams(p=float(best.params[0]), q=float(best.params[1]))
    return BassFit(
        params=params,
        residual_norm=best.residual_norm,
        rmse=best.residual_norm / math.sqrt(times.size),
        converged=best.converged,
        n_points=int(times.size),
        platform=platform,
    )


def fit_bass(series: TimeSeries, platform: str | None = None) -> BassFit:
    """Fit a diffusion curve to one peak-focused popularity window."""
    if len(series) < MIN_FIT_POINTS:
        raise ValueError(
            f"series too short for diffusion fit (need >= {MIN_FIT_POINTS} points)"
        )
    fractions = cumulative_normalized(series)  # rejects an all-zero window
    times = (series.days - series.days[0]).astype(np.float64)
    return fit_cumulative(times, fractions.values, platform=platform)


def batch_bass(records: Iterable) -> BassBatch:
    """Fit both platforms of each record, capturing per-song failures."""
    items = []
    for record in records:
        try:
            sv = fit_bass(record.short_video_series, platform="short_video")
            if record.web_search_series is None:
                raise ValueError("record has no web-search series")
            ws = fit_bass(record.web_search_series, platform="web_search")
            items.append(
                BassItem(song_id=record.song_id, short_video=sv, web_search=ws)
            )
        except (ValueError, ArithmeticError) as exc:
            items.append(BassItem(song_id=record.song_id, error=str(exc)))
    return BassBatch(items=tuple(items))
