"""Lag-based predictive-causality screening between two aligned daily series.

For each lag L the restricted autoregression predicts the target from its own
L past values; the unrestricted model adds L past values of the source.  The
improvement in the residual sum of squares gives an F statistic with
(L, n_eff - 2L - 1) degrees of freedom, n_eff being the usable rows after
dropping the first L.  A song's verdict comes from the smallest p-value over
the swept lags compared against alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import f_survival, ols_fit
from .series import TimeSeries

__all__ = [
    "DEFAULT_ALPHA",
    "LagSpec",
    "LagResult",
    "GrangerResult",
    "GrangerItem",
    "GrangerBatch",
    "build_lagged_design",
    "granger_test",
    "batch_granger",
]

DEFAULT_ALPHA = 0.1

# verdicts need the nested F-test to have at least this many aligned points
MIN_SERIES_LENGTH = 20

STATISTIC_NAME = "ssr_f"


@dataclass(frozen=True)
class LagSpec:
    """Inclusive lag sweep range."""

    min_lag: int = 1
    max_lag: int = 5

    def __post_init__(self) -> None:
        if not (1 <= self.min_lag <= self.max_lag):
            raise ValueError("lag range must satisfy 1 <= min_lag <= max_lag")

    def __iter__(self):
        return iter(range(self.min_lag, self.max_lag + 1))

    def __len__(self) -> int:
        return self.max_lag - self.min_lag + 1


@dataclass(frozen=True)
class LagResult:
    lag: int
    f_stat: float
    df_num: int
    df_den: int
    p_value: float
    ssr_restricted: float
    ssr_unrestricted: float


@dataclass(frozen=True)
class GrangerResult:
    """Per-lag statistics plus the min-p verdict for one series pair."""

    per_lag: tuple[LagResult, ...]
    best_p: float
    causal: bool
    alpha: float
    statistic: str = STATISTIC_NAME
    intercept: bool = True
    bonferroni: bool = False


@dataclass(frozen=True)
class GrangerItem:
    song_id: str
    result: GrangerResult | None = None
    error: str | None = None


@dataclass(frozen=True)
class GrangerBatch:
    items: tuple[GrangerItem, ...]

    @property
    def n_total(self) -> int:
        return len(self.items)

    @property
    def n_failed(self) -> int:
        return sum(1 for it in self.items if it.error is not None)

    @property
    def n_tested(self) -> int:
        return self.n_total - self.n_failed

    @property
    def n_causal(self) -> int:
        return sum(
            1 for it in self.items if it.result is not None and it.result.causal
        )


def _require_aligned(target: TimeSeries, source: TimeSeries | None) -> None:
    if source is not None and not np.array_equal(target.days, source.days):
        raise ValueError("series are not aligned on the same dates")


def build_lagged_design(
    target: TimeSeries,
    source: TimeSeries | None,
    lag: int,
    intercept: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and response for the lag-``lag`` autoregression.

    Columns: optional intercept, then target lags 1..lag, then source lags
    1..lag when a source is given.  Rows are the n - lag observations that
    have a full lag history.
    """
    if lag < 1:
        raise ValueError("lag must be at least 1")
    _require_aligned(target, source)
    n = len(target)
    if n - lag < 1:
        raise ValueError(f"series too short for lag {lag}")
    tv = target.values
    y = tv[lag:]
    cols = []
    if intercept:
        cols.append(np.ones(n - lag))
    for ell in range(1, lag + 1):
        cols.append(tv[lag - ell : n - ell])
    if source is not None:
        sv = source.values
        for ell in range(1, lag + 1):
            cols.append(sv[lag - ell : n - ell])
    return np.column_stack(cols), y


def granger_test(
    source: TimeSeries,
    target: TimeSeries,
    lags: LagSpec = LagSpec(),
    alpha: float = DEFAULT_ALPHA,
    bonferroni: bool = False,
) -> GrangerResult:
    """Does the source series help predict the target series?

    Runs the nested F-test at every lag in ``lags`` and aggregates by the
    minimum p-value.  With ``bonferroni`` the verdict multiplies that minimum
    by the number of swept lags first (sensitivity analysis; off by default).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    _require_aligned(target, source)
    n = len(target)
    if n < MIN_SERIES_LENGTH:
        raise ValueError(
            f"series too short for causality test (need >= {MIN_SERIES_LENGTH} points)"
        )
    for s in (source, target):
        if s.values.max() == s.values.min():
            raise ValueError("degenerate (constant) series")

    per_lag = []
    for lag in lags:
        n_eff = n - lag
        df_den = n_eff - (2 * lag + 1)
        if df_den < 1:
            raise ValueError(f"series too short for lag {lag}")
        design_r, y = build_lagged_design(target, None, lag)
        design_u, _ = build_lagged_design(target, source, lag)
        fit_r = ols_fit(design_r, y)
        fit_u = ols_fit(design_u, y)
        if fit_u.ssr <= 0.0:
            f_stat = np.inf if fit_r.ssr > 0.0 else 0.0
        else:
            f_stat = ((fit_r.ssr - fit_u.ssr) / lag) / (fit_u.ssr / df_den)
            f_stat = max(f_stat, 0.0)  # numerical noise can push it negative
        p_value = f_survival(f_stat, lag, df_den)
        per_lag.append(
            LagResult(
                lag=lag,
                f_stat=float(f_stat),
                df_num=lag,
                df_den=df_den,
                p_value=p_value,
                ssr_restricted=fit_r.ssr,
                ssr_unrestricted=fit_u.ssr,
            )
        )

    best_p = min(r.p_value for r in per_lag)
    verdict_p = min(1.0, best_p * len(per_lag)) if bonferroni else best_p
    return GrangerResult(
        per_lag=tuple(per_lag),
        best_p=best_p,
        causal=verdict_p < alpha,
        alpha=alpha,
        bonferroni=bonferroni,
    )


def batch_granger(
    records,
    lags: LagSpec = LagSpec(),
    alpha: float = DEFAULT_ALPHA,
    bonferroni: bool = False,
) -> GrangerBatch:
    """Run :func:`granger_test` over curated records, capturing per-song errors.

    Each record supplies the short-video series as source and the web-search
    series as target.  A record that fails (too short, constant, singular)
    becomes an error item; the batch keeps going and preserves input order.
    """
    items = []
    for record in records:
        try:
            if record.web_search_series is None:
                raise ValueError("record has no web-search series")
            result = granger_test(
                source=record.short_video_series,
                target=record.web_search_series,
                lags=lags,
                alpha=alpha,
                bonferroni=bonferroni,
            )
            items.append(GrangerItem(song_id=record.song_id, result=result))
        except (ValueError, ArithmeticError) as exc:
            items.append(GrangerItem(song_id=record.song_id, error=str(exc)))
    return GrangerBatch(items=tuple(items))
