"""Numerical kernels: least squares, F-distribution tails, damped Gauss-Newton.

Everything here is self-contained on top of numpy so the statistical results
do not depend on the version of any external stats library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "OlsSolution",
    "NlsFit",
    "ols_fit",
    "regularized_incomplete_beta",
    "f_survival",
    "finite_difference_jacobian",
    "damped_least_squares",
]

# rank tolerance: smallest diagonal of the triangular factor relative to largest
_RANK_RTOL = 1e-10

# continued-fraction evaluation limits
_CF_MAX_ITER = 300
_CF_EPS = 1e-15
_CF_TINY = 1e-300


@dataclass(frozen=True)
class OlsSolution:
    """Least-squares solution with its sum of squared residuals."""

    coefficients: np.ndarray
    ssr: float
    n_obs: int
    n_params: int

    def __post_init__(self) -> None:
        coef = np.array(self.coefficients, dtype=np.float64)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)


@dataclass(frozen=True)
class NlsFit:
    """Outcome of a damped Gauss-Newton run."""

    params: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool

    def __post_init__(self) -> None:
        params = np.array(self.params, dtype=np.float64)
        params.setflags(write=False)
        object.__setattr__(self, "params", params)


def ols_fit(design: np.ndarray, response: np.ndarray) -> OlsSolution:
    """Solve min ||design @ beta - response||^2 by orthogonal factorization.

    The design is factored rather than squared into normal equations, so the
    conditioning of the problem is not doubled.  Raises ValueError on a
    rank-deficient design ("singular design matrix").
    """
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(response, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("design must be a 2-d array")
    if y.ndim != 1:
        raise ValueError("response must be a 1-d array")
    n, k = X.shape
    if y.shape[0] != n:
        raise ValueError("design and response row counts differ")
    if k < 1 or n < k:
        raise ValueError("design needs at least as many rows as columns")

    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.max() == 0.0 or diag.min() < _RANK_RTOL * diag.max():
        raise ValueError("singular design matrix")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    return OlsSolution(coefficients=coef, ssr=float(resid @ resid), n_obs=n, n_params=k)


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the standard continued fraction for I_x(a, b)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + num / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + num / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Continued-fraction evaluation; the complement is used when x lies past
    (a + 1) / (a + b + 2), where the fraction for the direct side converges
    slowly.  Absolute accuracy is ~1e-10 or better over a, b up to a few
    hundred.
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x > (a + 1.0) / (a + b + 2.0):
        result = 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b
    else:
        result = front * _beta_continued_fraction(a, b, x) / a
    # rounding can push the value a few ulp outside [0, 1]
    return min(max(result, 0.0), 1.0)


def f_survival(f: float, d1: int, d2: int) -> float:
    """P(F > f) for an F distribution with (d1, d2) degrees of freedom.

    Computed through the incomplete beta identity
    P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2).
    """
    if not (isinstance(d1, (int, np.integer)) and isinstance(d2, (int, np.integer))):
        raise ValueError("degrees of freedom must be integers")
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(f) or f < 0.0:
        raise ValueError("f statistic must be non-negative")
    if f == 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = d2 / (d2 + d1 * f)
    return regularized_incomplete_beta(x, d2 / 2.0, d1 / 2.0)


def finite_difference_jacobian(
    model: Callable[[np.ndarray], np.ndarray],
    params: np.ndarray,
    step_scale: float = 1e-6,
) -> np.ndarray:
    """Central-difference Jacobian of ``model`` at ``params``.

    Step per coordinate is step_scale * max(|param|, 1).  Probe points are not
    clamped, so callers near a domain boundary should supply an analytic
    Jacobian instead.
    """
    p = np.asarray(params, dtype=np.float64)
    cols = []
    for i in range(p.size):
        h = step_scale * max(abs(p[i]), 1.0)
        up = p.copy()
        dn = p.copy()
        up[i] += h
        dn[i] -= h
        cols.append((np.asarray(model(up), dtype=np.float64) - np.asarray(model(dn), dtype=np.float64)) / (2.0 * h))
    return np.column_stack(cols)


def _expand_bounds(
    bounds: Sequence[tuple[float, float]] | None, n: int
) -> tuple[np.ndarray, np.ndarray]:
    if bounds is None:
        return np.full(n, -np.inf), np.full(n, np.inf)
    lo = np.asarray([pair[0] for pair in bounds], dtype=np.float64)
    hi = np.asarray([pair[1] for pair in bounds], dtype=np.float64)
    if lo.size != n or hi.size != n:
        raise ValueError("bounds length must match parameter count")
    if np.any(lo > hi):
        raise ValueError("lower bound exceeds upper bound")
    return lo, hi


def damped_least_squares(
    model: Callable[[np.ndarray], np.ndarray],
    init: np.ndarray,
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None,
    bounds: Sequence[tuple[float, float]] | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> NlsFit:
    """Minimize ||model(params)||^2 by Gauss-Newton steps with adaptive damping.

    The damping factor multiplies by 10 whenever a step increases the residual
    norm (the step is rejected) and divides by 10 on a decrease.  Steps are
    clamped to ``bounds``.  Converged when the relative residual-norm
    improvement of an accepted step falls below ``tol`` or the step norm does.
    The returned residual norm never exceeds the norm at ``init``; a run that
    hits ``max_iter`` returns the best iterate with converged=False.
    """
    x = np.asarray(init, dtype=np.float64).copy()
    if x.ndim != 1 or x.size < 1:
        raise ValueError("init must be a non-empty 1-d array")
    lo, hi = _expand_bounds(bounds, x.size)
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError("init must lie within bounds")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    jac = jacobian if jacobian is not None else (
        lambda p: finite_difference_jacobian(model, p)
    )
    resid = np.asarray(model(x), dtype=np.float64)
    if not np.all(np.isfinite(resid)):
        raise ValueError("invalid starting point")
    cost = float(np.linalg.norm(resid))

    lam = 1e-3
    eye = np.eye(x.size)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        J = np.asarray(jac(x), dtype=np.float64)
        if not np.all(np.isfinite(J)):
            lam = min(lam * 10.0, 1e12)
            continue
        grad = J.T @ resid
        try:
            step = np.linalg.solve(J.T @ J + lam * eye, -grad)
        except np.linalg.LinAlgError:
            lam = min(lam * 10.0, 1e12)
            continue
        x_new = np.clip(x + step, lo, hi)
        resid_new = np.asarray(model(x_new), dtype=np.float64)
        cost_new = float(np.linalg.norm(resid_new)) if np.all(np.isfinite(resid_new)) else np.inf
        if cost_new > cost:
            lam = min(lam * 10.0, 1e12)
            continue
        step_norm = float(np.linalg.norm(x_new - x))
        improvement = cost - cost_new
        x, resid, cost = x_new, resid_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if step_norm < tol or cost == 0.0 or improvement < tol * cost:
            converged = True
            break

    return NlsFit(params=x, residual_norm=cost, iterations=iterations, converged=converged)
