"""Specification tests for the fitted volatility models.

Two score tests probe the fitted model against a strictly larger one
whose extra block is frozen at zero (level feedback terms for the log
variance model, sign and log-square regressors for the exponential
model), so nothing beyond the null fit ever needs to be estimated. The
third test checks joint nullity of the first m autocovariances of the
squared standardized residuals.

Summation convention, used consistently here and by the test oracles:
all averages run over t > r0 (the fitted filter's burn-in) and divide
by n - r0; lagged factors inside the portmanteau sums shrink the sum
but not the divisor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    AsLogGarchParams,
    AugmentedEgarchParams,
    EgarchParams,
    FitResult,
    InitPolicy,
    TestReport,
    as_values,
)
from .estimation import egarch_loggrad_fd, restriction_matrix
from .exceptions import SingularMatrixError
from .numerics import chi2_sf, solve_spd
from .volatility import (
    _resolve_init,
    egarch_grad_alpha,
    filter_aslog,
    filter_egarch,
    grad_aslog,
    nu_hat,
)

__all__ = [
    "ScoreComponents",
    "lm_test_aslog_vs_augmented",
    "lm_test_egarch_vs_loggarch",
    "portmanteau_test",
]


@dataclass(frozen=True)
class ScoreComponents:
    """Intermediate pieces behind a score statistic.

    ``score`` is the scaled score of the frozen block, ``info`` its
    assembled asymptotic variance. ``score_outer`` is the centered
    second moment of the score regressors, ``cross`` their uncentered
    product with the log variance gradient, and ``coupling`` the block
    that corrects for the estimated null parameter.
    """

    score: np.ndarray
    info: np.ndarray
    kappa4_hat: float
    score_outer: np.ndarray
    cross: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        score = np.asarray(self.score, dtype=float)
        info = np.asarray(self.info, dtype=float)
        k = score.size
        if info.shape != (k, k):
            raise ValueError(f"info must be {k} x {k}, got {info.shape}")
        if not np.allclose(info, info.T, atol=1e-8 * max(1.0, float(np.abs(info).max()))):
            raise ValueError("info must be symmetric")
        if self.kappa4_hat < 1.0:
            raise ValueError("kappa4_hat must be >= 1")


def _require_converged(fit: FitResult):
    if not fit.converged:
        raise ValueError("the supplied fit did not converge; refusing to test at it")


def _ridge_solve(matrix: np.ndarray, rhs: np.ndarray, use_ridge: bool):
    """Solve against an SPD matrix, optionally retrying once with a
    trace-scaled diagonal bump. Returns (solution, ridged_flag)."""
    try:
        return solve_spd(matrix, rhs), False
    except SingularMatrixError:
        if not use_ridge:
            raise
        bump = 1e-8 * float(np.trace(matrix)) / matrix.shape[0]
        return solve_spd(matrix + bump * np.eye(matrix.shape[0]), rhs), True


def _score_report(name, reg, grad, res, df, ridge):
    """Shared assembly for both frozen-block score tests."""
    nn = res.size
    u = 1.0 - res * res
    score = reg.T @ u / math.sqrt(nn)
    rbar = reg.mean(axis=0)
    gbar = grad.mean(axis=0)
    j11 = reg.T @ reg / nn - np.outer(rbar, rbar)
    cross = reg.T @ grad / nn
    kappa4m1 = float(np.mean(u * u))
    warnings = []
    if kappa4m1 == 0.0:
        # squared residuals identically one: the score is exactly zero,
        # the statistic is zero by convention, and no inverse is needed
        statistic = 0.0
        ridged = False
        info = j11
        coupling = np.zeros_like(cross)
        warnings.append("degenerate residuals, fourth moment equals one")
    else:
        j = grad.T @ grad / nn
        centered = cross - np.outer(rbar, gbar)
        j_inv_centered_t, ridged_j = _ridge_solve(j, centered.T, ridge)
        coupling = -j_inv_centered_t.T
        j_inv_cross_t, _ = _ridge_solve(j, cross.T, ridge)
        info = j11 + cross @ j_inv_cross_t + coupling @ cross.T + cross @ coupling.T
        info = 0.5 * (info + info.T)
        solved, ridged_info = _ridge_solve(info, score, ridge)
        ridged = ridged_j or ridged_info
        statistic = max(float(score @ solved) / kappa4m1, 0.0)
    if ridged:
        warnings.append("information matrix was ridged")
    components = ScoreComponents(
        score=score,
        info=info,
        kappa4_hat=1.0 + kappa4m1,
        score_outer=j11,
        cross=cross,
        coupling=coupling,
    )
    return TestReport(
        name=name,
        statistic=statistic,
        df=df,
        p_value=chi2_sf(statistic, df),
        components={
            "score_components": components,
            "ridged": ridged,
            "warnings": tuple(warnings),
        },
    )


def lm_test_aslog_vs_augmented(
    fit: FitResult,
    eps,
    ell: int,
    init: InitPolicy | None = None,
    ridge: bool = False,
) -> TestReport:
    """Score test of the fitted log variance model against the extension
    with ``ell`` lags of signed level feedback.

    Rejection says the level of past returns carries information about
    volatility beyond their sign and magnitude-in-logs, which the fitted
    family cannot absorb. Degrees of freedom: 2 ell. ``ridge`` opts in
    to a trace-scaled diagonal bump when the information matrix is
    numerically singular; the report flags when it was used.
    """
    _require_converged(fit)
    if ell < 1:
        raise ValueError(f"ell must be at least 1, got {ell}")
    theta = fit.params
    if not isinstance(theta, AsLogGarchParams):
        raise ValueError("fit does not hold log variance model parameters")
    values = as_values(eps)
    init = _resolve_init(values, init)
    filtered = filter_aslog(theta, values, init)
    nu = nu_hat(filtered, theta.beta, ell)
    grad = grad_aslog(theta, values, init)
    if fit.restricted_alpha:
        grad = grad @ restriction_matrix(theta.order)
    r0 = filtered.r0
    return _score_report(
        "lm_aslog_vs_augmented",
        nu[r0:],
        grad[r0:],
        filtered.residuals[r0:],
        2 * ell,
        ridge,
    )


def lm_test_egarch_vs_loggarch(
    fit: FitResult,
    eps,
    q: int,
    init: InitPolicy | None = None,
    ridge: bool = False,
) -> TestReport:
    """Score test of the fitted exponential model against the extension
    with q lags of sign and signed log-square regressors.

    Rejection says the data want the log variance family's news terms
    on top of the exponential recursion. Degrees of freedom: 3 q.
    """
    _require_converged(fit)
    if q < 1:
        raise ValueError(f"q must be at least 1, got {q}")
    zeta = fit.params
    if not isinstance(zeta, EgarchParams):
        raise ValueError("fit does not hold exponential model parameters")
    values = as_values(eps)
    init = _resolve_init(values, init)
    filtered = filter_egarch(zeta, values, init)
    vartheta = AugmentedEgarchParams(
        zeta=zeta,
        omega_minus=np.zeros(q),
        alpha_plus=np.zeros(q),
        alpha_minus=np.zeros(q),
    )
    state = egarch_grad_alpha(vartheta, values, init)
    grad = egarch_loggrad_fd(zeta, values, init)
    r0 = max(1, q)
    return _score_report(
        "lm_egarch_vs_loggarch",
        state.d_t[r0:],
        grad[r0:],
        filtered.residuals[r0:],
        3 * q,
        ridge,
    )


def portmanteau_test(
    fit: FitResult,
    eps,
    m: int,
    model: str = "aslog",
    init: InitPolicy | None = None,
    ridge: bool = False,
) -> TestReport:
    """Joint test that the first m autocovariances of the squared
    standardized residuals vanish.

    ``model`` picks the family ("aslog" or "egarch") whose filter and
    gradient are used. The statistic compares the scaled autocovariance
    vector against its asymptotic covariance, which accounts for the
    estimated parameter through the gradient cross moments.
    """
    _require_converged(fit)
    values = as_values(eps)
    init = _resolve_init(values, init)
    if model == "aslog":
        theta = fit.params
        if not isinstance(theta, AsLogGarchParams):
            raise ValueError("fit does not hold log variance model parameters")
        filtered = filter_aslog(theta, values, init)
        grad = grad_aslog(theta, values, init)
        if fit.restricted_alpha:
            grad = grad @ restriction_matrix(theta.order)
        name = "portmanteau_aslog"
    elif model == "egarch":
        zeta = fit.params
        if not isinstance(zeta, EgarchParams):
            raise ValueError("fit does not hold exponential model parameters")
        filtered = filter_egarch(zeta, values, init)
        grad = egarch_loggrad_fd(zeta, values, init)
        name = "portmanteau_egarch"
    else:
        raise ValueError(f"model must be 'aslog' or 'egarch', got {model!r}")
    r0 = filtered.r0
    n = values.size
    nn = n - r0
    if not 1 <= m < nn:
        raise ValueError(f"need 1 <= m < {nn}, got m={m}")
    res = filtered.residuals
    c = res * res - 1.0
    r_vals = np.empty(m)
    k_rows = np.empty((m, grad.shape[1]))
    for h in range(1, m + 1):
        r_vals[h - 1] = float(c[r0 + h :] @ c[r0 : n - h]) / nn
        k_rows[h - 1] = c[r0 : n - h] @ grad[r0 + h :] / nn
    e = res[r0:]
    kappa4m1 = float(np.mean((1.0 - e * e) ** 2))
    warnings = []
    if np.all(r_vals == 0.0):
        # perfectly flat squared residuals: nothing to test against
        statistic = 0.0
        ridged = False
        warnings.append("all residual autocovariances are exactly zero")
    else:
        g = grad[r0:]
        j = g.T @ g / nn
        j_inv_kt, ridged_j = _ridge_solve(j, k_rows.T, ridge)
        d_mat = kappa4m1 ** 2 * np.eye(m) - kappa4m1 * k_rows @ j_inv_kt
        d_mat = 0.5 * (d_mat + d_mat.T)
        solved, ridged_d = _ridge_solve(d_mat, r_vals, ridge)
        ridged = ridged_j or ridged_d
        statistic = max(nn * float(r_vals @ solved), 0.0)
    if ridged:
        warnings.append("autocovariance weighting matrix was ridged")
    return TestReport(
        name=name,
        statistic=statistic,
        df=m,
        p_value=chi2_sf(statistic, m),
        components={
            "autocovariances": r_vals,
            "gradient_cross": k_rows,
            "kappa4_hat": 1.0 + kappa4m1,
            "ridged": ridged,
            "warnings": tuple(warnings),
        },
    )
