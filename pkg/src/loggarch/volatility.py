"""Volatility filters, their derivative recursions, and the news impact
curve.

All filters share the presample conventions of :class:`InitPolicy` and
report how many near-zero returns were floored before logs were taken.
The floor affects only the log-squared returns and sign indicators fed
into the recursions; residuals are always raw return over fitted scale.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .core import (
    AsLogGarchParams,
    AugmentedEgarchParams,
    AugmentedLogGarchParams,
    EgarchGradState,
    EgarchParams,
    FilterOutput,
    InitPolicy,
    as_values,
)
from .exceptions import FilterDivergenceError, InvalidModelError
from .numerics import spectral_radius

__all__ = [
    "filter_aslog",
    "filter_augmented_log",
    "filter_egarch",
    "filter_augmented_egarch",
    "grad_aslog",
    "egarch_grad_alpha",
    "nu_hat",
    "news_impact_curve",
]


def _resolve_init(eps_values: np.ndarray, init: InitPolicy | None) -> InitPolicy:
    return InitPolicy.from_returns(eps_values) if init is None else init


def _floored_transforms(eps_values: np.ndarray, init: InitPolicy):
    """Log squared returns and negative-sign indicators after flooring.

    Returns with magnitude below ``tau * std(eps)`` are replaced by that
    floor with positive sign, and the replacement count is reported.
    """
    sd = float(np.std(eps_values))
    if sd <= 0.0:
        raise ValueError("series has no variation, log volatility filtering is undefined")
    floor = init.zero_return_floor * sd
    mask = np.abs(eps_values) < floor
    eps_f = np.where(mask, floor, eps_values)
    log_eps2 = np.log(eps_f * eps_f)
    neg = (eps_f < 0.0).astype(np.float64)
    return log_eps2, neg, int(np.count_nonzero(mask))


def _presample(init: InitPolicy):
    pre_log_eps2 = math.log(init.presample_eps2)
    pre_neg = 1.0 if init.presample_sign_negative else 0.0
    pre_eps = math.sqrt(init.presample_eps2)
    if init.presample_sign_negative:
        pre_eps = -pre_eps
    return pre_log_eps2, pre_neg, pre_eps


def _lagged(arr: np.ndarray, lag: int, fill: float) -> np.ndarray:
    out = np.empty_like(arr)
    out[:lag] = fill
    out[lag:] = arr[: arr.size - lag]
    return out



def _finish(values: np.ndarray, ls: np.ndarray, fail: int, r0: int, floored: int) -> FilterOutput:
    if fail:
        raise FilterDivergenceError(fail)
    with np.errstate(over="ignore"):
        residuals = values * np.exp(-0.5 * ls)
    bad = np.flatnonzero(~np.isfinite(residuals))
    if bad.size:
        # a finite but extreme log variance overflowed the rescaling
        raise FilterDivergenceError(int(bad[0]) + 1)
    return FilterOutput(log_sigma2=ls, residuals=residuals, r0=r0, floored_count=floored)

def filter_aslog(theta: AsLogGarchParams, eps, init: InitPolicy | None = None) -> FilterOutput:
    """Run the asymmetric log variance recursion over a return series.

    The burn-in marker r0 is max(p, q). Raises
    :class:`FilterDivergenceError` naming the first observation at which
    the recursion went non-finite.
    """
    values = as_values(eps)
    order = theta.order
    r0 = max(order.p, order.q)
    if values.size <= r0:
        raise ValueError(f"series length {values.size} must exceed max(p, q) = {r0}")
    init = _resolve_init(values, init)
    log_eps2, neg, floored = _floored_transforms(values, init)
    pre_log_eps2, pre_neg, _ = _presample(init)
    ls, fail = _kernels.aslog_filter(
        log_eps2, neg, theta.omega, theta.omega_minus, theta.alpha_plus,
        theta.alpha_minus, theta.beta, pre_log_eps2, pre_neg, init.initial_log_sigma2,
    )
    return _finish(values, ls, fail, r0, floored)


def filter_augmented_log(
    vartheta: AugmentedLogGarchParams, eps, init: InitPolicy | None = None
) -> FilterOutput:
    """Filter for the level-feedback extension of the log variance model.

    With both feedback blocks at zero the path is identical, bit for
    bit, to :func:`filter_aslog` under the same init. r0 is
    max(p, q, ell).
    """
    values = as_values(eps)
    theta = vartheta.theta
    order = theta.order
    r0 = max(order.p, order.q, vartheta.ell)
    if values.size <= r0:
        raise ValueError(f"series length {values.size} must exceed max(p, q, ell) = {r0}")
    init = _resolve_init(values, init)
    log_eps2, neg, floored = _floored_transforms(values, init)
    pre_log_eps2, pre_neg, pre_eps = _presample(init)
    ls, fail = _kernels.augmented_log_filter(
        log_eps2, neg, values, theta.omega, theta.omega_minus, theta.alpha_plus,
        theta.alpha_minus, theta.beta, vartheta.gamma_plus, vartheta.gamma_minus,
        pre_log_eps2, pre_neg, pre_eps, init.initial_log_sigma2,
    )
    return _finish(values, ls, fail, r0, floored)


def filter_egarch(zeta: EgarchParams, eps, init: InitPolicy | None = None) -> FilterOutput:
    """Exponential GARCH(1,1) filter; r0 is 1."""
    values = as_values(eps)
    if values.size < 2:
        raise ValueError(f"series length {values.size} must be at least 2")
    init = _resolve_init(values, init)
    _, _, pre_eps = _presample(init)
    # flooring never enters this recursion, but a zero-variance series
    # still has no meaningful scale
    if float(np.std(values)) <= 0.0:
        raise ValueError("series has no variation, log volatility filtering is undefined")
    ls, fail = _kernels.egarch_filter(
        values, zeta.omega, zeta.gamma, zeta.delta, zeta.beta,
        pre_eps, init.initial_log_sigma2,
    )
    return _finish(values, ls, fail, 1, 0)


def filter_augmented_egarch(
    vartheta: AugmentedEgarchParams, eps, init: InitPolicy | None = None
) -> FilterOutput:
    """Exponential filter with the extra log variance regressor block.

    With the extra block at zero the path matches :func:`filter_egarch`
    bit for bit. r0 is max(1, q).
    """
    values = as_values(eps)
    q = vartheta.q
    if values.size <= q:
        raise ValueError(f"series length {values.size} must exceed q = {q}")
    init = _resolve_init(values, init)
    log_eps2, neg, floored = _floored_transforms(values, init)
    pre_log_eps2, pre_neg, pre_eps = _presample(init)
    zeta = vartheta.zeta
    ls, fail = _kernels.augmented_egarch_filter(
        values, log_eps2, neg, zeta.omega, zeta.gamma, zeta.delta, zeta.beta,
        vartheta.omega_minus, vartheta.alpha_plus, vartheta.alpha_minus,
        pre_eps, pre_log_eps2, pre_neg, init.initial_log_sigma2,
    )
    return _finish(values, ls, fail, max(1, q), floored)


def _aslog_regressors(
    log_eps2: np.ndarray,
    neg: np.ndarray,
    ls: np.ndarray,
    order_p: int,
    order_q: int,
    pre_log_eps2: float,
    pre_neg: float,
    init_ls: float,
) -> np.ndarray:
    n = log_eps2.size
    d = 3 * order_q + order_p + 1
    x = np.empty((n, d))
    x[:, 0] = 1.0
    for i in range(1, order_q + 1):
        nv = _lagged(neg, i, pre_neg)
        lv = _lagged(log_eps2, i, pre_log_eps2)
        x[:, i] = nv
        x[:, order_q + i] = (1.0 - nv) * lv
        x[:, 2 * order_q + i] = nv * lv
    for j in range(1, order_p + 1):
        x[:, 3 * order_q + j] = _lagged(ls, j, init_ls)
    return x


def grad_aslog(theta: AsLogGarchParams, eps, init: InitPolicy | None = None) -> np.ndarray:
    """Derivative of the filtered log variance path with respect to the
    stacked parameter vector, one row per observation.

    Holding the presample constants fixed, the derivative satisfies the
    same autoregression as the path itself driven by the regressor
    vector (1, sign indicators, signed log squares, lagged fitted log
    variances), so it matches central finite differences of
    :func:`filter_aslog` at every observation, not just asymptotically.
    """
    values = as_values(eps)
    init = _resolve_init(values, init)
    out = filter_aslog(theta, values, init)
    order = theta.order
    log_eps2, neg, _ = _floored_transforms(values, init)
    pre_log_eps2, pre_neg, _ = _presample(init)
    x = _aslog_regressors(
        log_eps2, neg, out.log_sigma2, order.p, order.q,
        pre_log_eps2, pre_neg, init.initial_log_sigma2,
    )
    return _kernels.ar_propagate(x, theta.beta)


def egarch_grad_alpha(
    vartheta_c: AugmentedEgarchParams, eps, init: InitPolicy | None = None
) -> EgarchGradState:
    """Derivative of the augmented exponential filter with respect to its
    extra regressor block, evaluated where that block is exactly zero.

    Returns the stacked per-observation derivative rows together with
    the multiplier sequence u[t] = beta - (gamma z[t] + delta |z[t]|)/2
    that drives the recursion. Requires the extra block of
    ``vartheta_c`` to vanish, because the recursion below is only the
    derivative at that constrained point.
    """
    if (
        np.any(vartheta_c.omega_minus != 0.0)
        or np.any(vartheta_c.alpha_plus != 0.0)
        or np.any(vartheta_c.alpha_minus != 0.0)
    ):
        raise ValueError("the extra regressor block must be exactly zero")
    values = as_values(eps)
    q = vartheta_c.q
    if values.size <= q:
        raise ValueError(f"series length {values.size} must exceed q = {q}")
    init = _resolve_init(values, init)
    out = filter_egarch(vartheta_c.zeta, values, init)
    log_eps2, neg, _ = _floored_transforms(values, init)
    pre_log_eps2, pre_neg, _ = _presample(init)
    n = values.size
    g = np.empty((n, 3 * q))
    for i in range(1, q + 1):
        nv = _lagged(neg, i, pre_neg)
        lv = _lagged(log_eps2, i, pre_log_eps2)
        g[:, i - 1] = nv
        g[:, q + i - 1] = (1.0 - nv) * lv
        g[:, 2 * q + i - 1] = nv * lv
    zeta = vartheta_c.zeta
    d, u = _kernels.egarch_alpha_state(g, out.residuals, zeta.gamma, zeta.delta, zeta.beta)
    return EgarchGradState(d_t=d, u_t=u)


def nu_hat(filtered: FilterOutput, beta, ell: int) -> np.ndarray:
    """Score regressors for the level-feedback test, one row per
    observation.

    Row t solves nu[t] = sum_j beta[j] nu[t-j] + h[t] where h[t] stacks
    the positive and negative parts of the lagged residuals, lag 1
    through ell, and residuals before the sample start count as zero.
    The autoregression must be stable; otherwise the truncated recursion
    has no meaning and :class:`InvalidModelError` is raised.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite")
    if not isinstance(ell, (int, np.integer)) or ell < 1:
        raise ValueError(f"ell must be a positive integer, got {ell!r}")
    p = beta.size
    if p > 0:
        companion = np.zeros((p, p))
        companion[0] = beta
        if p > 1:
            companion[1:, :-1] = np.eye(p - 1)
        radius = spectral_radius(companion)
        if radius >= 1.0 - 1e-12:
            raise InvalidModelError(
                f"autoregressive polynomial is not stable (companion radius {radius:.6f})"
            )
    res = filtered.residuals
    n = res.size
    pos = np.maximum(res, 0.0)
    negpart = np.maximum(-res, 0.0)
    h = np.empty((n, 2 * ell))
    for k in range(1, ell + 1):
        h[:, 2 * (k - 1)] = _lagged(pos, k, 0.0)
        h[:, 2 * (k - 1) + 1] = _lagged(negpart, k, 0.0)
    return _kernels.ar_propagate(h, beta)


def news_impact_curve(theta: AsLogGarchParams, grid) -> np.ndarray:
    """Conditional scale as a function of a single lagged return.

    Only defined for the one return lag model without autoregressive
    lags, where the map has the closed form

        s2(e) = exp(omega + omega_minus * 1{e < 0})
                * (e**2) ** alpha_plus * (e**2) ** ((alpha_minus - alpha_plus) * 1{e < 0})

    The returned values are scales (square roots of s2). Grid points at
    zero are rejected because the log square is undefined there.
    """
    order = theta.order
    if order.q != 1 or order.p != 0:
        raise ValueError(
            "news impact curve requires exactly one return lag and no "
            f"autoregressive lags, got p={order.p}, q={order.q}"
        )
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if not np.all(np.isfinite(grid)):
        raise ValueError("grid must be finite")
    if np.any(grid == 0.0):
        raise ValueError("grid must not contain zero, the log square is undefined there")
    negative = grid < 0.0
    exponent = np.where(negative, theta.alpha_minus[0], theta.alpha_plus[0])
    log_s2 = (
        theta.omega
        + theta.omega_minus[0] * negative
        + exponent * np.log(grid * grid)
    )
    return np.exp(0.5 * log_s2)
