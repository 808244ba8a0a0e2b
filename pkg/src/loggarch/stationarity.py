"""Strict stationarity, moment, and invertibility diagnostics.

The log variance recursion stacked with its lagged inputs follows a
random linear system z[t] = C[t] z[t-1] + b[t] whose transition matrix
depends on the innovation only through its sign. Existence of a strictly
stationary solution is governed by the top Lyapunov exponent of the
C[t] sequence, which this module estimates by direct Monte Carlo on the
sign process, alongside the closed form available for one lag in each
direction and the simpler moment and invertibility checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import AsLogGarchParams, EgarchParams, as_values
from .exceptions import IndeterminateCheckError, LogGarchError
from .numerics import Rng, spectral_radius

__all__ = [
    "LyapunovEstimate",
    "InvertibilityResult",
    "companion_sign_matrices",
    "lyapunov_exponent_mc",
    "stationarity_pq11_closed_form",
    "moment_matrix_check",
    "egarch_invertibility_check",
]


@dataclass(frozen=True)
class LyapunovEstimate:
    """Monte Carlo estimate of the top Lyapunov exponent."""

    gamma_hat: float
    std_err: float
    horizon: int
    reps: int

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be nonnegative")

    @property
    def verdict(self) -> str:
        """"stationary" when the 2 standard error band is entirely below
        zero, "nonstationary" when entirely above, else "inconclusive"."""
        if self.gamma_hat + 2.0 * self.std_err < 0.0:
            return "stationary"
        if self.gamma_hat - 2.0 * self.std_err > 0.0:
            return "nonstationary"
        return "inconclusive"


class InvertibilityResult(NamedTuple):
    expectation: float
    passed: bool
    floored_count: int


def companion_sign_matrices(theta: AsLogGarchParams) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrices of the stacked recursion for positive and
    negative innovation sign.

    The state stacks q sign-gated log squared returns of each sign and p
    log variances; the matrix is (2q + p) square. Only three rows carry
    coefficients: the new positive entry (active when the innovation is
    positive), the new negative entry (active when negative), and the
    new log variance, which is always fed. The intercepts do not appear,
    which is why stationarity does not depend on them.
    """
    q = theta.order.q
    p = theta.order.p
    dim = 2 * q + p
    coeff = np.concatenate([theta.alpha_plus, theta.alpha_minus, theta.beta])
    plus = np.zeros((dim, dim))
    minus = np.zeros((dim, dim))
    if q > 0:
        plus[0] = coeff
        minus[q] = coeff
        for r in range(1, q):
            plus[r, r - 1] = 1.0
            minus[r, r - 1] = 1.0
            plus[q + r, q + r - 1] = 1.0
            minus[q + r, q + r - 1] = 1.0
    if p > 0:
        plus[2 * q] = coeff
        minus[2 * q] = coeff
        for r in range(1, p):
            plus[2 * q + r, 2 * q + r - 1] = 1.0
            minus[2 * q + r, 2 * q + r - 1] = 1.0
    return plus, minus


def lyapunov_exponent_mc(
    theta: AsLogGarchParams,
    prob_positive: float = 0.5,
    horizon: int = 2000,
    reps: int = 50,
    rng: Rng | None = None,
) -> LyapunovEstimate:
    """Estimate the top Lyapunov exponent of the stacked recursion.

    Each replication multiplies ``horizon`` sign-drawn transition
    matrices onto a warmed-up product and averages the accumulated log
    Frobenius norm growth. The 100-step warm-up removes the order 1/T
    contribution of the start and end directions: the increment between
    two points of the same stationary product has exactly T times the
    exponent as its mean. Rescaling every 25 steps keeps the product
    away from overflow.
    """
    a = float(prob_positive)
    if not 0.0 < a < 1.0:
        raise ValueError(f"prob_positive must lie strictly inside (0, 1), got {a}")
    if horizon < 100:
        raise ValueError(f"horizon must be at least 100, got {horizon}")
    if reps < 10:
        raise ValueError(f"reps must be at least 10, got {reps}")
    if rng is None:
        raise ValueError("an Rng must be provided")
    warmup = 100
    c_plus, c_minus = companion_sign_matrices(theta)
    dim = c_plus.shape[0]
    estimates = np.empty(reps)
    for r in range(reps):
        child = rng.child(r)
        signs = child.uniform(size=warmup + horizon) < a
        prod = np.eye(dim)
        acc = 0.0
        v_start = 0.0
        for k in range(warmup + horizon):
            prod = (c_plus if signs[k] else c_minus) @ prod
            if (k + 1) % 25 == 0:
                norm = float(np.linalg.norm(prod))
                if norm <= 0.0 or not math.isfinite(norm):
                    raise LogGarchError(
                        f"lyapunov product norm left the representable range ({norm}) "
                        f"at step {k + 1}"
                    )
                acc += math.log(norm)
                prod /= norm
            if k + 1 == warmup:
                nrm = float(np.linalg.norm(prod))
                if nrm <= 0.0 or not math.isfinite(nrm):
                    raise LogGarchError(
                        f"lyapunov product norm left the representable range ({nrm}) "
                        f"at step {k + 1}"
                    )
                v_start = acc + math.log(nrm)
        nrm = float(np.linalg.norm(prod))
        if nrm <= 0.0 or not math.isfinite(nrm):
            raise LogGarchError(
                "lyapunov product norm left the representable range at the final step"
            )
        v_end = acc + math.log(nrm)
        estimates[r] = (v_end - v_start) / horizon
    gamma_hat = float(np.mean(estimates))
    std_err = float(np.std(estimates, ddof=1) / math.sqrt(reps))
    return LyapunovEstimate(gamma_hat=gamma_hat, std_err=std_err, horizon=horizon, reps=reps)


def stationarity_pq11_closed_form(theta: AsLogGarchParams, prob_positive: float = 0.5) -> float:
    """Exact Lyapunov exponent for the one-lag model:
    a log|alpha_plus + beta| + (1 - a) log|alpha_minus + beta|.

    Negative means a strictly stationary solution exists. A vanishing
    |alpha + beta| gives -inf, the degenerate stationary corner.
    """
    order = theta.order
    if order.p != 1 or order.q != 1:
        raise ValueError(f"closed form needs p = q = 1, got p={order.p}, q={order.q}")
    a = float(prob_positive)
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"prob_positive must lie in [0, 1], got {a}")
    up = abs(theta.alpha_plus[0] + theta.beta[0])
    um = abs(theta.alpha_minus[0] + theta.beta[0])
    # 0 * log(0) is taken as 0 so boundary weights behave
    term_p = 0.0 if a == 0.0 else a * (math.log(up) if up > 0 else -math.inf)
    term_m = 0.0 if a == 1.0 else (1.0 - a) * (math.log(um) if um > 0 else -math.inf)
    return term_p + term_m


def moment_matrix_check(theta: AsLogGarchParams) -> tuple[float, bool]:
    """Spectral radius of the worst-case absolute companion matrix.

    Row one holds max(|alpha_plus[i] + beta[i]|, |alpha_minus[i] + beta[i]|)
    for i = 1..max(p, q), padding the shorter block with zeros. A radius
    below one is the sufficient moment condition for the squared process.
    """
    order = theta.order
    r = max(order.p, order.q)
    top = np.zeros(r)
    for i in range(r):
        ap = theta.alpha_plus[i] if i < order.q else 0.0
        am = theta.alpha_minus[i] if i < order.q else 0.0
        b = theta.beta[i] if i < order.p else 0.0
        top[i] = max(abs(ap + b), abs(am + b))
    companion = np.zeros((r, r))
    companion[0] = top
    if r > 1:
        companion[1:, :-1] = np.eye(r - 1)
    radius = spectral_radius(companion)
    return radius, bool(radius < 1.0)


def egarch_invertibility_check(
    zeta: EgarchParams, eps, floor: float = 1e-300
) -> InvertibilityResult:
    """Empirical sufficient condition for inverting the exponential
    filter on the given data.

    Averages log(max(beta, (gamma e + delta |e|) exp(-omega / (2 (1 - beta))) / 2 - beta))
    over the observations; a negative mean passes. Arguments at or below
    zero are floored at ``floor`` and counted; if every observation is
    floored the average would be pure floor noise, so
    :class:`IndeterminateCheckError` is raised instead.
    """
    values = as_values(eps)
    if values.size < 1:
        raise ValueError("series must be nonempty")
    scale = math.exp(-zeta.omega / (2.0 * (1.0 - zeta.beta)))
    inner = 0.5 * (zeta.gamma * values + zeta.delta * np.abs(values)) * scale - zeta.beta
    inner = np.maximum(inner, zeta.beta)
    floored = inner <= floor
    count = int(np.count_nonzero(floored))
    if count == values.size:
        raise IndeterminateCheckError(
            "every observation hit the floor, the invertibility average is meaningless"
        )
    expectation = float(np.mean(np.log(np.where(floored, floor, inner))))
    return InvertibilityResult(expectation=expectation, passed=bool(expectation < 0.0), floored_count=count)
