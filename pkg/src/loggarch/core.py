"""Value types shared across the package and the scale transport map.

All containers here are frozen dataclasses holding read-only numpy
arrays, so instances can be shared freely between threads and worker
processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


def _readonly_vector(x, name: str, length: int | None = None) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if length is not None and arr.size != length:
        raise ValueError(f"{name} must have length {length}, got {arr.size}")
    arr.setflags(write=False)
    return arr


def _finite_float(x, name: str) -> float:
    v = float(x)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {v!r}")
    return v


@dataclass(frozen=True)
class ReturnSeries:
    """A series of (percent log) returns with optional calendar dates."""

    values: np.ndarray
    dates: tuple | None = None

    def __post_init__(self):
        vals = _readonly_vector(self.values, "values")
        if vals.size < 1:
            raise ValueError("a return series needs at least one observation")
        object.__setattr__(self, "values", vals)
        if self.dates is not None:
            dates = tuple(self.dates)
            if len(dates) != vals.size:
                raise ValueError(
                    f"dates length {len(dates)} does not match values length {vals.size}"
                )
            if any(b <= a for a, b in zip(dates, dates[1:])):
                raise ValueError("dates must be strictly increasing")
            object.__setattr__(self, "dates", dates)

    def __len__(self) -> int:
        return int(self.values.size)


def as_values(eps) -> np.ndarray:
    """Accept a ReturnSeries or a plain array and return the float array."""
    if isinstance(eps, ReturnSeries):
        return eps.values
    return _readonly_vector(eps, "eps")


@dataclass(frozen=True)
class AsLogGarchOrder:
    """Lag order: ``p`` autoregressive log variance lags, ``q`` return lags."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise ValueError(f"order requires p >= 0, q >= 0, p + q >= 1, got ({self.p}, {self.q})")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))


@dataclass(frozen=True)
class AsLogGarchParams:
    """Parameters of the asymmetric, scale stable log variance recursion

        log s2[t] = omega
                  + sum_i omega_minus[i] * 1{eps[t-i] < 0}
                  + sum_i (alpha_plus[i] * 1{eps[t-i] > 0}
                           + alpha_minus[i] * 1{eps[t-i] < 0}) * log eps[t-i]**2
                  + sum_j beta[j] * log s2[t-j]

    No sign constraints are imposed on any coefficient. The stacked
    vector ordering is (omega, omega_minus, alpha_plus, alpha_minus,
    beta), dimension 3q + p + 1.
    """

    omega: float
    omega_minus: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", _finite_float(self.omega, "omega"))
        om = _readonly_vector(self.omega_minus, "omega_minus")
        ap = _readonly_vector(self.alpha_plus, "alpha_plus", om.size)
        am = _readonly_vector(self.alpha_minus, "alpha_minus", om.size)
        b = _readonly_vector(self.beta, "beta")
        AsLogGarchOrder(b.size, om.size)  # validates p + q >= 1
        object.__setattr__(self, "omega_minus", om)
        object.__setattr__(self, "alpha_plus", ap)
        object.__setattr__(self, "alpha_minus", am)
        object.__setattr__(self, "beta", b)

    @property
    def order(self) -> AsLogGarchOrder:
        return AsLogGarchOrder(self.beta.size, self.omega_minus.size)

    @property
    def dimension(self) -> int:
        q = self.omega_minus.size
        return 3 * q + self.beta.size + 1

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            ([self.omega], self.omega_minus, self.alpha_plus, self.alpha_minus, self.beta)
        )

    @classmethod
    def from_vector(cls, vec, order: AsLogGarchOrder) -> "AsLogGarchParams":
        vec = np.asarray(vec, dtype=float).reshape(-1)
        p, q = order.p, order.q
        if vec.size != 3 * q + p + 1:
            raise ValueError(
                f"vector length {vec.size} does not match dimension {3 * q + p + 1}"
            )
        return cls(
            omega=vec[0],
            omega_minus=vec[1 : 1 + q],
            alpha_plus=vec[1 + q : 1 + 2 * q],
            alpha_minus=vec[1 + 2 * q : 1 + 3 * q],
            beta=vec[1 + 3 * q :],
        )


@dataclass(frozen=True)
class EgarchParams:
    """Parameters of the exponential GARCH(1,1) recursion

        log s2[t] = omega + gamma * z[t-1] + delta * |z[t-1]|
                  + beta * log s2[t-1]

    with z the scaled innovation. Instances must lie in the admissible
    region delta >= |gamma|, |beta| < 1; internal optimizer and finite
    difference code works on raw vectors instead of this type.
    """

    omega: float
    gamma: float
    delta: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "omega", _finite_float(self.omega, "omega"))
        object.__setattr__(self, "gamma", _finite_float(self.gamma, "gamma"))
        object.__setattr__(self, "delta", _finite_float(self.delta, "delta"))
        object.__setattr__(self, "beta", _finite_float(self.beta, "beta"))
        if self.delta < abs(self.gamma):
            raise ValueError(
                f"delta must be >= |gamma|, got delta={self.delta}, gamma={self.gamma}"
            )
        if abs(self.beta) >= 1.0:
            raise ValueError(f"|beta| must be < 1, got {self.beta}")

    def to_vector(self) -> np.ndarray:
        return np.array([self.omega, self.gamma, self.delta, self.beta])

    @classmethod
    def from_vector(cls, vec) -> "EgarchParams":
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if vec.size != 4:
            raise ValueError(f"vector length {vec.size}, expected 4")
        return cls(omega=vec[0], gamma=vec[1], delta=vec[2], beta=vec[3])


@dataclass(frozen=True)
class AugmentedLogGarchParams:
    """Log variance recursion augmented with level feedback terms.

    On top of the base recursion, each lag k = 1..ell adds

        (gamma_plus[k] * max(eps[t-k], 0) + gamma_minus[k] * max(-eps[t-k], 0))
            * exp(-log s2[t-k] / 2)

    so the base model is the gamma = 0 slice.
    """

    theta: AsLogGarchParams
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray

    def __post_init__(self):
        if not isinstance(self.theta, AsLogGarchParams):
            raise ValueError("theta must be AsLogGarchParams")
        gp = _readonly_vector(self.gamma_plus, "gamma_plus")
        gm = _readonly_vector(self.gamma_minus, "gamma_minus", gp.size)
        if gp.size < 1:
            raise ValueError("at least one feedback lag is required")
        object.__setattr__(self, "gamma_plus", gp)
        object.__setattr__(self, "gamma_minus", gm)

    @property
    def ell(self) -> int:
        return int(self.gamma_plus.size)


@dataclass(frozen=True)
class AugmentedEgarchParams:
    """Exponential GARCH(1,1) augmented with the log variance regressors.

    Each lag i = 1..q adds

        omega_minus[i] * 1{eps[t-i] < 0}
        + (alpha_plus[i] * 1{eps[t-i] > 0} + alpha_minus[i] * 1{eps[t-i] < 0})
            * log eps[t-i]**2

    so the plain recursion is the slice where all three blocks vanish.
    """

    zeta: EgarchParams
    omega_minus: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray

    def __post_init__(self):
        if not isinstance(self.zeta, EgarchParams):
            raise ValueError("zeta must be EgarchParams")
        om = _readonly_vector(self.omega_minus, "omega_minus")
        if om.size < 1:
            raise ValueError("at least one lag is required")
        ap = _readonly_vector(self.alpha_plus, "alpha_plus", om.size)
        am = _readonly_vector(self.alpha_minus, "alpha_minus", om.size)
        object.__setattr__(self, "omega_minus", om)
        object.__setattr__(self, "alpha_plus", ap)
        object.__setattr__(self, "alpha_minus", am)

    @property
    def q(self) -> int:
        return int(self.omega_minus.size)


@dataclass(frozen=True)
class FilterOutput:
    """Filtered log variance path, scaled residuals, and bookkeeping.

    ``r0`` is the burn-in cutoff: observations with index <= r0 (1-based
    time) are excluded from estimation criteria and test averages.
    ``floored_count`` records how many near-zero returns were floored
    before logs were taken.
    """

    log_sigma2: np.ndarray
    residuals: np.ndarray
    r0: int
    floored_count: int = 0

    def __post_init__(self):
        ls = _readonly_vector(self.log_sigma2, "log_sigma2")
        res = _readonly_vector(self.residuals, "residuals", ls.size)
        object.__setattr__(self, "log_sigma2", ls)
        object.__setattr__(self, "residuals", res)
        object.__setattr__(self, "r0", int(self.r0))
        object.__setattr__(self, "floored_count", int(self.floored_count))
        if not 0 <= self.r0 < ls.size:
            raise ValueError(f"r0={self.r0} out of range for length {ls.size}")

    @property
    def sigma2(self) -> np.ndarray:
        return np.exp(self.log_sigma2)


@dataclass(frozen=True)
class InitPolicy:
    """Presample conventions for the volatility filters.

    ``presample_eps2`` replaces squared returns at t <= 0,
    ``presample_sign_negative`` fixes the sign indicator there,
    ``initial_log_sigma2`` seeds the log variance, and
    ``zero_return_floor`` is the relative floor tau: observed returns
    with |eps| < tau * std(eps) are replaced by that floor, with
    positive sign, before logs and sign indicators are formed. The
    floor never touches the returns used in criterion numerators or
    residuals.
    """

    presample_eps2: float
    presample_sign_negative: bool
    initial_log_sigma2: float
    zero_return_floor: float = 1e-6

    def __post_init__(self):
        pe = _finite_float(self.presample_eps2, "presample_eps2")
        if pe <= 0:
            raise ValueError(f"presample_eps2 must be positive, got {pe}")
        fl = _finite_float(self.zero_return_floor, "zero_return_floor")
        if fl <= 0:
            raise ValueError(f"zero_return_floor must be positive, got {fl}")
        object.__setattr__(self, "presample_eps2", pe)
        object.__setattr__(self, "zero_return_floor", fl)
        object.__setattr__(
            self, "initial_log_sigma2", _finite_float(self.initial_log_sigma2, "initial_log_sigma2")
        )
        object.__setattr__(self, "presample_sign_negative", bool(self.presample_sign_negative))

    @classmethod
    def from_returns(cls, eps, zero_return_floor: float = 1e-6) -> "InitPolicy":
        """Data-driven defaults: mean of eps**2 for the presample square
        and its log for the initial log variance, positive presample sign.

        These choices are scale equivariant, which is what keeps the
        scale transport identity exact under refiltering.
        """
        vals = as_values(eps)
        m = float(np.mean(vals**2))
        if m <= 0:
            raise ValueError("series is identically zero, no scale to set defaults from")
        return cls(
            presample_eps2=m,
            presample_sign_negative=False,
            initial_log_sigma2=math.log(m),
            zero_return_floor=zero_return_floor,
        )


@dataclass(frozen=True)
class EgarchGradState:
    """Derivative state of the augmented exponential filter at the
    constrained point, stacked per observation.

    ``d_t`` has one row per t holding the derivative of log s2[t] with
    respect to the augmentation block; ``u_t`` holds the companion
    multiplier used in the recursion at each t.
    """

    d_t: np.ndarray
    u_t: np.ndarray

    def __post_init__(self):
        d = np.array(self.d_t, dtype=float, copy=True)
        u = np.array(self.u_t, dtype=float, copy=True).reshape(-1)
        if d.ndim != 2 or d.shape[0] != u.size:
            raise ValueError(f"d_t shape {d.shape} does not align with u_t length {u.size}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(u))):
            raise ValueError("gradient state must be finite")
        d.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "d_t", d)
        object.__setattr__(self, "u_t", u)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a quasi maximum likelihood fit.

    ``j_hat`` is the outer product information matrix of the fitted
    model's log variance derivatives, ``cov`` the sandwich covariance
    (kappa4_hat - 1) * j_hat^{-1} / effective sample size, and
    ``std_errors`` the square roots of its diagonal. For a fit with the
    two return coefficient blocks tied together, these matrices live in
    the reduced parameter space and ``restricted_alpha`` is set.
    ``divergence_count`` says how many criterion evaluations blew up and
    were fed back to the optimizer as +inf during the search.
    """

    params: object
    loglik_per_obs: float
    kappa4_hat: float
    j_hat: np.ndarray
    cov: np.ndarray
    std_errors: np.ndarray
    converged: bool
    iterations: int
    criterion_value: float
    restricted_alpha: bool = False
    invertibility: Mapping | None = None
    divergence_count: int = 0

    def __post_init__(self):
        j = np.array(self.j_hat, dtype=float, copy=True)
        c = np.array(self.cov, dtype=float, copy=True)
        se = _readonly_vector(self.std_errors, "std_errors")
        for name, m in (("j_hat", j), ("cov", c)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} must be finite")
        if self.kappa4_hat < 1.0:
            raise ValueError(f"kappa4_hat must be >= 1, got {self.kappa4_hat}")
        j.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "j_hat", j)
        object.__setattr__(self, "cov", c)
        object.__setattr__(self, "std_errors", se)
        object.__setattr__(self, "converged", bool(self.converged))
        object.__setattr__(self, "iterations", int(self.iterations))
        if self.divergence_count < 0:
            raise ValueError("divergence_count must be nonnegative")


@dataclass(frozen=True)
class TestReport:
    """A named specification test with its audit trail.

    ``components`` carries the intermediate vectors and matrices that
    produced the statistic (score, information blocks, correlations),
    keyed by short names, so results can be reproduced offline.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    name: str
    statistic: float
    df: int
    p_value: float
    components: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "statistic", _finite_float(self.statistic, "statistic"))
        object.__setattr__(self, "df", int(self.df))
        object.__setattr__(self, "p_value", _finite_float(self.p_value, "p_value"))
        if self.statistic < 0:
            raise ValueError(f"statistic must be nonnegative, got {self.statistic}")
        if self.df < 1:
            raise ValueError(f"df must be positive, got {self.df}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p_value must lie in [0, 1], got {self.p_value}")


def transport_params_under_scaling(theta: AsLogGarchParams, c: float) -> AsLogGarchParams:
    """Reparameterize so that rescaling returns by ``c`` leaves the model
    family unchanged.

    If eps is filtered at theta, then c * eps filtered at the returned
    parameters gives log variances shifted by exactly log(c**2) at every
    t (inital values transported the same way). Only the two intercept
    blocks move:

        omega'       = omega + log(c**2) * (1 - sum(beta) - sum(alpha_plus))
        omega_minus' = omega_minus - log(c**2) * (alpha_minus - alpha_plus)

    Slope coefficients are untouched, which is the scale stability
    property the asymmetric intercept exists to provide.
    """
    c = float(c)
    if not math.isfinite(c) or c <= 0:
        raise ValueError(f"scale c must be a positive finite real, got {c!r}")
    log_c2 = math.log(c * c)
    omega_star = theta.omega + log_c2 * (1.0 - float(np.sum(theta.beta)) - float(np.sum(theta.alpha_plus)))
    omega_minus_star = theta.omega_minus - log_c2 * (theta.alpha_minus - theta.alpha_plus)
    return AsLogGarchParams(
        omega=omega_star,
        omega_minus=omega_minus_star,
        alpha_plus=theta.alpha_plus,
        alpha_minus=theta.alpha_minus,
        beta=theta.beta,
    )


def transport_init_under_scaling(init: InitPolicy, c: float) -> InitPolicy:
    """Presample conventions matching a series rescaled by ``c``.

    Squared presample values pick up c**2, the log variance seed shifts
    by log(c**2), and the relative floor is unchanged because it scales
    with the sample standard deviation on its own.
    """
    c = float(c)
    if not math.isfinite(c) or c <= 0:
        raise ValueError(f"scale c must be a positive finite real, got {c!r}")
    return InitPolicy(
        presample_eps2=init.presample_eps2 * c * c,
        presample_sign_negative=init.presample_sign_negative,
        initial_log_sigma2=init.initial_log_sigma2 + math.log(c * c),
        zero_return_floor=init.zero_return_floor,
    )
