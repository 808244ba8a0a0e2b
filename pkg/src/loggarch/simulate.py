"""Seeded simulators for the model families and the constructive map
from the symmetric exponential model into the log variance family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .core import (
    AsLogGarchParams,
    AugmentedLogGarchParams,
    EgarchParams,
    ReturnSeries,
)
from .exceptions import SimulationDivergenceError
from .numerics import Rng, normal_sf

__all__ = [
    "SimulationResult",
    "simulate_aslog",
    "simulate_egarch11",
    "simulate_augmented",
    "egarch_to_loggarch_symmetric",
    "gaussian_abs_exp_moment",
]

NoiseSampler = Callable[[Rng, int], np.ndarray]


@dataclass(frozen=True)
class SimulationResult:
    """Simulated returns plus everything needed to refilter them exactly.

    ``pre_eps``, ``pre_log_sigma2`` and ``pre_innovation`` hold the state
    one step before the first returned observation (after the burn-in),
    so a filter seeded with them reproduces the true path for one-lag
    models. Iterating the result yields (series, log_sigma2) in that
    order.
    """

    series: ReturnSeries
    log_sigma2: np.ndarray
    innovations: np.ndarray
    pre_eps: float
    pre_log_sigma2: float
    pre_innovation: float

    def __iter__(self):
        yield self.series
        yield self.log_sigma2


def _draw(rng: Rng, total: int, noise: NoiseSampler | None) -> np.ndarray:
    if not isinstance(rng, Rng):
        raise ValueError("rng must be an Rng instance")
    if noise is None:
        eta = rng.normal(size=total)
    else:
        eta = np.asarray(noise(rng, total), dtype=float)
        if eta.shape != (total,):
            raise ValueError(f"noise sampler returned shape {eta.shape}, expected ({total},)")
    return eta


def _package(eps_all, ls_all, eta, fail, n, burn) -> SimulationResult:
    if fail:
        raise SimulationDivergenceError(fail)
    if burn > 0:
        pre_eps = float(eps_all[burn - 1])
        pre_ls = float(ls_all[burn - 1])
        pre_inn = float(eta[burn - 1])
    else:
        # the kernels seed unobserved lags with log eps^2 = 0, positive
        # sign, zero log variance and zero innovation
        pre_eps = 1.0
        pre_ls = 0.0
        pre_inn = 0.0
    return SimulationResult(
        series=ReturnSeries(values=eps_all[burn:]),
        log_sigma2=ls_all[burn:].copy(),
        innovations=eta[burn:].copy(),
        pre_eps=pre_eps,
        pre_log_sigma2=pre_ls,
        pre_innovation=pre_inn,
    )


def _check_lengths(n: int, burn: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(burn, (int, np.integer)) or burn < 0:
        raise ValueError(f"burn must be a nonnegative integer, got {burn!r}")


def simulate_aslog(
    theta: AsLogGarchParams,
    n: int,
    burn: int = 1000,
    rng: Rng | None = None,
    noise: NoiseSampler | None = None,
) -> SimulationResult:
    """Simulate the asymmetric log variance model.

    Innovations default to iid standard normals from ``rng``; pass
    ``noise`` to substitute any other unit variance sampler. The path
    starts from zero log variances, the first ``burn`` steps are
    discarded, and a log variance beyond +-700 aborts with
    :class:`SimulationDivergenceError` since the dynamics are clearly
    explosive at that point.
    """
    _check_lengths(n, burn)
    if rng is None:
        raise ValueError("an Rng must be provided")
    eta = _draw(rng, n + burn, noise)
    eps_all, ls_all, fail = _kernels.aslog_simulate(
        eta, theta.omega, theta.omega_minus, theta.alpha_plus, theta.alpha_minus, theta.beta
    )
    return _package(eps_all, ls_all, eta, fail, n, burn)


def simulate_egarch11(
    zeta: EgarchParams,
    n: int,
    burn: int = 1000,
    rng: Rng | None = None,
    noise: NoiseSampler | None = None,
) -> SimulationResult:
    """Simulate the exponential GARCH(1,1) model; conventions as in
    :func:`simulate_aslog`."""
    _check_lengths(n, burn)
    if rng is None:
        raise ValueError("an Rng must be provided")
    eta = _draw(rng, n + burn, noise)
    eps_all, ls_all, fail = _kernels.egarch_simulate(
        eta, zeta.omega, zeta.gamma, zeta.delta, zeta.beta
    )
    return _package(eps_all, ls_all, eta, fail, n, burn)


def simulate_augmented(
    vartheta: AugmentedLogGarchParams,
    n: int,
    burn: int = 1000,
    rng: Rng | None = None,
    noise: NoiseSampler | None = None,
) -> SimulationResult:
    """Simulate the level-feedback extension. With both feedback blocks
    zero the draws coincide with :func:`simulate_aslog` bit for bit at
    equal seeds."""
    _check_lengths(n, burn)
    if rng is None:
        raise ValueError("an Rng must be provided")
    eta = _draw(rng, n + burn, noise)
    theta = vartheta.theta
    eps_all, ls_all, fail = _kernels.augmented_log_simulate(
        eta, theta.omega, theta.omega_minus, theta.alpha_plus, theta.alpha_minus,
        theta.beta, vartheta.gamma_plus, vartheta.gamma_minus,
    )
    return _package(eps_all, ls_all, eta, fail, n, burn)


def gaussian_abs_exp_moment() -> float:
    """E exp(|Z|) for standard normal Z, in closed form 2 e^{1/2} Phi(1)."""
    return 2.0 * math.exp(0.5) * (1.0 - normal_sf(1.0))


def egarch_to_loggarch_symmetric(
    omega: float,
    beta: float,
    gamma_sym: float,
    eta_tilde,
    abs_exp_moment: float | None = None,
) -> tuple[AsLogGarchParams, np.ndarray]:
    """Rewrite a symmetric exponential recursion as a log variance model.

    The input model is log s2[t] = omega + gamma_sym * |z[t-1]|
    + beta * log s2[t-1]. With m = E exp(|z|), the pair

        theta: alpha_plus = alpha_minus = gamma_sym,
               beta' = beta - gamma_sym,
               omega' = omega + gamma_sym * log m
        eta[t] = exp(|z[t]| / 2) * sign(z[t]) / sqrt(m)

    drives the identical variance path, because log eta[t]**2 =
    |z[t]| - log m. ``abs_exp_moment`` supplies m; by default it is
    estimated as the sample mean of exp(|eta_tilde|)
    (:func:`gaussian_abs_exp_moment` gives the Gaussian closed form).
    The construction needs gamma_sym != 0, otherwise the exponent map
    is degenerate.
    """
    gamma_sym = float(gamma_sym)
    if gamma_sym == 0.0 or not math.isfinite(gamma_sym):
        raise ValueError("gamma_sym must be a nonzero finite real")
    eta_tilde = np.asarray(eta_tilde, dtype=float).reshape(-1)
    if eta_tilde.size < 1 or not np.all(np.isfinite(eta_tilde)):
        raise ValueError("eta_tilde must be a nonempty finite sample")
    if abs_exp_moment is None:
        m = float(np.mean(np.exp(np.abs(eta_tilde))))
    else:
        m = float(abs_exp_moment)
        if not math.isfinite(m) or m <= 0:
            raise ValueError(f"abs_exp_moment must be positive and finite, got {m!r}")
    theta = AsLogGarchParams(
        omega=float(omega) + gamma_sym * math.log(m),
        omega_minus=[0.0],
        alpha_plus=[gamma_sym],
        alpha_minus=[gamma_sym],
        beta=[float(beta) - gamma_sym],
    )
    transformed = np.exp(0.5 * np.abs(eta_tilde)) * np.sign(eta_tilde) / math.sqrt(m)
    return theta, transformed
