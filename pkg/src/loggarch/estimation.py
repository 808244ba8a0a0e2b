"""Gaussian quasi likelihood fitting for both volatility families.

The criterion is the average of eps^2 / sigma^2 + log sigma^2 over the
post-burn-in observations. Minimization runs a multi-start simplex
search inside a box, then a bounded quasi-Newton refinement from the
best simplex point. The log variance model uses its analytic path
derivative for the refinement and for the information matrix; the
exponential model has no cheap analytic path derivative, so its
derivatives come from central finite differences with steps scaled to
each coordinate, and they feed the same downstream formulas.

Every averaged quantity here (criterion, information matrix, fourth
moment, log likelihood) divides by the post-burn-in count n - r0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .core import (
    AsLogGarchOrder,
    AsLogGarchParams,
    EgarchParams,
    FilterOutput,
    FitResult,
    InitPolicy,
    as_values,
)
from .exceptions import (
    FilterDivergenceError,
    IndeterminateCheckError,
    NonConvergenceError,
    SingularMatrixError,
)
from .numerics import Rng, solve_spd
from .stationarity import egarch_invertibility_check, moment_matrix_check
from .volatility import (
    _floored_transforms,
    _presample,
    _resolve_init,
    filter_aslog,
    filter_egarch,
    grad_aslog,
)

__all__ = [
    "OptimConfig",
    "default_box_aslog",
    "default_box_egarch",
    "restriction_matrix",
    "qmle_criterion",
    "egarch_criterion",
    "egarch_loggrad_fd",
    "qmle_aslog",
    "qmle_egarch11",
    "evaluate_aslog",
    "evaluate_egarch11",
]

# fixed seed for restart draws so identical calls give identical fits
_RESTART_SEED = 910

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class OptimConfig:
    """Knobs for the minimization and the information matrix inversion.

    ``box`` is a tuple of (lower, upper) pairs in natural parameter
    order, or None for the family default. ``ridge`` is added to the
    information matrix diagonal when plain inversion finds it singular;
    zero means the singularity is raised instead.
    """

    max_iters: int = 2000
    tol: float = 1e-10
    restarts: int = 3
    box: tuple | None = None
    ridge: float = 0.0

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.ridge < 0.0:
            raise ValueError("ridge must be nonnegative")
        if self.box is not None:
            rows = tuple((float(lo), float(hi)) for lo, hi in self.box)
            for lo, hi in rows:
                if not lo < hi:
                    raise ValueError(f"box rows need lower < upper, got ({lo}, {hi})")
            object.__setattr__(self, "box", rows)


def default_box_aslog(order: AsLogGarchOrder) -> tuple:
    """Intercepts in [-5, 5], return coefficients in [-1, 1], variance
    feedback in [-0.999, 0.999]."""
    rows = [(-5.0, 5.0)]
    rows += [(-5.0, 5.0)] * order.q
    rows += [(-1.0, 1.0)] * (2 * order.q)
    rows += [(-0.999, 0.999)] * order.p
    return tuple(rows)


def default_box_egarch() -> tuple:
    """Bounds on (omega, gamma, delta, beta); the delta row bounds the
    symmetric response margin, see :func:`qmle_egarch11`."""
    return ((-5.0, 5.0), (-1.0, 1.0), (0.0, 3.0), (-0.999, 0.999))


def restriction_matrix(order: AsLogGarchOrder) -> np.ndarray:
    """Expansion matrix from the tied parameter vector (omega,
    omega_minus, alpha, beta) to the full one, duplicating the alpha
    block into both sign positions. theta_full = M theta_tied, and
    gradients pull back through M transposed.
    """
    p, q = order.p, order.q
    full = 1 + 3 * q + p
    tied = 1 + 2 * q + p
    m = np.zeros((full, tied))
    m[0, 0] = 1.0
    for i in range(q):
        m[1 + i, 1 + i] = 1.0
        m[1 + q + i, 1 + q + i] = 1.0
        m[1 + 2 * q + i, 1 + q + i] = 1.0
    for j in range(p):
        m[1 + 3 * q + j, 1 + 2 * q + j] = 1.0
    return m


def _criterion_from(filtered: FilterOutput) -> float:
    res = filtered.residuals[filtered.r0 :]
    ls = filtered.log_sigma2[filtered.r0 :]
    with np.errstate(over="ignore"):
        value = float(np.mean(res * res + ls))
    return value if math.isfinite(value) else math.inf


def qmle_criterion(theta: AsLogGarchParams, eps, init: InitPolicy | None = None) -> float:
    """Average Gaussian quasi likelihood contribution over t > r0.

    A diverging filter comes back as +inf so optimizers can step away
    from the offending region instead of crashing.
    """
    try:
        filtered = filter_aslog(theta, eps, init)
    except FilterDivergenceError:
        return math.inf
    return _criterion_from(filtered)


def egarch_criterion(zeta: EgarchParams, eps, init: InitPolicy | None = None) -> float:
    """Same criterion evaluated through the exponential filter."""
    try:
        filtered = filter_egarch(zeta, eps, init)
    except FilterDivergenceError:
        return math.inf
    return _criterion_from(filtered)


def egarch_loggrad_fd(
    zeta: EgarchParams, eps, init: InitPolicy | None = None, step_scale: float = 1e-6
) -> np.ndarray:
    """Central finite differences of the filtered log variance path with
    respect to (omega, gamma, delta, beta), one row per observation.

    Steps are step_scale * (1 + |coordinate|). Probes run the raw
    recursion directly, so a probe may momentarily leave the admissible
    region (delta slightly below |gamma|); the recursion itself is
    indifferent to that.
    """
    values = as_values(eps)
    init = _resolve_init(values, init)
    _, _, pre_eps = _presample(init)
    vec = zeta.to_vector()
    out = np.empty((values.size, 4))
    for i in range(4):
        h = step_scale * (1.0 + abs(vec[i]))
        up, down = vec.copy(), vec.copy()
        up[i] += h
        down[i] -= h
        ls_up, fail_up = _kernels.egarch_filter(
            values, up[0], up[1], up[2], up[3], pre_eps, init.initial_log_sigma2
        )
        ls_dn, fail_dn = _kernels.egarch_filter(
            values, down[0], down[1], down[2], down[3], pre_eps, init.initial_log_sigma2
        )
        if fail_up or fail_dn:
            raise FilterDivergenceError(fail_up or fail_dn)
        out[:, i] = (ls_up - ls_dn) / (2.0 * h)
    return out


# ---------------------------------------------------------------------------
# optimizer plumbing


def _restart_points(x0, bounds, restarts, screen):
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    points = [np.clip(np.asarray(x0, dtype=float), lo, hi)]
    rng = Rng(_RESTART_SEED)
    for k in range(1, restarts):
        child = rng.child(k)
        x = None
        for _ in range(50):
            x = lo + child.uniform(size=lo.size) * (hi - lo)
            if screen is None or screen(x):
                break
        points.append(x)
    return points


def _search(value, x0s, bounds, config, value_and_grad=None):
    """Simplex from every start, then one bounded quasi-Newton polish of
    the winner. Returns (x, criterion, iterations, converged). Ties
    between equally good starts go to the earliest one."""
    best_x = None
    best_val = math.inf
    iterations = 0
    converged = False
    for x0 in x0s:
        # divergence sentinels are +inf; the simplex spread check then
        # subtracts inf from inf, which is expected and harmless
        with np.errstate(invalid="ignore"):
            res = minimize(
                value,
                x0,
                method="Nelder-Mead",
                bounds=bounds,
                options={
                    "maxiter": config.max_iters,
                    "fatol": config.tol,
                    "xatol": 1e-8,
                },
            )
        iterations += int(res.nit)
        if res.success:
            converged = True
        if res.fun < best_val:
            best_val = float(res.fun)
            best_x = np.asarray(res.x, dtype=float)
    if best_x is None:  # pragma: no cover - value() never returns nan
        raise NonConvergenceError("no simplex start produced a finite criterion")
    polish = minimize(
        value_and_grad if value_and_grad is not None else value,
        best_x,
        method="L-BFGS-B",
        jac=True if value_and_grad is not None else None,
        bounds=bounds,
        options={"maxiter": config.max_iters, "ftol": 1e-13, "gtol": 1e-9},
    )
    iterations += int(polish.nit)
    if math.isfinite(polish.fun) and polish.fun <= best_val:
        best_val = float(polish.fun)
        best_x = np.asarray(polish.x, dtype=float)
        if polish.success:
            converged = True
    return best_x, best_val, iterations, converged


def _inverse(j: np.ndarray, ridge: float) -> np.ndarray:
    eye = np.eye(j.shape[0])
    try:
        return solve_spd(j, eye)
    except SingularMatrixError:
        if ridge <= 0.0:
            raise
        return solve_spd(j + ridge * eye, eye)


def _moments(filtered: FilterOutput):
    res = filtered.residuals[filtered.r0 :]
    kappa4 = 1.0 + float(np.mean((1.0 - res * res) ** 2))
    return res, kappa4


def _assemble(params, filtered, grad_rows, criterion_value, ridge, *,
              converged, iterations, restricted, divergences, invertibility=None):
    nn = filtered.log_sigma2.size - filtered.r0
    g = grad_rows[filtered.r0 :]
    j = g.T @ g / nn
    _, kappa4 = _moments(filtered)
    cov = (kappa4 - 1.0) * _inverse(j, ridge) / nn
    loglik = -0.5 * (_LOG_2PI + criterion_value)
    return FitResult(
        params=params,
        loglik_per_obs=loglik,
        kappa4_hat=kappa4,
        j_hat=j,
        cov=cov,
        std_errors=np.sqrt(np.diag(cov)),
        converged=converged,
        iterations=iterations,
        criterion_value=criterion_value,
        restricted_alpha=restricted,
        invertibility=invertibility,
        divergence_count=divergences,
    )


# ---------------------------------------------------------------------------
# log variance family


class _AslogObjective:
    def __init__(self, eps_values, order, init, restricted):
        self.eps = eps_values
        self.order = order
        self.init = init
        self.expand_matrix = restriction_matrix(order) if restricted else None
        self.divergences = 0

    def expand(self, x) -> AsLogGarchParams:
        vec = np.asarray(x, dtype=float)
        if self.expand_matrix is not None:
            vec = self.expand_matrix @ vec
        return AsLogGarchParams.from_vector(vec, self.order)

    def value(self, x) -> float:
        v = qmle_criterion(self.expand(x), self.eps, self.init)
        if v == math.inf:
            self.divergences += 1
        return v

    def value_and_grad(self, x):
        theta = self.expand(x)
        try:
            filtered = filter_aslog(theta, self.eps, self.init)
            rows = grad_aslog(theta, self.eps, self.init)
        except FilterDivergenceError:
            self.divergences += 1
            return math.inf, np.zeros(np.asarray(x).size)
        value = _criterion_from(filtered)
        if value == math.inf:
            self.divergences += 1
            return math.inf, np.zeros(np.asarray(x).size)
        r0 = filtered.r0
        res = filtered.residuals[r0:]
        g = rows[r0:]
        if self.expand_matrix is not None:
            g = g @ self.expand_matrix
        grad = ((1.0 - res * res) @ g) / res.size
        return value, grad


def _tie_box(box, order):
    """Collapse the two alpha blocks of a full box to one tied block."""
    q, p = order.q, order.p
    rows = list(box)
    if len(rows) == 1 + 3 * q + p:
        plus = rows[1 + q : 1 + 2 * q]
        minus = rows[1 + 2 * q : 1 + 3 * q]
        tied = [(max(a[0], b[0]), min(a[1], b[1])) for a, b in zip(plus, minus)]
        rows = rows[: 1 + q] + tied + rows[1 + 3 * q :]
    if len(rows) != 1 + 2 * q + p:
        raise ValueError(
            f"box has {len(box)} rows, expected {1 + 3 * q + p} (full) for order "
            f"p={p}, q={q}"
        )
    return tuple(rows)


def _aslog_start(eps_values, order, init, restricted):
    log_eps2, _, _ = _floored_transforms(eps_values, init)
    m = float(np.mean(log_eps2))
    q, p = order.q, order.p
    alpha = [0.05 / max(q, 1)] * q
    beta = [0.8 / max(p, 1)] * p
    head = [0.1 * m] + [0.0] * q
    if restricted:
        return np.array(head + alpha + beta)
    return np.array(head + alpha + alpha + beta)


def qmle_aslog(
    eps,
    order: AsLogGarchOrder,
    config: OptimConfig | None = None,
    init: InitPolicy | None = None,
    restrict_alpha: bool = False,
) -> FitResult:
    """Fit the asymmetric log variance model by quasi likelihood.

    ``restrict_alpha`` ties the two return-coefficient blocks together
    (one coefficient per lag regardless of sign); the reported
    covariance then lives in the tied space while ``params`` carries the
    expanded vector.

    Restart starting points are drawn inside the box from a fixed
    internal seed, preferring draws that pass the moment matrix screen;
    the screen never constrains the minimization itself.
    """
    values = as_values(eps)
    config = config or OptimConfig()
    init = _resolve_init(values, init)
    box = config.box or default_box_aslog(order)
    if restrict_alpha:
        box = _tie_box(box, order)
    elif len(box) != 1 + 3 * order.q + order.p:
        raise ValueError(
            f"box has {len(box)} rows, expected {1 + 3 * order.q + order.p} for "
            f"order p={order.p}, q={order.q}"
        )
    obj = _AslogObjective(values, order, init, restrict_alpha)

    def screen(x):
        return moment_matrix_check(obj.expand(x))[1]

    x0 = _aslog_start(values, order, init, restrict_alpha)
    starts = _restart_points(x0, box, config.restarts, screen)
    x_hat, crit, iterations, converged = _search(
        obj.value, starts, box, config, value_and_grad=obj.value_and_grad
    )
    theta_hat = obj.expand(x_hat)
    if not converged:
        raise NonConvergenceError(
            f"no restart converged within {config.max_iters} iterations", best=theta_hat
        )
    filtered = filter_aslog(theta_hat, values, init)
    rows = grad_aslog(theta_hat, values, init)
    if obj.expand_matrix is not None:
        rows = rows @ obj.expand_matrix
    return _assemble(
        theta_hat,
        filtered,
        rows,
        crit,
        config.ridge,
        converged=converged,
        iterations=iterations,
        restricted=restrict_alpha,
        divergences=obj.divergences,
    )


def evaluate_aslog(
    theta: AsLogGarchParams,
    eps,
    init: InitPolicy | None = None,
    ridge: float = 0.0,
    restrict_alpha: bool = False,
) -> FitResult:
    """All fit diagnostics at a fixed parameter, no optimization.

    Useful for transported parameters and for running the specification
    tests at a point estimated elsewhere. ``restrict_alpha`` only
    affects the space the covariance is reported in; the parameter is
    taken as given.
    """
    values = as_values(eps)
    init = _resolve_init(values, init)
    filtered = filter_aslog(theta, values, init)
    rows = grad_aslog(theta, values, init)
    if restrict_alpha:
        rows = rows @ restriction_matrix(theta.order)
    return _assemble(
        theta,
        filtered,
        rows,
        _criterion_from(filtered),
        ridge,
        converged=True,
        iterations=0,
        restricted=restrict_alpha,
        divergences=0,
    )


# ---------------------------------------------------------------------------
# exponential family

# the admissibility constraint delta >= |gamma| is built into the search
# coordinates: optimize (omega, gamma, s, beta) with delta = |gamma| + s^2


class _EgarchObjective:
    def __init__(self, eps_values, init):
        self.eps = eps_values
        self.init = init
        self.divergences = 0

    @staticmethod
    def expand(x) -> EgarchParams:
        omega, gamma, s, beta = (float(v) for v in x)
        return EgarchParams(omega=omega, gamma=gamma, delta=abs(gamma) + s * s, beta=beta)

    def value(self, x) -> float:
        v = egarch_criterion(self.expand(x), self.eps, self.init)
        if v == math.inf:
            self.divergences += 1
        return v


def qmle_egarch11(
    eps, config: OptimConfig | None = None, init: InitPolicy | None = None
) -> FitResult:
    """Fit the exponential model by quasi likelihood.

    The search works in (omega, gamma, s, beta) with delta = |gamma| +
    s^2, which keeps delta >= |gamma| everywhere; the box's delta row
    bounds s^2, so the fitted delta can exceed that row by at most
    |gamma|. The information matrix comes from finite-difference path
    derivatives (see :func:`egarch_loggrad_fd`). The invertibility
    diagnostic at the fitted parameter is attached to the result; a
    failing verdict is a warning, not an error.
    """
    values = as_values(eps)
    config = config or OptimConfig()
    init = _resolve_init(values, init)
    box = config.box or default_box_egarch()
    if len(box) != 4:
        raise ValueError(f"exponential model box needs 4 rows, got {len(box)}")
    if box[2][0] < 0.0:
        raise ValueError("delta bounds must be nonnegative")
    s_hi = math.sqrt(box[2][1])
    bounds = (box[0], box[1], (-s_hi, s_hi), box[3])
    obj = _EgarchObjective(values, init)
    log_eps2, _, _ = _floored_transforms(values, init)
    x0 = np.array([0.1 * float(np.mean(log_eps2)), 0.0, math.sqrt(0.1), 0.8])
    starts = _restart_points(x0, bounds, config.restarts, screen=None)
    x_hat, crit, iterations, converged = _search(obj.value, starts, bounds, config)
    zeta_hat = obj.expand(x_hat)
    if not converged:
        raise NonConvergenceError(
            f"no restart converged within {config.max_iters} iterations", best=zeta_hat
        )
    return evaluate_egarch11(
        zeta_hat,
        values,
        init,
        ridge=config.ridge,
        _criterion=crit,
        _converged=converged,
        _iterations=iterations,
        _divergences=obj.divergences,
    )


def evaluate_egarch11(
    zeta: EgarchParams,
    eps,
    init: InitPolicy | None = None,
    ridge: float = 0.0,
    _criterion: float | None = None,
    _converged: bool = True,
    _iterations: int = 0,
    _divergences: int = 0,
) -> FitResult:
    """Fit diagnostics for the exponential model at a fixed parameter."""
    values = as_values(eps)
    init = _resolve_init(values, init)
    filtered = filter_egarch(zeta, values, init)
    rows = egarch_loggrad_fd(zeta, values, init)
    crit = _criterion if _criterion is not None else _criterion_from(filtered)
    try:
        check = egarch_invertibility_check(zeta, values)._asdict()
    except IndeterminateCheckError as exc:
        check = {"indeterminate": True, "detail": str(exc)}
    return _assemble(
        zeta,
        filtered,
        rows,
        crit,
        ridge,
        converged=_converged,
        iterations=_iterations,
        restricted=False,
        divergences=_divergences,
        invertibility=check,
    )
