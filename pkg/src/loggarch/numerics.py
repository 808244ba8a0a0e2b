"""Low level numerics: seeded random streams, tail probabilities, a small
positive definite solver, spectral radius, and finite differences.

Everything downstream of the model code funnels through these helpers so
that reproducibility and failure modes are controlled in one place.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .exceptions import (
    PowerIterationError,
    ProbeFailureError,
    SingularMatrixError,
)

_MASK64 = 0xFFFFFFFFFFFFFFFF

# Uniforms are clipped away from 0 before the inverse CDF; ndtri(1e-300)
# is about -37, still finite.
_MIN_UNIFORM = 1e-300


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class Rng:
    """Deterministic random source built on a PCG64 uniform stream.

    Normal variates are produced by applying the inverse normal CDF to
    the uniform stream, one uniform per variate. That makes draws
    reproducible across platforms and lets :meth:`child` hand out
    independent streams for parallel work without any coordination.

    Parameters
    ----------
    seed : int
        Nonnegative stream seed. Values are reduced modulo 2**64.
    """

    def __init__(self, seed: int) -> None:
        if not isinstance(seed, (int, np.integer)):
            raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size: int | tuple | None = None):
        """Standard uniforms on the open interval (0, 1)."""
        u = self._gen.random(size)
        if size is None:
            return float(u) if u > _MIN_UNIFORM else _MIN_UNIFORM
        return np.maximum(u, _MIN_UNIFORM)

    def normal(self, size: int | tuple | None = None):
        """Standard normals via the inverse CDF of :meth:`uniform`."""
        u = self.uniform(size)
        if size is None:
            return float(ndtri(u))
        return ndtri(u)

    def child(self, index: int) -> "Rng":
        """Independent stream number ``index`` derived from this seed.

        The mapping is pure arithmetic on the seed, so children are
        identical no matter how many workers ask for them or in which
        order.
        """
        if index < 0:
            raise ValueError("child index must be nonnegative")
        return Rng(_splitmix64(_splitmix64(self.seed) + 1 + int(index)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed})"


def _lower_gamma_series(a: float, x: float) -> float:
    # Regularized lower incomplete gamma by power series, valid for x < a + 1.
    term = 1.0 / a
    total = term
    for k in range(1, 1000):
        term *= x / (a + k)
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    else:  # pragma: no cover
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    # Regularized upper incomplete gamma by Lentz continued fraction,
    # valid for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for k in range(1, 1000):
        an = -k * (k - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    else:  # pragma: no cover
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(x: float, df: int) -> float:
    """Upper tail probability of a chi squared distribution.

    Parameters
    ----------
    x : float
        Nonnegative evaluation point.
    df : int
        Degrees of freedom, a positive integer.
    """
    if not isinstance(df, (int, np.integer)) or df < 1:
        raise ValueError(f"df must be a positive integer, got {df!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if x < 0.0:
        raise ValueError(f"x must be nonnegative, got {x!r}")
    a = 0.5 * df
    xh = 0.5 * x
    if xh == 0.0:
        return 1.0
    if xh < a + 1.0:
        p = 1.0 - _lower_gamma_series(a, xh)
    else:
        p = _upper_gamma_cf(a, xh)
    return min(max(p, 0.0), 1.0)


def normal_sf(x: float) -> float:
    """Upper tail probability of a standard normal."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    Factors ``a`` by Cholesky without pivoting, tracking the smallest
    pivot seen. A pivot at or below ``1e-12`` times the diagonal scale
    aborts with :class:`SingularMatrixError` carrying that pivot, which
    is how callers distinguish "nearly singular information matrix"
    from programming errors.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"right hand side has {b.shape[0]} rows, expected {n}")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        raise ValueError("inputs must be finite")
    scale = max(float(np.max(np.abs(np.diag(a)))), 1e-300)
    asym = float(np.max(np.abs(a - a.T)))
    if asym > 1e-8 * max(scale, 1.0):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")

    lower = np.zeros((n, n))
    smallest = math.inf
    threshold = 1e-12 * scale
    for j in range(n):
        d = a[j, j] - lower[j, :j] @ lower[j, :j]
        smallest = min(smallest, d)
        if d <= threshold:
            raise SingularMatrixError(
                "matrix is not positive definite to working precision", smallest
            )
        ljj = math.sqrt(d)
        lower[j, j] = ljj
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / ljj

    # Forward then backward substitution, handling vector or matrix b.
    y = np.zeros_like(b, dtype=float)
    for i in range(n):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    x = np.zeros_like(y)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def spectral_radius(a: np.ndarray, tol: float = 1e-10, max_iter: int = 200_000) -> float:
    """Largest absolute eigenvalue of a square matrix by power iteration.

    The growth rate is averaged over a sliding window as long as the
    matrix dimension, which keeps the estimate stable for companion
    matrices whose iterates cycle through a few directions. If the
    iterate collapses to (numerical) zero the radius is reported as 0.0,
    the nilpotent case. Failure to settle raises
    :class:`PowerIterationError`.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix must be finite")
    n = a.shape[0]
    if n == 1:
        return abs(float(a[0, 0]))

    u = np.ones(n) / math.sqrt(n)
    window = np.empty(n)
    estimate_ago = None  # estimate from one full window earlier
    recent: list[float] = []
    for k in range(max_iter):
        v = a @ u
        growth = float(np.linalg.norm(v))
        if growth < 1e-300:
            return 0.0
        u = v / growth
        window[k % n] = math.log(growth)
        if k + 1 >= n:
            est = math.exp(float(np.mean(window)))
            recent.append(est)
            if len(recent) > n:
                estimate_ago = recent.pop(0)
            if estimate_ago is not None and abs(est - estimate_ago) <= tol * max(est, 1e-12):
                return est
    raise PowerIterationError(max_iter)


def finite_diff_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float | np.ndarray = 1e-6
) -> np.ndarray:
    """Central difference gradient of a scalar function.

    ``h`` may be a scalar or a per-coordinate array. A probe that comes
    back non-finite raises :class:`ProbeFailureError` naming the
    offending coordinate rather than propagating NaN into downstream
    linear algebra.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"x must be one dimensional, got shape {x.shape}")
    steps = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    if np.any(steps <= 0):
        raise ValueError("step sizes must be positive")
    grad = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += steps[i]
        xm[i] -= steps[i]
        fp = float(f(xp))
        if not math.isfinite(fp):
            raise ProbeFailureError(i, fp)
        fm = float(f(xm))
        if not math.isfinite(fm):
            raise ProbeFailureError(i, fm)
        grad[i] = (fp - fm) / (2.0 * steps[i])
    return grad
