"""Fixed-parameter variance forecasts and forecast accuracy comparison.

The forecasting scheme is deliberately simple: parameters are frozen at
the in-sample fit and the one-step filter runs straight through the
combined sample, so the forecast for each holdout day conditions on all
returns before it without any re-estimation.
"""

from __future__ import annotations

import csv
import io
import math
from typing import NamedTuple

import numpy as np

from .core import AsLogGarchParams, EgarchParams, FitResult, InitPolicy, as_values
from .exceptions import DegenerateDifferentialError
from .numerics import normal_sf
from .volatility import _resolve_init, filter_aslog, filter_egarch

__all__ = [
    "LOSS_KINDS",
    "DmResult",
    "diebold_mariano",
    "loss_series",
    "loss_table_csv",
    "oos_forecast",
]

LOSS_KINDS = ("MSE", "MAE", "LogMSE", "LogMAE")


class DmResult(NamedTuple):
    statistic: float
    p_value: float


def oos_forecast(
    fit: FitResult,
    full_series,
    split_index: int,
    init: InitPolicy | None = None,
) -> np.ndarray:
    """One-step-ahead variance forecasts for the holdout part of a series.

    The first ``split_index`` observations are the training window the
    fit came from; forecasts are exp(log variance) at every later t.
    Pass the init the fit was computed with so the presample conventions
    carry over; left unset it is recomputed from the full series.
    """
    values = as_values(full_series)
    n = values.size
    if not 1 <= split_index < n:
        raise ValueError(f"split_index must lie in [1, {n - 1}], got {split_index}")
    init = _resolve_init(values, init)
    params = fit.params
    if isinstance(params, AsLogGarchParams):
        filtered = filter_aslog(params, values, init)
    elif isinstance(params, EgarchParams):
        filtered = filter_egarch(params, values, init)
    else:
        raise ValueError("fit holds no recognized parameter family")
    with np.errstate(over="ignore"):
        return np.exp(filtered.log_sigma2[split_index:])


def loss_series(eps2, sigma2_hat, kind: str, floor: float | None = None) -> np.ndarray:
    """Pointwise losses of variance forecasts against squared returns.

    ``kind`` is one of MSE, MAE, LogMSE, LogMAE: squared or absolute
    error on the level, or on the log of the ratio. The log losses
    floor the squared returns the same way the filters floor near-zero
    returns, so a single zero return cannot contribute an infinite
    loss. ``floor`` is that absolute bound on the return magnitude; by
    default it is 1e-6 times the root mean square return.
    """
    e2 = np.asarray(eps2, dtype=float).reshape(-1)
    s2 = np.asarray(sigma2_hat, dtype=float).reshape(-1)
    if e2.size != s2.size:
        raise ValueError(f"length mismatch: {e2.size} squared returns, {s2.size} forecasts")
    if e2.size == 0:
        raise ValueError("loss series need at least one observation")
    if not np.all(np.isfinite(e2)) or np.any(e2 < 0.0):
        raise ValueError("squared returns must be finite and nonnegative")
    if not np.all(np.isfinite(s2)) or np.any(s2 <= 0.0):
        raise ValueError("variance forecasts must be finite and positive")
    if kind == "MSE":
        return (e2 - s2) ** 2
    if kind == "MAE":
        return np.abs(e2 - s2)
    if kind not in ("LogMSE", "LogMAE"):
        raise ValueError(f"kind must be one of {LOSS_KINDS}, got {kind!r}")
    if floor is None:
        floor = 1e-6 * math.sqrt(float(np.mean(e2)))
    if not floor > 0.0:
        raise ValueError("the return floor must be positive; the series has no scale")
    ratio = np.log(np.maximum(e2, floor * floor) / s2)
    return ratio * ratio if kind == "LogMSE" else np.abs(ratio)


def diebold_mariano(loss_a, loss_b, hac_lags: int | None = None) -> DmResult:
    """Equal forecast accuracy test; large statistics say b is worse.

    The differential is d[t] = loss_b[t] - loss_a[t] and the statistic
    is mean(d) over the standard error of that mean. Plain sample
    variance is the default, which is the right long-run variance for
    one-step forecasts whose differential is serially uncorrelated
    under the null; ``hac_lags`` switches to a Bartlett window with
    that many lags when robustness to autocorrelation is wanted. The
    p-value is the upper normal tail, one sided.
    """
    a = np.asarray(loss_a, dtype=float).reshape(-1)
    b = np.asarray(loss_b, dtype=float).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size} losses")
    n = a.size
    if n < 30:
        raise ValueError(f"need at least 30 forecast losses, got {n}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("losses must be finite")
    d = b - a
    dbar = float(np.mean(d))
    centered = d - dbar
    if hac_lags is None:
        variance = float(centered @ centered) / (n - 1)
    else:
        if not 0 <= hac_lags < n:
            raise ValueError(f"hac_lags must lie in [0, {n - 1}], got {hac_lags}")
        variance = float(centered @ centered) / n
        for k in range(1, hac_lags + 1):
            weight = 1.0 - k / (hac_lags + 1.0)
            variance += 2.0 * weight * float(centered[k:] @ centered[:-k]) / n
    if variance <= 0.0:
        raise DegenerateDifferentialError(
            "loss differential has zero variance, the comparison is degenerate"
        )
    statistic = dbar / math.sqrt(variance / n)
    return DmResult(statistic=statistic, p_value=normal_sf(statistic))


def loss_table_csv(loss_a, loss_b, dates=None) -> str:
    """Render two loss series and their differential as CSV text.

    Columns are loss_a, loss_b, d, prefixed by a date column when dates
    are supplied.
    """
    a = np.asarray(loss_a, dtype=float).reshape(-1)
    b = np.asarray(loss_b, dtype=float).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size} losses")
    if dates is not None and len(dates) != a.size:
        raise ValueError(f"dates length {len(dates)} does not match losses {a.size}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if dates is None:
        writer.writerow(["loss_a", "loss_b", "d"])
        for x, y in zip(a.tolist(), b.tolist()):
            writer.writerow([repr(x), repr(y), repr(y - x)])
    else:
        writer.writerow(["date", "loss_a", "loss_b", "d"])
        for day, x, y in zip(dates, a.tolist(), b.tolist()):
            writer.writerow([day, repr(x), repr(y), repr(y - x)])
    return buf.getvalue()
