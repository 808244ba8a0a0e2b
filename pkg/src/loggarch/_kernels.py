"""Compiled inner loops for the volatility recursions.

Shared conventions:

- arrays are float64 and 0-indexed; "time t" in docstrings means array
  index t-1
- sign indicators travel as floats (1.0 for negative) so kernels stay
  monomorphic
- each filter returns (path, fail) where fail is 0 on success or the
  1-based index of the first non-finite value
- augmented kernels repeat the base kernel's accumulation expressions
  in the same order, then add their extra block last; with the extra
  coefficients at zero the float result is identical to the base kernel
  bit for bit, which estimation and the degeneracy tests rely on.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def aslog_filter(log_eps2, neg, omega, omega_minus, alpha_plus, alpha_minus, beta,
                 pre_log_eps2, pre_neg, init_ls):
    n = log_eps2.shape[0]
    q = omega_minus.shape[0]
    p = beta.shape[0]
    ls = np.empty(n)
    for t in range(n):
        acc = omega
        for i in range(1, q + 1):
            k = t - i
            if k >= 0:
                nv = neg[k]
                lv = log_eps2[k]
            else:
                nv = pre_neg
                lv = pre_log_eps2
            pv = 1.0 - nv
            acc += omega_minus[i - 1] * nv + (alpha_plus[i - 1] * pv + alpha_minus[i - 1] * nv) * lv
        for j in range(1, p + 1):
            k = t - j
            if k >= 0:
                acc += beta[j - 1] * ls[k]
            else:
                acc += beta[j - 1] * init_ls
        if not np.isfinite(acc):
            return ls, t + 1
        ls[t] = acc
    return ls, 0


@njit(cache=True)
def augmented_log_filter(log_eps2, neg, eps_raw, omega, omega_minus, alpha_plus,
                         alpha_minus, beta, gamma_plus, gamma_minus,
                         pre_log_eps2, pre_neg, pre_eps, init_ls):
    n = log_eps2.shape[0]
    q = omega_minus.shape[0]
    p = beta.shape[0]
    ell = gamma_plus.shape[0]
    ls = np.empty(n)
    for t in range(n):
        acc = omega
        for i in range(1, q + 1):
            k = t - i
            if k >= 0:
                nv = neg[k]
                lv = log_eps2[k]
            else:
                nv = pre_neg
                lv = pre_log_eps2
            pv = 1.0 - nv
            acc += omega_minus[i - 1] * nv + (alpha_plus[i - 1] * pv + alpha_minus[i - 1] * nv) * lv
        for j in range(1, p + 1):
            k = t - j
            if k >= 0:
                acc += beta[j - 1] * ls[k]
            else:
                acc += beta[j - 1] * init_ls
        # level feedback block, deliberately added after the base terms
        for m in range(1, ell + 1):
            k = t - m
            if k >= 0:
                ev = eps_raw[k]
                lsl = ls[k]
            else:
                ev = pre_eps
                lsl = init_ls
            epos = ev if ev > 0.0 else 0.0
            eneg = -ev if ev < 0.0 else 0.0
            acc += (gamma_plus[m - 1] * epos + gamma_minus[m - 1] * eneg) * math.exp(-0.5 * lsl)
        if not np.isfinite(acc):
            return ls, t + 1
        ls[t] = acc
    return ls, 0


@njit(cache=True)
def egarch_filter(eps_raw, omega, gamma, delta, beta, pre_eps, init_ls):
    n = eps_raw.shape[0]
    ls = np.empty(n)
    for t in range(n):
        k = t - 1
        if k >= 0:
            e = eps_raw[k]
            lsl = ls[k]
        else:
            e = pre_eps
            lsl = init_ls
        z = e * math.exp(-0.5 * lsl)
        acc = omega + gamma * z + delta * abs(z) + beta * lsl
        if not np.isfinite(acc):
            return ls, t + 1
        ls[t] = acc
    return ls, 0


@njit(cache=True)
def augmented_egarch_filter(eps_raw, log_eps2, neg, omega, gamma, delta, beta,
                            omega_minus, alpha_plus, alpha_minus,
                            pre_eps, pre_log_eps2, pre_neg, init_ls):
    n = eps_raw.shape[0]
    q = omega_minus.shape[0]
    ls = np.empty(n)
    for t in range(n):
        k = t - 1
        if k >= 0:
            e = eps_raw[k]
            lsl = ls[k]
        else:
            e = pre_eps
            lsl = init_ls
        z = e * math.exp(-0.5 * lsl)
        acc = omega + gamma * z + delta * abs(z) + beta * lsl
        # log variance regressor block, added after the base terms
        for i in range(1, q + 1):
            k = t - i
            if k >= 0:
                nv = neg[k]
                lv = log_eps2[k]
            else:
                nv = pre_neg
                lv = pre_log_eps2
            pv = 1.0 - nv
            acc += omega_minus[i - 1] * nv + (alpha_plus[i - 1] * pv + alpha_minus[i - 1] * nv) * lv
        if not np.isfinite(acc):
            return ls, t + 1
        ls[t] = acc
    return ls, 0


@njit(cache=True)
def ar_propagate(x, beta):
    """y[t] = sum_j beta[j-1] * y[t-j] + x[t], rows before t=0 treated as zero."""
    n = x.shape[0]
    d = x.shape[1]
    p = beta.shape[0]
    y = np.empty((n, d))
    for t in range(n):
        for c in range(d):
            y[t, c] = x[t, c]
        for j in range(1, p + 1):
            k = t - j
            if k >= 0:
                b = beta[j - 1]
                for c in range(d):
                    y[t, c] += b * y[k, c]
    return y


@njit(cache=True)
def egarch_alpha_state(regressors, residuals, gamma, delta, beta):
    """Derivative of the augmented exponential filter w.r.t. its extra
    block at zero: d[t] = u[t-1] * d[t-1] + regressors[t], with
    u[t] = beta - (gamma * z[t] + delta * |z[t]|) / 2 and d before t=0
    zero. ``residuals`` are the scaled innovations z of the base filter.
    """
    n = regressors.shape[0]
    m = regressors.shape[1]
    d = np.empty((n, m))
    u = np.empty(n)
    for t in range(n):
        z = residuals[t]
        u[t] = beta - 0.5 * (gamma * z + delta * abs(z))
        for c in range(m):
            d[t, c] = regressors[t, c]
        if t >= 1:
            up = u[t - 1]
            for c in range(m):
                d[t, c] += up * d[t - 1, c]
    return d, u


@njit(cache=True)
def aslog_simulate(eta, omega, omega_minus, alpha_plus, alpha_minus, beta):
    total = eta.shape[0]
    q = omega_minus.shape[0]
    p = beta.shape[0]
    ls = np.empty(total)
    eps = np.empty(total)
    log_eps2 = np.empty(total)
    neg = np.empty(total)
    for t in range(total):
        acc = omega
        for i in range(1, q + 1):
            k = t - i
            if k >= 0:
                nv = neg[k]
                lv = log_eps2[k]
            else:
                nv = 0.0
                lv = 0.0
            pv = 1.0 - nv
            acc += omega_minus[i - 1] * nv + (alpha_plus[i - 1] * pv + alpha_minus[i - 1] * nv) * lv
        for j in range(1, p + 1):
            k = t - j
            if k >= 0:
                acc += beta[j - 1] * ls[k]
            else:
                acc += beta[j - 1] * 0.0
        if not np.isfinite(acc) or abs(acc) > 700.0:
            return eps, ls, t + 1
        ls[t] = acc
        e = math.exp(0.5 * acc) * eta[t]
        if e == 0.0:
            return eps, ls, t + 1
        eps[t] = e
        log_eps2[t] = math.log(e * e)
        neg[t] = 1.0 if e < 0.0 else 0.0
    return eps, ls, 0


@njit(cache=True)
def augmented_log_simulate(eta, omega, omega_minus, alpha_plus, alpha_minus, beta,
                           gamma_plus, gamma_minus):
    total = eta.shape[0]
    q = omega_minus.shape[0]
    p = beta.shape[0]
    ell = gamma_plus.shape[0]
    ls = np.empty(total)
    eps = np.empty(total)
    log_eps2 = np.empty(total)
    neg = np.empty(total)
    for t in range(total):
        acc = omega
        for i in range(1, q + 1):
            k = t - i
            if k >= 0:
                nv = neg[k]
                lv = log_eps2[k]
            else:
                nv = 0.0
                lv = 0.0
            pv = 1.0 - nv
            acc += omega_minus[i - 1] * nv + (alpha_plus[i - 1] * pv + alpha_minus[i - 1] * nv) * lv
        for j in range(1, p + 1):
            k = t - j
            if k >= 0:
                acc += beta[j - 1] * ls[k]
            else:
                acc += beta[j - 1] * 0.0
        for m in range(1, ell + 1):
            k = t - m
            if k >= 0:
                ev = eps[k]
                lsl = ls[k]
            else:
                ev = 1.0
                lsl = 0.0
            epos = ev if ev > 0.0 else 0.0
            eneg = -ev if ev < 0.0 else 0.0
            acc += (gamma_plus[m - 1] * epos + gamma_minus[m - 1] * eneg) * math.exp(-0.5 * lsl)
        if not np.isfinite(acc) or abs(acc) > 700.0:
            return eps, ls, t + 1
        ls[t] = acc
        e = math.exp(0.5 * acc) * eta[t]
        if e == 0.0:
            return eps, ls, t + 1
        eps[t] = e
        log_eps2[t] = math.log(e * e)
        neg[t] = 1.0 if e < 0.0 else 0.0
    return eps, ls, 0


@njit(cache=True)
def egarch_simulate(eta, omega, gamma, delta, beta):
    total = eta.shape[0]
    ls = np.empty(total)
    eps = np.empty(total)
    for t in range(total):
        if t >= 1:
            z = eta[t - 1]
            lsl = ls[t - 1]
        else:
            z = 0.0
            lsl = 0.0
        acc = omega + gamma * z + delta * abs(z) + beta * lsl
        if not np.isfinite(acc) or abs(acc) > 700.0:
            return eps, ls, t + 1
        ls[t] = acc
        eps[t] = math.exp(0.5 * acc) * eta[t]
    return eps, ls, 0
