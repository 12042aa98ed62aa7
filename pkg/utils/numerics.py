# utils/numerics.py
"""
Special functions shared by every service: the (e^{ks} - 1)/k ratio,
the phi transform of the hyperbolic radius, and the standard normal
density / CDF / quantile.

All functions accept scalars or numpy arrays and return the same shape.
"""
import numpy as np
from scipy import special

from exceptions import DomainError

SERIES_SWITCH = 1e-5
PHI_TOLERANCE = 1e-12


def _as_output(values, like):
    return float(values) if np.ndim(like) == 0 else values


def stable_exp_ratio(k, s):
    """(e^{k s} - 1)/k, equal to s in the limit k -> 0."""
    k_arr = np.asarray(k, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    ks = k_arr * s_arr

    small = np.abs(ks) < SERIES_SWITCH
    safe_k = np.where(small, 1.0, k_arr)
    direct = np.expm1(np.where(small, 0.0, ks)) / safe_k
    series = s_arr * (1.0 + ks / 2.0 + ks * ks / 6.0)

    result = np.where(small, series, direct)
    return _as_output(result, ks)


def phi(z, d):
    """
    e^{z/2} * sqrt(2 cosh d - 2 cosh z) for d >= |z|.

    The radicand is evaluated as 4 sinh((d+z)/2) sinh((d-z)/2) so nothing
    cancels when d is close to |z|.
    """
    z_arr = np.asarray(z, dtype=float)
    d_arr = np.asarray(d, dtype=float)

    if np.any(d_arr < np.abs(z_arr) - PHI_TOLERANCE):
        raise DomainError("phi requires d >= |z|", tolerance=PHI_TOLERANCE)

    radicand = np.sinh(0.5 * (d_arr + z_arr)) * np.sinh(0.5 * (d_arr - z_arr))
    radicand = np.maximum(radicand, 0.0)
    result = 2.0 * np.exp(0.5 * z_arr) * np.sqrt(radicand)
    return _as_output(result, z_arr * d_arr)


def norm_pdf(x):
    x_arr = np.asarray(x, dtype=float)
    result = np.exp(-0.5 * x_arr * x_arr) / np.sqrt(2.0 * np.pi)
    return _as_output(result, x_arr)


def norm_cdf(x):
    x_arr = np.asarray(x, dtype=float)
    return _as_output(special.ndtr(x_arr), x_arr)


def norm_quantile(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0.0) | (p_arr >= 1.0)) or np.any(np.isnan(p_arr)):
        raise DomainError("norm_quantile requires 0 < p < 1")
    return _as_output(special.ndtri(p_arr), p_arr)
