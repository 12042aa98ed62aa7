# services/sabr_service.py
"""
Normal SABR (lambda = 0) analytics: Hagan's normal-volatility approximation,
the Bachelier pricer that turns it into prices, and its inverse.
"""
import logging
import math

import numpy as np
from scipy import optimize

from exceptions import DegenerateCorrelationError, NoSolutionError
from models import NsvhParams
from utils.numerics import norm_cdf, norm_pdf

logger = logging.getLogger(__name__)

ZETA_SERIES_SWITCH = 1e-6
RHO_LIMIT = 1.0 - 1e-10
MAX_ITERATIONS = 100


# --- HAGAN NORMAL VOLATILITY ---

def _zeta_over_chi(zeta, rho: float):
    zeta = np.asarray(zeta, dtype=float)
    small = np.abs(zeta) < ZETA_SERIES_SWITCH
    z = np.where(small, 1.0, zeta)

    root = np.sqrt(1.0 - 2.0 * rho * z + z * z)
    # log((root - rho + z)/(1 - rho)) written as log1p of the excess over 1
    chi = np.log1p((z + (z * z - 2.0 * rho * z) / (root + 1.0)) / (1.0 - rho))
    direct = z / chi

    series = 1.0 - 0.5 * rho * zeta + (2.0 - 3.0 * rho * rho) * zeta * zeta / 12.0
    return np.where(small, series, direct)


def hagan_normal_vol(params: NsvhParams, strike):
    """
    sigma_N = sigma0 (zeta/chi)(1 + (2 - 3 rho^2)/24 alpha^2 T), zeta = (alpha/sigma0)(F0 - K).
    The lambda field is ignored: this is the lambda = 0 approximation.
    """
    rho = params.rho
    if abs(rho) >= RHO_LIMIT:
        raise DegenerateCorrelationError("Hagan normal vol requires |rho| < 1", rho=rho)

    strike_arr = np.asarray(strike, dtype=float)
    zeta = (params.alpha / params.sigma0) * (params.f0 - strike_arr)
    correction = 1.0 + (2.0 - 3.0 * rho * rho) / 24.0 * params.s_var
    vol = params.sigma0 * _zeta_over_chi(zeta, rho) * correction
    return float(vol) if strike_arr.ndim == 0 else vol


# --- BACHELIER ---

def bachelier_price(forward, strike, normal_vol, t_expiry: float, is_call: bool):
    """Undiscounted normal-model price; intrinsic value when normal_vol = 0."""
    forward = np.asarray(forward, dtype=float)
    strike = np.asarray(strike, dtype=float)
    vol = np.asarray(normal_vol, dtype=float)

    sign = 1.0 if is_call else -1.0
    moneyness = forward - strike
    std = vol * math.sqrt(t_expiry)
    positive = std > 0
    safe_std = np.where(positive, std, 1.0)
    d1 = moneyness / safe_std

    price = sign * moneyness * norm_cdf(sign * d1) + safe_std * norm_pdf(d1)
    intrinsic = np.maximum(sign * moneyness, 0.0)
    result = np.where(positive, price, intrinsic)
    return float(result) if result.ndim == 0 else result


def bachelier_vega(forward, strike, normal_vol, t_expiry: float):
    d1 = (forward - strike) / (normal_vol * math.sqrt(t_expiry))
    return math.sqrt(t_expiry) * norm_pdf(d1)


def implied_normal_vol(price: float, forward: float, strike: float, t_expiry: float, is_call: bool) -> float:
    """Inverts bachelier_price with Brent's method on a bracket grown by doubling."""
    sign = 1.0 if is_call else -1.0
    intrinsic = max(sign * (forward - strike), 0.0)
    if not math.isfinite(price) or price <= intrinsic:
        raise NoSolutionError("price must exceed intrinsic value", price=price, intrinsic=intrinsic)

    def excess(vol):
        return bachelier_price(forward, strike, vol, t_expiry, is_call) - price

    time_value = price - intrinsic
    upper = max(time_value * math.sqrt(2.0 * math.pi / t_expiry), 1e-300)
    for _ in range(MAX_ITERATIONS):
        if excess(upper) > 0:
            break
        upper *= 2.0
    else:
        raise NoSolutionError("could not bracket the implied normal vol", price=price)

    vol, info = optimize.brentq(excess, 0.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=MAX_ITERATIONS, full_output=True, disp=False)
    if not info.converged:
        raise NoSolutionError("implied normal vol did not converge", price=price, iterations=info.iterations)
    logger.debug("implied normal vol %.6g after %d iterations", vol, info.iterations)
    return vol
