# services/analytic_service.py
"""
Closed-form analytics of the lambda = 1 model, where the terminal price
follows a re-parametrized Johnson S_U distribution.

Prices are undiscounted, in numeraire units. "ATM" means K = F_bar_T.
"""
import logging
import math

import numpy as np

from exceptions import DegenerateCorrelationError, UnsupportedLambdaError, ValidationError
from models import NsvhParams, SuScore
from utils.numerics import norm_cdf, norm_pdf, norm_quantile
from utils.streams import stream_rng

logger = logging.getLogger(__name__)


def _check(params: NsvhParams):
    if params.lam != 1:
        raise UnsupportedLambdaError("closed form needs lambda = 1", lam=params.lam)
    if params.alpha <= 0:
        raise ValidationError("closed form needs alpha > 0", field="alpha")
    if abs(params.rho) >= 1:
        raise DegenerateCorrelationError("closed form needs |rho| < 1", rho=params.rho)


def _out(values, like):
    return float(values) if np.ndim(like) == 0 else values


# --- DISTRIBUTION ---

def score(x, params: NsvhParams) -> SuScore:
    _check(params)
    x_arr = np.asarray(x, dtype=float)
    rho_star = params.rho_star
    xi = (params.alpha / (rho_star * params.sigma0)) * (params.mean - x_arr) \
        - (params.rho / rho_star) * math.exp(0.5 * params.s_var)
    d = (np.arcsinh(xi) + math.atanh(params.rho)) / math.sqrt(params.s_var)
    return SuScore(d=_out(d, x_arr), xi=_out(xi, x_arr))


def d_score(x, params: NsvhParams):
    """Strictly decreasing in x."""
    return score(x, params).d


def pdf(x, params: NsvhParams):
    s = score(x, params)
    denom = params.rho_star * params.sigma0 * math.sqrt(params.t_expiry) * np.sqrt(1.0 + np.square(s.xi))
    return _out(norm_pdf(s.d) / denom, x)


def cdf(x, params: NsvhParams):
    return norm_cdf(-np.asarray(d_score(x, params)))


def quantile(p, params: NsvhParams):
    """Inverse of cdf; equals the value-at-risk at level p."""
    _check(params)
    d = -np.asarray(norm_quantile(p))
    s_var = params.s_var
    inner = params.rho_star * np.sinh(d * math.sqrt(s_var) - math.atanh(params.rho)) \
        + params.rho * math.exp(0.5 * s_var)
    return _out(params.mean - params.scale * inner, p)


# --- PRICING ---

def option_price(strike, is_call: bool, params: NsvhParams):
    """
    V = (sigma0/2alpha) e^{S/2} ((1+rho)N(d+sqrt S) - (1-rho)N(d-sqrt S) - 2 rho N(d))
        +/- (F_bar_T - K) N(+/-d)
    """
    d = np.asarray(d_score(strike, params))
    rho = params.rho
    root_s = math.sqrt(params.s_var)
    sign = 1.0 if is_call else -1.0

    spread = (1.0 + rho) * norm_cdf(d + root_s) - (1.0 - rho) * norm_cdf(d - root_s) - 2.0 * rho * norm_cdf(d)
    time_value = 0.5 * params.scale * math.exp(0.5 * params.s_var) * spread
    price = time_value + sign * (params.mean - np.asarray(strike, dtype=float)) * norm_cdf(sign * d)
    return _out(price, strike)


# --- SAMPLING ---

def sample(params: NsvhParams, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """
    F_T = F_bar_T + (sigma0/alpha)(sinh W + rho (cosh W - e^{S/2})), W ~ N(0, S).
    One standard normal per draw.
    """
    _check(params)
    if n < 1:
        raise ValidationError("n must be at least 1", field="n")
    rng = stream_rng(seed, stream)
    w = rng.standard_normal(n) * math.sqrt(params.s_var)
    canonical = np.sinh(w) + params.rho * (np.cosh(w) - math.exp(0.5 * params.s_var))
    return params.mean + params.scale * canonical
