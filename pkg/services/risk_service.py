# services/risk_service.py
"""
Value-at-risk and expected shortfall on signed values (losses negative,
es <= var), closed form for lambda = 1, Monte-Carlo for any lambda,
empirical and normal-theory; plus S_U probability-plot scores.
"""
import logging
import math
from typing import Sequence, Tuple

import numpy as np
import pandas as pd

from exceptions import InsufficientDataError, UnsupportedLambdaError, ValidationError
from models import NsvhParams, RiskMethod, RiskReport, Standardization
from services import analytic_service, mc_service, moment_service
from utils.numerics import norm_cdf, norm_pdf, norm_quantile
from utils.streams import map_streams

logger = logging.getLogger(__name__)

MIN_TAIL_SAMPLES = 100


def _check_level(p: float):
    if not (isinstance(p, (int, float)) and 0 < p < 1):
        raise ValidationError("p must lie strictly between 0 and 1", field="p")


# --- 1. CLOSED FORM (lambda = 1) ---

def var_closed(params: NsvhParams, p: float) -> float:
    """The p-quantile of F_T."""
    _check_level(p)
    return analytic_service.quantile(p, params)


def es_closed(params: NsvhParams, p: float) -> float:
    """
    ES = F_bar_T - sigma0 e^{S/2}/(2 alpha p)
         * ((1+rho) N(d+sqrt S) - (1-rho) N(d-sqrt S) - 2 rho (1-p)),  d = -N^{-1}(p)
    """
    _check_level(p)
    if params.lam != 1:
        raise UnsupportedLambdaError("closed-form expected shortfall needs lambda = 1", lam=params.lam)
    d = -norm_quantile(p)
    root_s = math.sqrt(params.s_var)
    rho = params.rho
    spread = (1.0 + rho) * norm_cdf(d + root_s) - (1.0 - rho) * norm_cdf(d - root_s) - 2.0 * rho * (1.0 - p)
    return params.mean - params.scale * math.exp(0.5 * params.s_var) * spread / (2.0 * p)


def var_es_closed(params: NsvhParams, p: float) -> RiskReport:
    return RiskReport(p=p, var=var_closed(params, p), es=es_closed(params, p), method=RiskMethod.CLOSED_FORM)


# --- 2. EMPIRICAL ---

def _tail_measures(sorted_values: np.ndarray, p: float) -> Tuple[float, float]:
    """VaR at rank p(n+1) with linear interpolation; ES over tail mass exactly p n."""
    n = len(sorted_values)
    rank = p * (n + 1)
    k = int(math.floor(rank))
    if k >= n:
        var = float(sorted_values[-1])
    else:
        var = float(sorted_values[k - 1] + (rank - k) * (sorted_values[k] - sorted_values[k - 1]))

    mass = p * n
    full = int(math.floor(mass))
    tail = float(np.sum(sorted_values[:full]))
    if full < n:
        tail += (mass - full) * float(sorted_values[full])
    return var, tail / mass


def empirical_var_es(data: Sequence[float], p: float) -> RiskReport:
    _check_level(p)
    values = np.sort(np.asarray(data, dtype=float))
    if p * len(values) < 1:
        raise InsufficientDataError("empty tail: p * n must be at least 1", n=int(len(values)), p=p)
    var, es = _tail_measures(values, p)
    return RiskReport(p=p, var=var, es=es, method=RiskMethod.EMPIRICAL)


# --- 3. NORMAL THEORY ---

def var_es_normal(mean: float, mu2: float, p: float) -> RiskReport:
    """Risk figures of a normal distribution with the given mean and variance."""
    _check_level(p)
    if not mu2 > 0:
        raise ValidationError("variance must be positive", field="mu2")
    z = norm_quantile(p)
    std = math.sqrt(mu2)
    return RiskReport(p=p, var=mean + std * z, es=mean - std * norm_pdf(z) / p, method=RiskMethod.NORMAL)


# --- 4. MONTE-CARLO ---

def var_es_mc(params: NsvhParams, p: float, n_triplets: int, seed: int, n_groups: int = 50,
              threads: int = 1, fast_su: bool = False) -> RiskReport:
    """
    Pooled empirical VaR/ES of exact draws; standard errors from the spread of
    per-group estimates. With fast_su (lambda = 1 only) the draws come from the
    one-normal-per-draw S_U sampler instead of triplets.
    """
    _check_level(p)
    if fast_su and params.lam != 1:
        raise UnsupportedLambdaError("the S_U sampler needs lambda = 1", lam=params.lam)
    if n_groups < 2 or n_triplets % n_groups:
        raise ValidationError("n_triplets must split into at least 2 equal groups", field="n_groups")

    if fast_su:
        group_size = n_triplets // n_groups
        groups = map_streams(lambda rng, g: analytic_service.sample(params, group_size, seed, stream=g),
                             seed, n_groups, threads)
    else:
        groups = mc_service.terminal_samples(params, n_triplets, seed, n_groups, threads=threads).groups()

    n_total = sum(len(g) for g in groups)
    if p * n_total < MIN_TAIL_SAMPLES:
        raise InsufficientDataError(f"p * n must be at least {MIN_TAIL_SAMPLES}", n=n_total, p=p)
    if p * len(groups[0]) < 1:
        raise InsufficientDataError("each group needs a non-empty tail", n=len(groups[0]), p=p)

    var, es = _tail_measures(np.sort(np.concatenate(groups)), p)
    estimates = np.array([_tail_measures(np.sort(g), p) for g in groups])
    scale = 1.0 / math.sqrt(len(groups))
    var_se, es_se = (float(np.std(estimates[:, i], ddof=1) * scale) for i in (0, 1))
    logger.debug("MC risk at p=%.4g from %d samples: var=%.6g es=%.6g", p, n_total, var, es)
    return RiskReport(p=p, var=var, es=es, method=RiskMethod.MONTE_CARLO, var_std_err=var_se, es_std_err=es_se)


# --- 5. PROBABILITY PLOT ---

def probability_plot_scores(data: Sequence[float], params: NsvhParams,
                            standardize: str = Standardization.SAMPLE) -> pd.DataFrame:
    """
    Per ordered observation: z0 the normal plotting position, z1 the
    standardized value, z2 = N^{-1}(cdf(x)) under the fitted S_U model.
    z1 uses the sample mean and deviation, or F_bar_T and sqrt(mu2) of the
    model with standardize="model".
    """
    if standardize not in (Standardization.SAMPLE, Standardization.MODEL):
        raise ValidationError(f"unknown standardization '{standardize}'", field="standardize")
    values = np.sort(np.asarray(data, dtype=float))
    n = len(values)
    if n < 2:
        raise InsufficientDataError("a probability plot needs at least 2 observations", n=n)

    positions = (np.arange(1, n + 1) - 0.5) / n
    mean = float(np.mean(values))
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    if std == 0 or values[0] == values[-1]:
        raise ValidationError("zero variance: data are constant", field="data")
    if standardize == Standardization.MODEL:
        summary = moment_service.central_moments(params)
        mean, std = summary.mean, math.sqrt(summary.mu2)
    return pd.DataFrame({
        "x": values,
        "z0": norm_quantile(positions),
        "z1": (values - mean) / std,
        "z2": -np.asarray(analytic_service.d_score(values, params)),
    })
