# services/moment_service.py
"""
Central moments of the NSVh distribution for any lambda, and moment
matching for lambda = 0 (normal SABR) and lambda = 1 (Johnson S_U).

Canonical moments are scale-free: mu_n = (sigma0/alpha)^n * canonical_n.
The fitters work in x = w - 1 = e^S - 1 so that small S keeps precision.
"""
import logging
import math
from typing import Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from exceptions import InfeasibleMomentsError, InsufficientDataError, ValidationError
from models import MomentSummary, NsvhParams, mean_shift
from utils.numerics import stable_exp_ratio

logger = logging.getLogger(__name__)

OUTER_RTOL = 1e-12
INNER_XTOL = 1e-13
MAX_EXPANSIONS = 200
MAX_ITERATIONS = 200
# below this |rho| = 1 edge the skewness is treated as zero
SYMMETRIC_X = 1e-12


# --- 1. CLOSED-FORM MOMENTS ---

def canonical_moments(s_var: float, rho: float, lam: float) -> Tuple[float, float, float]:
    """Canonical central moments (mu2, mu3, mu4) at S = s_var."""
    w = math.exp(s_var)
    x = math.expm1(s_var)
    rho_star_sq = max(1.0 - rho * rho, 0.0)

    def ratio(k):
        # (w^{k+lam} - 1)/(k+lam); removable singularity at k + lam = 0
        return stable_exp_ratio(k + lam, s_var)

    e1, e3, e5 = ratio(1.0), ratio(3.0), ratio(5.0)
    w_lam = w ** lam

    mu2 = rho * rho * w_lam * x + rho_star_sq * e1
    mu3 = rho ** 3 * w_lam ** 1.5 * x * x * (w + 2.0) \
        + 3.0 * rho * rho_star_sq * math.sqrt(w_lam) * (e3 - e1)
    mu4 = rho ** 4 * w_lam ** 2 * x * x * (w ** 4 + 2.0 * w ** 3 + 3.0 * w * w - 3.0) \
        + 6.0 * rho * rho * rho_star_sq * w_lam * (w * e5 - 2.0 * e3 + e1) \
        + 1.5 * rho_star_sq * rho_star_sq * (-w ** (1.0 + lam) * e5 + (w ** (3.0 + lam) + 1.0) * e3 - e1)
    return mu2, mu3, mu4


def skew_exkurt(s_var: float, rho: float, lam: float) -> Tuple[float, float]:
    mu2, mu3, mu4 = canonical_moments(s_var, rho, lam)
    if not mu2 > 0:
        raise ValidationError("skewness and kurtosis need S > 0", field="s_var")
    return mu3 / mu2 ** 1.5, mu4 / (mu2 * mu2) - 3.0


def central_moments(params: NsvhParams) -> MomentSummary:
    """Mean, variance, skewness and excess kurtosis of F_T."""
    if params.alpha == 0:
        return MomentSummary(mean=params.f0, mu2=params.sigma0 ** 2 * params.t_expiry, skew=0.0, exkurt=0.0)

    mu2, mu3, mu4 = canonical_moments(params.s_var, params.rho, params.lam)
    return MomentSummary(mean=params.mean,
                         mu2=params.scale ** 2 * mu2,
                         skew=mu3 / mu2 ** 1.5,
                         exkurt=mu4 / (mu2 * mu2) - 3.0)


def normal_sabr_skew_exkurt(x: float, rho: float) -> Tuple[float, float]:
    """Reduced lambda = 0 forms in x = w - 1."""
    w = 1.0 + x
    poly = w ** 3 + 3.0 * w * w + 6.0 * w + 5.0
    return rho * (w + 2.0) * math.sqrt(x), x * ((4.0 * rho * rho + 1.0) / 5.0 * poly + 1.0)


# --- 2. BRACKETS ---

def _boundary_x(skew: float) -> float:
    """Root of s^2 = x (x + 3)^2, the |rho| = 1 edge, as 4 sinh^2(acosh(1 + s^2/2)/6)."""
    half_sq = 0.5 * skew * skew
    acosh_arg = math.log1p(half_sq + math.sqrt(half_sq * (half_sq + 2.0)))
    return 4.0 * math.sinh(acosh_arg / 6.0) ** 2


def _kurtosis_curve(x: float, skew: float) -> float:
    """f(w): excess kurtosis of the lambda = 0 model at skew s, with rho eliminated."""
    w = 1.0 + x
    poly = w ** 3 + 3.0 * w * w + 6.0 * w + 5.0
    return 4.0 * skew * skew * poly / (5.0 * (w + 2.0) ** 2) + x * (1.0 + poly / 5.0)


def _expand(x_hi: float, below) -> float:
    """Doubles x_hi until below(x_hi) is False."""
    x_hi = max(x_hi, 1e-8)
    for _ in range(MAX_EXPANSIONS):
        if not below(x_hi):
            return x_hi
        x_hi *= 2.0
    raise InfeasibleMomentsError("excess kurtosis beyond the attainable range", x_upper=x_hi)


def _bracket_x(skew: float, exkurt: float) -> Tuple[float, float]:
    x_m = _boundary_x(skew)
    w_m = 1.0 + x_m
    poly = w_m ** 3 + 3.0 * w_m * w_m + 6.0 * w_m + 5.0
    x_upper = (exkurt - 0.8 * skew * skew * poly / (w_m + 2.0) ** 2) / (1.0 + poly / 5.0)
    x_upper = _expand(max(x_upper, x_m), lambda x: _kurtosis_curve(x, skew) < exkurt)
    return x_m, x_upper


def bracket_w(skew: float, exkurt: float) -> Tuple[float, float]:
    """
    (w_m, w_M) enclosing the lambda = 0 root. w_m is the |rho| = 1 edge,
    w_m = 2 cosh(acosh(1 + s^2/2)/3) - 1; w_M is the plug-in bound,
    doubled in w - 1 until f(w_M) >= kappa.
    """
    if not (math.isfinite(skew) and math.isfinite(exkurt)):
        raise ValidationError("skew and exkurt must be finite")
    x_m, x_upper = _bracket_x(skew, exkurt)
    return 1.0 + x_m, 1.0 + x_upper


# --- 3. FITTERS ---

def _degenerate_fit(target: MomentSummary, t_expiry: float, lam: float) -> NsvhParams:
    logger.info("normal target moments: returning the alpha = 0 limit")
    return NsvhParams(sigma0=math.sqrt(target.mu2 / t_expiry), alpha=0.0, rho=0.0,
                      lam=lam, f0=target.mean, t_expiry=t_expiry)


def _assemble(target: MomentSummary, t_expiry: float, s_var: float, rho: float, lam: float) -> NsvhParams:
    rho = min(max(rho, -1.0), 1.0)
    mu2_canonical = canonical_moments(s_var, rho, lam)[0]
    alpha = math.sqrt(s_var / t_expiry)
    sigma0 = alpha * math.sqrt(target.mu2 / mu2_canonical)
    f0 = target.mean - mean_shift(sigma0, alpha, rho, lam, t_expiry)
    return NsvhParams(sigma0=sigma0, alpha=alpha, rho=rho, lam=lam, f0=f0, t_expiry=t_expiry)


def _infeasible(target: MomentSummary, t_expiry: float, x_edge: float, min_exkurt: float, lam: float):
    boundary = None
    if x_edge > 0:
        edge = _assemble(target, t_expiry, math.log1p(x_edge), math.copysign(1.0, target.skew), lam)
        boundary = edge.to_dict()
    raise InfeasibleMomentsError(
        f"excess kurtosis {target.exkurt:.6g} is below the attainable minimum {min_exkurt:.6g}",
        min_exkurt=min_exkurt, boundary=boundary)


def _check_expiry(t_expiry: float):
    if not (math.isfinite(t_expiry) and t_expiry > 0):
        raise ValidationError("t_expiry must be positive", field="t_expiry")


def fit_normal_sabr(target: MomentSummary, t_expiry: float) -> NsvhParams:
    """Moment matching for lambda = 0 through the univariate root of f(w) = kappa."""
    _check_expiry(t_expiry)
    skew, exkurt = target.skew, target.exkurt
    if skew == 0 and exkurt == 0:
        return _degenerate_fit(target, t_expiry, 0.0)

    x_m = _boundary_x(skew)
    min_exkurt = _kurtosis_curve(x_m, skew)
    tolerance = OUTER_RTOL * (1.0 + abs(exkurt))
    if min_exkurt > exkurt + tolerance:
        _infeasible(target, t_expiry, x_m, min_exkurt, 0.0)

    if min_exkurt >= exkurt:
        x_star = x_m
    else:
        x_lo, x_hi = _bracket_x(skew, exkurt)
        x_star = optimize.brentq(lambda x: _kurtosis_curve(x, skew) - exkurt, x_lo, x_hi,
                                 xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITERATIONS)

    rho = skew / ((x_star + 3.0) * math.sqrt(x_star)) if x_star > 0 else 0.0
    logger.debug("lambda=0 fit: w*=%.15g rho=%.15g", 1.0 + x_star, rho)
    return _assemble(target, t_expiry, math.log1p(x_star), rho, 0.0)


def _rho_for_skew(s_var: float, skew: float, lam: float) -> float:
    """Inner solve: the rho in [-1, 1] giving canonical skewness `skew` at S."""
    if skew == 0:
        return 0.0
    edge = math.copysign(1.0, skew)
    if abs(skew) >= abs(skew_exkurt(s_var, edge, lam)[0]):
        return edge
    return optimize.brentq(lambda r: skew_exkurt(s_var, r, lam)[0] - skew, -1.0, 1.0,
                           xtol=INNER_XTOL, maxiter=MAX_ITERATIONS)


def _symmetric_su_s_var(exkurt: float) -> float:
    """
    S of the rho = 0, lambda = 1 fit. With v = w^2 the excess kurtosis
    is (v - 1)(v + 3)/2, so v - 1 = 2 kappa / (sqrt(4 + 2 kappa) + 2).
    """
    v_minus_1 = 2.0 * exkurt / (math.sqrt(4.0 + 2.0 * exkurt) + 2.0)
    return 0.5 * math.log1p(v_minus_1)


def fit_su(target: MomentSummary, t_expiry: float) -> NsvhParams:
    """
    Moment matching for lambda = 1: rho solves the skewness equation at each
    candidate S and the outer solve matches the excess kurtosis along that curve.
    """
    _check_expiry(t_expiry)
    skew, exkurt = target.skew, target.exkurt
    if skew == 0 and exkurt == 0:
        return _degenerate_fit(target, t_expiry, 1.0)

    # at rho = +/-1 the skewness is lambda-free, so the lower edge is shared
    x_lo = _boundary_x(skew)
    tolerance = OUTER_RTOL * (1.0 + abs(exkurt))
    if x_lo < SYMMETRIC_X:
        if exkurt < -tolerance:
            raise InfeasibleMomentsError("zero skewness needs non-negative excess kurtosis", min_exkurt=0.0)
        s_var = _symmetric_su_s_var(max(exkurt, 0.0))
        if s_var == 0:
            return _degenerate_fit(target, t_expiry, 1.0)
        rho = 0.0 if skew == 0 else _rho_for_skew(s_var, skew, 1.0)
        logger.debug("lambda=1 symmetric fit: S=%.15g rho=%.3g", s_var, rho)
        return _assemble(target, t_expiry, s_var, rho, 1.0)

    def kurtosis_along(x):
        s_var = math.log1p(x)
        return skew_exkurt(s_var, _rho_for_skew(s_var, skew, 1.0), 1.0)[1]

    min_exkurt = kurtosis_along(x_lo)
    if min_exkurt > exkurt + tolerance:
        _infeasible(target, t_expiry, x_lo, min_exkurt, 1.0)

    if min_exkurt >= exkurt:
        x_star = x_lo
    else:
        x_hi = _expand(_bracket_x(skew, exkurt)[1], lambda x: kurtosis_along(x) < exkurt)
        x_star = optimize.brentq(lambda x: kurtosis_along(x) - exkurt, x_lo, x_hi,
                                 xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITERATIONS)

    s_var = math.log1p(x_star)
    rho = _rho_for_skew(s_var, skew, 1.0)
    logger.debug("lambda=1 fit: S=%.15g rho=%.15g", s_var, rho)
    return _assemble(target, t_expiry, s_var, rho, 1.0)


# --- 4. SAMPLES ---

def sample_moments(data: Sequence[float]) -> MomentSummary:
    """Biased (denominator n) sample mean, variance, skewness and excess kurtosis."""
    values = np.asarray(data, dtype=float)
    if values.ndim != 1 or len(values) < 4:
        raise InsufficientDataError("at least 4 observations are needed", n=int(values.size))
    if not np.all(np.isfinite(values)):
        raise ValidationError("data must be finite")

    mean = float(np.mean(values))
    mu2 = float(np.mean((values - mean) ** 2))
    if mu2 == 0 or np.all(values == values[0]):
        raise InfeasibleMomentsError("zero variance: data are constant", min_exkurt=None)
    return MomentSummary(mean=mean, mu2=mu2,
                         skew=float(stats.skew(values, bias=True)),
                         exkurt=float(stats.kurtosis(values, fisher=True, bias=True)))
