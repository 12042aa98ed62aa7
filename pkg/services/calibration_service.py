# services/calibration_service.py
"""
Smile calibration of (sigma0, alpha, rho) for lambda = 0 (Hagan normal vol)
or lambda = 1 (closed-form price inverted to a normal vol).

Quotes are offsets K - F_bar_T from the forward; price quotes are turned
into normal vols once, before solving.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from exceptions import InsufficientDataError, NoSolutionError, UnsupportedLambdaError, ValidationError
from models import CalibrationResult, NormalVolQuote, NsvhParams, OptionSide, QuoteKind, SmileQuote
from services import analytic_service, sabr_service

logger = logging.getLogger(__name__)

RHO_BOUND = 1.0 - 1e-6
ALPHA_FLOOR = 1e-8
FLAT_SMILE_ALPHA = 1e-6
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 200


def _check_lambda(lam: float):
    if lam not in (0, 1):
        raise UnsupportedLambdaError("smile calibration supports lambda 0 or 1", lam=lam)


def build_params(sigma0: float, alpha: float, rho: float, lam: float, forward: float, t_expiry: float) -> NsvhParams:
    """Parameters whose mean F_bar_T sits at `forward`."""
    if lam == 0:
        return NsvhParams(sigma0=sigma0, alpha=alpha, rho=rho, lam=0.0, f0=forward, t_expiry=t_expiry)
    return NsvhParams.from_mean(sigma0, alpha, rho, lam, forward, t_expiry)


# --- 1. MODEL VOLS ---

def _su_normal_vol(params: NsvhParams, strike: float) -> float:
    forward = params.mean
    # out-of-the-money side keeps the time value away from the intrinsic floor
    is_call = strike >= forward
    price = analytic_service.option_price(strike, is_call, params)
    if price <= 0:
        raise NoSolutionError("model price underflows to zero in the far wing",
                              strike=float(strike), price=float(price))
    return sabr_service.implied_normal_vol(price, forward, strike, params.t_expiry, is_call)


def model_normal_vols(params: NsvhParams, strikes: Sequence[float]) -> np.ndarray:
    """Model normal vols at absolute strikes for lambda 0 or 1."""
    _check_lambda(params.lam)
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if params.lam == 0:
        return np.atleast_1d(sabr_service.hagan_normal_vol(params, strikes))
    return np.array([_su_normal_vol(params, k) for k in strikes])


def _trial_vols(params: NsvhParams, strikes: np.ndarray, underflows: List[float]) -> np.ndarray:
    """model_normal_vols for a solver trial point; an underflowing strike counts as vol 0 and is recorded."""
    if params.lam == 0:
        return model_normal_vols(params, strikes)
    vols = np.empty(len(strikes))
    for i, strike in enumerate(strikes):
        try:
            vols[i] = _su_normal_vol(params, strike)
        except NoSolutionError as e:
            logger.warning("trial sigma0=%.6g alpha=%.6g rho=%.6g: %s at strike %.6g",
                           params.sigma0, params.alpha, params.rho, e.message, strike)
            underflows.append(float(strike))
            vols[i] = 0.0
    return vols


def smile_curve(params: NsvhParams, strikes: Sequence[float], lam: Optional[float] = None) -> List[NormalVolQuote]:
    """Model-implied smile; a point that cannot be inverted carries its error instead of a vol."""
    if lam is not None and lam != params.lam:
        params = params.with_lambda(lam)
    _check_lambda(params.lam)

    curve = []
    for strike in np.atleast_1d(np.asarray(strikes, dtype=float)):
        try:
            vol = float(model_normal_vols(params, [strike])[0])
            curve.append(NormalVolQuote(strike=float(strike), normal_vol=vol))
        except NoSolutionError as e:
            logger.warning("smile point at strike %.6g not invertible: %s", strike, e.message)
            curve.append(NormalVolQuote(strike=float(strike), normal_vol=float("nan"), error=e.message))
    return curve


# --- 2. INPUT PREPARATION ---

def quotes_to_vols(quotes: Sequence[SmileQuote], forward: float,
                   t_expiry: float) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """(strikes, normal vols, diagnostics); non-invertible price quotes are dropped with a diagnostic."""
    strikes, vols, diagnostics = [], [], []
    for i, quote in enumerate(quotes):
        strike = forward + quote.strike_offset
        if quote.kind == QuoteKind.NORMAL_VOL:
            strikes.append(strike)
            vols.append(quote.value)
            continue
        try:
            vol = sabr_service.implied_normal_vol(quote.value, forward, strike, t_expiry,
                                                  quote.option_side == OptionSide.CALL)
        except NoSolutionError as e:
            diagnostics.append(f"quote {i} rejected: {e.message}")
            logger.warning("quote %d at offset %.6g rejected: %s", i, quote.strike_offset, e.message)
            continue
        strikes.append(strike)
        vols.append(vol)
    return np.array(strikes), np.array(vols), diagnostics


def initial_guess(strike_offsets: Sequence[float], vols: Sequence[float]) -> Tuple[float, float, float]:
    """
    Quadratic fit v0 + b x + c x^2 in x = K - F matched to the ATM expansion
    of the normal vol: sigma0 = v0, alpha^2 = 6 (sigma0 c + b^2), rho = 2b/alpha.
    """
    x = np.asarray(strike_offsets, dtype=float)
    v = np.asarray(vols, dtype=float)
    c, b, v0 = np.polyfit(x, v, 2)

    sigma0 = v0 if v0 > 0 else float(np.mean(v))
    alpha = math.sqrt(max(6.0 * (sigma0 * c + b * b), 0.0))
    alpha = max(alpha, ALPHA_FLOOR)
    rho = float(np.clip(2.0 * b / alpha, -0.99, 0.99))
    return float(sigma0), alpha, rho


# --- 3. CALIBRATION ---

def _unpack(theta: np.ndarray) -> Tuple[float, float, float]:
    sigma0 = math.exp(theta[0])
    alpha = math.exp(theta[1])
    rho = max(-RHO_BOUND, min(RHO_BOUND, math.tanh(theta[2])))
    return sigma0, alpha, rho


def calibrate_smile(quotes: Sequence[SmileQuote], forward: float, t_expiry: float, lam: float,
                    tolerance: float = DEFAULT_TOLERANCE, max_iterations: int = DEFAULT_MAX_ITERATIONS,
                    start: Optional[Tuple[float, float, float]] = None) -> CalibrationResult:
    """
    Solves model_vol(K_i) = quote_i in the transformed coordinates
    (log sigma0, log alpha, atanh rho) with damped Gauss-Newton
    (Levenberg-Marquardt, finite-difference Jacobian). Three quotes give a
    square system; more quotes a least-squares fit on the same residuals.
    """
    _check_lambda(lam)
    if not (math.isfinite(forward) and math.isfinite(t_expiry) and t_expiry > 0):
        raise ValidationError("forward must be finite and t_expiry positive")

    offsets = [q.strike_offset for q in quotes]
    if len(set(offsets)) < 3:
        raise InsufficientDataError("calibration needs quotes at 3 or more distinct strikes", n=len(set(offsets)))

    strikes, target, diagnostics = quotes_to_vols(quotes, forward, t_expiry)
    if len(set(strikes.tolist())) < 3:
        raise NoSolutionError("fewer than 3 invertible quotes remain", diagnostics=diagnostics)

    sigma0, alpha, rho = start or initial_guess(strikes - forward, target)
    logger.debug("initial guess sigma0=%.6g alpha=%.6g rho=%.6g", sigma0, alpha, rho)
    underflows: List[float] = []
    theta0 = np.array([math.log(sigma0), math.log(max(alpha, ALPHA_FLOOR)), math.atanh(rho)])

    def residuals(theta):
        params = build_params(*_unpack(theta), lam, forward, t_expiry)
        return _trial_vols(params, strikes, underflows) - target

    n_params = len(theta0)
    fit = optimize.least_squares(residuals, theta0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                 max_nfev=max_iterations * (n_params + 1))
    sigma0, alpha, rho = _unpack(fit.x)
    params = build_params(sigma0, alpha, rho, lam, forward, t_expiry)
    underflows.clear()
    final = residuals(fit.x)
    if underflows:
        diagnostics.append(f"model price underflows at {len(underflows)} strike(s); their vol is taken as 0")

    iterations = max(1, math.ceil(fit.nfev / (n_params + 1)))
    converged = bool(np.max(np.abs(final)) <= tolerance)
    if alpha < FLAT_SMILE_ALPHA:
        diagnostics.append(f"alpha {alpha:.3g} at its lower boundary: the smile has no curvature")
    if abs(rho) >= RHO_BOUND:
        diagnostics.append("rho at its bound")
    if not converged:
        logger.warning("calibration stopped after %d iterations, max residual %.3g", iterations,
                       float(np.max(np.abs(final))))
    return CalibrationResult(params=params, residuals=final.tolist(), iterations=iterations,
                             converged=converged, diagnostics=diagnostics)
