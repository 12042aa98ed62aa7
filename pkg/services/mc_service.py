# services/mc_service.py
"""
Exact Monte-Carlo simulation of the NSVh model for any lambda.

Three standard normals (X1, Y1, Z1) make one triplet:
    Z_S = Z1 sqrt(S),  R_S^2 = (X1^2 + Y1^2) S,  (cos, sin) = (X1, Y1)/sqrt(X1^2 + Y1^2)
and each triplet yields two terminal samples, one per projection. The two
samples share Z_S and R_S, so standard errors are computed over groups of
whole triplets; `independent=True` keeps only the cosine projection.
"""
import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from exceptions import ValidationError
from models import McEstimate, NsvhParams, PathBatch, TerminalBatch, TripletBatch, TripletDraw
from utils.numerics import phi
from utils.streams import map_streams, pairwise_sum

logger = logging.getLogger(__name__)


# --- 1. TRIPLETS ---

def _normals(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    draws = rng.standard_normal((n, 3))
    # X1 = Y1 = 0 has probability zero; redraw those rows to keep the angle defined
    degenerate = (draws[:, 0] == 0.0) & (draws[:, 1] == 0.0)
    while np.any(degenerate):
        draws[degenerate] = rng.standard_normal((int(degenerate.sum()), 3))
        degenerate = (draws[:, 0] == 0.0) & (draws[:, 1] == 0.0)
    return draws[:, 0], draws[:, 1], draws[:, 2]


def _to_triplets(x: np.ndarray, y: np.ndarray, z1: np.ndarray, s_var: float) -> TripletBatch:
    radius_sq = x * x + y * y
    radius = np.sqrt(radius_sq)
    return TripletBatch(z=z1 * math.sqrt(s_var), r_sq=radius_sq * s_var,
                        cos_theta=x / radius, sin_theta=y / radius)


def draw_triplets(rng: np.random.Generator, n: int, s_var: float) -> TripletBatch:
    return _to_triplets(*_normals(rng, n), s_var)


def draw_triplet(rng: np.random.Generator, s_var: float) -> TripletDraw:
    """Consumes exactly three standard normals (more only on a probability-zero redraw)."""
    return draw_triplets(rng, 1, s_var)[0]


def _hyperbolic_step(triplets: TripletBatch, drift_sq: float, s_var: float) -> Tuple[np.ndarray, np.ndarray]:
    """Drifted Z' = Z_S + ((lambda-1)/2) S and phi(Z', sqrt(R^2 + Z'^2))."""
    z_drift = triplets.z + drift_sq * s_var
    distance = np.sqrt(triplets.r_sq + z_drift * z_drift)
    return z_drift, phi(z_drift, distance)


# --- 2. TERMINAL SAMPLES ---

def _group_terminal(params: NsvhParams, n: int, rng: np.random.Generator,
                    independent: bool) -> Tuple[np.ndarray, np.ndarray]:
    x, y, z1 = _normals(rng, n)

    if params.alpha == 0:
        # arithmetic Brownian motion limit
        std = params.sigma0 * math.sqrt(params.t_expiry)
        f_cos = params.f0 + std * (params.rho * z1 + params.rho_star * x)
        if independent:
            return f_cos, np.full(n, params.sigma0)
        f_sin = params.f0 + std * (params.rho * z1 + params.rho_star * y)
        return np.concatenate([f_cos, f_sin]), np.full(2 * n, params.sigma0)

    s_var = params.s_var
    triplets = _to_triplets(x, y, z1, s_var)
    z_drift, radius = _hyperbolic_step(triplets, 0.5 * (params.lam - 1.0), s_var)

    base = params.rho * (np.exp(z_drift) - math.exp(0.5 * params.lam * s_var))
    vol = params.sigma0 * np.exp(z_drift)
    f_cos = params.mean + params.scale * (base + params.rho_star * triplets.cos_theta * radius)
    if independent:
        return f_cos, vol
    f_sin = params.mean + params.scale * (base + params.rho_star * triplets.sin_theta * radius)
    return np.concatenate([f_cos, f_sin]), np.concatenate([vol, vol])


def _check_groups(n_triplets: int, n_groups: int, min_groups: int = 1):
    if n_triplets < 1:
        raise ValidationError("n_triplets must be positive", field="n_triplets")
    if n_groups < min_groups:
        raise ValidationError(f"n_groups must be at least {min_groups}", field="n_groups")
    if n_triplets % n_groups:
        raise ValidationError("n_triplets must be divisible by n_groups", field="n_groups")


def terminal_samples(params: NsvhParams, n_triplets: int, seed: int, n_groups: int = 1,
                     independent: bool = False, threads: int = 1) -> TerminalBatch:
    """Exact draws of (F_T, sigma_T); group g uses stream g of `seed`."""
    _check_groups(n_triplets, n_groups)
    per_group = n_triplets // n_groups

    parts = map_streams(lambda rng, g: _group_terminal(params, per_group, rng, independent),
                        seed, n_groups, threads)
    f_t = np.concatenate([p[0] for p in parts])
    sigma_t = np.concatenate([p[1] for p in parts])
    logger.debug("drew %d terminal samples in %d groups", len(f_t), n_groups)
    return TerminalBatch(f_t=f_t, sigma_t=sigma_t, n_groups=n_groups)


# --- 3. PATHS ---

def _check_grid(time_grid: Sequence[float]) -> np.ndarray:
    times = np.asarray(time_grid, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValidationError("time grid must be a non-empty list", field="time_grid")
    if times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise ValidationError("time grid must be strictly increasing and start after 0", field="time_grid")
    return times


def _group_paths(params: NsvhParams, times: np.ndarray, n_paths: int, rng: np.random.Generator,
                 independent: bool) -> Tuple[np.ndarray, np.ndarray]:
    n_draws = n_paths if independent else n_paths // 2
    f = np.full(n_paths, params.f0)
    sigma = np.full(n_paths, params.sigma0)
    f_out = np.empty((n_paths, len(times)))
    sigma_out = np.empty((n_paths, len(times)))
    drift = 0.5 * (params.lam - 1.0)

    previous = 0.0
    for j, t in enumerate(times):
        dt = t - previous
        previous = t
        x, y, z1 = _normals(rng, n_draws)

        if params.alpha == 0:
            proj = x if independent else np.concatenate([x, y])
            common = z1 if independent else np.concatenate([z1, z1])
            f = f + sigma * math.sqrt(dt) * (params.rho * common + params.rho_star * proj)
        else:
            ds = params.alpha * params.alpha * dt
            triplets = _to_triplets(x, y, z1, ds)
            z_drift, radius = _hyperbolic_step(triplets, drift, ds)
            proj = triplets.cos_theta if independent else np.concatenate([triplets.cos_theta, triplets.sin_theta])
            growth = np.exp(z_drift)
            if not independent:
                radius = np.concatenate([radius, radius])
                growth = np.concatenate([growth, growth])
            # F_{t+dt} - F_t = (sigma_t/alpha)(rho (e^{Z'} - 1) + rho_* proj phi)
            f = f + (sigma / params.alpha) * (params.rho * (growth - 1.0) + params.rho_star * proj * radius)
            sigma = sigma * growth

        f_out[:, j] = f
        sigma_out[:, j] = sigma
    return f_out, sigma_out


def simulate_paths(params: NsvhParams, time_grid: Sequence[float], n_paths: int, seed: int,
                   n_groups: int = 1, independent: bool = False, threads: int = 1) -> PathBatch:
    """
    Multi-step exact simulation; every step is an exact transition, so a
    one-step grid reproduces terminal_samples draw for draw.
    """
    times = _check_grid(time_grid)
    _check_groups(n_paths, n_groups)
    per_group = n_paths // n_groups
    if not independent and per_group % 2:
        raise ValidationError("paired simulation needs an even number of paths per group", field="n_paths")

    parts = map_streams(lambda rng, g: _group_paths(params, times, per_group, rng, independent),
                        seed, n_groups, threads)
    return PathBatch(times=times,
                     f=np.concatenate([p[0] for p in parts]),
                     sigma=np.concatenate([p[1] for p in parts]))


# --- 4. ESTIMATORS ---

def group_estimate(group_values: Sequence[float]) -> McEstimate:
    """Mean and standard error over statistically independent group averages."""
    values = np.asarray(group_values, dtype=float)
    n_groups = len(values)
    mean = pairwise_sum(values) / n_groups
    std_err = float(np.std(values, ddof=1) / math.sqrt(n_groups)) if n_groups > 1 else 0.0
    return McEstimate(value=mean, std_err=std_err, n_groups=n_groups)


def price_strip_mc(params: NsvhParams, strikes: Sequence[float], is_call: bool, n_triplets: int,
                   n_groups: int, seed: int, independent: bool = False, threads: int = 1) -> List[McEstimate]:
    """Prices several strikes off one shared sample."""
    _check_groups(n_triplets, n_groups, min_groups=2)
    batch = terminal_samples(params, n_triplets, seed, n_groups, independent, threads)
    sign = 1.0 if is_call else -1.0

    estimates = []
    for strike in np.atleast_1d(np.asarray(strikes, dtype=float)):
        means = [np.mean(np.maximum(sign * (g - strike), 0.0)) for g in batch.groups()]
        estimates.append(group_estimate(means))
    return estimates


def price_option_mc(params: NsvhParams, strike: float, is_call: bool, n_triplets: int, n_groups: int,
                    seed: int, independent: bool = False, threads: int = 1) -> McEstimate:
    return price_strip_mc(params, [strike], is_call, n_triplets, n_groups, seed, independent, threads)[0]


def central_moments_mc(params: NsvhParams, n_triplets: int, n_groups: int, seed: int,
                       threads: int = 1) -> Dict[str, McEstimate]:
    """Batched estimates of E[(F_T - F_bar_T)^n], n = 2, 3, 4, around the exact mean."""
    _check_groups(n_triplets, n_groups, min_groups=2)
    batch = terminal_samples(params, n_triplets, seed, n_groups, threads=threads)
    centred = [g - params.mean for g in batch.groups()]
    return {f"mu{k}": group_estimate([np.mean(c ** k) for c in centred]) for k in (2, 3, 4)}
