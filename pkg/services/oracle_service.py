# services/oracle_service.py
"""
Independent oracles for the exact simulation and the moment formulas:
the H^3 heat kernel, an Euler discretisation of hyperbolic Brownian motion,
conditional and unconditional moments of the time-changed Brownian motion,
and `run_suite`, which runs them as pass/fail checks.

Hyperbolic BM here starts at (0, 0, 1) with dx = z dX, dy = z dY and
dz/z = dZ + (1/2 + mu) dt, so z_t = exp(Z_t + mu t) exactly.
"""
import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate, special, stats

from exceptions import ValidationError
from models import NsvhParams
from services import analytic_service, mc_service, moment_service, risk_service
from utils.numerics import phi, stable_exp_ratio
from utils.streams import map_streams, stream_rng

logger = logging.getLogger(__name__)

MAX_EULER_STEP = 1e-2
M_SERIES_SWITCH = 1e-5
KS_LEVEL = 0.01
# excess grid reaches EXCESS_TAIL * t, where the tail mass is e^{-40}
EXCESS_TAIL = 80.0
# Euler stream count; never tied to the worker count
EULER_GROUPS = 16

SuiteRow = Tuple[str, bool, str]


# --- 1. HEAT KERNEL ---

def heat_kernel_h3(t: float, d):
    """p3(t, D) = (2 pi t)^{-3/2} (D/sinh D) e^{-(t^2 + D^2)/(2t)}, D/sinh D -> 1 at D = 0."""
    if not t > 0:
        raise ValidationError("t must be positive", field="t")
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise ValidationError("distance must be non-negative", field="d")

    small = d_arr < 1e-8
    safe = np.where(small, 1.0, d_arr)
    ratio = np.where(small, 1.0, safe / np.sinh(safe))
    density = (2.0 * math.pi * t) ** -1.5 * ratio * np.exp(-(t * t + d_arr * d_arr) / (2.0 * t))
    return float(density) if d_arr.ndim == 0 else density


def heat_kernel_radial_mass(t: float) -> float:
    """Integral of p3 over H^3 using the shell measure 4 pi sinh^2 D dD."""
    if not t > 0:
        raise ValidationError("t must be positive", field="t")
    const = (2.0 * math.pi * t) ** -1.5 * 4.0 * math.pi * math.exp(-0.5 * t)

    def shell(d):
        # D sinh D e^{-D^2/2t} without overflowing sinh
        gauss = -d * d / (2.0 * t)
        return 0.5 * d * (math.exp(d + gauss) - math.exp(-d + gauss))

    upper = t + 40.0 * math.sqrt(t) + 10.0
    mass, _ = integrate.quad(shell, 0.0, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
    return const * mass


# --- 2. GEOMETRY ---

def hyperbolic_distance(r_sq, z):
    """Geodesic distance from (0, 0, 1): cosh D = 1 + (r^2 + (z - 1)^2)/(2z)."""
    r_sq = np.asarray(r_sq, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValidationError("z must be positive in the upper half-space", field="z")
    u = (r_sq + (z - 1.0) ** 2) / (2.0 * z)
    # acosh(1 + u) = log1p(u + sqrt(u (u + 2)))
    distance = np.log1p(u + np.sqrt(u * (u + 2.0)))
    return float(distance) if distance.ndim == 0 else distance


def conditional_distance_pdf(d, z: float, t: float):
    """Density of the distance D at time t given the drifted log-height z: (D/t) e^{-(D^2 - z^2)/(2t)}, D >= |z|."""
    d_arr = np.asarray(d, dtype=float)
    density = np.where(d_arr >= abs(z), d_arr / t * np.exp(-(d_arr * d_arr - z * z) / (2.0 * t)), 0.0)
    return float(density) if d_arr.ndim == 0 else density


def excess_cdf_table(t: float, n_grid: int = 4001) -> Tuple[np.ndarray, np.ndarray]:
    """
    (e, F(e)) for the excess D^2 - z^2 given z, integrated from conditional_distance_pdf.
    The excess law does not depend on z, so z = 0 is used.
    """
    if not t > 0:
        raise ValidationError("t must be positive", field="t")
    e_grid = np.linspace(0.0, EXCESS_TAIL * t, n_grid)
    d_grid = np.sqrt(e_grid)
    pieces = [integrate.quad(conditional_distance_pdf, a, b, args=(0.0, t), epsabs=1e-14)[0]
              for a, b in zip(d_grid[:-1], d_grid[1:])]
    return e_grid, np.concatenate([[0.0], np.cumsum(pieces)])


# --- 3. BRUTE-FORCE AND CLOSED-FORM DRAWS ---

def _euler_group(mu: float, t_end: float, n_steps: int, n_paths: int,
                 rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    dt = t_end / n_steps
    root_dt = math.sqrt(dt)
    x = np.zeros(n_paths)
    y = np.zeros(n_paths)
    log_z = np.zeros(n_paths)
    for _ in range(n_steps):
        dx, dy, dz = rng.standard_normal((3, n_paths)) * root_dt
        z = np.exp(log_z)
        x += z * dx
        y += z * dy
        log_z += dz + mu * dt
    return x * x + y * y, np.exp(log_z)


def euler_hyperbolic_bm(mu: float, t_end: float, n_steps: int, n_paths: int, seed: int,
                        n_groups: int = 1, threads: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    (r^2, z) at t_end; Euler steps for x and y, exact log-steps for z.
    Paths are split over n_groups streams, so the draws depend on n_groups but not on threads.
    """
    if not t_end > 0 or n_steps < 1 or n_paths < 1:
        raise ValidationError("t_end, n_steps and n_paths must be positive")
    if t_end / n_steps > MAX_EULER_STEP:
        raise ValidationError(f"Euler step must not exceed {MAX_EULER_STEP}", field="n_steps")
    if not 1 <= n_groups <= n_paths:
        raise ValidationError("n_groups must lie in [1, n_paths]", field="n_groups")

    base, extra = divmod(n_paths, n_groups)
    sizes = [base + (g < extra) for g in range(n_groups)]
    parts = map_streams(lambda rng, g: _euler_group(mu, t_end, n_steps, sizes[g], rng), seed, n_groups, threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def phi_radius_draws(mu: float, t_end: float, n: int, seed: int, stream: int = 0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form (radius, drifted log-height, cosine projection) from triplets."""
    triplets = mc_service.draw_triplets(stream_rng(seed, stream), n, t_end)
    z_drift = triplets.z + mu * t_end
    distance = np.sqrt(triplets.r_sq + z_drift * z_drift)
    return phi(z_drift, distance), z_drift, triplets.cos_theta


# --- 4. MOMENTS OF THE TIME-CHANGED BM ---

def m_ratio(u, eps):
    """
    m(u, eps) = (N(u+eps) - N(u-eps)) / (2 eps e^{-eps^2/2} n(u)), symmetric in u.
    Evaluated in log space so large |u| does not overflow n(u)^{-1}.
    """
    u = np.abs(np.asarray(u, dtype=float))
    eps = np.asarray(eps, dtype=float)
    series = 1.0 + eps * eps * (u * u + 2.0) / 6.0

    safe_eps = np.where(eps < M_SERIES_SWITCH, 1.0, eps)
    # N(u+e) - N(u-e) = N(e-u) - N(-u-e); the upper tails keep precision for u > 0
    log_hi = special.log_ndtr(safe_eps - u)
    log_lo = special.log_ndtr(-u - safe_eps)
    log_diff = log_hi + np.log(-np.expm1(log_lo - log_hi))
    log_m = log_diff - np.log(2.0 * safe_eps) + 0.5 * safe_eps ** 2 + 0.5 * u * u + 0.5 * math.log(2.0 * math.pi)
    result = np.where(eps < M_SERIES_SWITCH, series, np.exp(log_m))
    return float(result) if result.ndim == 0 else result


def cond_moment2(z, t_end: float):
    """E[X_A^2 | Z' = z] = T e^{z} m(|z|/sqrt T, sqrt T)."""
    z = np.asarray(z, dtype=float)
    root_t = math.sqrt(t_end)
    result = t_end * np.exp(z) * m_ratio(np.abs(z) / root_t, root_t)
    return float(result) if np.ndim(result) == 0 else result


def cond_moment4(z, t_end: float):
    """E[X_A^4 | Z' = z] = 3T e^{2z} (m(u, 2 sqrt T) - cosh(u sqrt T) m(u, sqrt T)), u = |z|/sqrt T."""
    z = np.asarray(z, dtype=float)
    root_t = math.sqrt(t_end)
    u = np.abs(z) / root_t
    inner = m_ratio(u, 2.0 * root_t) - np.cosh(u * root_t) * m_ratio(u, root_t)
    result = 3.0 * t_end * np.exp(2.0 * z) * inner
    return float(result) if np.ndim(result) == 0 else result


def uncond_moments_x(mu: float, s_var: float) -> Tuple[float, float]:
    """(E[X_A^2], E[X_A^4]) for the exponential functional with drift mu up to S = s_var."""
    if s_var < 0:
        raise ValidationError("s_var must be non-negative", field="s_var")
    w = math.exp(s_var)
    e2, e4, e6 = (stable_exp_ratio(k + 2.0 * mu, s_var) for k in (2.0, 4.0, 6.0))
    m2 = e2
    m4 = 1.5 * (-w ** (2.0 + 2.0 * mu) * e6 + (w ** (4.0 + 2.0 * mu) + 1.0) * e4 - e2)
    return m2, m4


def assemble_central_moments(s_var: float, rho: float, lam: float) -> Tuple[float, float, float]:
    """
    Canonical (mu2, mu3, mu4) rebuilt from E[e^{jZ'}], E[e^{jZ'} A] and E[X_A^4],
    with A = int_0^S e^{2Z'_t} dt and Z'_t = Z_t + mu t, mu = (lam - 1)/2.
    """
    mu = 0.5 * (lam - 1.0)
    shift = math.exp(0.5 * lam * s_var)
    rho_star_sq = max(1.0 - rho * rho, 0.0)

    def exp_moment(j):
        return math.exp((j * mu + 0.5 * j * j) * s_var)

    def exp_moment_a(j):
        # E[e^{j Z'_S} A_S] = e^{(j mu + j^2/2) S} (e^{(2 mu + 2j + 2) S} - 1)/(2 mu + 2j + 2)
        return exp_moment(j) * stable_exp_ratio(2.0 * mu + 2.0 * j + 2.0, s_var)

    def centred(k, weight):
        # E[(e^{Z'} - shift)^k * weight(j)] by binomial expansion
        return sum(math.comb(k, j) * (-shift) ** (k - j) * weight(j) for j in range(k + 1))

    y2, y3, y4 = (centred(k, exp_moment) for k in (2, 3, 4))
    a0 = exp_moment_a(0)
    y1a = centred(1, exp_moment_a)
    y2a = centred(2, exp_moment_a)
    x4 = uncond_moments_x(mu, s_var)[1]

    mu2 = rho * rho * y2 + rho_star_sq * a0
    mu3 = rho ** 3 * y3 + 3.0 * rho * rho_star_sq * y1a
    mu4 = rho ** 4 * y4 + 6.0 * rho * rho * rho_star_sq * y2a + rho_star_sq * rho_star_sq * x4
    return mu2, mu3, mu4


# --- 5. SUITE ---

def _check_kernel(log) -> List[SuiteRow]:
    rows = []
    for t in (0.5, 1.0, 2.0):
        mass = heat_kernel_radial_mass(t)
        rows.append((f"kernel_mass_t{t:g}", abs(mass - 1.0) <= 1e-6, f"mass={mass:.12f}"))
    limit = heat_kernel_h3(1.0, 0.0)
    expected = (2.0 * math.pi) ** -1.5 * math.exp(-0.5)
    rows.append(("kernel_origin_limit", abs(limit - expected) <= 1e-15, f"p3(1,0)={limit:.15g}"))
    grid = heat_kernel_h3(1.0, np.linspace(0.0, 10.0, 1001))
    rows.append(("kernel_decreasing", bool(np.all(np.diff(grid) < 0)), "p3(1, D) on D in [0, 10]"))
    return rows


def _check_euler(seed: int, n_paths: int, threads: int, log) -> List[SuiteRow]:
    mu, t_end = -1.0, 1.0
    n_steps = int(2000 * t_end)
    log(f"Euler oracle: {n_paths} paths x {n_steps} steps")
    r_sq, z = euler_hyperbolic_bm(mu, t_end, n_steps, n_paths, seed,
                                  n_groups=min(EULER_GROUPS, n_paths), threads=threads)
    radius, z_drift, _ = phi_radius_draws(mu, t_end, n_paths, seed, stream=10_000)

    rows = []
    ks = stats.ks_2samp(np.sqrt(r_sq), radius)
    rows.append(("euler_radius_ks", ks.pvalue > KS_LEVEL, f"KS={ks.statistic:.5f} p={ks.pvalue:.4f}"))

    lognormal = stats.kstest(np.log(z), "norm", args=(mu * t_end, math.sqrt(t_end)))
    rows.append(("euler_height_ks", lognormal.pvalue > KS_LEVEL, f"p={lognormal.pvalue:.4f}"))

    # per log-height bin: the law of D^2 - Z'^2 against the integrated conditional density
    log_z = np.log(z)
    excess = hyperbolic_distance(r_sq, z) ** 2 - log_z ** 2
    e_grid, e_cdf = excess_cdf_table(t_end)
    p_values, worst_mean = [], 0.0
    for lo in np.arange(-1.5, 0.5, 0.25):
        in_bin = (log_z >= lo) & (log_z < lo + 0.25)
        if in_bin.sum() < 2000:
            continue
        p_values.append(stats.kstest(excess[in_bin], lambda e: np.interp(e, e_grid, e_cdf)).pvalue)
        worst_mean = max(worst_mean, abs(float(np.mean(excess[in_bin])) / (2.0 * t_end) - 1.0))

    if not p_values:
        rows.append(("euler_conditional_distance", True, "skipped: no bin holds 2000 paths"))
        return rows
    # Bonferroni over the bins
    min_p = min(p_values)
    rows.append(("euler_conditional_distance", min_p > KS_LEVEL / len(p_values),
                 f"{len(p_values)} bins, min KS p={min_p:.4f}"))
    rows.append(("euler_conditional_mean", worst_mean <= 0.10, f"max relative gap {worst_mean:.4f}"))
    return rows


def _check_moments(seed: int, n_triplets: int, threads: int, log) -> List[SuiteRow]:
    rows = []
    rng = stream_rng(seed, 20_000)
    worst = 0.0
    for _ in range(20):
        s_var, rho, lam = rng.uniform(0.1, 2.0), rng.uniform(-0.9, 0.9), rng.choice([-1.0, -0.5, 0.0, 0.5, 1.0])
        closed = moment_service.canonical_moments(s_var, rho, lam)
        rebuilt = assemble_central_moments(s_var, rho, lam)
        # gaps scaled by mu2^{k/2} so a vanishing third moment stays comparable
        scales = (closed[0], closed[0] ** 1.5, closed[0] ** 2)
        worst = max(worst, max(abs(a - b) / s for a, b, s in zip(rebuilt, closed, scales)))
    rows.append(("moment_assembly", worst <= 1e-10, f"max relative gap {worst:.3g}"))

    log(f"MC moment check: {n_triplets} triplets")
    params = NsvhParams(sigma0=1.0, alpha=0.6, rho=-0.3, lam=0.0, f0=0.0, t_expiry=1.0)
    estimates = mc_service.central_moments_mc(params, n_triplets, 20, seed, threads=threads)
    canonical = moment_service.canonical_moments(params.s_var, params.rho, params.lam)
    exact = {f"mu{k}": params.scale ** k * m for k, m in zip((2, 3, 4), canonical)}
    gaps = [abs(estimates[k].value - v) / estimates[k].std_err for k, v in exact.items()]
    rows.append(("moments_vs_mc", max(gaps) <= 4.0, f"max gap {max(gaps):.2f} SE"))

    radius, z_drift, cos_theta = phi_radius_draws(-0.5, 1.0, n_triplets, seed, stream=30_000)
    x = cos_theta * radius
    m2, m4 = uncond_moments_x(-0.5, 1.0)
    se2 = np.std(x ** 2) / math.sqrt(len(x))
    se4 = np.std(x ** 4) / math.sqrt(len(x))
    gap = max(abs(np.mean(x ** 2) - m2) / se2, abs(np.mean(x ** 4) - m4) / se4)
    rows.append(("uncond_moments_x", gap <= 4.0, f"max gap {gap:.2f} SE"))

    worst = 0.0
    for lo in np.arange(-1.0, 1.0, 0.25):
        in_bin = (z_drift >= lo) & (z_drift < lo + 0.25)
        if in_bin.sum() >= 20_000:
            ratio = np.mean(x[in_bin] ** 2) / np.mean(cond_moment2(z_drift[in_bin], 1.0))
            worst = max(worst, abs(ratio - 1.0))
    rows.append(("conditional_moment2", worst <= 0.05, f"max relative gap {worst:.4f}"))

    su = NsvhParams.from_mean(sigma0=0.8, alpha=0.85, rho=-0.02, lam=1.0, mean=0.03, t_expiry=1.0)
    worst = 0.0
    for p in (0.01, 0.05, 0.1):
        var = risk_service.var_closed(su, p)
        identity = var - analytic_service.option_price(var, False, su) / p
        worst = max(worst, abs(identity / risk_service.es_closed(su, p) - 1.0))
    rows.append(("es_put_identity", worst <= 1e-10, f"max relative gap {worst:.3g}"))

    z = np.linspace(-2.0, 2.0, 41)
    jensen = bool(np.all(cond_moment4(z, 1.0) >= cond_moment2(z, 1.0) ** 2))
    rows.append(("conditional_jensen", jensen, "E[X^4|Z] >= E[X^2|Z]^2 on z in [-2, 2]"))
    return rows


SUITES = ("kernel", "euler", "moments", "all")


def run_suite(suite: str, seed: int, n_paths: int = 100_000, n_triplets: int = 1_000_000, threads: int = 1,
              progress_callback: Optional[Callable[[str], None]] = None) -> List[SuiteRow]:
    """Runs the named checks; returns (name, passed, message) rows."""
    if suite not in SUITES:
        raise ValidationError(f"unknown suite '{suite}'", field="suite", choices=list(SUITES))

    def log(msg):
        logger.debug(msg)
        if progress_callback:
            progress_callback(msg)

    rows: List[SuiteRow] = []
    if suite in ("kernel", "all"):
        log("Running kernel checks...")
        rows += _check_kernel(log)
    if suite in ("euler", "all"):
        log("Running Euler checks...")
        rows += _check_euler(seed, n_paths, threads, log)
    if suite in ("moments", "all"):
        log("Running moment checks...")
        rows += _check_moments(seed, n_triplets, threads, log)

    for name, passed, message in rows:
        log(f"{'✅' if passed else '❌'} {name}: {message}")
    return rows
