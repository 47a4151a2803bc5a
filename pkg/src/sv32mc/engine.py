"""Exact-path simulation and the pricing estimators built on it.

One exact step runs the four-stage recipe: draw the terminal square-root
state from its noncentral chi-square law, draw the integrated variance
from its bridge-conditional law by CDF inversion, recover the correlated
Brownian integral from the log identity, then draw the terminal log price
from its conditional normal.  Conditional Monte Carlo replaces the final
normal draw with a closed-form Black-Scholes value; the quasi-Monte Carlo
estimator feeds scrambled digital nets through the same conditional path.

Every path owns a counter-based random stream keyed by (seed, path index),
and work is partitioned into fixed-size chunks reduced in index order, so
results are bit-identical for a given seed no matter how many worker
processes run the chunks.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtr

from . import dist, qmc
from .model import (
    CallContract,
    ModelParams,
    PathSample,
    PricingResult,
    validate,
    validate_contract,
)

__all__ = [
    "WORKERS_ENV",
    "path_rng",
    "step_exact",
    "black_scholes_call",
    "price_call_exact",
    "price_call_cond_mc",
    "price_call_qmc",
    "pseudo_points",
    "exact_terminal_log_s",
    "cond_terms",
    "summarize",
]

WORKERS_ENV = "SV32MC_WORKERS"

# Paths per work unit.  Fixed so that the partition, and with it every
# floating-point reduction, is independent of the worker count.
_CHUNK = 2048
# Philox key tag reserved for the pseudo-random point source (path streams
# use key = (seed, path index), far below this).
_POINT_TAG = 1 << 62
# Half an ulp of the 31-bit quasi-random grid, added before any inverse-CDF
# map so no coordinate is exactly zero.
_HALF_ULP = 2.0**-32
_U_MAX = float(np.nextafter(1.0, 0.0))


def path_rng(seed: int, index: int) -> Generator:
    """Counter-based stream for one path: Philox keyed by (seed, index)."""
    return Generator(Philox(key=(seed, index)))


def _resolve_workers(workers) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


# ---------------------------------------------------------------------------
# Single exact step (scalar reference path).
# ---------------------------------------------------------------------------


def _recover_brownian_integral(params: ModelParams, x_t, x_u, iv, dt):
    """integral of X^{-1/2} dW1 from the log identity of the X dynamics."""
    log_ratio = np.log(np.asarray(x_t) / np.asarray(x_u))
    drift_part = (params.kappa + 0.5 * params.epsilon**2) * np.asarray(iv)
    total = log_ratio + drift_part
    total = total - params.kappa * params.theta * dt
    return total / params.epsilon


def step_exact(
    params: ModelParams,
    s_t: float,
    x_t: float,
    dt: float,
    rand: Generator,
    tol: float = dist.DEFAULT_TOL,
    inversion: str = "interpolate",
) -> PathSample:
    """One bias-free step of length dt from state (s_t, x_t).

    Consumes exactly four variates from the stream, in a fixed order:
    a standard normal and a chi-square (terminal state), a uniform
    (integrated-variance inversion), and a final normal for the log price.
    The last draw is consumed even when rho = +/-1 makes its coefficient
    zero, so the stream layout never depends on parameters.
    """
    if not (s_t > 0.0 and x_t > 0.0 and dt > 0.0):
        raise ValueError("s_t, x_t and dt must be positive")
    z1 = rand.standard_normal()
    g = 2.0 * rand.standard_gamma(0.5 * (params.delta - 1.0))
    u2 = rand.random()
    z4 = rand.standard_normal()

    x_u = float(dist._terminal_from_normal_gamma(params, x_t, dt, z1, g))
    cdf = dist.build_cond_iv_cdf(params, dist.BridgeState(x_t, x_u, dt), tol)
    iv = float(dist.sample_cond_iv(cdf, u2, mode=inversion))
    j_int = float(_recover_brownian_integral(params, x_t, x_u, iv, dt))

    mean = math.log(s_t) + params.r * dt - 0.5 * iv + params.rho * j_int
    sd = math.sqrt((1.0 - params.rho**2) * iv)
    log_s = mean + sd * z4
    return PathSample(
        x_terminal=x_u, int_inv_x=iv, int_sqrt_inv_dw=j_int, log_s_terminal=log_s
    )


# ---------------------------------------------------------------------------
# Black-Scholes.
# ---------------------------------------------------------------------------


def _bs_call_vec(s0, strike, r, tau, sigma):
    s0 = np.asarray(s0, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    disc = math.exp(-r * tau)
    intrinsic = np.maximum(s0 - strike * disc, 0.0)
    srt = sigma * math.sqrt(tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_m = np.log(s0 / strike)
        d1 = (log_m + (r + 0.5 * sigma * sigma) * tau) / srt
        d2 = d1 - srt
        val = s0 * ndtr(d1) - strike * disc * ndtr(d2)
    return np.where(srt > 0.0, val, intrinsic)


def black_scholes_call(s0: float, strike: float, r: float, tau: float, sigma: float) -> float:
    """European call value; at sigma = 0 the discounted-forward intrinsic value."""
    if not (s0 > 0.0 and strike > 0.0 and tau > 0.0):
        raise ValueError("s0, strike and tau must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    return float(_bs_call_vec(s0, strike, r, tau, sigma))


# ---------------------------------------------------------------------------
# Plain exact Monte Carlo.
# ---------------------------------------------------------------------------


def _exact_log_s_chunk(params, maturity, seed, lo, hi, tol, inversion):
    """Terminal log prices for paths [lo, hi); pure function of its arguments."""
    n = hi - lo
    shape = 0.5 * (params.delta - 1.0)
    z1 = np.empty(n)
    g = np.empty(n)
    u2 = np.empty(n)
    z4 = np.empty(n)
    for i in range(n):
        rng = path_rng(seed, lo + i)
        z1[i] = rng.standard_normal()
        g[i] = 2.0 * rng.standard_gamma(shape)
        u2[i] = rng.random()
        z4[i] = rng.standard_normal()

    x0 = params.x0
    x_u = dist._terminal_from_normal_gamma(params, x0, maturity, z1, g)
    built = dist._build_cdf_arrays(params, np.full(n, x0), x_u, maturity, tol)
    iv = np.empty(n)
    for i in range(n):
        iv[i] = dist._invert_grid(built["grid_x"][i], built["grid_f"][i], u2[i], inversion)

    j_int = _recover_brownian_integral(params, x0, x_u, iv, maturity)
    mean = math.log(params.s0) + params.r * maturity - 0.5 * iv + params.rho * j_int
    var = (1.0 - params.rho**2) * iv
    sd = np.sqrt(var)
    return mean + sd * z4


def _exact_chunk(params, contract, seed, lo, hi, tol, inversion):
    """Discounted payoffs for paths [lo, hi)."""
    log_s = _exact_log_s_chunk(params, contract.maturity, seed, lo, hi, tol, inversion)
    disc = math.exp(-params.r * contract.maturity)
    return disc * np.maximum(np.exp(log_s) - contract.strike, 0.0)


def _run_chunked(fn, args_list, workers):
    """Map fn over chunk argument tuples, preserving order."""
    if workers > 1 and len(args_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, *zip(*args_list)))
    return [fn(*args) for args in args_list]


def exact_terminal_log_s(
    params: ModelParams,
    maturity: float,
    n_paths: int,
    seed: int,
    tol: float = dist.DEFAULT_TOL,
    inversion: str = "interpolate",
    workers=None,
):
    """Terminal log prices from single exact steps 0 -> maturity (for audits)."""
    chunks = [
        (params, maturity, seed, lo, min(lo + _CHUNK, n_paths), tol, inversion)
        for lo in range(0, n_paths, _CHUNK)
    ]
    parts = _run_chunked(_exact_log_s_chunk, chunks, _resolve_workers(workers))
    return np.concatenate(parts)


def price_call_exact(
    params: ModelParams,
    contract: CallContract,
    n_paths: int,
    seed: int,
    tol: float = dist.DEFAULT_TOL,
    inversion: str = "interpolate",
    workers=None,
) -> PricingResult:
    """Plain exact Monte Carlo: average discounted payoff over n_paths steps."""
    validate(params)
    validate_contract(contract)
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    t0 = time.perf_counter()
    chunks = [
        (params, contract, seed, lo, min(lo + _CHUNK, n_paths), tol, inversion)
        for lo in range(0, n_paths, _CHUNK)
    ]
    parts = _run_chunked(_exact_chunk, chunks, _resolve_workers(workers))
    payoffs = np.concatenate(parts)
    mean, se = summarize(payoffs)
    return PricingResult(
        estimate=mean,
        std_error=se,
        n_trials=n_paths,
        method="exact-mc",
        wall_seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Conditional Monte Carlo and its quasi-random variant.
# ---------------------------------------------------------------------------


def pseudo_points(n: int, seed: int) -> np.ndarray:
    """Pseudo-random points in [0,1)^2 from a dedicated Philox stream."""
    rng = Generator(Philox(key=(seed, _POINT_TAG)))
    return rng.random((n, 2))


def _cond_terms_chunk(params, maturity, pts, tol, inversion):
    """Per-point (x_T, iv, j_int) for the conditional estimator."""
    u1 = np.clip(pts[:, 0] + _HALF_ULP, _HALF_ULP, _U_MAX)
    u2 = np.clip(pts[:, 1] + _HALF_ULP, _HALF_ULP, _U_MAX)
    x0 = params.x0
    x_u = dist.terminal_x_from_uniform(params, x0, maturity, u1)
    built = dist._build_cdf_arrays(params, np.full(len(u1), x0), x_u, maturity, tol)
    iv = np.empty(len(u1))
    for i in range(len(u1)):
        iv[i] = dist._invert_grid(built["grid_x"][i], built["grid_f"][i], u2[i], inversion)
    j_int = _recover_brownian_integral(params, x0, x_u, iv, maturity)
    return x_u, iv, j_int


def cond_terms(params: ModelParams, maturity: float, points, tol=dist.DEFAULT_TOL, inversion="interpolate"):
    """Chunked wrapper of the conditional-leg computation."""
    pts = np.asarray(points, dtype=float)
    outs = [
        _cond_terms_chunk(params, maturity, pts[lo : lo + _CHUNK], tol, inversion)
        for lo in range(0, len(pts), _CHUNK)
    ]
    return tuple(np.concatenate([o[k] for o in outs]) for k in range(3))


def _cond_values(params, contract, points, tol, inversion):
    """Per-point conditional Black-Scholes values (already discounted)."""
    T = contract.maturity
    _, iv, j_int = cond_terms(params, T, points, tol, inversion)
    rho = params.rho
    exponent = -0.5 * rho * rho * iv + rho * j_int
    s_tilde = params.s0 * np.exp(exponent)
    sigma_tilde = np.sqrt(iv / T) * math.sqrt(1.0 - rho * rho)
    return _bs_call_vec(s_tilde, contract.strike, params.r, T, sigma_tilde)


def price_call_cond_mc(
    params: ModelParams,
    contract: CallContract,
    points,
    tol: float = dist.DEFAULT_TOL,
    inversion: str = "interpolate",
) -> PricingResult:
    """Conditional Monte Carlo over an explicit point set in [0,1)^2.

    The first coordinate drives the terminal state through the noncentral
    chi-square quantile map, the second the integrated-variance inversion;
    the terminal lognormal is integrated out analytically.
    """
    validate(params)
    validate_contract(contract)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("points must be an (n, 2) array with n >= 2")
    t0 = time.perf_counter()
    vals = _cond_values(params, contract, pts, tol, inversion)
    mean, se = summarize(vals)
    return PricingResult(
        estimate=mean,
        std_error=se,
        n_trials=len(pts),
        method="cond-mc",
        wall_seconds=time.perf_counter() - t0,
    )


def _qmc_rep_mean(params, contract, m, seed, rep, tol, inversion):
    net = qmc.sobol_net(m)
    pts = qmc.owen_scramble(net, seed, rep).points
    vals = _cond_values(params, contract, pts, tol, inversion)
    return math.fsum(float(v) for v in vals) / len(vals)


def price_call_qmc(
    params: ModelParams,
    contract: CallContract,
    m: int,
    n_reps: int,
    seed: int,
    tol: float = dist.DEFAULT_TOL,
    inversion: str = "interpolate",
    workers=None,
) -> PricingResult:
    """Randomized-QMC conditional pricing: n_reps scrambled 2^m-point nets.

    The estimate is the mean of the replicate means; the standard error is
    their sample standard deviation divided by sqrt(n_reps).
    """
    validate(params)
    validate_contract(contract)
    if not 4 <= m <= 20:
        raise ValueError("m must lie in [4, 20]")
    if n_reps < 2:
        raise ValueError("n_reps must be >= 2")
    t0 = time.perf_counter()
    args = [(params, contract, m, seed, rep, tol, inversion) for rep in range(n_reps)]
    rep_means = _run_chunked(_qmc_rep_mean, args, _resolve_workers(workers))
    mean, se = summarize(rep_means)
    return PricingResult(
        estimate=mean,
        std_error=se,
        n_trials=n_reps * (1 << m),
        method="qmc-cond-mc",
        wall_seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Statistics.
# ---------------------------------------------------------------------------


def summarize(samples):
    """Compensated mean and standard error of a sample of reals.

    Uses exact (fsum) summation, so the result is invariant under any
    permutation of the input.
    """
    xs = np.asarray(samples, dtype=float)
    n = xs.size
    if n < 2:
        raise ValueError("need at least two samples")
    mean = math.fsum(xs) / n
    var = math.fsum((xs - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)
