"""Euler-Maruyama reference implementation used to validate the exact scheme.

This module is deliberately independent of the samplers it checks: it
imports only parameter/result containers, never the Bessel-based laws, so
agreement between the two is evidence rather than tautology.

Paths use a log-Euler step for the stock and a full-truncation Euler step
for the variance (the positive part enters drift and diffusion, and the
recorded variance is the positive part, so stored values never go
negative).  A windowed acceptance sampler provides approximate draws from
the bridge-conditioned integrated variance.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .model import CallContract, ModelParams, PathSample, PricingResult

__all__ = [
    "EulerConfig",
    "BridgeWindowError",
    "euler_paths",
    "price_call_euler",
    "euler_bridge_samples",
]

# Paths are simulated in fixed-size slices, each driven by its own Philox
# key (seed, slice index), so results do not depend on scheduling or on
# how many paths are requested at once beyond the config itself.
_SLICE = 16384


class BridgeWindowError(RuntimeError):
    """Too few paths landed inside the bridge acceptance window."""


@dataclass(frozen=True)
class EulerConfig:
    """Discretization and budget for the reference simulation."""

    n_steps: int
    n_paths: int
    seed: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.n_paths < 2:
            raise ValueError("n_paths must be >= 2")


def _euler_arrays(params: ModelParams, maturity: float, cfg: EulerConfig):
    """Simulate all paths; returns (log_s, v_end, int_v, int_sqrt_v_dw)."""
    n = cfg.n_paths
    dt = maturity / cfg.n_steps
    sq_dt = math.sqrt(dt)
    rho = params.rho
    rho_perp = math.sqrt(max(0.0, 1.0 - rho * rho))

    log_s = np.empty(n)
    v_end = np.empty(n)
    int_v = np.empty(n)
    int_w = np.empty(n)

    for s_idx, lo in enumerate(range(0, n, _SLICE)):
        hi = min(lo + _SLICE, n)
        cnt = hi - lo
        rng = Generator(Philox(key=(cfg.seed, s_idx)))

        v = np.full(cnt, params.v0)
        ls = np.full(cnt, math.log(params.s0))
        iv = np.zeros(cnt)
        iw = np.zeros(cnt)
        v_prev_pos = np.maximum(v, 0.0)

        for _ in range(cfg.n_steps):
            z1 = rng.standard_normal(cnt)
            z2 = rng.standard_normal(cnt)
            v_pos = np.maximum(v, 0.0)
            sqrt_v = np.sqrt(v_pos)
            dw1 = sq_dt * z1

            ls += (params.r - 0.5 * v_pos) * dt + sqrt_v * (rho * dw1 + rho_perp * sq_dt * z2)
            iw += sqrt_v * dw1

            drift = params.kappa * v_pos * (params.theta - v_pos)
            diff = params.epsilon * v_pos * sqrt_v
            v = v + drift * dt + diff * dw1

            new_pos = np.maximum(v, 0.0)
            iv += 0.5 * (v_prev_pos + new_pos) * dt
            v_prev_pos = new_pos

        log_s[lo:hi] = ls
        v_end[lo:hi] = v_prev_pos
        int_v[lo:hi] = iv
        int_w[lo:hi] = iw

    return log_s, v_end, int_v, int_w


def euler_paths(params: ModelParams, maturity: float, cfg: EulerConfig):
    """Discretized joint paths of (S, V), reported in X = 1/V coordinates.

    int_inv_x is the trapezoidal integral of V (equal to the integral of
    1/X), int_sqrt_inv_dw the left-point integral of sqrt(V) dW1.  Terminal
    variances are floored at a tiny positive value before inversion.
    """
    log_s, v_end, int_v, int_w = _euler_arrays(params, maturity, cfg)
    x_end = 1.0 / np.maximum(v_end, 1e-300)
    return [
        PathSample(
            x_terminal=float(x_end[i]),
            int_inv_x=float(int_v[i]),
            int_sqrt_inv_dw=float(int_w[i]),
            log_s_terminal=float(log_s[i]),
        )
        for i in range(cfg.n_paths)
    ]


def price_call_euler(params: ModelParams, contract: CallContract, cfg: EulerConfig) -> PricingResult:
    """Discounted-payoff average under the discretized dynamics."""
    t0 = time.perf_counter()
    log_s, _, _, _ = _euler_arrays(params, contract.maturity, cfg)
    disc = math.exp(-params.r * contract.maturity)
    payoff = disc * np.maximum(np.exp(log_s) - contract.strike, 0.0)
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / math.sqrt(cfg.n_paths))
    return PricingResult(
        estimate=mean,
        std_error=se,
        n_trials=cfg.n_paths,
        method="euler",
        wall_seconds=time.perf_counter() - t0,
    )


def euler_bridge_samples(
    params: ModelParams,
    bridge,
    cfg: EulerConfig,
    w_acc: float = 0.02,
    min_accepted: int = 500,
):
    """Approximate draws of the integrated variance conditioned on a bridge.

    Simulates the X process from bridge.x_t over bridge.dt with cfg.n_steps
    Euler steps, keeps paths whose terminal value lands within a relative
    window w_acc of bridge.x_u, and returns their trapezoidal integrals of
    1/X.  The window makes this an approximate bridge sampler; shrinking
    w_acc quantifies its own bias.
    """
    n = cfg.n_paths
    dt_step = bridge.dt / cfg.n_steps
    sq_dt = math.sqrt(dt_step)
    # X = 1/V is a square-root diffusion with drift kappa+eps^2 - kappa*theta*X.
    a0 = params.kappa + params.epsilon**2
    a1 = params.kappa * params.theta

    accepted = []
    for s_idx, lo in enumerate(range(0, n, _SLICE)):
        cnt = min(lo + _SLICE, n) - lo
        rng = Generator(Philox(key=(cfg.seed, s_idx)))

        x = np.full(cnt, bridge.x_t)
        inv_prev = 1.0 / np.maximum(x, 1e-12)
        acc = np.zeros(cnt)
        for _ in range(cfg.n_steps):
            z = rng.standard_normal(cnt)
            x_pos = np.maximum(x, 0.0)
            x = x + (a0 - a1 * x_pos) * dt_step - params.epsilon * np.sqrt(x_pos) * sq_dt * z
            inv_new = 1.0 / np.maximum(x, 1e-12)
            acc += 0.5 * (inv_prev + inv_new) * dt_step
            inv_prev = inv_new

        keep = np.abs(x - bridge.x_u) <= w_acc * bridge.x_u
        accepted.append(acc[keep])

    out = np.concatenate(accepted)
    if out.size < min_accepted:
        raise BridgeWindowError(
            f"only {out.size} paths hit the {w_acc:.1%} window around x_u; "
            "widen the window or raise the path budget"
        )
    return out
