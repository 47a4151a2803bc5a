"""Bias-free Monte Carlo simulation and pricing for the 3/2 stochastic volatility model."""

from .model import (
    CallContract,
    ModelParams,
    PathSample,
    PricingResult,
    ValidationError,
    validate,
    v_from_x,
    x_from_v,
)
from .dist import (
    BridgeState,
    CondIVDistribution,
    build_cond_iv_cdf,
    cond_iv_charfn,
    cond_iv_laplace,
    cond_iv_moments,
    sample_cond_iv,
    sample_terminal_x,
    terminal_x_from_uniform,
)
from .engine import (
    black_scholes_call,
    path_rng,
    price_call_cond_mc,
    price_call_exact,
    price_call_qmc,
    pseudo_points,
    step_exact,
    summarize,
)
from .oracle import EulerConfig, euler_bridge_samples, euler_paths, price_call_euler
from .qmc import DigitalNet2D, owen_scramble, sobol_net

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "CallContract",
    "PathSample",
    "PricingResult",
    "ValidationError",
    "validate",
    "x_from_v",
    "v_from_x",
    "BridgeState",
    "CondIVDistribution",
    "sample_terminal_x",
    "terminal_x_from_uniform",
    "cond_iv_laplace",
    "cond_iv_charfn",
    "cond_iv_moments",
    "build_cond_iv_cdf",
    "sample_cond_iv",
    "step_exact",
    "black_scholes_call",
    "price_call_exact",
    "price_call_cond_mc",
    "price_call_qmc",
    "pseudo_points",
    "path_rng",
    "summarize",
    "EulerConfig",
    "euler_paths",
    "price_call_euler",
    "euler_bridge_samples",
    "DigitalNet2D",
    "sobol_net",
    "owen_scramble",
]
