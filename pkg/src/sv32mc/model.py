"""Model parameters, contract terms, and the variance <-> square-root-process map.

The variance process V follows dV = kappa*V*(theta - V) dt + epsilon*V^{3/2} dW1;
its reciprocal X = 1/V is a square-root diffusion, which is the coordinate
every sampler in this package works in.  ModelParams is the single source of
the derived constants (delta, nu, j) used downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ModelParams",
    "CallContract",
    "PathSample",
    "PricingResult",
    "ValidationError",
    "validate",
    "x_from_v",
    "v_from_x",
]


class ValidationError(ValueError):
    """A model parameter violates its admissibility constraint."""


@dataclass(frozen=True)
class ModelParams:
    """3/2-model coefficients plus the initial state.

    kappa:   mean-reversion scale (the instantaneous speed is kappa*V_t)
    theta:   long-run variance level
    epsilon: volatility of volatility
    rho:     correlation between return and variance shocks, in [-1, 1]
    r:       risk-free rate
    s0:      initial stock price
    v0:      initial instantaneous variance
    """

    kappa: float
    theta: float
    epsilon: float
    rho: float
    r: float
    s0: float
    v0: float

    @property
    def delta(self) -> float:
        """Degrees of freedom of the terminal chi-square law; always > 4."""
        return 4.0 * (self.kappa + self.epsilon**2) / self.epsilon**2

    @property
    def nu(self) -> float:
        """Index of the associated squared Bessel process, delta/2 - 1."""
        return self.delta / 2.0 - 1.0

    @property
    def j(self) -> float:
        """Drift constant -2*kappa*theta/epsilon^2 of the time-changed process (< 0)."""
        return -2.0 * self.kappa * self.theta / self.epsilon**2

    @property
    def x0(self) -> float:
        """Initial value of the square-root process X = 1/V."""
        return 1.0 / self.v0


@dataclass(frozen=True)
class CallContract:
    """European call terms: strike and maturity in years."""

    strike: float
    maturity: float


@dataclass(frozen=True)
class PathSample:
    """Outputs of one exact simulation step of length dt.

    x_terminal:       X at the end of the step
    int_inv_x:        integral of 1/X_s ds over the step (= integrated variance)
    int_sqrt_inv_dw:  integral of X_s^{-1/2} dW1_s recovered from the log identity
    log_s_terminal:   log stock price at the end of the step
    """

    x_terminal: float
    int_inv_x: float
    int_sqrt_inv_dw: float
    log_s_terminal: float


@dataclass(frozen=True)
class PricingResult:
    """A price estimate with its Monte Carlo error and provenance."""

    estimate: float
    std_error: float
    n_trials: int
    method: str
    wall_seconds: float


def validate(params: ModelParams) -> ModelParams:
    """Return params unchanged iff every invariant holds; raise otherwise.

    rho = +/-1 is accepted: the terminal lognormal draw then has zero
    variance, which every downstream formula handles.
    """
    checks = [
        ("kappa", params.kappa > 0.0),
        ("theta", params.theta > 0.0),
        ("epsilon", params.epsilon > 0.0),
        ("rho", -1.0 <= params.rho <= 1.0),
        ("s0", params.s0 > 0.0),
        ("v0", params.v0 > 0.0),
        ("r", math.isfinite(params.r)),
    ]
    for name, ok in checks:
        value = getattr(params, name)
        if not (ok and math.isfinite(value)):
            raise ValidationError(f"invalid {name}: {value!r}")
    return params


def validate_contract(contract: CallContract) -> CallContract:
    """Check strike > 0 and maturity > 0."""
    if not (math.isfinite(contract.strike) and contract.strike > 0.0):
        raise ValidationError(f"invalid strike: {contract.strike!r}")
    if not (math.isfinite(contract.maturity) and contract.maturity > 0.0):
        raise ValidationError(f"invalid maturity: {contract.maturity!r}")
    return contract


def x_from_v(v: float) -> float:
    """Map variance to the square-root coordinate X = 1/V."""
    if not v > 0.0:
        raise ValueError(f"v must be positive, got {v!r}")
    return 1.0 / v


def v_from_x(x: float) -> float:
    """Inverse of x_from_v."""
    if not x > 0.0:
        raise ValueError(f"x must be positive, got {x!r}")
    return 1.0 / x
