"""Shared fixtures: the benchmark parameter set and cached expensive runs."""

import numpy as np
import pytest

from sv32mc import (
    BridgeState,
    CallContract,
    EulerConfig,
    ModelParams,
    euler_bridge_samples,
    price_call_exact,
    price_call_qmc,
)

REFERENCE_PRICE = 0.443059
WORKERS = 2


@pytest.fixture(scope="session")
def paper_params():
    return ModelParams(kappa=2.0, theta=1.5, epsilon=0.2, rho=-0.5, r=0.05, s0=1.0, v0=1.0)


@pytest.fixture(scope="session")
def contract():
    return CallContract(strike=1.0, maturity=1.0)


@pytest.fixture(scope="session")
def paper_bridge():
    return BridgeState(x_t=1.0 / 1.5, x_u=1.0 / 1.5, dt=1.0)


@pytest.fixture(scope="session")
def bridge_draws(paper_params, paper_bridge):
    """~1e5 windowed Euler draws of the conditional integrated variance."""
    cfg = EulerConfig(n_steps=400, n_paths=750_000, seed=7)
    draws = euler_bridge_samples(paper_params, paper_bridge, cfg, w_acc=0.02)
    assert len(draws) >= 100_000
    return np.asarray(draws[:100_000])


@pytest.fixture(scope="session")
def exact_40960(paper_params, contract):
    return price_call_exact(paper_params, contract, 40960, seed=42, workers=WORKERS)


@pytest.fixture(scope="session")
def exact_10240(paper_params, contract):
    return price_call_exact(paper_params, contract, 10240, seed=42, workers=WORKERS)


@pytest.fixture(scope="session")
def qmc_m8(paper_params, contract):
    return price_call_qmc(paper_params, contract, m=8, n_reps=30, seed=42, workers=WORKERS)


@pytest.fixture(scope="session")
def qmc_m5(paper_params, contract):
    return price_call_qmc(paper_params, contract, m=5, n_reps=30, seed=42, workers=WORKERS)
