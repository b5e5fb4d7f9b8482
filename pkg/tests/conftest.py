# tests/conftest.py
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'src'))

from functional.dataset import FunctionalDataset, GridSpec  # noqa: E402
from simulation.processes import ProcessSpec  # noqa: E402
from simulation.responses import ImpactModelSpec, generate_responses  # noqa: E402
from simulation.sampling import sample_paths  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte Carlo acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo runs that take minutes")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def simulate_dataset(model: ImpactModelSpec, n: int, p: int = 100, seed: int = 0,
                     process: ProcessSpec = None) -> FunctionalDataset:
    grid = GridSpec(0.0, 1.0, p)
    path_seed, response_seed = np.random.SeedSequence(seed).spawn(2)
    X = sample_paths(process or ProcessSpec.oup(), grid, n, path_seed)
    draw = generate_responses(X, grid, model, response_seed)
    return FunctionalDataset(grid, X, draw.Y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset(rng):
    grid = GridSpec(0.0, 1.0, 21)
    X = rng.standard_normal((15, 21))
    Y = rng.standard_normal(15)
    return FunctionalDataset(grid, X, Y)


@pytest.fixture
def dgp2_sample():
    model = ImpactModelSpec(alpha=1.0, betas=(-6.0, 5.0), taus=(1 / 3, 2 / 3))
    return simulate_dataset(model, n=1500, p=100, seed=7)
