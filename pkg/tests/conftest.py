from pathlib import Path

import numpy as np
import pytest

from utils.distributions import normal, synthetic_sample
from utils.estimator import EmpiricalSample
from utils.gini_family import ParamSet

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def returns_csv() -> Path:
    """250 synthetic daily returns in percent, header date,return, with comment lines"""
    return FIXTURES / "synthetic_returns.csv"


@pytest.fixture
def midpoint_params() -> ParamSet:
    return ParamSet.from_fraction(0.95, 2.0, 0.5)


@pytest.fixture(scope="session")
def normal_sample() -> EmpiricalSample:
    losses = synthetic_sample(normal(), 10_000, seed=11, stratified=True)
    return EmpiricalSample.from_losses(losses, source="normal n=10000")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def golden():
    """Expected text output for the bundled return series, by file name"""
    return lambda name: (FIXTURES / name).read_text()
