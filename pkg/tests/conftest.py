"""Shared fixtures: the shipped markets and the expensive group-law objects, built once."""

import pytest
from click.testing import CliRunner

from src.core.distributions import make_power, make_step, make_uniform
from src.core.group_epsw import build_phi_curve, complete_w1
from src.core.market import Market
from src.core.wages import linear


@pytest.fixture(scope="session")
def uniform():
    return make_uniform()


@pytest.fixture(scope="session")
def power5():
    return make_power(5)


@pytest.fixture(scope="session")
def power5_market(uniform, power5):
    return Market(4.0, uniform, power5)


@pytest.fixture(scope="session")
def half_wage():
    return linear(0.5)


@pytest.fixture(scope="session")
def uniform2(uniform):
    return Market(2.0, uniform, uniform)


@pytest.fixture(scope="session")
def power5_curve(power5_market, half_wage):
    return build_phi_curve(power5_market, half_wage, grid_size=2049)


@pytest.fixture(scope="session")
def power5_core(power5_market, half_wage, power5_curve):
    return complete_w1(power5_market, half_wage, power5_curve)


@pytest.fixture
def runner(tmp_path, monkeypatch):
    """CLI runner with logs and user config redirected into a temporary home."""
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))
    for var in ("EPSW_ECON_TOL", "EPSW_GRID_SIZE", "EPSW_ORACLE_BINS"):
        monkeypatch.delenv(var, raising=False)
    return CliRunner()


@pytest.fixture
def random_market():
    """Builder of two-group markets whose step densities stay within [1/2, 3/2]."""

    def step(rng):
        brk = float(rng.uniform(0.2, 0.5))
        low = float(rng.uniform(0.5, 1.5))
        high = (1.0 - low * brk) / (1.0 - brk)
        if rng.random() < 0.5:
            return make_step([brk], [low, high])
        return make_step([1.0 - brk], [high, low])

    def build(rng, beta_hi=5.0):
        return Market(float(rng.uniform(1.0, beta_hi)), step(rng), step(rng))

    return build
