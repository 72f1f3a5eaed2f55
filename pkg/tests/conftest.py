import numpy as np
import pytest

from jfts_am.schemas.channel import JftsParams, NumericsConfig
from jfts_am.schemas.link import LinkBudget, ModulationSet
from jfts_am.services import jfts_service, policy_service


@pytest.fixture(scope="session")
def numerics():
    """Default numerics: m = 20, t_max = 30, midpoint phase rule"""
    return NumericsConfig()


@pytest.fixture(scope="session")
def same_room():
    """Same-room channel: K = 13 dB, S_h = 12 dB, Δ = 0.9"""
    return JftsParams.from_db(13.0, 12.0, 0.9)


@pytest.fixture(scope="session")
def three_walls():
    return JftsParams.from_db(4.0, -6.0, 0.3)


@pytest.fixture(scope="session")
def coeffs(same_room, numerics):
    """Precomputed series for the same-room channel, shared across the session"""
    return jfts_service.get_coefficients(same_room, numerics)


@pytest.fixture(scope="session")
def mods():
    return ModulationSet()


@pytest.fixture
def link():
    """γ̄ = 20 dB, TBER = 1e-3, S̄ = 1"""
    return LinkBudget.from_db(20.0, 1e-3)


@pytest.fixture(scope="session")
def solved_plans(same_room, numerics, coeffs):
    """One plan per policy at γ̄ = 20 dB, TBER = 1e-3, closed-form checks off"""
    link = LinkBudget.from_db(20.0, 1e-3)
    return {
        kind: policy_service.solve(kind, link, None, same_room, numerics, coeffs=coeffs,
                                   check_closed_forms=False)
        for kind in policy_service.SOLVERS
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
