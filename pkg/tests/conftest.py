"""Shared seeded states. Everything is exact, so sizes stay small."""

import pytest

from app.models import RunConfig
from app.services.flows import evolve
from app.services.lax import symbolic_pair, trivial_pair
from app.services.params import FlowIndex, Params
from app.services.runner import Session
from app.services.sampler import sample_consistent_state

LATTICE = (-30, 30)


@pytest.fixture(scope="session")
def params11() -> Params:
    return Params(1, 1, depth=8, cap=2)


@pytest.fixture(scope="session")
def params21() -> Params:
    return Params(2, 1, depth=8, cap=1)


@pytest.fixture(scope="session")
def pair11(params11):
    return sample_consistent_state(params11, seed=42, lattice=LATTICE, der_order=2)


@pytest.fixture(scope="session")
def pair21(params21):
    return sample_consistent_state(params21, seed=7, lattice=LATTICE, der_order=2)


@pytest.fixture(scope="session")
def symbolic11(params11):
    return symbolic_pair(params11, depth=4)


@pytest.fixture(scope="session")
def trivial11(params11):
    return trivial_pair(params11)


@pytest.fixture(scope="session")
def toda_state(pair11):
    """N=M=1 evolved in t[1,0] and t[0,0] to degree 2."""
    return evolve(pair11, (FlowIndex(1, 0), FlowIndex(0, 0)), 2)


@pytest.fixture(scope="session")
def tau_session() -> Session:
    cfg = RunConfig(n=1, m=1, t_order=2, der_order=2, n_max=1, r_max=0, m_range="-1..1", suites=["tau"])
    return Session(cfg)


@pytest.fixture(scope="session")
def tau_session21() -> Session:
    cfg = RunConfig(n=2, m=1, t_order=2, der_order=2, n_max=1, r_max=0, m_range="-1..1", suites=["tau"])
    return Session(cfg)
