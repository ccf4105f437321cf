from dataclasses import replace

import pytest

from app.models import FAIL
from app.services.flows import evolve
from app.services.hbi import (
    bilinear_residual,
    check_chan,
    check_conjugation_family,
    check_m_translation,
    check_p_inverse_symbols,
    check_scalar_hbi,
    first_order_offset,
    side_exponent,
    side_shift,
)
from app.services.params import L_FAMILY, R_FAMILY, FlowIndex
from app.services.residual import find_nonzero
from app.services.sampler import sample_consistent_state
from app.services.series import LambdaSeries
from app.services.timeseries import TimePoly
from app.utils.errors import InactiveTime

from tests.conftest import LATTICE

TOP = FlowIndex(1, 0)
BOTTOM = FlowIndex(0, 0)
X_FLOW = FlowIndex(-1, 0)
LOG_FLOW = FlowIndex(-1, 1)


def test_conjugation_family(pair11, pair21):
    for r in range(3):
        assert check_conjugation_family(pair11, r).passed
    assert check_conjugation_family(pair21, 1).passed
    with pytest.raises(ValueError):
        check_conjugation_family(pair11, -1)


def test_inverse_symbols(pair11, symbolic11):
    assert check_p_inverse_symbols(pair11).passed
    assert check_p_inverse_symbols(symbolic11).passed


@pytest.mark.parametrize("m", [-1, 0, 1])
@pytest.mark.parametrize("r", [0, 1])
def test_underived_identities(pair11, m, r):
    assert check_scalar_hbi(pair11, "offset-d", m, r).passed
    assert check_scalar_hbi(pair11, "two-point-d", r=r, x=1, x_prime=1 - m).passed
    assert check_m_translation(pair11, m, r).passed


def test_underived_identity_for_a_wider_band(pair21):
    assert check_scalar_hbi(pair21, "offset-d", 1, 1).passed


def test_differentiated_identities(toda_state):
    assert check_scalar_hbi(toda_state, "offset-a", 0, 0, TOP).passed
    assert check_scalar_hbi(toda_state, "two-point-b", 0, 0, BOTTOM, x=0, x_prime=-1).passed


def test_variant_arguments_are_validated(pair11, toda_state):
    with pytest.raises(ValueError, match="unknown variant"):
        check_scalar_hbi(pair11, "P34d")
    with pytest.raises(ValueError):
        check_scalar_hbi(pair11, "offset-d", x=1)
    with pytest.raises(ValueError):
        check_scalar_hbi(toda_state, "offset-a", 0, 0, BOTTOM)


def test_chan_identity(toda_state):
    assert check_chan(toda_state, 0).passed
    assert check_chan(toda_state, 1, first_order_offset(toda_state, TOP)).passed
    assert check_chan(toda_state, 0, first_order_offset(toda_state, BOTTOM)).passed


def test_chan_refuses_offsets_it_cannot_form(toda_state):
    with pytest.raises(InactiveTime, match="not evolved"):
        check_chan(toda_state, 0, {FlowIndex(-1, 1): None})


def test_chan_refuses_x_offsets(toda_state):
    with pytest.raises(InactiveTime, match="x translation"):
        check_chan(toda_state, 0, {X_FLOW: None})


def test_offsets_need_a_time():
    with pytest.raises(ValueError):
        first_order_offset(None)


def test_two_offsets_get_separate_variables(toda_state):
    delta = first_order_offset(toda_state, TOP, BOTTOM)
    variables = delta[TOP].variables
    assert variables[:2] == toda_state.flows
    assert [str(v) for v in variables[2:]] == ["d1", "d2"]
    assert check_chan(toda_state, 1, delta).passed


@pytest.fixture(scope="module")
def log_state(params11):
    """N=M=1 evolved in the log time t[-1,1] to degree 1, with derivative data to spare."""
    pair = sample_consistent_state(replace(params11, cap=1), seed=5, lattice=LATTICE, der_order=4)
    return evolve(pair, (LOG_FLOW,), 1)


@pytest.mark.slow
@pytest.mark.parametrize("m", [-1, 0, 1])
def test_log_variants(log_state, m):
    assert check_scalar_hbi(log_state, "offset-c", m, 0, LOG_FLOW).passed
    assert check_scalar_hbi(log_state, "two-point-c", 0, 0, LOG_FLOW, x=1, x_prime=1 - m).passed


@pytest.mark.slow
@pytest.mark.parametrize("m", [-1, 0, 1])
def test_chan_with_a_log_offset(log_state, m):
    delta = first_order_offset(log_state, LOG_FLOW)
    assert check_chan(log_state, m, delta).passed


@pytest.mark.slow
def test_chan_with_a_log_offset_sees_a_wrong_shift(log_state):
    delta = first_order_offset(log_state, LOG_FLOW)
    one = TimePoly.const(delta[LOG_FLOW].variables, 1, log_state.pL.unit.unit)
    p = log_state.params
    exponents = (side_exponent(p, delta, L_FAMILY, one), side_exponent(p, delta, R_FAMILY, one))
    shifts = (side_shift(p, delta, L_FAMILY, one), side_shift(p, delta, R_FAMILY, one))
    assert find_nonzero(bilinear_residual(log_state, 0, 0, delta, exponents, shifts)) is None
    unshifted = (LambdaSeries.zero(one), LambdaSeries.zero(one))
    assert find_nonzero(bilinear_residual(log_state, 0, 0, delta, exponents, unshifted)) is not None


def test_mismatched_pair_fails(pair11, params11):
    other = sample_consistent_state(params11, seed=43, lattice=LATTICE, der_order=2)
    mixed = pair11.with_ops(pair11.pL, other.pR)
    report = check_conjugation_family(mixed, 1)
    assert report.status == FAIL
    assert report.location and report.witness
    assert check_scalar_hbi(mixed, "offset-d", 0, 1).status == FAIL
