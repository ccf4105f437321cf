"""Tau-function checks on a small N=M=1 session; building tau is the expensive part."""

import pytest

from app.services.flows import evolve
from app.services.params import FlowIndex, Params
from app.services.residual import check_report, find_nonzero
from app.services.series import NSEQ
from app.services.tau import (
    FAY_CASES,
    MU,
    OneForm,
    build_log_tau,
    check_closed,
    check_fay,
    check_omega_shifts,
    check_p_reciprocals,
    check_symbol_products,
    check_tau_quotients,
    omega,
    required_flows,
    spectral_order,
    within_order,
)
from app.services.timeseries import TimePoly
from app.utils.errors import InactiveTime, NotClosed


def test_required_flows():
    assert required_flows(Params(1, 1), 2) == [
        FlowIndex(1, 0), FlowIndex(1, 1), FlowIndex(0, 0), FlowIndex(0, 1),
    ]
    assert required_flows(Params(2, 1), 1) == [FlowIndex(2, 0), FlowIndex(0, 0)]
    assert required_flows(Params(2, 1), 1, kinds=(NSEQ,)) == [FlowIndex(2, 0)]


def test_trivial_pair_has_zero_form(trivial11):
    state = evolve(trivial11, (FlowIndex(1, 0), FlowIndex(1, 1)), 2)
    form = omega(state)
    assert set(form.components) == {FlowIndex(1, 0), FlowIndex(1, 1)}
    for comp in form.components.values():
        assert find_nonzero(comp) is None


def test_shifts_need_every_moved_time(toda_state):
    with pytest.raises(InactiveTime):
        check_p_reciprocals(toda_state)


@pytest.mark.slow
def test_form_is_closed(tau_session):
    form = tau_session.form()
    assert check_closed(form).passed
    assert check_omega_shifts(form).passed


@pytest.mark.slow
def test_log_tau_vanishes_at_the_origin(tau_session):
    tau = tau_session.tau()
    assert find_nonzero(tau.log_tau.constant()) is None


@pytest.mark.slow
def test_symbols_are_tau_quotients(tau_session):
    assert check_tau_quotients(tau_session.tau()).passed


@pytest.mark.slow
def test_shifted_symbol_identities(tau_session):
    state = tau_session.tau_state()
    assert check_p_reciprocals(state).passed
    assert check_symbol_products(state).passed


@pytest.mark.slow
@pytest.mark.parametrize("case", FAY_CASES)
def test_fay_identities(tau_session, case):
    assert check_fay(tau_session.tau(), case).passed


@pytest.mark.slow
def test_open_form_is_refused(tau_session):
    form = tau_session.form()
    first, second = list(form.components)[:2]
    comp = form.components[first]
    bumped = comp + TimePoly.var(comp.variables, form.cap, second, form.state.pL.unit.unit)
    broken = OneForm(form.state, {**form.components, first: bumped})
    with pytest.raises(NotClosed):
        build_log_tau(broken)


@pytest.mark.slow
def test_unknown_fay_case(tau_session):
    with pytest.raises(ValueError):
        check_fay(tau_session.tau(), "IV")


def test_spectral_terms_past_the_order_are_dropped():
    variables = (FlowIndex(1, 0), MU)
    t = TimePoly.var(variables, 3, FlowIndex(1, 0))
    mu = TimePoly.var(variables, 3, MU)
    poly = t * mu * mu + t
    assert within_order(poly, (MU,), 1) == t
    assert within_order(poly, (MU,), 2) == poly
    assert check_report("order", [("mu^2", within_order(t * mu * mu, (MU,), 1))]).passed
    assert not check_report("order", [("mu^2", within_order(t * mu * mu, (MU,), 2))]).passed


def test_spectral_order_stays_within_the_time_cap():
    assert spectral_order(Params(1, 1, cap=2, lam_order=1), 2) == 1
    assert spectral_order(Params(1, 1, cap=2), 2) == 2


@pytest.mark.slow
def test_two_step_band_tau_checks(tau_session21):
    tau = tau_session21.tau()
    assert check_tau_quotients(tau).passed
    for case in FAY_CASES:
        assert check_fay(tau, case).passed
