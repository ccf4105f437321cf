import pytest

from app.models import PASS, SKIPPED
from app.services.flows import (
    check_flow_pairing,
    check_lax,
    check_lemma_d,
    check_sato,
    check_w_relations,
    check_x_pairing,
    check_zs,
    evolve,
    sato_rhs,
    u_flow_equations,
    w_flow_equations,
)
from app.services.lax import symbolic_pair, u_from_wL
from app.services.params import FlowIndex, Params
from app.services.residual import find_nonzero
from app.services.ring import U, CoeffPoly
from app.utils.errors import FractionalFlow, InactiveTime, WindowExhausted

TOP = FlowIndex(1, 0)
BOTTOM = FlowIndex(0, 0)


def test_degree_zero_keeps_the_base_pair(pair11):
    state = evolve(pair11, (TOP,), 0)
    assert state.pL.coefficient(-1).coefficient((0,)) == pair11.w(1)
    assert state.pR.coefficient(0).coefficient((0,)) == pair11.w_tilde(0)
    assert check_lax(state, TOP).status == SKIPPED


def test_toda_flows(toda_state):
    for f in (TOP, BOTTOM):
        assert check_lax(toda_state, f).passed
        assert check_sato(toda_state, f).passed
        assert check_w_relations(toda_state, f).passed
    assert check_zs(toda_state, TOP, BOTTOM).passed


def test_roots_and_logs_evolve(toda_state):
    assert check_lemma_d(toda_state, TOP).passed
    assert check_lemma_d(toda_state, BOTTOM, parts=("roots",)).passed


def test_flow_pairing(toda_state):
    report = check_flow_pairing(toda_state, 0)
    assert report.status == PASS


def test_inactive_time_is_refused(toda_state):
    with pytest.raises(InactiveTime):
        check_lax(toda_state, FlowIndex(-1, 1))


def test_window_budget_is_checked_up_front(pair11):
    with pytest.raises(WindowExhausted):
        evolve(pair11, (FlowIndex(1, 3),), 3)


@pytest.mark.slow
def test_log_flow(pair11):
    state = evolve(pair11, (FlowIndex(-1, 1),), 1)
    assert check_lax(state, FlowIndex(-1, 1)).passed
    assert check_sato(state, FlowIndex(-1, 1)).passed


def test_x_flow_is_the_lattice_derivative(symbolic11):
    assert check_x_pairing(symbolic11).passed


def test_trivial_left_dressing_does_not_move(trivial11):
    d_pl, _ = sato_rhs(trivial11, TOP)
    assert find_nonzero(d_pl) is None


def test_toda_equations():
    p = Params(1, 1)
    eqs = u_flow_equations(p, BOTTOM)
    u0, um1 = CoeffPoly.gen(U, 0), CoeffPoly.gen(U, -1)
    assert eqs[0] == CoeffPoly.gen(U, -1, shift=1) - um1
    assert eqs[-1] == um1 * (u0 - CoeffPoly.gen(U, 0, shift=-1))
    assert u_flow_equations(p, TOP) == eqs


def test_fractional_flow_has_no_u_form():
    with pytest.raises(FractionalFlow):
        u_flow_equations(Params(2, 1), FlowIndex(2, 0))
    with pytest.raises(FractionalFlow, match="log L"):
        u_flow_equations(Params(2, 1), FlowIndex(-1, 0))


def test_dressing_form_of_a_flow():
    p = Params(1, 1)
    eqs = w_flow_equations(p, TOP, 3)
    assert set(eqs) == {1, 2, 3}
    assert eqs[1] == -u_from_wL(symbolic_pair(p))[-1]
