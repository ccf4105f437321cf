from fractions import Fraction

import pytest

from app.models import FAIL
from app.services.params import Params
from app.services.series import LambdaSeries
from app.services.timeseries import SpectralVar, TimePoly
from app.services.vertex import (
    A_MINUS,
    A_PLUS,
    B_MINUS,
    B_PLUS,
    SIDES,
    Factor,
    check_monodromy,
    check_vertex_hbe,
    check_vertex_identities,
    normal_order,
    vertex_side,
    vertex_word,
    wave_word,
    word_at,
)
from app.utils.errors import InactiveTime, TruncationUnsupported

A = (SpectralVar("a1"), SpectralVar("a2"))
D = (SpectralVar("d1"), SpectralVar("d2"))
VARIABLES = A + D


def times(names):
    return {n: TimePoly.var(VARIABLES, 1, v) for n, v in enumerate(names, start=1)}


def unit():
    return TimePoly.const(VARIABLES, 1, Fraction(1))


@pytest.mark.parametrize("which", SIDES)
def test_vertex_and_wave_words_normal_order_alike(which):
    p, one = Params(2, 1), unit()
    v = normal_order(vertex_word(p, which, times(A), one), one)
    w = normal_order(wave_word(p, which, times(A), one), one)
    assert (v.t0_power, v.x_power) == (w.t0_power, w.x_power)
    assert v.common in (1, -1)
    assert (v.log_coeff - w.log_coeff).is_zero()
    assert (v.shift - w.shift).is_zero()


def test_undressed_word_keeps_no_shift():
    p, one = Params(1, 1), unit()
    form = normal_order(vertex_word(p, A_PLUS, times(A), one, dressed=False), one)
    assert form.shift.is_zero()
    assert form.common == 1


@pytest.mark.parametrize("m", [-1, 0, 2])
@pytest.mark.parametrize("first,second,lower", [(A_PLUS, A_MINUS, True), (B_MINUS, B_PLUS, False)])
def test_product_leaves_only_the_step(m, first, second, lower):
    p, one = Params(2, 1, eps=Fraction(1, 3)), unit()
    here = times(A)
    images = {a: here[n] - TimePoly.var(VARIABLES, 1, d) for n, (a, d) in enumerate(zip(A, D), start=1)}
    word = vertex_word(p, first, here, one) + word_at(vertex_word(p, second, here, one), images, -m * p.eps, one)
    form = normal_order(word, one)
    assert (form.t0_power, form.x_power) == (0, 0)
    assert (form.log_coeff - LambdaSeries.monomial(0, one.scale(m * p.eps))).is_zero()
    d1, d2 = (TimePoly.var(VARIABLES, 1, d) for d in D)
    k = p.N if lower else -p.M
    expected = LambdaSeries.monomial(k, d1) + LambdaSeries.monomial(2 * k, d2.scale(Fraction(1, 2)))
    assert (form.shift - expected).is_zero()


def test_unknown_factor_is_refused():
    with pytest.raises(ValueError):
        normal_order([Factor("twist", 1)], unit())


@pytest.mark.parametrize("dt0", [0, 1, -2])
def test_integer_steps_are_single_valued(dt0):
    assert check_monodromy(Params(1, 1), Fraction(dt0), n_max=1).passed
    assert check_monodromy(Params(2, 1), Fraction(dt0), n_max=2).passed


def test_half_step_is_multivalued():
    report = check_monodromy(Params(1, 1), Fraction(1, 2))
    assert report.status == FAIL
    assert report.witness == "1/2"


def test_half_step_with_half_lattice_spacing():
    assert check_monodromy(Params(1, 1, eps=Fraction(1, 2)), Fraction(1, 2)).passed


def test_undressed_products_are_multivalued():
    report = check_monodromy(Params(1, 1), Fraction(1), dressed=False)
    assert report.status == FAIL
    assert report.identity.endswith("[undressed]")
    assert report.location["term"].endswith("l-coefficient")


def test_only_first_order_sides():
    with pytest.raises(TruncationUnsupported):
        check_monodromy(Params(1, 1), Fraction(1), truncation=2)


@pytest.mark.slow
def test_vertex_form_matches_wave_form(tau_session):
    tau = tau_session.tau()
    assert check_vertex_identities(tau).passed
    assert vertex_side(tau, A_PLUS).which == A_PLUS
    with pytest.raises(ValueError):
        vertex_side(tau, "cPlus")
    with pytest.raises(TruncationUnsupported):
        vertex_side(tau, A_MINUS, truncation=3)


@pytest.mark.slow
def test_vertex_form_matches_wave_form_for_two_step_bands(tau_session21):
    assert check_vertex_identities(tau_session21.tau()).passed


@pytest.mark.slow
@pytest.mark.parametrize("m", [-1, 0, 1])
def test_vertex_bilinear_equation(tau_session, m):
    assert check_vertex_hbe(tau_session.tau(), m, with_identities=False).passed


@pytest.mark.slow
def test_bilinear_toda_mode_drops_log_times(tau_session):
    with pytest.raises(InactiveTime):
        check_vertex_hbe(tau_session.tau(), 0, bth=True)
