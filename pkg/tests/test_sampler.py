import pytest

from app.services.lax import SAMPLED, lax_operator, u_from_wL
from app.services.params import Params
from app.services.residual import find_nonzero
from app.services.sampler import sample_consistent_state
from app.utils.errors import WindowTooSmall


def test_same_seed_same_state(params11):
    a = sample_consistent_state(params11, seed=3, lattice=(-20, 20), der_order=1)
    b = sample_consistent_state(params11, seed=3, lattice="-20..20", der_order=1)
    assert a.backend == SAMPLED
    for i in range(1, 4):
        assert a.w(i) == b.w(i)
        assert a.w_tilde(i) == b.w_tilde(i)
    c = sample_consistent_state(params11, seed=4, lattice=(-20, 20), der_order=1)
    assert c.w(1) != a.w(1)


def test_short_lattice_is_refused(params21):
    with pytest.raises(WindowTooSmall):
        sample_consistent_state(params21, seed=1, lattice=(0, 5))
    with pytest.raises(ValueError):
        sample_consistent_state(params21, seed=1, lattice=(-30, 30), der_order=-1)


def test_jets_follow_the_lowest_recursion(pair21):
    # w~_0(x) = u_{-M}(x) w~_0(x - M), derivatives included
    M = pair21.params.M
    lowest = u_from_wL(pair21)[-M]
    w0 = pair21.w_tilde(0)
    residual = w0 - lowest * w0.shift(-M)
    assert w0.order == 2
    assert find_nonzero(residual) is None
    assert find_nonzero(residual.derive().derive()) is None


def test_state_is_consistent_for_wider_bands():
    p = Params(1, 2, depth=6)
    pair = sample_consistent_state(p, seed=11, lattice=(-25, 25))
    assert find_nonzero(lax_operator(pair, "left") - lax_operator(pair, "right")) is None
