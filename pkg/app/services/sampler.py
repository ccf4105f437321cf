"""
Consistent sampled dressing pairs.

The w_i and a few seed values are drawn at random; everything else follows
from L P_L = P_L Lambda^N and L P_R = P_R Lambda^{-M} solved as recursions
along the lattice, so both conjugations give the same L exactly. Jets
(x-derivatives up to ``der_order``) are drawn for the free data and carried
through the recursions by Leibniz.
"""

from __future__ import annotations

import itertools
import logging
import random
from fractions import Fraction
from typing import Sequence

from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from app.services.lattice import LatticeFn, _jet_mul
from app.services.lax import SAMPLED, DressingPair, u_from_wL
from app.services.oper import LambdaOp
from app.services.params import Params, parse_range
from app.utils.config import settings
from app.utils.errors import UnluckyZero, WindowTooSmall

logger = logging.getLogger(__name__)


def _rational(rng: random.Random, nonzero: bool) -> Fraction:
    bound = settings.SAMPLE_BOUND
    num = rng.randint(-bound, bound)
    while nonzero and num == 0:
        num = rng.randint(-bound, bound)
    return Fraction(num, rng.randint(1, bound))


def _jet(rng: random.Random, order: int, nonzero: bool = True) -> tuple:
    return (_rational(rng, nonzero),) + tuple(_rational(rng, False) for _ in range(order))


def _draw_fn(rng: random.Random, lo: int, hi: int, order: int) -> LatticeFn:
    return LatticeFn(lo, [_jet(rng, order) for _ in range(lo, hi + 1)], order)


def _jet_add(*jets: tuple) -> tuple:
    return tuple(sum(parts, Fraction(0)) for parts in zip(*jets))


def _left_recursion(source: LatticeFn, step: int, seeds: Sequence[tuple]) -> LatticeFn:
    """g(x) = g(x + step) + source(x), with the top ``step`` values of g seeded."""
    lo, hi = source.lo, source.hi
    values: dict[int, tuple] = {hi + 1 + i: seeds[i] for i in range(step)}
    for x in range(hi, lo - 1, -1):
        values[x] = _jet_add(values[x + step], source.jet_at(x))
    return LatticeFn(lo, [values[x] for x in range(lo, hi + step + 1)], source.order)


def _right_recursion(
    factor: LatticeFn, step: int, seeds: Sequence[tuple], source: LatticeFn | None = None
) -> LatticeFn:
    """g(x) = factor(x) g(x - step) + source(x), with the bottom ``step`` values seeded."""
    lo, hi = factor.lo, factor.hi
    if source is not None:
        lo, hi = max(lo, source.lo), min(hi, source.hi)
        if lo > hi:
            raise WindowTooSmall("recursion source and factor do not overlap on the lattice")
    order = factor.order
    values: dict[int, tuple] = {lo - step + i: seeds[i] for i in range(step)}
    for x in range(lo, hi + 1):
        value = _jet_mul(factor.jet_at(x), values[x - step], order)
        if source is not None:
            value = _jet_add(value, source.jet_at(x))
        values[x] = value
    return LatticeFn(lo - step, [values[x] for x in range(lo - step, hi + 1)], order)


def complete_state(
    p: Params, w: Sequence[LatticeFn], rng: random.Random, der_order: int
) -> tuple[dict[int, LatticeFn], dict[int, LatticeFn]]:
    """
    Given w_1..w_{N+M}, produce w_1..w_depth and w~_0..w~_depth.

    Raises UnluckyZero when u_{-M} (hence w~_0) vanishes somewhere.
    """
    N, M, depth = p.N, p.M, p.depth
    size = max(N + M, depth)
    if len(w) < N + M:
        raise ValueError(f"need w_1..w_{N + M}, got {len(w)}")
    one = LatticeFn.const(1)
    pL = LambdaOp({0: one, **{-(i + 1): wi for i, wi in enumerate(w[: N + M])}}, -(N + M), 0, False, True, one)
    u = u_from_wL(DressingPair(p, pL, LambdaOp.identity(one)))
    u[N] = one
    lowest = u[-M]
    if lowest.is_const or any(jet[0] == 0 for jet in lowest.jets):
        raise UnluckyZero("u_{-M} vanishes on the lattice")

    # L P_L = P_L Lambda^N, row k > N+M:
    # w_k(x) = w_k(x+N) + sum_{j=-M}^{N-1} u_j(x) w_{j-N+k}(x+j)
    ws: dict[int, LatticeFn] = {i + 1: wi for i, wi in enumerate(w[: N + M])}
    for k in range(N + M + 1, size + 1):
        total = None
        for j in range(-M, N):
            term = u[j] * ws[j - N + k].shift(j)
            total = term if total is None else total + term
        ws[k] = _left_recursion(total, N, [_jet(rng, der_order, False) for _ in range(N)])

    # L P_R = P_R Lambda^{-M}:
    # w~_0(x) = u_{-M}(x) w~_0(x-M)
    # w~_k(x) = u_{-M}(x) w~_k(x-M) + sum_{j=-M+1}^{min(N, k-M)} u_j(x) w~_{k-M-j}(x+j)
    wt: dict[int, LatticeFn] = {0: _right_recursion(lowest, M, [_jet(rng, der_order) for _ in range(M)])}
    if any(jet[0] == 0 for jet in wt[0].jets):
        raise UnluckyZero("w~_0 vanishes on the lattice")
    for k in range(1, size + 1):
        total = None
        for j in range(-M + 1, min(N, k - M) + 1):
            term = u[j] * wt[k - M - j].shift(j)
            total = term if total is None else total + term
        seeds = [_jet(rng, der_order, False) for _ in range(M)]
        wt[k] = _right_recursion(lowest, M, seeds, total)
    return ws, wt


def _draw_state(p: Params, seed: int, attempt: int, lattice: tuple[int, int], der_order: int) -> DressingPair:
    if attempt:
        logger.info(f"Redrawing sampled state (seed={seed}, attempt={attempt})")
    rng = random.Random(f"{seed}:{attempt}")
    lo, hi = lattice
    w = [_draw_fn(rng, lo, hi, der_order) for _ in range(p.N + p.M)]
    ws, wt = complete_state(p, w, rng, der_order)
    one = LatticeFn.const(1)
    left = {0: one, **{-i: ws[i] for i in range(1, p.depth + 1)}}
    right = {k: wt[k] for k in range(p.depth + 1)}
    pL = LambdaOp(left, -p.depth, 0, False, True, one, eps=p.eps)
    pR = LambdaOp(right, 0, p.depth, True, False, one, eps=p.eps)
    return DressingPair(p, pL, pR, backend=SAMPLED, seed=seed, lattice=lattice, der_order=der_order)


def sample_consistent_state(
    p: Params,
    seed: int,
    lattice: tuple[int, int] | str | None = None,
    der_order: int = 0,
) -> DressingPair:
    """
    Random consistent dressing pair on the lattice window, deterministic per seed.

    Vanishing u_{-M} or w~_0 values trigger a bounded number of redraws
    (``EBTH_MAX_REDRAWS``); the last UnluckyZero is re-raised.
    """
    if lattice is None:
        lattice = settings.DEFAULT_LATTICE
    if isinstance(lattice, str):
        lattice = parse_range(lattice)
    if der_order < 0:
        raise ValueError("der order must be a natural number")
    if lattice[1] - lattice[0] + 1 < 2 * (p.N + p.M + p.depth):
        raise WindowTooSmall(f"lattice {lattice} too short for depth {p.depth} with N={p.N}, M={p.M}")

    attempts = itertools.count()
    retrying = Retrying(
        stop=stop_after_attempt(settings.MAX_REDRAWS),
        retry=retry_if_exception_type(UnluckyZero),
        reraise=True,
    )
    pair = retrying(lambda: _draw_state(p, seed, next(attempts), lattice, der_order))
    logger.info(
        f"Sampled state N={p.N} M={p.M} seed={seed} lattice={lattice[0]}..{lattice[1]} "
        f"depth={p.depth} der_order={der_order}"
    )
    return pair
