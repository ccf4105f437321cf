"""
Suite execution for ``ebth check``.

Each suite expands into a list of ``Check`` thunks. Thunks share one
``Session``, which samples the dressing pair once and evolves each flow set
once, at the widest window any check reserved for it. Checks are
dispatched with joblib and collected in submission order, so the report
does not depend on the thread count.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, replace
from typing import Any, Callable, Hashable, Iterator

from joblib import Parallel, delayed

from app.models import FAIL, PASS, SKIPPED, CheckRecord, Report, RunConfig, RunReport
from app.services.flows import (
    EvolvedState,
    active_pairs,
    check_flow_pairing,
    check_lax,
    check_lemma_d,
    check_sato,
    check_w_relations,
    check_x_pairing,
    check_zs,
    evolve,
    required_window,
)
from app.services.hbi import (
    check_chan,
    check_conjugation_family,
    check_m_translation,
    check_p_inverse_symbols,
    check_scalar_hbi,
    first_order_offset,
)
from app.services.lax import DressingPair, symbolic_pair
from app.services.params import LOG_FAMILY, FlowIndex, flow_family, power_exponent
from app.services.residual import skipped
from app.services.sampler import sample_consistent_state
from app.services.tau import (
    FAY_CASES,
    OneForm,
    TauSeries,
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
)
from app.services.vertex import check_monodromy, check_vertex_hbe, check_vertex_identities
from app.utils.config import settings
from app.utils.errors import (
    DeriveUnsupported,
    DpartUnsupported,
    EBTHError,
    InactiveTime,
    TruncationUnsupported,
)

logger = logging.getLogger(__name__)

_VARIANT_KIND = {"L": "a", "R": "b", "LOG": "c"}

# errors that leave a check without anything to compare; every other EBTHError is a failure
SKIP_ERRORS = (DeriveUnsupported, DpartUnsupported, TruncationUnsupported, InactiveTime)


@dataclass(frozen=True)
class Check:
    suite: str
    identity: str
    relation: str
    parameters: dict[str, str]
    run: Callable[[], Report]


class Session:
    """
    Lazily built pairs, states and tau functions shared by the checks of one run.

    Suite builders ``reserve`` the window each check will ask for. The pair is
    then sampled once at the deepest reservation, each flow set is evolved once
    at its own deepest reservation, and smaller requests get narrowed copies.
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.params = cfg.params()
        self.flows = self.params.flows(cfg.n_max, include_log=not cfg.bth)
        m_lo, m_hi = cfg.m_range
        self.ms = list(range(m_lo, m_hi + 1))
        self.rs = list(range(cfg.r_max + 1))
        self.residue_depth = max(self.params.N, self.params.M) * cfg.r_max + max(abs(m_lo), abs(m_hi)) + 1
        self.lambda_order = spectral_order(self.params, self.params.cap)
        self._cache: dict[Hashable, Any] = {}
        self._building: dict[Hashable, threading.Lock] = {}
        self._lock = threading.Lock()
        self._reserved: dict[tuple[FlowIndex, ...], int] = {}
        self._pair_depth = self.params.depth

    def _memo(self, key: Hashable, build: Callable[[], Any]) -> Any:
        """Build each key once, even when several threads ask for it together."""
        with self._lock:
            if key in self._cache:
                return self._cache[key]
            lock = self._building.setdefault(key, threading.Lock())
        with lock:
            with self._lock:
                if key in self._cache:
                    return self._cache[key]
            value = build()
            with self._lock:
                self._cache[key] = value
            return value

    def need(self, flows: tuple[FlowIndex, ...], extra: int = 0) -> int:
        p = self.params
        return max(required_window(p, flows, p.cap)) + extra

    def reserve(self, flows: tuple[FlowIndex, ...], extra: int = 0) -> None:
        need = self.need(flows, extra)
        with self._lock:
            self._reserved[flows] = max(self._reserved.get(flows, 0), need)
            self._pair_depth = max(self._pair_depth, need)

    def reserve_depth(self, depth: int) -> None:
        with self._lock:
            self._pair_depth = max(self._pair_depth, depth)

    def pair(self, depth: int = 0) -> DressingPair:
        depth = max(depth, self.params.depth)
        with self._lock:
            self._pair_depth = max(self._pair_depth, depth)
            full = self._pair_depth
        sampled = self._memo(("sampled", full), lambda: self._sample(full))
        return self._memo(("pair", full, depth), lambda: sampled.restrict(depth))

    def _sample(self, depth: int) -> DressingPair:
        p = replace(self.params, depth=depth)
        return sample_consistent_state(p, self.cfg.seed, self.cfg.lattice, self.cfg.der_order)

    def symbolic(self) -> DressingPair:
        return self._memo("symbolic", lambda: symbolic_pair(self.params))

    def state(self, flows: tuple[FlowIndex, ...], extra: int = 0) -> EvolvedState:
        need = self.need(flows, extra)
        with self._lock:
            depth = max(self._reserved.get(flows, 0), need)
            self._reserved[flows] = depth
        full = self._memo(("state", flows, depth), lambda: self._evolve(flows, depth))
        return full.narrow(depth - need)

    def _evolve(self, flows: tuple[FlowIndex, ...], depth: int) -> EvolvedState:
        if depth > self.params.depth:
            logger.info(f"Widening the operator window to {depth} for {[str(f) for f in flows]}")
        return evolve(self.pair(depth), flows, self.params.cap)

    def chan_extra(self, flows: tuple[FlowIndex, ...]) -> int:
        p = self.params
        reach = [
            max(p.N, p.M) * f.n if flow_family(p, f) == LOG_FAMILY else power_exponent(p, f) for f in flows
        ]
        return self.residue_depth + p.cap * max(reach, default=0)

    def tau_flows(self, bth: bool) -> tuple[FlowIndex, ...]:
        p = self.params
        flows = required_flows(p, p.cap)
        if not bth:
            flows += [FlowIndex(-p.M, n) for n in range(1, self.cfg.n_max + 1)]
        return tuple(flows)

    def reserve_tau(self, bth: bool = False) -> None:
        flows = self.tau_flows(bth)
        self.reserve(flows, self.chan_extra(flows))

    def tau_state(self, bth: bool = False) -> EvolvedState:
        flows = self.tau_flows(bth)
        return self.state(flows, self.chan_extra(flows))

    def form(self, bth: bool = False) -> OneForm:
        return self._memo(("form", bth), lambda: omega(self.tau_state(bth)))

    def tau(self, bth: bool = False) -> TauSeries:
        return self._memo(("tau", bth), lambda: build_log_tau(self.form(bth)))


# --- suites ---

def _lax_checks(sx: Session) -> Iterator[Check]:
    for f in sx.flows:
        sx.reserve((f,))
        params = {"flow": str(f)}
        yield Check("lax", f"lax{f}", "d_t L = [A, L]", params, lambda f=f: check_lax(sx.state((f,)), f))
        yield Check(
            "lax", f"sato{f}", "d_t P = Sato right-hand side", params,
            lambda f=f: check_sato(sx.state((f,)), f),
        )
        yield Check(
            "lax", f"w-relations{f}", "w_1 and w~_0 evolution", params,
            lambda f=f: check_w_relations(sx.state((f,)), f),
        )


def _zs_checks(sx: Session) -> Iterator[Check]:
    for f, g in active_pairs(sx.flows):
        sx.reserve((f, g))
        yield Check(
            "zs", f"zs{f}{g}", "d_g A_f - d_f A_g + [A_f, A_g] = 0", {"flows": f"{f},{g}"},
            lambda f=f, g=g: check_zs(sx.state((f, g)), f, g),
        )


def _lemma_checks(sx: Session) -> Iterator[Check]:
    for f in sx.flows:
        sx.reserve((f,))
        yield Check(
            "lemma", f"lemma{f}", "roots and logarithms evolve by commutators", {"flow": str(f)},
            lambda f=f: check_lemma_d(sx.state((f,)), f),
        )
    for n in range(sx.cfg.n_max + 1):
        pair = (FlowIndex(1, n), FlowIndex(0, n))
        sx.reserve(pair)
        yield Check(
            "lemma", f"pairing[n={n}]", "A_{1,n} - A_{0,n} is a power of L", {"n": str(n)},
            lambda n=n, pair=pair: check_flow_pairing(sx.state(pair), n),
        )
    yield Check("lemma", "x-pairing", "t_{-M,0} flow acts as d/dx", {}, lambda: check_x_pairing(sx.symbolic()))


def _hbi_checks(sx: Session) -> Iterator[Check]:
    p = sx.params
    sx.reserve_depth(sx.residue_depth)
    for f in sx.flows:
        sx.reserve((f,), sx.residue_depth)
    yield Check(
        "hbi", "inverse-symbols", "P P^{-1} symbols have constant term one", {},
        lambda: check_p_inverse_symbols(sx.pair(sx.residue_depth)),
    )
    for r in sx.rs:
        yield Check(
            "hbi", f"conjugation[r={r}]", "P_L Lambda^{Nr} P_L^-1 = P_R Lambda^{-Mr} P_R^-1", {"r": str(r)},
            lambda r=r: check_conjugation_family(sx.pair(sx.residue_depth), r),
        )
        for m in sx.ms:
            params = {"m": str(m), "r": str(r)}
            yield Check(
                "hbi", f"offset-d[m={m},r={r}]", "scalar bilinear identity", params,
                lambda m=m, r=r: check_scalar_hbi(sx.pair(sx.residue_depth), "offset-d", m, r),
            )
            yield Check(
                "hbi", f"two-point-d[x=1,x'={1 - m},r={r}]", "scalar bilinear identity at separate points", params,
                lambda m=m, r=r: check_scalar_hbi(sx.pair(sx.residue_depth), "two-point-d", r=r, x=1, x_prime=1 - m),
            )
            yield Check(
                "hbi", f"m-translation[m={m},r={r}]", "residual moves with both points", params,
                lambda m=m, r=r: check_m_translation(sx.pair(sx.residue_depth), m, r),
            )
            for f in sx.flows:
                kind = _VARIANT_KIND[flow_family(p, f)]
                fparams = {**params, "flow": str(f)}
                for prefix in ("offset-", "two-point-"):
                    variant = prefix + kind
                    yield Check(
                        "hbi", f"{variant}[m={m},r={r},f={f}]", "differentiated bilinear identity", fparams,
                        lambda m=m, r=r, f=f, variant=variant: check_scalar_hbi(
                            sx.state((f,), sx.residue_depth), variant, m, r, f
                        ),
                    )


def _chan_checks(sx: Session) -> Iterator[Check]:
    p = sx.params
    # t_{-M,0} offsets are x translations, covered by m
    offsets = [f for f in sx.flows if not (flow_family(p, f) == LOG_FAMILY and f.n == 0)]
    for f in offsets:
        extra = sx.chan_extra((f,))
        sx.reserve((f,), extra)
        for r in sx.rs:
            for m in sx.ms:
                def run(f=f, m=m, r=r, extra=extra) -> Report:
                    s = sx.state((f,), extra)
                    return check_chan(s, m, first_order_offset(s, f), r)

                yield Check(
                    "chan", f"chan[m={m},r={r},delta on {f}]", "bilinear identity between t and t - delta",
                    {"m": str(m), "r": str(r), "offset": str(f)}, run,
                )


def _tau_checks(sx: Session) -> Iterator[Check]:
    sx.reserve_tau()
    window = {"lambda_order": str(sx.lambda_order)}
    yield Check("tau", "closed", "d omega = 0", {}, lambda: check_closed(sx.form()))
    yield Check(
        "tau", "omega-shifts", "omega under spectral time shifts", window,
        lambda: check_omega_shifts(sx.form()),
    )
    yield Check("tau", "tau-quotients", "symbols are tau quotients", window, lambda: check_tau_quotients(sx.tau()))
    yield Check(
        "tau", "reciprocals", "shifted inverse symbols", window,
        lambda: check_p_reciprocals(sx.tau_state()),
    )
    yield Check(
        "tau", "symbol-products", "products of shifted symbols", window,
        lambda: check_symbol_products(sx.tau_state()),
    )


def _fay_checks(sx: Session, bth: bool = False) -> Iterator[Check]:
    sx.reserve_tau(bth)
    prefix = "bth." if bth else ""
    suite = "bth" if bth else "fay"
    for case in FAY_CASES:
        yield Check(
            suite, f"{prefix}fay-{case}", "Fay-type quadratic identity",
            {"case": case, "lambda_order": str(sx.lambda_order)},
            lambda case=case: check_fay(sx.tau(bth), case),
        )


def _vertex_checks(sx: Session, bth: bool = False) -> Iterator[Check]:
    sx.reserve_tau(bth)
    prefix = "bth." if bth else ""
    suite = "bth" if bth else "vertex"
    if not bth:
        yield Check(
            suite, "vertex-identities", "vertex form equals wave form", {"lambda_order": str(sx.lambda_order)},
            lambda: check_vertex_identities(sx.tau()),
        )
    for m in sx.ms:
        yield Check(
            suite, f"{prefix}vertex-hbe[m={m},r=0]", "vertex bilinear equation", {"m": str(m)},
            lambda m=m: check_vertex_hbe(sx.tau(bth), m, bth=bth, with_identities=False),
        )
        if not bth:
            dt0 = m * sx.params.eps
            yield Check(
                suite, f"monodromy[dt0={dt0}]", "single-valued vertex products", {"dt0": str(dt0)},
                lambda dt0=dt0: check_monodromy(sx.params, dt0, sx.cfg.n_max),
            )


def _bth_checks(sx: Session) -> Iterator[Check]:
    sx.reserve_tau(True)
    yield Check(
        "bth", "bth.tau-quotients", "symbols are tau quotients", {"lambda_order": str(sx.lambda_order)},
        lambda: check_tau_quotients(sx.tau(True)),
    )
    yield from _fay_checks(sx, bth=True)
    yield from _vertex_checks(sx, bth=True)


SUITE_BUILDERS: dict[str, Callable[[Session], Iterator[Check]]] = {
    "lax": _lax_checks,
    "zs": _zs_checks,
    "lemma": _lemma_checks,
    "hbi": _hbi_checks,
    "chan": _chan_checks,
    "tau": _tau_checks,
    "fay": _fay_checks,
    "vertex": _vertex_checks,
    "bth": _bth_checks,
}


def build_checks(cfg: RunConfig, session: Session | None = None) -> list[Check]:
    """Expand the selected suites; every window the checks need is reserved on the session."""
    sx = session or Session(cfg)
    checks: list[Check] = []
    for suite in cfg.suites:
        checks.extend(SUITE_BUILDERS[suite](sx))
    return checks


def execute(check: Check) -> CheckRecord:
    try:
        report = check.run()
    except SKIP_ERRORS as exc:
        logger.info(f"{check.identity} skipped: {type(exc).__name__}: {exc}")
        report = skipped(check.identity, f"{type(exc).__name__}: {exc}")
    except EBTHError as exc:
        name = type(exc).__name__
        logger.warning(f"{check.identity} failed: {name}: {exc}")
        report = Report(identity=check.identity, status=FAIL, location={"error": name}, witness=f"{name}: {exc}")
    identity = report.identity
    if check.identity.startswith("bth.") and not identity.startswith("bth."):
        identity = "bth." + identity
    return CheckRecord(
        suite=check.suite,
        identity=identity,
        relation=check.relation,
        parameters=check.parameters,
        status=report.status,
        reason=report.reason,
        location=report.location,
        witness=report.witness,
    )


def run_checks(cfg: RunConfig) -> RunReport:
    """Run every selected suite; records keep submission order."""
    start = time.perf_counter()
    checks = build_checks(cfg)
    logger.info(f"Running {len(checks)} checks from suites {cfg.suites} on {settings.THREADS} thread(s)")
    records = Parallel(n_jobs=settings.THREADS, prefer="threads")(delayed(execute)(c) for c in checks)
    summary = {status: sum(r.status == status for r in records) for status in (PASS, FAIL, SKIPPED)}
    elapsed = round(time.perf_counter() - start, 3)
    logger.info(f"Finished: {summary['pass']} passed, {summary['fail']} failed, {summary['skipped']} skipped")
    return RunReport(
        config=cfg.model_dump(mode="json"),
        records=list(records),
        summary=summary,
        timing={"total_seconds": elapsed},
    )
