"""
Turning residuals into reports.

A residual is any exact object that should vanish: an operator, a
lambda-series, a time series or a plain coefficient. The first non-zero
entry found (highest Lambda power first, then lowest time degree, then the
first lattice point) becomes the report witness.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Any, Iterable

from app.models import FAIL, PASS, SKIPPED, Report
from app.services.lattice import LatticeFn
from app.services.oper import LambdaOp
from app.services.ring import CoeffPoly
from app.services.series import LambdaSeries
from app.services.timeseries import TimePoly

logger = logging.getLogger(__name__)

Location = dict[str, str]


def find_nonzero(obj: Any, degree: int | None = None) -> tuple[Location, str] | None:
    """Location and witness of the first non-zero entry, or None if obj vanishes."""
    if isinstance(obj, LambdaOp):
        if obj.dpart:
            return {"part": "eps*d"}, str(obj.dpart)
        for k in sorted(obj.coeffs, reverse=True):
            hit = find_nonzero(obj.coeffs[k], degree)
            if hit:
                return {"Lambda": str(k), **hit[0]}, hit[1]
        return None
    if isinstance(obj, LambdaSeries):
        for table, tag in ((obj.coeffs, None), (obj.log_coeffs, "log")):
            for k in sorted(table):
                hit = find_nonzero(table[k], degree)
                if hit:
                    loc = {"lambda": str(k), **hit[0]}
                    if tag:
                        loc["part"] = tag
                    return loc, hit[1]
        return None
    if isinstance(obj, TimePoly):
        for e in sorted(obj.terms, key=lambda ex: (sum(ex), ex)):
            if degree is not None and sum(e) > degree:
                break
            hit = find_nonzero(obj.terms[e], None)
            if hit:
                return {"degree": str(sum(e)), "monomial": obj.monomial_str(e), **hit[0]}, hit[1]
        return None
    if isinstance(obj, LatticeFn):
        first = obj.first_nonzero()
        if first is None:
            return None
        point, der = first
        value = obj.jets[0 if point is None else point - obj.lo][der]
        loc = {"der": str(der)}
        if point is not None:
            loc["x"] = str(point)
        return loc, str(value)
    if isinstance(obj, CoeffPoly):
        return None if obj.is_zero() else ({}, str(obj))
    if isinstance(obj, (Fraction, int)):
        return None if obj == 0 else ({}, str(obj))
    raise TypeError(f"cannot inspect residual of type {type(obj).__name__}")


def check_report(
    identity: str,
    residuals: Iterable[tuple[str, Any]],
    degree: int | None = None,
) -> Report:
    """pass if every labelled residual vanishes (through ``degree`` in t), else fail."""
    for label, residual in residuals:
        hit = find_nonzero(residual, degree)
        if hit:
            location, witness = hit
            location = {"term": label, **location} if label else location
            logger.warning(f"{identity} failed at {location}: {witness}")
            return Report(identity=identity, status=FAIL, location=location, witness=witness)
    logger.debug(f"{identity} passed")
    return Report(identity=identity, status=PASS)


def skipped(identity: str, reason: str) -> Report:
    return Report(identity=identity, status=SKIPPED, reason=reason)


def merge_reports(identity: str, reports: Iterable[Report]) -> Report:
    """First failing sub-report wins; all skipped gives skipped."""
    reports = list(reports)
    for r in reports:
        if r.status == FAIL:
            return Report(identity=identity, status=FAIL, location=r.location, witness=r.witness,
                          reason=r.identity)
    if reports and all(r.status == SKIPPED for r in reports):
        return skipped(identity, reports[0].reason or "")
    return Report(identity=identity, status=PASS)
