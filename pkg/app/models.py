"""
Request/response style models: run configuration, check reports and the
JSON run report.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

import orjson
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from app.services.params import Params, parse_range
from app.utils.config import settings
from app.utils.errors import ConfigError

SUITES = ("lax", "zs", "lemma", "hbi", "chan", "tau", "fay", "vertex", "bth")

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"
Status = Literal["pass", "fail", "skipped"]


class Report(BaseModel):
    """Outcome of one identity check. Witnesses are canonical exact strings."""

    model_config = ConfigDict(frozen=True)

    identity: str
    status: Status
    reason: str | None = None
    location: dict[str, str] = Field(default_factory=dict)
    witness: str | None = None

    @property
    def passed(self) -> bool:
        return self.status == PASS


class CheckRecord(BaseModel):
    suite: str
    identity: str
    relation: str
    parameters: dict[str, str] = Field(default_factory=dict)
    status: Status
    reason: str | None = None
    location: dict[str, str] = Field(default_factory=dict)
    witness: str | None = None


def _range_text(value: tuple[int, int]) -> str:
    return f"{value[0]}..{value[1]}"


class RunConfig(BaseModel):
    """Validated run configuration; echoed verbatim into the report."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    n: int = Field(1, ge=1)
    m: int = Field(1, ge=1)
    epsilon: Fraction = Fraction(1)
    seed: int = 0
    lattice: tuple[int, int] = parse_range(settings.DEFAULT_LATTICE)
    window: tuple[int, int] = parse_range(settings.DEFAULT_WINDOW)
    t_order: int = Field(2, ge=0)
    lambda_order: int = Field(8, ge=1)
    suites: list[str] = Field(default_factory=lambda: ["lax"])
    m_range: tuple[int, int] = (-3, 3)
    r_max: int = Field(2, ge=0)
    der_order: int = Field(2, ge=0)
    n_max: int = Field(1, ge=0)
    bth: bool = False
    out: str | None = None

    @field_validator("epsilon", mode="before")
    @classmethod
    def _parse_epsilon(cls, value: Any) -> Fraction:
        try:
            eps = Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"epsilon must be a rational 'p/q', got {value!r}") from exc
        if eps == 0:
            raise ValueError("epsilon must be nonzero")
        return eps

    @field_validator("lattice", "window", "m_range", mode="before")
    @classmethod
    def _parse_range(cls, value: Any) -> tuple[int, int]:
        if isinstance(value, str):
            try:
                return parse_range(value)
            except ConfigError as exc:
                raise ValueError(str(exc)) from exc
        return value

    @field_validator("suites", mode="before")
    @classmethod
    def _parse_suites(cls, value: Any) -> list[str]:
        if isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        return list(value)

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if not self.suites:
            raise ValueError("at least one suite must be selected")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ValueError(f"unknown suites {unknown}; choose from {', '.join(SUITES)}")
        if self.window[0] > 0 or self.window[1] < 0:
            raise ValueError("operator window must contain 0")
        if -self.window[0] != self.window[1]:
            raise ValueError(f"operator window must be symmetric, got {_range_text(self.window)}")
        if self.lattice[1] - self.lattice[0] + 1 < 12:
            raise ValueError("lattice window needs at least 12 points")
        return self

    @field_serializer("epsilon")
    def _dump_epsilon(self, value: Fraction) -> str:
        return str(value)

    @field_serializer("lattice", "window", "m_range")
    def _dump_range(self, value: tuple[int, int]) -> str:
        return _range_text(value)

    @property
    def depth(self) -> int:
        return max(-self.window[0], self.window[1], 1)

    def params(self) -> Params:
        return Params(self.n, self.m, self.epsilon, self.depth, self.t_order, self.lambda_order)


def load_run_config(path: str | Path | None, overrides: dict[str, Any]) -> RunConfig:
    """YAML config file (optional) with non-None overrides applied on top."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            loaded = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a mapping")
        data.update(loaded or {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**data)


class RunReport(BaseModel):
    report_schema: int = Field(settings.REPORT_SCHEMA, serialization_alias="schema")
    version: str = settings.VERSION
    config: dict[str, Any]
    records: list[CheckRecord]
    summary: dict[str, int]
    timing: dict[str, float] = Field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(r.status != FAIL for r in self.records)

    def to_json(self) -> bytes:
        return orjson.dumps(
            self.model_dump(by_alias=True, mode="json"),
            option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS,
        )
