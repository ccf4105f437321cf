from collections import Counter

import orjson
import pytest

from app.models import FAIL, PASS, SKIPPED, RunConfig, load_run_config
from app.services import runner as runner_module
from app.services.residual import check_report
from app.services.runner import Check, build_checks, execute, run_checks
from app.utils.errors import ConfigError, DeriveUnsupported, InactiveTime, NotClosed, WindowExhausted


def small_config(**kw) -> RunConfig:
    base = dict(n=1, m=1, t_order=1, n_max=0, r_max=0, m_range="0..0", seed=42, suites=["lax"])
    base.update(kw)
    return RunConfig(**base)


def raising(exc: Exception):
    def run():
        raise exc

    return run


def test_config_parsing():
    cfg = RunConfig(epsilon="1/3", lattice="-20..20", suites="lax, hbi")
    assert cfg.params().eps.denominator == 3
    assert cfg.suites == ["lax", "hbi"]
    dumped = cfg.model_dump(mode="json")
    assert dumped["epsilon"] == "1/3"
    assert dumped["lattice"] == "-20..20"


@pytest.mark.parametrize(
    "bad",
    [
        dict(suites=[]),
        dict(suites=["nope"]),
        dict(epsilon="0"),
        dict(window="1..4"),
        dict(window="-2..4"),
        dict(lattice="0..5"),
    ],
)
def test_invalid_configs(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_symmetric_window_sets_the_depth():
    assert small_config(window="-9..9").params().depth == 9


def test_yaml_config_with_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("n: 2\nsuites: [zs]\nt_order: 3\n")
    cfg = load_run_config(path, {"t_order": 1, "seed": None})
    assert (cfg.n, cfg.t_order, cfg.suites) == (2, 1, ["zs"])
    path.write_text("- not a mapping\n")
    with pytest.raises(ConfigError):
        load_run_config(path, {})


def test_suites_expand_in_order():
    checks = build_checks(small_config(suites=["lax", "zs"]))
    names = [c.identity for c in checks]
    assert names[:3] == ["laxt[1,0]", "satot[1,0]", "w-relationst[1,0]"]
    assert {c.suite for c in checks} == {"lax", "zs"}


@pytest.mark.parametrize("exc", [InactiveTime("t[1,1] not evolved"), DeriveUnsupported("no jets left")])
def test_impossible_checks_are_skipped(exc):
    record = execute(Check("lax", "x", "relation", {}, raising(exc)))
    assert record.status == SKIPPED
    assert type(exc).__name__ in record.reason


@pytest.mark.parametrize("exc", [NotClosed("omega is not closed"), WindowExhausted("no room")])
def test_broken_checks_fail(exc):
    record = execute(Check("tau", "closed", "d omega = 0", {}, raising(exc)))
    assert record.status == FAIL
    assert record.location == {"error": type(exc).__name__}
    assert record.witness.startswith(type(exc).__name__)


def test_passing_thunk_keeps_its_report():
    record = execute(Check("lax", "y", "relation", {"k": "v"}, lambda: check_report("y", [("zero", 0)])))
    assert record.status == PASS
    assert record.parameters == {"k": "v"}


def test_low_cap_skips_rather_than_fails():
    report = run_checks(small_config(suites=["zs"]))
    assert report.summary[FAIL] == 0
    assert report.summary[SKIPPED] == len(report.records) > 0
    assert report.all_passed


def test_each_flow_set_is_evolved_once(monkeypatch):
    evolved = Counter()
    sampled = []
    real_evolve, real_sample = runner_module.evolve, runner_module.sample_consistent_state

    def counting_evolve(pair, flows, cap):
        evolved[flows] += 1
        return real_evolve(pair, flows, cap)

    def counting_sample(p, *args, **kwargs):
        sampled.append(p.depth)
        return real_sample(p, *args, **kwargs)

    monkeypatch.setattr(runner_module, "evolve", counting_evolve)
    monkeypatch.setattr(runner_module, "sample_consistent_state", counting_sample)
    report = run_checks(small_config(suites=["lax", "hbi", "chan"]))
    assert report.summary[FAIL] == 0
    assert evolved and set(evolved.values()) == {1}
    assert len(sampled) == 1


def test_lambda_order_sets_the_checked_window():
    def windows(**kw):
        checks = build_checks(small_config(suites=["tau", "fay", "vertex"], t_order=2, n_max=1, **kw))
        return {c.parameters["lambda_order"] for c in checks if "lambda_order" in c.parameters}

    assert windows(lambda_order=1) == {"1"}
    # orders past the time cap are not determined
    assert windows(lambda_order=8) == {"2"}


def test_report_is_deterministic():
    cfg = small_config(suites=["lax", "hbi"])
    first, second = run_checks(cfg), run_checks(cfg)
    assert first.records == second.records
    assert first.summary[FAIL] == 0
    data = orjson.loads(first.to_json())
    assert data["schema"] == 1
    assert set(data) >= {"schema", "version", "config", "records", "summary", "timing"}
    assert data["config"]["m_range"] == "0..0"


@pytest.mark.slow
@pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_no_failures_across_band_widths(n, m):
    cfg = RunConfig(
        n=n, m=m, t_order=2, n_max=0, r_max=1, m_range="0..1", window="-6..6", suites=["lax", "hbi", "chan", "fay"]
    )
    report = run_checks(cfg)
    failed = [r.identity for r in report.records if r.status == FAIL]
    assert not failed
    assert report.summary[PASS] > 0
