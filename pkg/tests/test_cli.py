import orjson
import pytest
from click.testing import CliRunner

from app.main import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, cli
from app.services.runner import SUITE_BUILDERS, Check
from app.utils.errors import NotClosed

SMALL = ["--t-order", "1", "--n-max", "0", "--r-max", "0", "--m-range", "0..0", "--seed", "42"]


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def test_check_writes_a_json_report(runner):
    result = runner.invoke(cli, ["check", "--suite", "lax", *SMALL])
    assert result.exit_code == EXIT_OK, result.output
    data = orjson.loads(result.stdout)
    assert data["summary"]["fail"] == 0
    assert data["config"]["suites"] == ["lax"]
    assert all(r["suite"] == "lax" for r in data["records"])


def test_check_to_file(runner, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(cli, ["check", "--suite", "zs", *SMALL, "--out", str(out)])
    assert result.exit_code == EXIT_OK
    assert result.stdout.strip() == ""
    data = orjson.loads(out.read_bytes())
    assert data["summary"]["skipped"] == len(data["records"])


@pytest.mark.parametrize("suite", ["", "nope"])
def test_bad_suite_is_a_config_error(runner, suite):
    result = runner.invoke(cli, ["check", "--suite", suite])
    assert result.exit_code == EXIT_CONFIG


def test_missing_config_file(runner, tmp_path):
    result = runner.invoke(cli, ["check", "--config", str(tmp_path / "absent.yaml")])
    assert result.exit_code == EXIT_CONFIG


def test_derive_toda(runner):
    result = runner.invoke(cli, ["derive", "--flow", "0,0"])
    assert result.exit_code == EXIT_OK
    lines = result.stdout.strip().splitlines()
    assert [line.split(" = ")[0] for line in lines] == ["d u_0 / d t[0,0]", "d u_-1 / d t[0,0]"]


def test_derive_fractional_flow_falls_back_to_dressing_form(runner):
    result = runner.invoke(cli, ["derive", "--flow", "2,0", "--n", "2"])
    assert result.exit_code == EXIT_OK
    lines = result.stdout.strip().splitlines()
    assert lines[0].startswith("# t[2,0] is generated by a fractional power of L")
    assert lines[2].startswith("d w_1 / d t[2,0] = ")
    assert len(lines) == 2 + 3


@pytest.mark.parametrize("flow", ["x", "1", "5,0"])
def test_derive_bad_flow(runner, flow):
    result = runner.invoke(cli, ["derive", "--flow", flow])
    assert result.exit_code == EXIT_CONFIG


def test_broken_identity_exits_nonzero(runner, monkeypatch):
    def open_form():
        raise NotClosed("omega is not closed at t[1,0]")

    monkeypatch.setitem(
        SUITE_BUILDERS, "tau", lambda sx: iter([Check("tau", "closed", "d omega = 0", {}, open_form)])
    )
    result = runner.invoke(cli, ["check", "--suite", "tau", *SMALL])
    assert result.exit_code == EXIT_FAILED
    data = orjson.loads(result.stdout)
    assert data["summary"] == {"pass": 0, "fail": 1, "skipped": 0}
    assert data["records"][0]["witness"].startswith("NotClosed")


def test_asymmetric_window_is_a_config_error(runner):
    result = runner.invoke(cli, ["check", "--suite", "lax", "--window", "-2..4", *SMALL])
    assert result.exit_code == EXIT_CONFIG
