"""
End-to-end tests for the swp-verify command line
"""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from src.cli.builder import format_location, load_config
from src.cli.main import main
from src.cli.models import RunReport
from src.cli.report import EXIT_ERROR, EXIT_FLAG, EXIT_PASS, EXIT_SKIP, exit_code
from src.verification.models import Verdict

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def unit_line(coord, entry="1"):
    return {"dim": 1, "coords": [coord], "metric": [[entry]], "box": [[-1.0, 1.0]]}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration and return its path"""

    def write(config, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(config))
        return path

    return write


def invoke(runner, config_path, out_dir, *args):
    return runner.invoke(main, ["--config", str(config_path), "--out", str(out_dir), *args])


def load_report(out_dir):
    return json.loads((out_dir / "report.json").read_text())


# ===========================
# Exit codes
# ===========================


def test_flat_comparison_passes(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "flat3"},
        "tasks": [{"task": "compare-closedform", "identities": ["connection", "ricci"]}],
        "grid": 3,
    })
    out = tmp_path / "out"
    result = invoke(runner, path, out)
    assert result.exit_code == EXIT_PASS, result.output
    assert (out / "report.json").exists()
    assert (out / "report.txt").exists()
    assert "exit code 0" in result.output


def test_hyperbolic_soliton_check_passes(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "hyp3"},
        "soliton": {"X": 0, "lambda": -2.0},
        "tasks": ["soliton-check"],
        "grid": 3,
    })
    out = tmp_path / "out"
    result = invoke(runner, path, out)
    assert result.exit_code == EXIT_PASS, result.output
    report = load_report(out)
    assert report["reports"][0]["case_id"] == "soliton-check"
    assert report["reports"][0]["checks"][0]["verdict"] == "PASS"


def test_sign_flip_exits_with_flag(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "desitter-grw"},
        "tasks": [{"task": "compare-closedform", "identities": ["ricci"]}],
        "grid": 3,
    })
    out = tmp_path / "out"
    result = invoke(runner, path, out)
    assert result.exit_code == EXIT_FLAG
    ledger = load_report(out)["reports"][0]["ledger"]
    assert [entry["identity"] for entry in ledger] == ["ricci(1,1)"]


def test_failed_hypothesis_exits_with_skip(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "hyp3"},
        "soliton": {"X": "0", "lambda": -1.0},
        "tasks": [{"task": "verify-theorem", "id": "T3.2"}],
        "grid": 3,
    })
    result = invoke(runner, path, tmp_path / "out")
    assert result.exit_code == EXIT_SKIP


def test_theorem_with_inline_field(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "flat3"},
        "fields": {"T": {"vector": [["0"], ["0"], ["1"]]}},
        "soliton": {"X": "T", "lambda": 0.0, "rho": 0.0},
        "tasks": [{"task": "verify-theorem", "id": "T3.5(i)"}, "curvature-dump"],
        "grid": 3,
    })
    out = tmp_path / "out"
    result = invoke(runner, path, out)
    assert result.exit_code == EXIT_PASS, result.output
    report = load_report(out)
    assert report["reports"][0]["case_id"] == "T3.5(i)"
    assert len(report["dumps"]) == 1
    assert len(report["dumps"][0]["points"]) == 27
    assert report["dumps"][0]["bianchi"]["verdict"] == "PASS"


# ===========================
# Configuration errors
# ===========================


def test_bad_metric_expression_names_its_path(runner, write_config, tmp_path):
    path = write_config({
        "instance": {
            "kind": "generic",
            "factors": [unit_line("x", "exp("), unit_line("y"), unit_line("z")],
            "f": "1",
            "h": "1",
        },
        "tasks": ["curvature-dump"],
    })
    out = tmp_path / "out"
    result = invoke(runner, path, out)
    assert result.exit_code == EXIT_ERROR
    assert "instance.factors[0].metric[0][0]" in result.output
    assert not (out / "report.json").exists()


def test_unknown_keys_are_rejected(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "flat3"},
        "tasks": ["curvature-dump"],
        "tolerance": 1e-3,
    })
    result = invoke(runner, path, tmp_path / "out")
    assert result.exit_code == EXIT_ERROR
    assert "tolerance" in result.output


def test_unknown_catalog_name(runner, write_config, tmp_path):
    path = write_config({"instance": {"catalog": "torus"}, "tasks": ["curvature-dump"]})
    result = invoke(runner, path, tmp_path / "out")
    assert result.exit_code == EXIT_ERROR
    assert "instance.catalog" in result.output


def test_theorem_kind_mismatch_is_an_error(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "mink-static"},
        "soliton": {"X": 0, "lambda": 0.0},
        "tasks": [{"task": "verify-theorem", "id": "T3.2"}],
        "grid": 2,
    })
    result = invoke(runner, path, tmp_path / "out")
    assert result.exit_code == EXIT_ERROR


def test_missing_config_file(runner, tmp_path):
    result = invoke(runner, tmp_path / "absent.json", tmp_path / "out")
    assert result.exit_code == EXIT_ERROR


def test_unwritable_output_directory(runner, write_config, tmp_path):
    """A report directory that cannot be created is an error, not a traceback"""
    path = write_config({"instance": {"catalog": "flat3"}, "tasks": ["curvature-dump"],
                         "grid": 2})
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    result = invoke(runner, path, blocker / "out")
    assert result.exit_code == EXIT_ERROR
    assert "--out" in result.output
    assert "cannot write reports" in result.output


def test_config_flag_required(runner):
    result = runner.invoke(main, [])
    assert result.exit_code == EXIT_ERROR
    assert "--config" in result.output


# ===========================
# Flags and reports
# ===========================


def test_catalog_listing(runner):
    result = runner.invoke(main, ["--catalog"])
    assert result.exit_code == 0
    for name in ["flat3", "hyp3", "mink-static", "desitter-grw", "rand-riemann"]:
        assert name in result.output


def test_cli_flags_override_json(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "flat3"},
        "tasks": ["curvature-dump"],
        "grid": 4,
        "tol": 1e-3,
    })
    out = tmp_path / "out"
    result = invoke(runner, path, out, "--grid", "2", "--tol", "1e-9", "--format", "json")
    assert result.exit_code == EXIT_PASS, result.output
    report = load_report(out)
    assert report["per_dim"] == 2
    assert report["tolerance"] == 1e-9
    assert len(report["dumps"][0]["points"]) == 8
    assert not (out / "report.txt").exists()


def test_json_report_validates_and_is_deterministic(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "rand-riemann"},
        "fields": {"X": {"vector": [["x"], ["y"], ["z"]]}},
        "tasks": [{"task": "compare-closedform", "field": "X"}],
        "grid": 2,
        "seed": 7,
    })
    first, second = tmp_path / "a", tmp_path / "b"
    assert invoke(runner, path, first, "--quiet").exit_code == EXIT_FLAG
    assert invoke(runner, path, second, "--quiet").exit_code == EXIT_FLAG

    texts = [(out / "report.json").read_text() for out in (first, second)]
    reports = [RunReport.model_validate_json(text) for text in texts]
    assert reports[0].seed == 7
    assert reports[0].exit_code == EXIT_FLAG
    dumped = [r.model_dump(exclude={"generated_at"}) for r in reports]
    assert dumped[0] == dumped[1]


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.name)
def test_sample_config_runs_are_deterministic(runner, path, tmp_path):
    """Two runs of a shipped configuration agree on everything but the timestamp"""
    first, second = tmp_path / "a", tmp_path / "b"
    codes = [invoke(runner, path, out, "--quiet").exit_code for out in (first, second)]
    assert codes[0] == codes[1]
    assert codes[0] in (EXIT_PASS, EXIT_FLAG, EXIT_SKIP)

    reports = [RunReport.model_validate_json((out / "report.json").read_text())
               for out in (first, second)]
    assert reports[0].exit_code == codes[0]
    dumped = [r.model_dump(exclude={"generated_at"}) for r in reports]
    assert dumped[0] == dumped[1]


def test_json_report_reserializes_byte_for_byte(runner, write_config, tmp_path):
    path = write_config({
        "instance": {"catalog": "desitter-grw"},
        "tasks": ["curvature-dump", {"task": "compare-closedform", "identities": ["ricci"]}],
        "grid": 2,
    })
    out = tmp_path / "out"
    assert invoke(runner, path, out, "--quiet", "--format", "json").exit_code == EXIT_FLAG
    text = (out / "report.json").read_text(encoding="utf-8")
    assert RunReport.model_validate_json(text).model_dump_json(indent=2) == text


def test_quiet_suppresses_report_echo(runner, write_config, tmp_path):
    path = write_config({"instance": {"catalog": "flat3"}, "tasks": ["curvature-dump"],
                         "grid": 2})
    result = invoke(runner, path, tmp_path / "out", "--quiet")
    assert result.exit_code == EXIT_PASS
    assert "exit code" not in result.output


# ===========================
# Helpers
# ===========================


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.name)
def test_sample_configs_validate(path):
    assert load_config(path).tasks


def test_format_location():
    assert format_location(("instance", "inline", "factors", 0, "metric", 0, 0)) == \
        "instance.factors[0].metric[0][0]"
    assert format_location(("tasks", 1, "task-object", "id")) == "tasks[1].id"
    assert format_location(()) == "$"


@pytest.mark.parametrize("verdicts, expected", [
    ([], EXIT_PASS),
    ([Verdict.PASS, Verdict.PASS], EXIT_PASS),
    ([Verdict.PASS, Verdict.SKIP], EXIT_SKIP),
    ([Verdict.SKIP, Verdict.FLAG, Verdict.PASS], EXIT_FLAG),
])
def test_exit_code_rule(verdicts, expected):
    assert exit_code(verdicts) == expected


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
