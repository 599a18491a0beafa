"""Cross-check harness tests.

The harness only ever talks to the toolchain through its command line, so
these tests exercise exactly what a CI job would see: real subprocesses,
real temp directories, real report JSON.
"""

import json
import shutil
import subprocess
from pathlib import Path

import pytest
from jsonschema import validate

from mlsysml_harness import (
    DEFAULT_TOLERANCE,
    IncompleteTemplatePack,
    MissingMetricsOutput,
    NonZeroExit,
    ToolchainUnavailable,
    assert_template_coverage,
    compare_metrics,
    cross_check,
    execute_generated,
    find_toolchain,
)
from mlsysml_harness.cli import main

REPO = Path(__file__).resolve().parents[2]
FIXTURES = REPO / "fixtures"
DATA_DIR = FIXTURES / "data"
TEMPLATE_ROOT = REPO / "src" / "mlsysml" / "data" / "templates"

UC1 = FIXTURES / "uc1.mlsysml"
UC1_CLEAN = FIXTURES / "uc1_clean.mlsysml"
UC2_CLEAN = FIXTURES / "uc2_clean.mlsysml"
COSINE = FIXTURES / "cosine.mlsysml"

REPORT_SCHEMA = json.loads(
    (REPO / "docs" / "schemas" / "harness-report.schema.json").read_text(
        encoding="utf-8"
    )
)


@pytest.fixture(scope="session")
def cli():
    return find_toolchain()

CSV_ONLY_MODEL = """\
model csvonly;

stage DataUnderstanding {
  block Station : CSV {
    path = "station.csv";
    Delimiter = ";";
    attr date: String;
    attr temperature: Float;
    attr humidity: Float;
  }
}

workflow Load {
  state LoadStation -> block Station;
  initial LoadStation;
  final LoadStation;
}
"""


@pytest.fixture(scope="session")
def uc1_report(cli):
    return cross_check(UC1_CLEAN, DATA_DIR, 42, cli=cli)


@pytest.fixture(scope="session")
def uc2_report(cli):
    return cross_check(UC2_CLEAN, DATA_DIR, 42, cli=cli)


def mutated_pack(tmp_path, edit=None, remove=None):
    """Copy the shipped template pack and damage it in a controlled way."""
    root = tmp_path / "templates"
    shutil.copytree(TEMPLATE_ROOT, root)
    tpl = root / "py-script" / "MAE.tpl"
    if edit:
        old, new = edit
        body = tpl.read_text(encoding="utf-8")
        assert old in body
        tpl.write_text(body.replace(old, new), encoding="utf-8")
    if remove:
        (root / "py-script" / remove).unlink()
    return root


# -- toolchain discovery ------------------------------------------------


def test_find_toolchain_answers_version(cli):
    probe = subprocess.run(
        [*cli, "--version"], capture_output=True, text=True
    )
    assert probe.returncode == 0
    assert probe.stdout.strip()


def test_env_override_pointing_nowhere_raises(monkeypatch):
    monkeypatch.setenv("MLSYSML_CLI", "/nonexistent/mlsysml-tool")
    with pytest.raises(ToolchainUnavailable):
        find_toolchain()


# -- template pack coverage ---------------------------------------------


def test_every_concrete_stereotype_has_a_template(cli):
    names = assert_template_coverage(cli)
    assert len(names) == 21
    assert names == sorted(names)
    assert {"CSV", "MAE", "LinearRegression", "CosineDistance"} <= set(names)


def test_missing_template_fails_the_coverage_check(cli, tmp_path):
    root = mutated_pack(tmp_path, remove="MAE.tpl")
    with pytest.raises(IncompleteTemplatePack) as err:
        assert_template_coverage(cli, root)
    assert err.value.missing == ["MAE"]
    assert err.value.extra == []


# -- cross-check on the shipped fixtures --------------------------------


def test_weather_model_cross_check_passes(cli):
    report = cross_check(UC1, DATA_DIR, 42, cli=cli)
    assert report.passed and report.status == "pass"
    assert set(report.deltas) == {"MAE"}
    assert report.deltas["MAE"] <= DEFAULT_TOLERANCE
    assert report.only_generated == ()
    assert report.only_interpreted == ()


def test_full_metric_model_deltas_cover_all_three(uc1_report):
    assert uc1_report.passed
    assert set(uc1_report.deltas) == {"MAE", "MSE", "R2"}
    assert all(d <= DEFAULT_TOLERANCE for d in uc1_report.deltas.values())
    assert uc1_report.model == "uc1_clean"
    assert uc1_report.seed == 42


def test_report_json_matches_the_schema(uc1_report):
    payload = uc1_report.to_json()
    validate(payload, REPORT_SCHEMA)
    # dumps() must round-trip to the same payload
    assert json.loads(uc1_report.dumps()) == payload


def test_cosine_model_cross_check_passes(cli):
    report = cross_check(COSINE, DATA_DIR, 42, cli=cli)
    assert report.passed
    assert set(report.deltas) == {"CosineDistance"}
    assert report.deltas["CosineDistance"] <= DEFAULT_TOLERANCE


def test_classifier_model_passes_on_generated_metrics_alone(uc2_report):
    # The interpreter skips the pretrained classifier chain, so the only
    # comparison material comes from the generated side.
    assert uc2_report.passed
    assert uc2_report.deltas == {}
    assert uc2_report.interpreter_metrics == {}
    assert uc2_report.only_generated == ("CosineDistance",)
    distance = uc2_report.generated_metrics["CosineDistance"]
    assert 0.0 <= distance <= 1.0


def test_csv_only_model_is_trivially_green(cli, tmp_path):
    model = tmp_path / "csvonly.mlsysml"
    model.write_text(CSV_ONLY_MODEL, encoding="utf-8")
    report = cross_check(model, DATA_DIR, 42, cli=cli)
    assert report.passed
    assert report.generated_metrics == {}
    assert report.interpreter_metrics == {}
    assert report.deltas == {}


def test_wrong_metric_template_flips_the_verdict(cli, tmp_path):
    root = mutated_pack(
        tmp_path,
        edit=(
            "mean_absolute_error(*scored(",
            "0.5 + mean_absolute_error(*scored(",
        ),
    )
    report = cross_check(UC1_CLEAN, DATA_DIR, 42, cli=cli, templates_root=root)
    assert not report.passed and report.status == "fail"
    assert report.deltas["MAE"] == pytest.approx(0.5, abs=1e-9)
    # the untouched templates still agree
    assert report.deltas["MSE"] <= DEFAULT_TOLERANCE
    assert report.deltas["R2"] <= DEFAULT_TOLERANCE
    validate(report.to_json(), REPORT_SCHEMA)


# -- executing generated scripts ----------------------------------------


def generate_script(cli, model, out_dir, templates_root=None):
    command = [*cli, "gen", str(model), "-o", str(out_dir)]
    if templates_root:
        command += ["--templates", str(templates_root)]
    proc = subprocess.run(command, capture_output=True, text=True, check=True)
    return proc.stdout.strip().splitlines()[-1]


def test_empty_plan_script_reports_no_metrics(cli, tmp_path):
    model = tmp_path / "empty.mlsysml"
    model.write_text("model empty;\n", encoding="utf-8")
    script = generate_script(cli, model, tmp_path)
    assert execute_generated(script, tmp_path, 42) == {}


def test_script_failure_surfaces_stderr(cli, tmp_path):
    script = generate_script(cli, UC1_CLEAN, tmp_path)
    bare = tmp_path / "no-data"
    bare.mkdir()
    with pytest.raises(NonZeroExit) as err:
        execute_generated(script, bare, 42)
    assert err.value.returncode != 0
    assert "station.csv" in err.value.stderr_excerpt


def test_script_without_metrics_output_is_an_error(tmp_path):
    silent = tmp_path / "silent.py"
    silent.write_text('print("no metrics here")\n', encoding="utf-8")
    with pytest.raises(MissingMetricsOutput) as err:
        execute_generated(silent, tmp_path, 42)
    assert err.value.expected_path.endswith("metrics.json")


def test_missing_script_path_is_an_error(tmp_path):
    with pytest.raises(MissingMetricsOutput):
        execute_generated(tmp_path / "ghost.py", tmp_path, 42)


# -- report construction ------------------------------------------------


def test_compare_metrics_partitions_the_keys():
    report = compare_metrics(
        "demo",
        {"a": 1.0, "b": 2.0},
        {"a": 1.0 + 5e-7, "c": 3.0},
    )
    assert report.passed
    assert report.deltas == {"a": pytest.approx(5e-7)}
    assert report.only_generated == ("b",)
    assert report.only_interpreted == ("c",)
    validate(report.to_json(), REPORT_SCHEMA)


def test_compare_metrics_fails_past_the_tolerance():
    report = compare_metrics("demo", {"a": 1.0}, {"a": 1.001})
    assert report.status == "fail"
    assert not report.passed
    validate(report.to_json(), REPORT_SCHEMA)


def test_empty_overlap_passes_trivially():
    report = compare_metrics("demo", {"x": 1.0}, {})
    assert report.passed
    assert report.deltas == {}


# -- command line --------------------------------------------------------


def test_cli_pass_prints_a_schema_valid_report(capsys):
    code = main([str(UC1_CLEAN), "--data-dir", str(DATA_DIR)])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    validate(payload, REPORT_SCHEMA)
    assert payload["status"] == "pass"


def test_cli_fail_exit_code_and_report_file(tmp_path, capsys):
    root = mutated_pack(
        tmp_path,
        edit=(
            "mean_absolute_error(*scored(",
            "0.5 + mean_absolute_error(*scored(",
        ),
    )
    out = tmp_path / "report.json"
    code = main(
        [
            str(UC1_CLEAN),
            "--data-dir",
            str(DATA_DIR),
            "--templates",
            str(root),
            "-o",
            str(out),
        ]
    )
    assert code == 1
    assert capsys.readouterr().out == ""
    payload = json.loads(out.read_text(encoding="utf-8"))
    validate(payload, REPORT_SCHEMA)
    assert payload["status"] == "fail"


def test_cli_reports_harness_errors_on_stderr(tmp_path, capsys):
    code = main([str(tmp_path / "ghost.mlsysml")])
    assert code == 3
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err.startswith("harness error:")
