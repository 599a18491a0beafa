"""Command line behaviour: exit codes, output formats, file handling."""

import json
import shutil

import jsonschema
import pytest

from mlsysml import default_registry
from mlsysml.interpreter import SUPPORTED_STEREOTYPES

from conftest import DATA_DIR, FIXTURES, ROOT, SCHEMAS

UC1 = str(FIXTURES / "uc1.mlsysml")
UC1_CLEAN = str(FIXTURES / "uc1_clean.mlsysml")
UC2_CUSTOM = str(FIXTURES / "uc2_custom.mlsysml")
UC2_CLEAN = str(FIXTURES / "uc2_clean.mlsysml")
PROFILE_FILE = str(ROOT / "src" / "mlsysml" / "data" / "default.mlprofile")


def schema(name: str) -> dict:
    return json.loads((SCHEMAS / name).read_text(encoding="utf-8"))


# -- validate -------------------------------------------------------------------


def test_validate_reports_the_dangling_block(run_cli):
    code, out, err = run_cli("validate", UC1)
    assert code == 1
    assert out.splitlines() == [
        f"{UC1}:42:9: warning W-301: block 'Format_Date2' carries an ML "
        "stereotype but is never scheduled and feeds no scheduled block"
    ]
    assert err == ""


def test_validate_clean_model_is_silent(run_cli):
    code, out, err = run_cli("validate", UC1_CLEAN)
    assert (code, out, err) == (0, "", "")


def test_validate_custom_code_policy_flag(run_cli):
    code, out, _ = run_cli("validate", UC2_CUSTOM)
    assert code == 2
    assert "E-211" in out
    code, out, _ = run_cli("validate", UC2_CUSTOM, "--allow-custom-code")
    assert code == 1
    assert "W-302" in out and "E-211" not in out
    code, out, _ = run_cli("validate", UC2_CLEAN)
    assert (code, out) == (0, "")


def test_validate_json_output_matches_the_schema(run_cli):
    code, out, _ = run_cli("validate", UC1, "--format", "json")
    assert code == 1
    diags = json.loads(out)
    assert isinstance(diags, list) and len(diags) == 1
    jsonschema.validate(diags[0], schema("diagnostic.schema.json"))
    assert diags[0]["code"] == "W-301"
    assert diags[0]["line"] == 42 and diags[0]["column"] == 9


def test_validate_unparsable_model_exits_three(run_cli, tmp_path):
    bad = tmp_path / "broken.mlsysml"
    bad.write_text("model broken;\nstage Nowhere {\n", encoding="utf-8")
    code, out, _ = run_cli("validate", str(bad))
    assert code == 3
    assert "P-103" in out
    code, out, _ = run_cli("validate", str(bad), "--format", "json")
    assert code == 3
    parsed = json.loads(out)
    assert parsed and all(d["severity"] == "error" for d in parsed)


def test_usage_mistakes_exit_three(run_cli, tmp_path):
    code, _, err = run_cli("validate", str(tmp_path / "missing.mlsysml"))
    assert code == 3 and "no such model file" in err
    code, _, err = run_cli("validate")
    assert code == 3 and "model file is required" in err
    code, _, err = run_cli("validate", UC1, "--no-such-flag")
    assert code == 3
    code, _, err = run_cli("frobnicate")
    assert code == 3


def test_model_flag_form_equals_positional(run_cli):
    code, out, _ = run_cli("validate", "--model", UC1_CLEAN)
    assert (code, out) == (0, "")


# -- plan -----------------------------------------------------------------------


def test_plan_emits_schema_valid_json(run_cli):
    code, out, err = run_cli("plan", UC1_CLEAN)
    assert code == 0 and err == ""
    payload = json.loads(out)
    jsonschema.validate(payload, schema("plan.schema.json"))
    assert payload["source_model"] == "uc1_clean"
    assert len(payload["steps"]) == 11


def test_plan_writes_to_the_requested_file(run_cli, tmp_path):
    out_file = tmp_path / "plan.json"
    code, out, _ = run_cli("plan", UC1_CLEAN, "-o", str(out_file))
    assert code == 0 and out == ""
    assert json.loads(out_file.read_text())["source_model"] == "uc1_clean"


def test_plan_rejects_invalid_models(run_cli):
    code, out, err = run_cli("plan", UC2_CUSTOM)
    assert code == 2 and out == ""
    assert "E-211" in err and "did not validate" in err


# -- graph ----------------------------------------------------------------------


def test_graph_renders_all_three_edge_kinds(run_cli):
    code, out, err = run_cli("graph", UC1)
    assert code == 0 and err == ""
    assert out.startswith('digraph "uc1" {')
    assert '"CSV_1" -> "Format_Date";' in out
    assert '"CSV_1" -> "Format_Date2";' in out  # inherited input, resolved
    assert '"Format_Date2" -> "Format_Date" [style=dotted, arrowhead=empty];' in out
    assert '"Format_Date" -> "Merge_DF" [style=dashed];' in out


def test_graph_of_an_empty_model(run_cli, tmp_path):
    empty = tmp_path / "empty.mlsysml"
    empty.write_text("model empty;\n", encoding="utf-8")
    code, out, _ = run_cli("graph", str(empty))
    assert code == 0
    assert out == 'digraph "empty" {\n}\n'


def test_graph_requires_a_parsable_model(run_cli, tmp_path):
    bad = tmp_path / "bad.mlsysml"
    bad.write_text("block {", encoding="utf-8")
    code, _, err = run_cli("graph", str(bad))
    assert code == 3 and "P-101" in err


# -- gen ------------------------------------------------------------------------


def test_gen_writes_the_script_and_prints_its_path(run_cli, tmp_path):
    code, out, _ = run_cli("gen", UC1_CLEAN, "-o", str(tmp_path))
    assert code == 0
    target = tmp_path / "uc1_clean.py"
    assert out.strip() == str(target)
    compile(target.read_text(encoding="utf-8"), str(target), "exec")


def test_gen_notebook_target(run_cli, tmp_path):
    code, out, _ = run_cli("gen", UC1_CLEAN, "-t", "py-notebook", "-o", str(tmp_path))
    assert code == 0
    notebook = json.loads((tmp_path / "uc1_clean.ipynb").read_text(encoding="utf-8"))
    assert notebook["nbformat"] == 4
    assert len(notebook["cells"]) == 12  # preamble + one cell per plan step


def test_gen_is_deterministic_across_invocations(run_cli, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    run_cli("gen", UC1_CLEAN, "-o", str(first))
    run_cli("gen", UC1_CLEAN, "-o", str(second))
    assert (first / "uc1_clean.py").read_bytes() == (second / "uc1_clean.py").read_bytes()


# -- run ------------------------------------------------------------------------


def test_run_reports_metrics_and_skips(run_cli):
    code, out, err = run_cli("run", UC1_CLEAN, "--data-dir", str(DATA_DIR))
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, schema("run-result.schema.json"))
    assert report["model"] == "uc1_clean"
    assert report["metrics"]["MAE"] == pytest.approx(0.18042741358404157, abs=1e-12)
    assert report["metrics"]["MSE"] == pytest.approx(0.033741397425184505, abs=1e-12)
    assert report["metrics"]["R2"] == pytest.approx(0.9933666977538955, abs=1e-12)
    assert report["skipped"] == [
        {
            "block": "Random_Forest",
            "reason": "no interpreter support for stereotype 'RandomForestRegressor'",
        }
    ]
    assert "skipped Random_Forest" in err


def test_run_seed_flag_changes_the_split(run_cli):
    _, out_a, _ = run_cli("run", UC1_CLEAN, "--data-dir", str(DATA_DIR), "--seed", "7")
    _, out_b, _ = run_cli("run", UC1_CLEAN, "--data-dir", str(DATA_DIR))
    assert json.loads(out_a)["metrics"]["MAE"] != json.loads(out_b)["metrics"]["MAE"]


def test_run_seed_env_variable(run_cli, monkeypatch):
    monkeypatch.setenv("MLSYSML_SEED", "7")
    _, out_env, _ = run_cli("run", UC1_CLEAN, "--data-dir", str(DATA_DIR))
    monkeypatch.delenv("MLSYSML_SEED")
    _, out_flag, _ = run_cli("run", UC1_CLEAN, "--data-dir", str(DATA_DIR), "--seed", "7")
    assert json.loads(out_env)["metrics"] == json.loads(out_flag)["metrics"]


def test_run_data_dir_defaults_to_the_model_directory(run_cli, tmp_path):
    for name in ("station.csv", "forecast.csv"):
        shutil.copy(DATA_DIR / name, tmp_path / name)
    model = tmp_path / "uc1_clean.mlsysml"
    shutil.copy(UC1_CLEAN, model)
    code, out, _ = run_cli("run", str(model))
    assert code == 0
    assert json.loads(out)["metrics"]["MAE"] == pytest.approx(
        0.18042741358404157, abs=1e-12
    )


def test_run_missing_data_exits_three(run_cli, tmp_path):
    model = tmp_path / "uc1_clean.mlsysml"
    shutil.copy(UC1_CLEAN, model)
    code, _, err = run_cli("run", str(model))
    assert code == 3 and "run failed" in err


def test_run_writes_the_report_file(run_cli, tmp_path):
    out_file = tmp_path / "report.json"
    code, out, _ = run_cli(
        "run", UC1_CLEAN, "--data-dir", str(DATA_DIR), "-o", str(out_file)
    )
    assert code == 0 and out == ""
    assert "MAE" in json.loads(out_file.read_text())["metrics"]


# -- explain and info -------------------------------------------------------------


def test_explain_describes_a_code(run_cli):
    code, out, _ = run_cli("explain", "W-301")
    assert code == 0
    assert "W-301" in out and len(out.strip()) > 40


def test_explain_rejects_unknown_codes(run_cli):
    code, _, err = run_cli("explain", "E-999")
    assert code == 3 and "E-999" in err


def test_info_text_report(run_cli):
    code, out, _ = run_cli("info")
    assert code == 0
    assert f"profile sha256: {default_registry().source_hash}" in out
    assert "templates [py-script]: 21" in out
    assert "templates [py-notebook]: 21" in out


def test_info_json_report(run_cli):
    code, out, _ = run_cli("info", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    registry = default_registry()
    assert payload["profile"]["sha256"] == registry.source_hash
    concrete = sorted(
        sd.name for sd in registry.block_stereotypes(include_abstract=False)
    )
    assert payload["block_stereotypes"] == concrete
    assert payload["templates"]["py-script"] == concrete
    assert payload["templates"]["py-notebook"] == concrete
    assert payload["interpreter_supported"] == sorted(SUPPORTED_STEREOTYPES)


# -- profile resolution ------------------------------------------------------------


def test_profile_flag_loads_an_explicit_file(run_cli):
    code, out, _ = run_cli("info", "-p", PROFILE_FILE, "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["profile"]["sha256"] == default_registry().source_hash
    assert payload["profile"]["path"] == PROFILE_FILE


def test_profile_env_variable_is_honoured(run_cli, monkeypatch, tmp_path):
    monkeypatch.setenv("MLSYSML_PROFILE", str(tmp_path / "gone.mlprofile"))
    code, _, err = run_cli("info")
    assert code == 3 and "profile" in err
    # an explicit flag outranks the environment
    code, _, _ = run_cli("info", "-p", PROFILE_FILE)
    assert code == 0
