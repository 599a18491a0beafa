"""Template rendering: coverage, determinism, injection inertness, formats."""

import ast
import json
import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlsysml import generate, load_pack, render, template_param_index, write_notebook, write_script
from mlsysml.codegen import (
    default_templates_root,
    output_filename,
    render_step,
    step_variable,
)
from mlsysml.errors import (
    CodegenError,
    EscapingError,
    MissingTemplate,
    SerializationError,
    UnboundPlaceholder,
)
from mlsysml.scheduler import PipelinePlan, PlanStep


@pytest.fixture(scope="module")
def script_pack():
    return load_pack("py-script")


@pytest.fixture(scope="module")
def notebook_pack():
    return load_pack("py-notebook")


def make_plan(*steps: PlanStep) -> PipelinePlan:
    return PipelinePlan(source_model="probe", steps=steps, profile_hash="0" * 64)


def csv_step(index: int = 0, **params) -> PlanStep:
    merged = {"path": "x.csv", "Encoding": "UTF-8", "Delimiter": ",", "schema": ()}
    merged.update(params)
    return PlanStep(
        index=index, block=f"Load_{index}", function="CSV",
        stage="DataUnderstanding", params=merged,
    )


def test_pack_covers_every_concrete_block_stereotype(script_pack, registry):
    concrete = {sd.name for sd in registry.block_stereotypes(include_abstract=False)}
    assert set(script_pack.templates) == concrete
    assert len(script_pack.templates) == 21
    assert script_pack.preamble


def test_notebook_pack_mirrors_the_script_pack(script_pack, notebook_pack):
    assert notebook_pack.target == "py-notebook"
    assert set(notebook_pack.templates) == set(script_pack.templates)


def test_template_param_index_classifies_placeholders(script_pack):
    index = template_param_index(script_pack)
    assert "MergeOn" in index["DataFrame_Merge"].names
    assert not index["DataFrame_Merge"].accepts_extras
    assert index["TrainTestSplit"].accepts_extras
    assert "code" in index["CustomCode"].names
    # builtins never count as parameters
    assert "out" not in index["CSV"].names
    assert "inputs" not in index["CustomCode"].names


def test_render_produces_one_cell_per_step(uc1_clean_plan, script_pack):
    document = render(uc1_clean_plan, script_pack, "py-script")
    assert len(document.cells) == len(uc1_clean_plan.steps)
    assert len(document.sources) == len(uc1_clean_plan.steps) + 1
    for step, (block, code) in zip(uc1_clean_plan.steps, document.cells):
        assert block == step.block
        first, second = code.split("\n")[:2]
        assert first == f"# --- step {step.index}: {step.block} ({step.function}, {step.stage}) ---"
        assert second == f"# model: uc1_clean | profile sha256: {uc1_clean_plan.profile_hash}"


def test_generated_script_compiles_and_is_deterministic(uc1_clean_plan):
    name_a, script_a = generate(uc1_clean_plan, "py-script")
    name_b, script_b = generate(uc1_clean_plan, "py-script")
    assert (name_a, script_a) == (name_b, script_b)
    assert name_a == "uc1_clean.py"
    compile(script_a, name_a, "exec")


def test_generated_notebook_is_valid_and_deterministic(uc1_clean_plan):
    name_a, nb_a = generate(uc1_clean_plan, "py-notebook")
    name_b, nb_b = generate(uc1_clean_plan, "py-notebook")
    assert (name_a, nb_a) == (name_b, nb_b)
    assert name_a == "uc1_clean.ipynb"
    notebook = json.loads(nb_a)
    assert notebook["nbformat"] == 4
    assert len(notebook["cells"]) == len(uc1_clean_plan.steps) + 1
    assert all(c["cell_type"] == "code" for c in notebook["cells"])
    joined = "".join("".join(c["source"]) + "\n" for c in notebook["cells"])
    compile(joined, name_a, "exec")


def test_writers_reject_the_wrong_target(uc1_clean_plan, script_pack, notebook_pack):
    script_doc = render(uc1_clean_plan, script_pack, "py-script")
    notebook_doc = render(uc1_clean_plan, notebook_pack, "py-notebook")
    with pytest.raises(SerializationError):
        write_notebook(script_doc)
    with pytest.raises(SerializationError):
        write_script(notebook_doc)
    with pytest.raises(CodegenError):
        render(uc1_clean_plan, script_pack, "py-notebook")
    with pytest.raises(CodegenError):
        generate(uc1_clean_plan, "prolog")


def test_step_variables_are_sanitized_identifiers():
    step = PlanStep(index=3, block="Weird-Name.x", function="CSV", stage="Modeling")
    assert step_variable(step) == "r3_Weird_Name_x"


HOSTILE = (
    "'); import os  # boom",
    '"]; raise SystemExit(1) #',
    "line\nbreak",
    "quote ' and \" mix",
    "back\\slash",
    "{{path}}",
    "\"\"\"",
)


@pytest.mark.parametrize("payload", HOSTILE)
def test_parameters_cannot_inject_code(script_pack, payload):
    plan = make_plan(csv_step(path=payload))
    body = render_step(script_pack.template_for("CSV"), plan.steps[0], plan)
    tree = ast.parse(body)
    assert len(tree.body) == 1
    assign = tree.body[0]
    assert isinstance(assign, ast.Assign)
    call = assign.value
    assert isinstance(call, ast.Call) and call.func.id == "read_table"
    inner = call.args[0]
    assert isinstance(inner, ast.Call) and inner.func.id == "data_path"
    assert inner.args[0].value == payload


@settings(max_examples=60, deadline=None)
@given(st.text(max_size=80))
def test_string_literals_round_trip_through_rendering(payload):
    pack = load_pack("py-script")
    source = csv_step(index=0)
    metric = PlanStep(
        index=1, block="Score", function="MAE", stage="Evaluation",
        input_steps=(0,), params={"text": payload},
    )
    plan = make_plan(source, metric)
    body = render_step(pack.template_for("MAE"), metric, plan)
    tree = ast.parse(body)
    assert len(tree.body) == 1
    literal = tree.body[0].value.args[2]
    assert isinstance(literal, ast.Constant)
    assert literal.value == payload


def test_substitution_is_single_pass(script_pack):
    plan = make_plan(csv_step(path="{{Delimiter}}"))
    body = render_step(script_pack.template_for("CSV"), plan.steps[0], plan)
    # the placeholder-shaped value must stay an inert string literal
    assert "data_path('{{Delimiter}}')" in body


def test_unbound_placeholder_is_reported(script_pack):
    bare = PlanStep(index=0, block="Norm", function="Normalization", stage="PreProcessing")
    with pytest.raises(UnboundPlaceholder):
        render_step(script_pack.template_for("Normalization"), bare, make_plan(bare))


def test_raw_placeholders_must_be_strings(script_pack):
    step = PlanStep(
        index=0, block="Custom", function="CustomCode",
        stage="PreProcessing", params={"code": 123},
    )
    with pytest.raises(EscapingError):
        render_step(script_pack.template_for("CustomCode"), step, make_plan(step))


def test_extras_render_as_a_dict_literal(script_pack):
    source = csv_step(index=0)
    split = PlanStep(
        index=1, block="Split", function="TrainTestSplit", stage="Modeling",
        input_steps=(0,), params={"ratio": 0.5}, extras={"seed": 7},
    )
    body = render_step(script_pack.template_for("TrainTestSplit"), split, make_plan(source, split))
    assert "pick_seed({'seed': 7})" in body


def test_blackbox_steps_fall_back_to_a_stub(script_pack):
    source = csv_step(index=0)
    hidden = PlanStep(
        index=1, block="Mystery", function="Hidden_Cleaner", stage="PreProcessing",
        input_steps=(0,), blackbox=True,
    )
    document = render(make_plan(source, hidden), script_pack, "py-script")
    stub = document.cells[1][1]
    assert "# TODO:" in stub
    assert "Hidden_Cleaner" in stub
    assert "r1_Mystery = r0_Load_0" in stub

    exposed = PlanStep(
        index=1, block="Mystery", function="Hidden_Cleaner", stage="PreProcessing",
        input_steps=(0,), blackbox=False,
    )
    with pytest.raises(MissingTemplate):
        render(make_plan(source, exposed), script_pack, "py-script")


def test_custom_templates_root_overrides_the_pack(uc1_clean_plan, tmp_path):
    root = tmp_path / "templates"
    shutil.copytree(default_templates_root(), root)
    target = root / "py-script" / "MAE.tpl"
    target.write_text(target.read_text().replace("mean_absolute_error", "broken_metric"))
    _, stock = generate(uc1_clean_plan, "py-script")
    _, patched = generate(uc1_clean_plan, "py-script", templates_root=root)
    assert "broken_metric" in patched
    assert "broken_metric" not in stock


def test_output_filenames_follow_the_model_name(uc1_clean_plan):
    assert output_filename(uc1_clean_plan, "py-script") == "uc1_clean.py"
    assert output_filename(uc1_clean_plan, "py-notebook") == "uc1_clean.ipynb"
