"""Shared fixtures: parsed models, plans, a CLI runner, a model generator."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from mlsysml import (
    ValidationConfig,
    default_registry,
    derive_plan,
    load_pack,
    parse_model,
    template_param_index,
)
from mlsysml.cli import main as cli_main
from mlsysml.model import PRIMITIVE_TYPES, STAGES

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
DATA_DIR = FIXTURES / "data"
SCHEMAS = ROOT / "docs" / "schemas"


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def fixture_source():
    def load(name: str) -> str:
        return (FIXTURES / f"{name}.mlsysml").read_text(encoding="utf-8")

    return load


@pytest.fixture(scope="session")
def parse_fixture(registry, fixture_source):
    """Parse a shipped fixture; fails the test on any parse diagnostic."""

    def parse(name: str):
        path = FIXTURES / f"{name}.mlsysml"
        result = parse_model(fixture_source(name), registry, file=str(path))
        assert result.model is not None, [d.format_human() for d in result.diagnostics]
        return result.model

    return parse


@pytest.fixture(scope="session")
def uc1_model(parse_fixture):
    return parse_fixture("uc1")


@pytest.fixture(scope="session")
def uc1_clean_model(parse_fixture):
    return parse_fixture("uc1_clean")


@pytest.fixture(scope="session")
def uc1_clean_plan(uc1_clean_model, registry):
    return derive_plan(uc1_clean_model, registry)


@pytest.fixture(scope="session")
def template_index():
    return template_param_index(load_pack("py-script"))


@pytest.fixture(scope="session")
def full_config(template_index):
    """The validator configuration the CLI uses by default."""
    return ValidationConfig(custom_code_policy="error", template_params=template_index)


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit code, stdout, stderr)."""

    def invoke(*argv: str):
        capsys.readouterr()
        code = cli_main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke


# -- random model generation --------------------------------------------------

_BLOCK_STEREOTYPES = (
    "CSV",
    "Image",
    "SQL",
    "API",
    "DateConversion",
    "DataFrame_Merge",
    "Normalization",
    "MissingValues",
    "ImageScale",
    "BlackBox_Outliers",
    "CustomCode",
    "LinearRegression",
    "RandomForestRegressor",
    "TrainTestSplit",
    "PretrainedModelClassifier",
    "Predict",
    "MAE",
    "MSE",
    "R2",
    "CosineDistance",
)

_ATTR_STEREOTYPES = {
    "Datetime": (("format", "str"),),
    "Regex-text": (("pattern", "str"),),
    "Integer-range": (("min", "int"), ("max", "int")),
    "Float-range": (("min", "float"), ("max", "float")),
}

_TRICKY_STRINGS = (
    "plain",
    "with \"quotes\" inside",
    "back\\slash",
    "line\nbreak",
    "tab\there",
    "%d.%m.%Y",
    "",
    "trailing space ",
)


def _literal(rng: random.Random, form: str):
    if form == "str":
        return rng.choice(_TRICKY_STRINGS)
    if form == "int":
        return rng.randint(-1000, 1000)
    if form == "float":
        return round(rng.uniform(-100.0, 100.0), 4)
    if form == "bool":
        return rng.random() < 0.5
    return [rng.choice(_TRICKY_STRINGS) for _ in range(rng.randint(1, 3))]


def _spec_literal(rng: random.Random, kind) -> object:
    base = kind.base
    if base == "int":
        return _literal(rng, "int")
    if base == "float":
        return _literal(rng, "float")
    if base == "bool":
        return _literal(rng, "bool")
    if base == "list":
        return _literal(rng, "list")
    return _literal(rng, "str")


def random_model_source(rng: random.Random, registry, index: int) -> str:
    """A structurally valid model with randomized shape and literals.

    Stays inside what the grammar accepts (unique names, references to
    earlier declarations only, one ML stereotype per block, well-formed
    literals for declared attributes); semantic warnings are fair game.
    """
    lines = [f"model gen_{index};"]
    block_count = rng.randint(0, 8)
    names = [f"b{i}" for i in range(block_count)]
    stage_of = {name: rng.choice(STAGES[:5]) for name in names}

    for stage in STAGES[:5]:
        members = [n for n in names if stage_of[n] == stage]
        if not members and rng.random() < 0.7:
            continue
        lines.append(f"stage {stage} {{")
        for name in members:
            earlier = names[: names.index(name)]
            header = f"  block {name}"
            stereotype = None
            if rng.random() < 0.8:
                stereotype = rng.choice(_BLOCK_STEREOTYPES)
                header += f" : {stereotype}"
            if earlier and rng.random() < 0.25:
                header += f" extends {rng.choice(earlier)}"
            lines.append(header + " {")
            for a in range(rng.randint(0, 3)):
                declared = rng.choice(PRIMITIVE_TYPES)
                attr_line = f"    attr a{a}: {declared}"
                if rng.random() < 0.4:
                    at_name = rng.choice(sorted(_ATTR_STEREOTYPES))
                    pairs = ", ".join(
                        f"{field} = {_format(_literal(rng, form))}"
                        for field, form in _ATTR_STEREOTYPES[at_name]
                    )
                    attr_line += f" @{at_name}({pairs})"
                lines.append(attr_line + ";")
            if stereotype is not None:
                for spec in registry.effective_attributes(stereotype):
                    if rng.random() < 0.5:
                        value = _spec_literal(rng, spec.kind)
                        lines.append(f"    {spec.name} = {_format(value)};")
            for o in range(rng.randint(0, 2)):
                form = rng.choice(("str", "int", "float", "bool", "list"))
                lines.append(f"    opt_{o} = {_format(_literal(rng, form))};")
            candidates = [e for e in earlier]
            rng.shuffle(candidates)
            for target in candidates[: rng.randint(0, 2)]:
                kind = "shared" if rng.random() < 0.2 else "part"
                suffix = ""
                if rng.random() < 0.3:
                    suffix = " [" + rng.choice(("*", "2", "0..2", "1..*")) + "]"
                lines.append(f"    input {kind} {target}{suffix};")
            if earlier and rng.random() < 0.2:
                lines.append(f"    realizes {rng.choice(earlier)};")
            lines.append("  }")
        lines.append("}")

    if names and rng.random() < 0.8:
        for w in range(rng.randint(1, 2)):
            state_count = rng.randint(1, min(4, len(names)))
            states = [f"s{w}_{i}" for i in range(state_count)]
            lines.append(f"workflow w{w} {{")
            for state in states:
                lines.append(f"  state {state} -> block {rng.choice(names)};")
            for src, dst in zip(states, states[1:]):
                lines.append(f"  {src} -> {dst};")
            if rng.random() < 0.9:
                lines.append(f"  initial {states[0]};")
            if rng.random() < 0.6:
                lines.append(f"  final {states[-1]};")
            lines.append("}")

    return "\n".join(lines) + "\n"


def _format(value) -> str:
    from mlsysml.parser import format_literal

    return format_literal(value)
