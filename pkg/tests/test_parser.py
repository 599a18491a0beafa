"""Parser: fixture fidelity, every P-code, recovery, and formatting."""

import random

import pytest

from mlsysml import parse_model
from mlsysml.diagnostics import Severity, sort_key
from mlsysml.parser import format_model, parse_model_file

from conftest import FIXTURES, random_model_source


def codes_of(source, registry):
    result = parse_model(source, registry, file="probe.mlsysml")
    return sorted({d.code for d in result.diagnostics}), result


def test_uc1_parses_without_diagnostics(registry, fixture_source):
    result = parse_model(fixture_source("uc1"), registry, file="uc1.mlsysml")
    assert result.ok
    assert result.diagnostics == ()
    model = result.model
    assert model.name == "uc1"
    assert len(model.blocks) == 13
    machine = model.state_machines[0]
    assert len(machine.states) == 7
    assert len(machine.transitions) == 6


def test_parse_model_file_matches_parse_model(registry, fixture_source):
    from_file = parse_model_file(FIXTURES / "uc1.mlsysml", registry)
    assert from_file.ok
    assert from_file.model.name == "uc1"
    # spans carry the real path
    assert from_file.model.blocks[0].span.file.endswith("uc1.mlsysml")


def test_empty_model(registry):
    result = parse_model("model empty;\n", registry)
    assert result.ok
    assert result.model.blocks == ()
    assert result.model.state_machines == ()


def test_model_name_defaults_to_file_stem(registry):
    result = parse_model("", registry, file="weather.mlsysml")
    assert result.ok
    assert result.model.name == "weather"


P_CODE_PROBES = {
    "P-101": "model m",
    "P-102": "model m;\nstage Modeling {\n  block B : Nope {\n  }\n}\n",
    "P-103": "model m;\nstage Wrong {\n}\n",
    "P-104": (
        "model m;\nstage Modeling {\n  block B : Predict {\n  }\n"
        "  block B : Predict {\n  }\n}\n"
    ),
    "P-105": 'model m;\nstage DataUnderstanding {\n  block B : CSV {\n    path = 42;\n  }\n}\n',
    "P-106": (
        'model m;\nstage DataUnderstanding {\n  block B : CSV {\n'
        '    path = "x.csv";\n    attr a: String @Nope;\n  }\n}\n'
    ),
    "P-107": (
        "model m;\nstage Modeling {\n  block A : Predict {\n  }\n"
        "  block B : Predict {\n    input part A [x];\n  }\n}\n"
    ),
    "P-108": "model m;\nstage Modeling {\n  block B : Predict {\n    input part Nope;\n  }\n}\n",
    "P-109": "model m;\nstage Modeling {\n  block B : Predict {\n    input part B;\n  }\n}\n",
    "P-110": (
        "model m;\nstage Modeling {\n  block A extends B {\n  }\n"
        "  block B extends A {\n  }\n}\n"
    ),
    "P-111": (
        'model m;\nstage DataUnderstanding {\n  block B : CSV {\n'
        '    path = "x.csv";\n    attr a: String;\n    attr a: Float;\n  }\n}\n'
    ),
    "P-112": (
        "model m;\nstage Modeling {\n  block B : Predict {\n  }\n}\n"
        "workflow W {\n  state S -> block B;\n  S -> T;\n  initial S;\n}\n"
    ),
    "P-113": (
        'model m;\nstage DataUnderstanding {\n  block B : CSV {\n'
        '    path = "x.csv";\n    attr a: Nope;\n  }\n}\n'
    ),
    "P-114": (
        'model m;\nstage DataUnderstanding {\n  block B : CSV {\n'
        '    path = "x.csv";\n    attr a: String @CSV;\n  }\n}\n'
    ),
    "P-117": "model m;\nstage Modeling {\n  block B : Predict, MAE {\n  }\n}\n",
}


@pytest.mark.parametrize("code", sorted(P_CODE_PROBES))
def test_p_code_has_a_dedicated_probe(code, registry):
    got, result = codes_of(P_CODE_PROBES[code], registry)
    assert got == [code]
    assert result.model is None
    assert all(d.severity is Severity.ERROR for d in result.diagnostics)


def test_p114_covers_every_wrong_element_kind(registry):
    # attribute stereotype on a block
    got, _ = codes_of("model m;\nstage Modeling {\n  block B : Datetime {\n  }\n}\n", registry)
    assert got == ["P-114"]
    # block stereotype on a workflow state
    source = (
        "model m;\nstage Modeling {\n  block B : Predict {\n  }\n}\n"
        "workflow W {\n  state S : CSV -> block B;\n  initial S;\n}\n"
    )
    got, _ = codes_of(source, registry)
    assert got == ["P-114"]


def test_recovery_reports_independent_problems_in_one_pass(registry):
    source = "model m;\nstage Wrong {\n}\nstage Modeling {\n  block B : Nope {\n  }\n}\n"
    got, result = codes_of(source, registry)
    assert got == ["P-102", "P-103"]
    assert result.model is None


def test_diagnostics_are_sorted(registry):
    source = (
        "model m;\n"
        "stage Modeling {\n"
        "  block B : Nope {\n"
        "    input part Missing;\n"
        "  }\n"
        "}\n"
        "stage Wrong {\n"
        "}\n"
    )
    _, result = codes_of(source, registry)
    keys = [sort_key(d) for d in result.diagnostics]
    assert keys == sorted(keys)
    assert len(keys) >= 3


def test_unterminated_string_is_a_syntax_error(registry):
    source = 'model m;\nstage Modeling {\n  block B : Predict {\n    note = "oops;\n  }\n}\n'
    got, _ = codes_of(source, registry)
    assert got == ["P-101"]


def test_multiplicities_survive_round_trip(registry):
    source = (
        "model m;\n"
        "stage Modeling {\n"
        "  block A : Predict {\n"
        "  }\n"
        "  block B : Predict {\n"
        "    input part A [0..2];\n"
        "    input shared A [*];\n"
        "  }\n"
        "}\n"
    )
    first = parse_model(source, registry)
    assert first.ok
    refs = first.model.blocks[1].inputs
    assert [(r.kind, r.multiplicity) for r in refs] == [("part", "0..2"), ("shared", "*")]
    again = parse_model(format_model(first.model), registry)
    assert again.model == first.model


def test_literal_forms_round_trip(registry):
    source = (
        "model m;\n"
        "stage Modeling {\n"
        "  block B : TrainTestSplit {\n"
        "    ratio = 0.5;\n"
        "    verbose = true;\n"
        "    label = \"a \\\"b\\\" c\\nd\";\n"
        "    tags = [\"x\", \"y\"];\n"
        "    attempts = -3;\n"
        "  }\n"
        "}\n"
    )
    result = parse_model(source, registry)
    assert result.ok
    block = result.model.blocks[0]
    assert block.stereotype_values["ratio"] == 0.5
    assert block.optional_values["verbose"] is True
    assert block.optional_values["label"] == 'a "b" c\nd'
    assert block.optional_values["tags"] == ("x", "y")
    assert block.optional_values["attempts"] == -3
    again = parse_model(format_model(result.model), registry)
    assert again.model == result.model


def test_fixture_round_trips(registry, fixture_source):
    for name in ("uc1", "uc1_clean", "uc2_custom", "uc2_clean", "cosine"):
        first = parse_model(fixture_source(name), registry)
        assert first.ok, name
        second = parse_model(format_model(first.model), registry)
        assert second.model == first.model, name


def test_generated_models_round_trip_smoke(registry):
    for i in range(25):
        rng = random.Random(9000 + i)
        source = random_model_source(rng, registry, i)
        first = parse_model(source, registry)
        assert first.ok, (i, [d.format_human() for d in first.diagnostics])
        second = parse_model(format_model(first.model), registry)
        assert second.model == first.model, i
