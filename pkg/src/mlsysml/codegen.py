"""Template-driven code generation from pipeline plans.

Each concrete block stereotype has one template per target. A template is
a small text file: a front-matter header, a ``---`` line, then the body.
Bodies reference values with ``{{name}}`` placeholders:

  {{<param>}}     a resolved parameter, rendered as a Python literal
  {{out}}         this step's result variable (r<index>_<block>)
  {{input.N}}     the result variable of the step's N-th input
  {{inputs}}      a list expression over all input variables
  {{extras}}      dict literal of the block's undeclared optional values
  {{block}} {{stereotype}} {{stage}} {{index}} {{model}}   raw step/model text
  {{<param>|raw}} verbatim insertion (string parameters only)

Rendering is a single left-to-right pass, so inserted text is never
re-scanned for placeholders: a value containing ``{{path}}`` stays inert.
Parameters are rendered through ``repr`` style escaping, and every
generated script must parse; if substitution breaks the syntax (only
possible through ``|raw``) generation fails rather than emitting it.

Targets: ``py-script`` (flat Python file) and ``py-notebook`` (one code
cell per step). The notebook target reuses the script templates unless a
pack provides its own directory. Output is byte-deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import (
    CodegenError,
    EscapingError,
    MissingTemplate,
    SerializationError,
    UnboundPlaceholder,
)
from .scheduler import PipelinePlan, PlanStep
from .validator import TemplateParamInfo

TARGETS = ("py-script", "py-notebook")
_PACK_ALIASES = {"py-notebook": "py-script"}
PREAMBLE_NAME = "_preamble"
_PLACEHOLDER = re.compile(r"\{\{\s*([A-Za-z_][A-Za-z0-9_.]*)\s*(\|\s*raw\s*)?\}\}")
_BUILTINS = frozenset(
    {"out", "inputs", "extras", "block", "stereotype", "stage", "index", "model"}
)


@dataclass(frozen=True)
class Template:
    stereotype: str
    target: str
    body: str

    def placeholders(self) -> frozenset[str]:
        return frozenset(m.group(1) for m in _PLACEHOLDER.finditer(self.body))


@dataclass(frozen=True)
class TemplatePack:
    target: str
    templates: Mapping[str, Template]
    preamble: str

    def template_for(self, stereotype: str) -> Template:
        try:
            return self.templates[stereotype]
        except KeyError:
            raise MissingTemplate(stereotype, self.target) from None


@dataclass(frozen=True)
class RenderedDocument:
    """A fully rendered plan: shared preamble plus one cell per step."""

    target: str
    preamble: str
    cells: tuple[tuple[str, str], ...] = ()

    @property
    def sources(self) -> list[str]:
        return [self.preamble, *(code for _, code in self.cells)]


def _parse_template(text: str, source: str) -> tuple[dict[str, str], str]:
    header: dict[str, str] = {}
    lines = text.split("\n")
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped == "---":
            return header, "\n".join(lines[i + 1 :])
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition(":")
        if not sep:
            raise CodegenError(f"{source}: front-matter line without ':': {line!r}")
        header[key.strip()] = value.strip()
    raise CodegenError(f"{source}: missing '---' separator between header and body")


def default_templates_root() -> Path:
    return Path(str(resources.files("mlsysml").joinpath("data", "templates")))


def load_pack(target: str, root: str | Path | None = None) -> TemplatePack:
    """Load all templates for a target, following pack aliases."""
    base = Path(root) if root is not None else default_templates_root()
    pack_dir = base / target
    if not pack_dir.is_dir():
        alias = _PACK_ALIASES.get(target)
        if alias is not None and (base / alias).is_dir():
            pack_dir = base / alias
        else:
            raise CodegenError(f"no template pack for target '{target}' under {base}")
    templates: dict[str, Template] = {}
    preamble = ""
    for path in sorted(pack_dir.glob("*.tpl")):
        header, body = _parse_template(path.read_text(encoding="utf-8"), str(path))
        stereotype = header.get("stereotype", path.stem)
        if stereotype == PREAMBLE_NAME:
            preamble = body
            continue
        templates[stereotype] = Template(
            stereotype=stereotype,
            target=header.get("target", target),
            body=body,
        )
    if not templates:
        raise CodegenError(f"template pack {pack_dir} contains no step templates")
    return TemplatePack(target=target, templates=templates, preamble=preamble)


def template_param_index(pack: TemplatePack) -> dict[str, TemplateParamInfo]:
    """Which parameter names each template can consume.

    Feeds the unused-optional-value check: a stereotype whose template
    expands {{extras}} accepts any optional value.
    """
    index: dict[str, TemplateParamInfo] = {}
    for stereotype, template in pack.templates.items():
        names = set()
        accepts_extras = False
        for ph in template.placeholders():
            if ph == "extras":
                accepts_extras = True
            elif ph not in _BUILTINS and not ph.startswith("input."):
                names.add(ph)
        index[stereotype] = TemplateParamInfo(
            names=frozenset(names), accepts_extras=accepts_extras
        )
    return index


def _py_literal(value) -> str:
    if value is None:
        return "None"
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, (int, float, str)):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_py_literal(v) for v in value) + "]"
    raise CodegenError(f"cannot render value of type {type(value).__name__}")


def step_variable(step: PlanStep) -> str:
    return f"r{step.index}_" + re.sub(r"[^0-9A-Za-z_]", "_", step.block)


def render_step(template: Template, step: PlanStep, plan: PipelinePlan) -> str:
    input_vars = [step_variable(plan.steps[i]) for i in step.input_steps]

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        raw = match.group(2) is not None
        if name == "out":
            return step_variable(step)
        if name == "inputs":
            return "[" + ", ".join(input_vars) + "]"
        if name == "extras":
            pairs = ", ".join(
                f"{k!r}: {_py_literal(v)}" for k, v in step.extras.items()
            )
            return "{" + pairs + "}"
        if name == "block":
            return step.block
        if name == "stereotype":
            return step.function
        if name == "stage":
            return step.stage
        if name == "index":
            return str(step.index)
        if name == "model":
            return plan.source_model
        if name.startswith("input."):
            suffix = name[len("input.") :]
            if not suffix.isdigit() or int(suffix) >= len(input_vars):
                raise UnboundPlaceholder(name, step.function)
            return input_vars[int(suffix)]
        if name in step.params:
            value = step.params[name]
        elif name in step.extras:
            value = step.extras[name]
        else:
            raise UnboundPlaceholder(name, step.function)
        if raw:
            if not isinstance(value, str):
                raise EscapingError(
                    f"placeholder '{name}' is inserted verbatim and must be a string"
                )
            return value
        return _py_literal(value)

    return _PLACEHOLDER.sub(substitute, template.body).rstrip() + "\n"


def _banner(step: PlanStep, plan: PipelinePlan) -> str:
    head = f"# --- step {step.index}: {step.block} ({step.function}, {step.stage}) ---"
    origin = f"# model: {plan.source_model} | profile sha256: {plan.profile_hash or 'unhashed'}"
    return head + "\n" + origin


def _blackbox_stub(step: PlanStep, plan: PipelinePlan) -> str:
    input_vars = [step_variable(plan.steps[i]) for i in step.input_steps]
    carried = input_vars[0] if input_vars else "None"
    return (
        f"# TODO: '{step.block}' applies the hidden function '{step.function}'; "
        "supply an implementation here.\n"
        f"{step_variable(step)} = {carried}\n"
    )


def _render_preamble(pack: TemplatePack, model_name: str) -> str:
    if not pack.preamble:
        raise CodegenError(f"template pack for '{pack.target}' has no {PREAMBLE_NAME} template")
    def substitute(match: re.Match) -> str:
        if match.group(1) == "model":
            return repr(model_name)
        raise UnboundPlaceholder(match.group(1), PREAMBLE_NAME)
    return _PLACEHOLDER.sub(substitute, pack.preamble).rstrip() + "\n"


def _compile_check(source: str, model_name: str) -> None:
    try:
        compile(source, f"<generated:{model_name}>", "exec")
    except SyntaxError as exc:
        raise EscapingError(
            f"generated code does not parse (line {exc.lineno}): {exc.msg}"
        ) from None


def render(plan: PipelinePlan, templates: TemplatePack, target: str) -> RenderedDocument:
    """Render every plan step through its stereotype's template.

    Blackbox steps without a template become a stub cell that declares the
    step's output name behind a marked TODO.
    """
    if target not in TARGETS:
        raise CodegenError(
            f"unknown target '{target}'; expected one of {', '.join(TARGETS)}"
        )
    if templates.target != target:
        raise CodegenError(
            f"template pack for '{templates.target}' cannot render target '{target}'"
        )
    preamble = _render_preamble(templates, plan.source_model)
    cells: list[tuple[str, str]] = []
    for step in plan.steps:
        try:
            body = render_step(templates.template_for(step.function), step, plan)
        except MissingTemplate:
            if not step.blackbox:
                raise
            body = _blackbox_stub(step, plan)
        cells.append((step.block, _banner(step, plan) + "\n" + body))
    document = RenderedDocument(target=target, preamble=preamble, cells=tuple(cells))
    _compile_check("\n".join(document.sources), plan.source_model)
    return document


def write_script(document: RenderedDocument) -> bytes:
    """Flatten a rendered document to one UTF-8 script, LF line endings."""
    if document.target != "py-script":
        raise SerializationError(
            f"cannot write a '{document.target}' document as a script"
        )
    return "\n".join(document.sources).encode("utf-8")


def write_notebook(document: RenderedDocument) -> bytes:
    """Serialize to notebook-interchange JSON; byte-stable, no timestamps."""
    if document.target != "py-notebook":
        raise SerializationError(
            f"cannot write a '{document.target}' document as a notebook"
        )

    def cell(source: str) -> dict:
        lines = source.rstrip("\n").split("\n")
        text = [line + "\n" for line in lines[:-1]] + [lines[-1]]
        return {
            "cell_type": "code",
            "execution_count": None,
            "metadata": {},
            "outputs": [],
            "source": text,
        }

    notebook = {
        "cells": [cell(s) for s in document.sources],
        "metadata": {
            "kernelspec": {
                "display_name": "Python 3",
                "language": "python",
                "name": "python3",
            },
            "language_info": {"name": "python"},
        },
        "nbformat": 4,
        "nbformat_minor": 4,
    }
    return (json.dumps(notebook, indent=1, sort_keys=True) + "\n").encode("utf-8")


def output_filename(plan: PipelinePlan, target: str) -> str:
    stem = re.sub(r"[^0-9A-Za-z_.-]", "_", plan.source_model) or "pipeline"
    return stem + (".ipynb" if target == "py-notebook" else ".py")


def generate(
    plan: PipelinePlan, target: str, templates_root: str | Path | None = None
) -> tuple[str, str]:
    """Render a plan for a target; returns (filename, content)."""
    if target not in TARGETS:
        raise CodegenError(f"unknown target '{target}'; expected one of {', '.join(TARGETS)}")
    pack = load_pack(target, templates_root)
    document = render(plan, pack, target)
    if target == "py-notebook":
        content = write_notebook(document)
    else:
        content = write_script(document)
    return output_filename(plan, target), content.decode("utf-8")
