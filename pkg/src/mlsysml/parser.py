"""Parser and formatter for pipeline model documents.

``parse_model`` turns source text into a :class:`~mlsysml.model.Model`
against a loaded stereotype registry. Parsing recovers at statement
boundaries, so one pass reports every independent problem; the model is
returned only when no error-severity diagnostic was produced.

Parse-time P-codes cover syntax plus the structural rules the model tree
itself guarantees (unique block names, resolvable references, acyclic
generalization, one ML stereotype per block). Everything semantic
(mandatory bindings, enum membership, workflow/dataflow consistency)
belongs to the validator.

``format_model`` prints a model in canonical form; parsing that text again
yields a structurally equal model (spans aside).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from ._lex import Token, tokenize
from .diagnostics import Diagnostic, Severity, sorted_diagnostics
from .model import (
    PRIMITIVE_TYPES,
    STAGES,
    Block,
    BlockAttribute,
    InputRef,
    Literal,
    Model,
    SourceSpan,
    State,
    StateMachine,
    Transition,
)
from .profile import AttributeSpec, StereotypeRegistry

DEFAULT_STATE_STEREOTYPE = "ML_Block_Connection"

_MULT_RE = re.compile(r"^(\*|\d+|\d+\.\.(\d+|\*))$")


@dataclass(frozen=True)
class ParseResult:
    model: Model | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.model is not None


class _Fail(Exception):
    """Internal: unwinds to the nearest recovery point."""

    def __init__(self, code: str, message: str, token: Token) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.token = token


# -- raw (unresolved) declarations ------------------------------------------


@dataclass
class _RawAttr:
    name: str
    declared_type: str
    stereotype: str | None
    stereotype_tok: Token | None
    values: list[tuple[str, Literal, Token]]
    span: SourceSpan


@dataclass
class _RawBlock:
    name: str
    stage: str
    stereotypes: list[tuple[str, Token]]
    parent: str | None
    parent_tok: Token | None
    attrs: list[_RawAttr] = field(default_factory=list)
    values: list[tuple[str, Literal, Token]] = field(default_factory=list)
    inputs: list[tuple[InputRef, Token]] = field(default_factory=list)
    realizes: list[tuple[str, Token]] = field(default_factory=list)
    span: SourceSpan = None  # type: ignore[assignment]


@dataclass
class _RawMachine:
    name: str
    states: list[tuple[State, Token]] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    transition_toks: list[tuple[Token, Token]] = field(default_factory=list)
    initial: tuple[str, Token] | None = None
    final: list[tuple[str, Token]] = field(default_factory=list)
    span: SourceSpan = None  # type: ignore[assignment]


class _ModelParser:
    def __init__(self, tokens: list[Token], file: str) -> None:
        self.tokens = tokens
        self.pos = 0
        self.file = file
        self.diags: list[Diagnostic] = []
        self.model_name: tuple[str, Token] | None = None
        self.profile_ref: str | None = None
        self.blocks: list[_RawBlock] = []
        self.machines: list[_RawMachine] = []

    # -- token plumbing ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at_punct(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.value == value

    def accept_punct(self, value: str) -> bool:
        if self.at_punct(value):
            self.next()
            return True
        return False

    def expect_punct(self, value: str) -> Token:
        tok = self.next()
        if not (tok.kind == "punct" and tok.value == value):
            raise _Fail("P-101", f"expected {value!r}, found {tok.text or 'end of file'!r}", tok)
        return tok

    def expect_ident(self, what: str) -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise _Fail("P-101", f"expected {what}, found {tok.text or 'end of file'!r}", tok)
        return tok

    def span_of(self, tok: Token) -> SourceSpan:
        return SourceSpan(self.file, tok.line, tok.column, max(len(tok.text), 1))

    def report(self, code: str, message: str, tok: Token,
               severity: Severity = Severity.ERROR) -> None:
        self.diags.append(Diagnostic(code, severity, message, self.span_of(tok)))

    # -- recovery --------------------------------------------------------------

    def sync_statement(self) -> None:
        """Skip to just past the next ';', or stop before '}' / end of file."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if tok.kind == "punct" and tok.value == "{":
                depth += 1
            elif tok.kind == "punct" and tok.value == "}":
                if depth == 0:
                    return
                depth -= 1
            elif tok.kind == "punct" and tok.value == ";" and depth == 0:
                self.next()
                return
            self.next()

    def sync_toplevel(self) -> None:
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if depth == 0 and tok.kind == "ident" and tok.value in (
                "stage", "workflow", "model", "profile",
            ):
                return
            if tok.kind == "punct" and tok.value == "{":
                depth += 1
            elif tok.kind == "punct" and tok.value == "}":
                depth = max(0, depth - 1)
            self.next()

    # -- literals ---------------------------------------------------------------

    def parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "string":
            self.next()
            return tok.value  # type: ignore[return-value]
        if tok.kind in ("int", "float"):
            self.next()
            return tok.value  # type: ignore[return-value]
        if tok.kind == "ident" and tok.value in ("true", "false"):
            self.next()
            return tok.value == "true"
        if self.at_punct("["):
            self.next()
            items: list[Literal] = []
            if not self.accept_punct("]"):
                while True:
                    items.append(self.parse_literal())
                    if self.accept_punct("]"):
                        break
                    self.expect_punct(",")
            return tuple(items)
        raise _Fail("P-101", f"expected a literal, found {tok.text or 'end of file'!r}", tok)

    # -- sections ----------------------------------------------------------------

    def parse_document(self) -> None:
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind != "ident":
                self.report("P-101", f"expected a section, found {tok.text!r}", tok)
                self.next()
                self.sync_toplevel()
                continue
            try:
                if tok.value == "model":
                    self.parse_model_header()
                elif tok.value == "profile":
                    self.parse_profile_ref()
                elif tok.value == "stage":
                    self.parse_stage()
                elif tok.value == "workflow":
                    self.parse_workflow()
                else:
                    self.next()
                    raise _Fail(
                        "P-101",
                        f"expected 'stage', 'workflow', 'model', or 'profile', "
                        f"found {tok.value!r}",
                        tok,
                    )
            except _Fail as failure:
                self.report(failure.code, failure.message, failure.token)
                self.sync_toplevel()

    def parse_model_header(self) -> None:
        self.next()  # 'model'
        name = self.expect_ident("a model name")
        self.expect_punct(";")
        if self.model_name is not None:
            self.report("P-101", "duplicate 'model' header", name)
            return
        self.model_name = (name.value, name)

    def parse_profile_ref(self) -> None:
        self.next()  # 'profile'
        tok = self.next()
        if tok.kind != "string":
            raise _Fail("P-101", "expected a quoted profile path", tok)
        self.expect_punct(";")
        self.profile_ref = tok.value  # type: ignore[assignment]

    def parse_stage(self) -> None:
        self.next()  # 'stage'
        name = self.expect_ident("a stage name")
        stage = name.value
        if stage not in STAGES:
            self.report("P-103", f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}", name)
        self.expect_punct("{")
        while not self.accept_punct("}"):
            tok = self.peek()
            if tok.kind == "eof":
                raise _Fail("P-101", "unterminated stage section", tok)
            try:
                kw = self.expect_ident("'block'")
                if kw.value != "block":
                    raise _Fail("P-101", f"expected 'block', found {kw.value!r}", kw)
                self.parse_block(stage if stage in STAGES else STAGES[0])
            except _Fail as failure:
                self.report(failure.code, failure.message, failure.token)
                self.sync_statement()

    def parse_block(self, stage: str) -> None:
        name = self.expect_ident("a block name")
        stereotypes: list[tuple[str, Token]] = []
        parent: str | None = None
        parent_tok: Token | None = None
        if self.accept_punct(":"):
            while True:
                st = self.expect_ident("a stereotype name")
                stereotypes.append((st.value, st))
                if not self.accept_punct(","):
                    break
        tok = self.peek()
        if tok.kind == "ident" and tok.value == "extends":
            self.next()
            ptok = self.expect_ident("a parent block name")
            parent = ptok.value
            parent_tok = ptok
        self.expect_punct("{")
        raw = _RawBlock(
            name=name.value,
            stage=stage,
            stereotypes=stereotypes,
            parent=parent,
            parent_tok=parent_tok,
            span=self.span_of(name),
        )
        bound_names: dict[str, Token] = {}
        while not self.accept_punct("}"):
            tok = self.peek()
            if tok.kind == "eof":
                raise _Fail("P-101", f"unterminated block '{raw.name}'", tok)
            try:
                self.parse_block_item(raw, bound_names)
            except _Fail as failure:
                self.report(failure.code, failure.message, failure.token)
                self.sync_statement()
        self.blocks.append(raw)

    def parse_block_item(self, raw: _RawBlock, bound: dict[str, Token]) -> None:
        kw = self.expect_ident("a block member")
        if kw.value == "attr":
            raw.attrs.append(self.parse_attr())
            return
        if kw.value == "input":
            self.parse_input(raw)
            return
        if kw.value == "realizes":
            target = self.expect_ident("a block name")
            self.expect_punct(";")
            raw.realizes.append((target.value, target))
            return
        # value binding: NAME = literal ;
        eq = self.peek()
        if not (eq.kind == "punct" and eq.value == "="):
            raise _Fail(
                "P-101",
                f"expected 'attr', 'input', 'realizes', or '=' after {kw.value!r}",
                eq,
            )
        self.next()
        value = self.parse_literal()
        self.expect_punct(";")
        if kw.value in bound:
            self.report("P-101", f"value '{kw.value}' is bound twice on this block", kw)
            return
        bound[kw.value] = kw
        raw.values.append((kw.value, value, kw))

    def parse_attr(self) -> _RawAttr:
        name = self.expect_ident("an attribute name")
        self.expect_punct(":")
        type_tok = self.expect_ident("a type name")
        stereotype: str | None = None
        stereotype_tok: Token | None = None
        values: list[tuple[str, Literal, Token]] = []
        if self.accept_punct("@"):
            st = self.expect_ident("an attribute stereotype name")
            stereotype = st.value
            stereotype_tok = st
            if self.accept_punct("("):
                if not self.accept_punct(")"):
                    while True:
                        key = self.expect_ident("an attribute name")
                        self.expect_punct("=")
                        values.append((key.value, self.parse_literal(), key))
                        if self.accept_punct(")"):
                            break
                        self.expect_punct(",")
        self.expect_punct(";")
        return _RawAttr(
            name=name.value,
            declared_type=type_tok.value,
            stereotype=stereotype,
            stereotype_tok=stereotype_tok,
            values=values,
            span=self.span_of(name),
        )

    def parse_input(self, raw: _RawBlock) -> None:
        kind = self.expect_ident("'part' or 'shared'")
        if kind.value not in ("part", "shared"):
            raise _Fail("P-101", f"expected 'part' or 'shared', found {kind.value!r}", kind)
        target = self.expect_ident("a block name")
        multiplicity = "1"
        if self.accept_punct("["):
            pieces: list[str] = []
            open_tok = target
            while not self.at_punct("]"):
                tok = self.next()
                if tok.kind == "eof":
                    raise _Fail("P-107", "unterminated multiplicity", tok)
                pieces.append(tok.text)
            self.expect_punct("]")
            multiplicity = "".join(pieces)
            if not _MULT_RE.match(multiplicity):
                self.report("P-107", f"invalid multiplicity {multiplicity!r}", open_tok)
                multiplicity = "1"
        self.expect_punct(";")
        raw.inputs.append((InputRef(target.value, kind.value, multiplicity), target))

    def parse_workflow(self) -> None:
        self.next()  # 'workflow'
        name = self.expect_ident("a workflow name")
        self.expect_punct("{")
        raw = _RawMachine(name=name.value, span=self.span_of(name))
        while not self.accept_punct("}"):
            tok = self.peek()
            if tok.kind == "eof":
                raise _Fail("P-101", f"unterminated workflow '{raw.name}'", tok)
            try:
                self.parse_workflow_item(raw)
            except _Fail as failure:
                self.report(failure.code, failure.message, failure.token)
                self.sync_statement()
        self.machines.append(raw)

    def parse_workflow_item(self, raw: _RawMachine) -> None:
        first = self.expect_ident("a workflow member")
        if first.value == "state":
            name = self.expect_ident("a state name")
            stereotype = DEFAULT_STATE_STEREOTYPE
            if self.accept_punct(":"):
                stereotype = self.expect_ident("a state stereotype name").value
            arrow = self.next()
            if arrow.kind != "arrow":
                raise _Fail("P-101", "expected '->' after the state name", arrow)
            kw = self.expect_ident("'block'")
            if kw.value != "block":
                raise _Fail("P-101", "expected 'block <name>' after '->'", kw)
            target = self.expect_ident("a block name")
            self.expect_punct(";")
            raw.states.append(
                (State(name.value, target.value, stereotype, self.span_of(name)), name)
            )
            return
        if first.value == "initial":
            target = self.expect_ident("a state name")
            self.expect_punct(";")
            if raw.initial is not None:
                self.report("P-112", "duplicate 'initial' declaration", target)
                return
            raw.initial = (target.value, target)
            return
        if first.value == "final":
            while True:
                target = self.expect_ident("a state name")
                raw.final.append((target.value, target))
                if not self.accept_punct(","):
                    break
            self.expect_punct(";")
            return
        # transition: STATE -> STATE ;
        arrow = self.next()
        if arrow.kind != "arrow":
            raise _Fail(
                "P-101",
                f"expected 'state', 'initial', 'final', or '->' after {first.value!r}",
                arrow,
            )
        target = self.expect_ident("a state name")
        self.expect_punct(";")
        raw.transitions.append(
            Transition(first.value, target.value, self.span_of(first))
        )
        raw.transition_toks.append((first, target))


# -- resolution ----------------------------------------------------------------


class _Resolver:
    def __init__(self, parser: _ModelParser, registry: StereotypeRegistry) -> None:
        self.p = parser
        self.registry = registry

    def resolve(self) -> tuple[list[Block], list[StateMachine]]:
        raws: list[_RawBlock] = []
        seen: dict[str, _RawBlock] = {}
        for raw in self.p.blocks:
            if raw.name in seen:
                self.p.diags.append(
                    Diagnostic(
                        "P-104",
                        Severity.ERROR,
                        f"duplicate block name '{raw.name}'",
                        raw.span,
                        related=(seen[raw.name].span,),
                    )
                )
                continue
            seen[raw.name] = raw
            raws.append(raw)

        self.check_inheritance(raws, seen)
        blocks = [self.resolve_block(raw, seen) for raw in raws]
        machines = [self.resolve_machine(raw, seen) for raw in self.p.machines]
        return blocks, machines

    def check_inheritance(self, raws: list[_RawBlock], by_name: dict[str, _RawBlock]) -> None:
        for raw in raws:
            if raw.parent is None:
                continue
            if raw.parent not in by_name:
                self.p.report("P-108", f"unknown block '{raw.parent}' in 'extends'", raw.parent_tok)
                raw.parent = None
                continue
            current: str | None = raw.name
            path: set[str] = set()
            while current is not None:
                if current in path:
                    if current == raw.name:
                        self.p.report(
                            "P-110",
                            f"block inheritance cycle through '{raw.name}'",
                            raw.parent_tok,
                        )
                    break
                path.add(current)
                nxt = by_name.get(current)
                current = nxt.parent if nxt is not None else None

    def effective_stereotypes(
        self, raw: _RawBlock, by_name: dict[str, _RawBlock]
    ) -> list[str]:
        """Nearest declared stereotype list along the generalization chain."""
        current: _RawBlock | None = raw
        visited: set[str] = set()
        while current is not None and current.name not in visited:
            visited.add(current.name)
            valid = [
                name
                for name, tok in current.stereotypes
                if name in self.registry and self.registry.stereotype(name).applies_to == "block"
            ]
            if valid:
                return valid
            current = by_name.get(current.parent) if current.parent else None
        return []

    def resolve_block(self, raw: _RawBlock, by_name: dict[str, _RawBlock]) -> Block:
        applied: list[str] = []
        for name, tok in raw.stereotypes:
            if name not in self.registry:
                self.p.report("P-102", f"unknown stereotype '{name}'", tok)
                continue
            sd = self.registry.stereotype(name)
            if sd.applies_to != "block":
                self.p.report(
                    "P-114",
                    f"stereotype '{name}' applies to {sd.applies_to}s, not blocks",
                    tok,
                )
                continue
            applied.append(name)
        ml_descendants = [s for s in applied if self.registry.is_descendant(s, "ML")]
        if len(ml_descendants) > 1:
            self.p.report(
                "P-117",
                f"block '{raw.name}' applies {len(ml_descendants)} ML stereotypes "
                f"({', '.join(ml_descendants)}); at most one is allowed",
                raw.stereotypes[0][1],
            )

        # partition value bindings against the effective stereotype set
        specs: dict[str, AttributeSpec] = {}
        for st in self.effective_stereotypes(raw, by_name):
            for spec in self.registry.effective_attributes(st):
                specs.setdefault(spec.name, spec)
        stereotype_values: dict[str, Literal] = {}
        optional_values: dict[str, Literal] = {}
        for name, value, tok in raw.values:
            spec = specs.get(name)
            if spec is None:
                optional_values[name] = value
                continue
            if not spec.kind.accepts_form(value):
                self.p.report(
                    "P-105",
                    f"value for '{name}' does not fit kind '{spec.kind}'",
                    tok,
                )
                continue
            stereotype_values[name] = value

        attributes = self.resolve_attrs(raw)
        inputs = self.resolve_inputs(raw, by_name)
        realizes: list[str] = []
        for name, tok in raw.realizes:
            if name not in by_name:
                self.p.report("P-108", f"unknown block '{name}' in 'realizes'", tok)
                continue
            realizes.append(name)

        return Block(
            name=raw.name,
            stage=raw.stage,
            applied_stereotypes=tuple(applied),
            stereotype_values=stereotype_values,
            optional_values=optional_values,
            attributes=attributes,
            parent_block=raw.parent,
            inputs=inputs,
            realizes=tuple(realizes),
            span=raw.span,
        )

    def resolve_attrs(self, raw: _RawBlock) -> tuple[BlockAttribute, ...]:
        out: list[BlockAttribute] = []
        seen: set[str] = set()
        for attr in raw.attrs:
            if attr.name in seen:
                self.p.diags.append(
                    Diagnostic(
                        "P-111",
                        Severity.ERROR,
                        f"duplicate attribute '{attr.name}' on block '{raw.name}'",
                        attr.span,
                    )
                )
                continue
            seen.add(attr.name)
            if attr.declared_type not in PRIMITIVE_TYPES:
                self.p.diags.append(
                    Diagnostic(
                        "P-113",
                        Severity.ERROR,
                        f"unknown type '{attr.declared_type}'; expected one of "
                        f"{', '.join(PRIMITIVE_TYPES)}",
                        attr.span,
                    )
                )
            stereotype = attr.stereotype
            values: dict[str, Literal] = {}
            if stereotype is not None:
                if stereotype not in self.registry:
                    self.p.report("P-106", f"unknown attribute stereotype '{stereotype}'", attr.stereotype_tok)
                    stereotype = None
                else:
                    sd = self.registry.stereotype(stereotype)
                    if sd.applies_to != "attribute":
                        self.p.report(
                            "P-114",
                            f"stereotype '{stereotype}' applies to {sd.applies_to}s, "
                            "not attributes",
                            attr.stereotype_tok,
                        )
                        stereotype = None
            if stereotype is not None:
                specs = {s.name: s for s in self.registry.effective_attributes(stereotype)}
                for name, value, tok in attr.values:
                    spec = specs.get(name)
                    if spec is not None and not spec.kind.accepts_form(value):
                        self.p.report(
                            "P-105",
                            f"value for '{name}' does not fit kind '{spec.kind}'",
                            tok,
                        )
                        continue
                    values[name] = value
            out.append(
                BlockAttribute(
                    name=attr.name,
                    declared_type=attr.declared_type,
                    applied_stereotype=stereotype,
                    stereotype_values=values,
                    span=attr.span,
                )
            )
        return tuple(out)

    def resolve_inputs(
        self, raw: _RawBlock, by_name: dict[str, _RawBlock]
    ) -> tuple[InputRef, ...]:
        out: list[InputRef] = []
        for ref, tok in raw.inputs:
            if ref.block == raw.name:
                self.p.report("P-109", f"block '{raw.name}' lists itself as an input", tok)
                continue
            if ref.block not in by_name:
                self.p.report("P-108", f"unknown block '{ref.block}' in 'input'", tok)
                continue
            out.append(ref)
        return tuple(out)

    def resolve_machine(
        self, raw: _RawMachine, blocks: dict[str, _RawBlock]
    ) -> StateMachine:
        states: list[State] = []
        names: set[str] = set()
        for state, tok in raw.states:
            if state.name in names:
                self.p.report("P-112", f"duplicate state name '{state.name}'", tok)
                continue
            names.add(state.name)
            if state.stereotype not in self.registry:
                self.p.report("P-102", f"unknown stereotype '{state.stereotype}'", tok)
            elif self.registry.stereotype(state.stereotype).applies_to != "state":
                self.p.report(
                    "P-114",
                    f"stereotype '{state.stereotype}' applies to "
                    f"{self.registry.stereotype(state.stereotype).applies_to}s, not states",
                    tok,
                )
            if state.target_block not in blocks:
                self.p.report(
                    "P-108",
                    f"state '{state.name}' targets unknown block '{state.target_block}'",
                    tok,
                )
            states.append(state)

        transitions: list[Transition] = []
        for tr, (src_tok, dst_tok) in zip(raw.transitions, raw.transition_toks):
            ok = True
            if tr.source not in names:
                self.p.report("P-112", f"unknown state '{tr.source}' in transition", src_tok)
                ok = False
            if tr.target not in names:
                self.p.report("P-112", f"unknown state '{tr.target}' in transition", dst_tok)
                ok = False
            if ok:
                transitions.append(tr)

        initial: str | None = None
        if raw.initial is not None:
            name, tok = raw.initial
            if name not in names:
                self.p.report("P-112", f"unknown state '{name}' in 'initial'", tok)
            else:
                initial = name
        final: list[str] = []
        for name, tok in raw.final:
            if name not in names:
                self.p.report("P-112", f"unknown state '{name}' in 'final'", tok)
                continue
            final.append(name)

        return StateMachine(
            name=raw.name,
            states=tuple(states),
            transitions=tuple(transitions),
            initial=initial,
            final=tuple(final),
            span=raw.span,
        )


def _default_name(file: str) -> str:
    stem = Path(file).stem
    if stem and re.match(r"^[A-Za-z_][A-Za-z0-9_-]*$", stem):
        return stem
    return "model"


def parse_model(
    source: str, registry: StereotypeRegistry, file: str = "<model>"
) -> ParseResult:
    """Parse ``source`` into a model, collecting every recoverable problem.

    The returned :class:`ParseResult` carries the model only when the
    diagnostic stream holds no error.
    """
    tokens, lex_problems = tokenize(source)
    parser = _ModelParser(tokens, file)
    for problem in lex_problems:
        parser.diags.append(
            Diagnostic(
                "P-101",
                Severity.ERROR,
                problem.message,
                SourceSpan(file, problem.line, problem.column, 1),
            )
        )
    parser.parse_document()
    blocks, machines = _Resolver(parser, registry).resolve()

    diagnostics = sorted_diagnostics(parser.diags)
    if any(d.severity is Severity.ERROR for d in diagnostics):
        return ParseResult(model=None, diagnostics=diagnostics)

    name_tok = parser.model_name
    model = Model(
        name=name_tok[0] if name_tok else _default_name(file),
        blocks=tuple(blocks),
        state_machines=tuple(machines),
        profile_ref=parser.profile_ref,
        span=SourceSpan(file, 1, 1, 0),
    )
    return ParseResult(model=model, diagnostics=diagnostics)


def parse_model_file(path: str | Path, registry: StereotypeRegistry) -> ParseResult:
    p = Path(path)
    return parse_model(p.read_text(encoding="utf-8"), registry, str(p))


# -- formatting -------------------------------------------------------------------


def format_literal(value: Literal) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        escaped = (
            value.replace("\\", "\\\\")
            .replace('"', '\\"')
            .replace("\n", "\\n")
            .replace("\t", "\\t")
            .replace("\r", "\\r")
        )
        return f'"{escaped}"'
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(format_literal(v) for v in value) + "]"
    raise TypeError(f"cannot format literal {value!r}")


def _format_block(block: Block, out: list[str]) -> None:
    header = f"  block {block.name}"
    if block.applied_stereotypes:
        header += " : " + ", ".join(block.applied_stereotypes)
    if block.parent_block:
        header += f" extends {block.parent_block}"
    out.append(header + " {")
    for attr in block.attributes:
        line = f"    attr {attr.name}: {attr.declared_type}"
        if attr.applied_stereotype:
            line += f" @{attr.applied_stereotype}"
            if attr.stereotype_values:
                pairs = ", ".join(
                    f"{k}={format_literal(v)}" for k, v in attr.stereotype_values.items()
                )
                line += f"({pairs})"
        out.append(line + ";")
    for name, value in block.stereotype_values.items():
        out.append(f"    {name} = {format_literal(value)};")
    for name, value in block.optional_values.items():
        out.append(f"    {name} = {format_literal(value)};")
    for ref in block.inputs:
        line = f"    input {ref.kind} {ref.block}"
        if ref.multiplicity != "1":
            line += f" [{ref.multiplicity}]"
        out.append(line + ";")
    for target in block.realizes:
        out.append(f"    realizes {target};")
    out.append("  }")


def format_model(model: Model) -> str:
    """Canonical text for ``model``; reparsing yields an equal model."""
    out: list[str] = [f"model {model.name};"]
    if model.profile_ref:
        out.append(f'profile {format_literal(model.profile_ref)};')
    for stage in STAGES[:5]:
        out.append("")
        out.append(f"stage {stage} {{")
        for block in model.blocks_in_stage(stage):
            _format_block(block, out)
        out.append("}")
    workflow_blocks = model.blocks_in_stage("Workflow")
    if workflow_blocks:
        out.append("")
        out.append("stage Workflow {")
        for block in workflow_blocks:
            _format_block(block, out)
        out.append("}")
    for machine in model.state_machines:
        out.append("")
        out.append(f"workflow {machine.name} {{")
        for state in machine.states:
            line = f"  state {state.name}"
            if state.stereotype != DEFAULT_STATE_STEREOTYPE:
                line += f" : {state.stereotype}"
            out.append(line + f" -> block {state.target_block};")
        for tr in machine.transitions:
            out.append(f"  {tr.source} -> {tr.target};")
        if machine.initial:
            out.append(f"  initial {machine.initial};")
        if machine.final:
            out.append("  final " + ", ".join(machine.final) + ";")
        out.append("}")
    return "\n".join(out) + "\n"
