"""Typed model tree for pipeline documents.

A parsed document becomes a :class:`Model`: blocks grouped into lifecycle
stages, plus state machines describing execution order. Everything is a
frozen dataclass; source spans are excluded from equality so two parses of
equivalent text compare equal regardless of layout.

Block generalization (``extends``) is resolved lazily by
:func:`effective_block`, which overlays a parent's stereotypes, values,
attributes, and inputs with the child's own declarations.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Union

from .errors import InheritanceCycle, UnknownBlock

STAGES = (
    "BusinessUnderstanding",
    "DataUnderstanding",
    "PreProcessing",
    "Modeling",
    "Evaluation",
    "Workflow",
)

PRIMITIVE_TYPES = ("String", "Integer", "Float", "Boolean", "Datetime", "Image")

# Literal values a model document can bind: scalars and flat lists of them.
Literal = Union[str, int, float, bool, tuple]


@dataclass(frozen=True)
class SourceSpan:
    """Location of a construct in its source file. 1-based line and column."""

    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


# Span attached to synthesized nodes (e.g. models built in tests).
NO_SPAN = SourceSpan(file="<none>", line=1, column=1, length=0)


@dataclass(frozen=True)
class BlockAttribute:
    """A data attribute declared on a block.

    ``applied_stereotype`` names an attribute-level stereotype refining the
    declared primitive type; ``stereotype_values`` binds that stereotype's
    attributes (for example a datetime format).
    """

    name: str
    declared_type: str
    applied_stereotype: str | None = None
    stereotype_values: dict[str, Literal] = field(default_factory=dict)
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class InputRef:
    """A dataflow edge: this block consumes ``block``'s output.

    ``kind`` is "part" or "shared"; both carry identical dataflow meaning.
    ``multiplicity`` keeps the literal source text ("1", "0..2", "*").
    """

    block: str
    kind: str = "part"
    multiplicity: str = "1"


@dataclass(frozen=True)
class Block:
    name: str
    stage: str
    applied_stereotypes: tuple[str, ...] = ()
    stereotype_values: dict[str, Literal] = field(default_factory=dict)
    optional_values: dict[str, Literal] = field(default_factory=dict)
    attributes: tuple[BlockAttribute, ...] = ()
    parent_block: str | None = None
    inputs: tuple[InputRef, ...] = ()
    realizes: tuple[str, ...] = ()
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class State:
    """One workflow state; ``target_block`` names the block it executes."""

    name: str
    target_block: str
    stereotype: str = "ML_Block_Connection"
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    span: SourceSpan = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class StateMachine:
    name: str
    states: tuple[State, ...] = ()
    transitions: tuple[Transition, ...] = ()
    initial: str | None = None
    final: tuple[str, ...] = ()
    span: SourceSpan = field(default=NO_SPAN, compare=False)

    def state(self, name: str) -> State | None:
        for st in self.states:
            if st.name == name:
                return st
        return None


@dataclass(frozen=True)
class Model:
    name: str
    blocks: tuple[Block, ...] = ()
    state_machines: tuple[StateMachine, ...] = ()
    profile_ref: str | None = None
    span: SourceSpan = field(default=NO_SPAN, compare=False)

    @property
    def source_file(self) -> str:
        return self.span.file

    def blocks_in_stage(self, stage: str) -> tuple[Block, ...]:
        return tuple(b for b in self.blocks if b.stage == stage)


def lookup_block(model: Model, name: str) -> Block:
    """Return the block called ``name``; case-sensitive, exact match only."""
    for block in model.blocks:
        if block.name == name:
            return block
    raise UnknownBlock(name)


def _parent_chain(model: Model, block: Block) -> list[Block]:
    """Ancestors of ``block``, root first. Raises on cycles."""
    chain: list[Block] = []
    seen = {block.name}
    current = block
    while current.parent_block is not None:
        parent = lookup_block(model, current.parent_block)
        if parent.name in seen:
            raise InheritanceCycle([block.name, *[b.name for b in chain], parent.name])
        seen.add(parent.name)
        chain.append(parent)
        current = parent
    chain.reverse()
    return chain


def effective_block(model: Model, name: str) -> Block:
    """Resolve block generalization into a single self-contained block.

    Overlay semantics, applied root ancestor first:
      * applied stereotypes: nearest declaration wins (a child declaring
        none inherits its parent's),
      * stereotype and optional values: union, child bindings win,
      * attributes: union by name, a redeclared name replaces in place,
      * inputs: union by target block, child redeclaration replaces.
    ``realizes`` stays the block's own. The result is a fixpoint: resolving
    an already-resolved block changes nothing.
    """
    block = lookup_block(model, name)
    lineage = [*_parent_chain(model, block), block]

    stereotypes: tuple[str, ...] = ()
    st_values: dict[str, Literal] = {}
    opt_values: dict[str, Literal] = {}
    attrs: dict[str, BlockAttribute] = {}
    inputs: dict[str, InputRef] = {}
    for member in lineage:
        if member.applied_stereotypes:
            stereotypes = member.applied_stereotypes
        st_values.update(member.stereotype_values)
        opt_values.update(member.optional_values)
        for attr in member.attributes:
            attrs[attr.name] = attr
        for ref in member.inputs:
            inputs[ref.block] = ref

    return dataclasses.replace(
        block,
        applied_stereotypes=stereotypes,
        stereotype_values=st_values,
        optional_values=opt_values,
        attributes=tuple(attrs.values()),
        inputs=tuple(inputs.values()),
    )
