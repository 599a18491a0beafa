"""Workflow scheduling: from a validated model to an executable plan.

A plan is a linear list of steps. Each step is one block application with
every parameter resolved: stereotype defaults are filled in, bound values
overlaid, and a small set of synthetic parameters injected so downstream
consumers (generator, interpreter) never need the model again:

* data-source steps get ``schema``, the ordered ``name:Type`` column list
  declared on the block;
* steps whose stereotype declares an unbound reference to an attribute
  stereotype get it resolved against the single matching input attribute,
  plus the companion ``input_format`` when the referenced attribute carries
  a format of its own.

Scheduling is deliberately linear. One state machine, one chain of
transitions; anything else raises ``NonLinearWorkflow`` rather than
guessing an order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import NonLinearWorkflow, TooLarge, UnresolvedInput
from .model import Block, Literal, Model, effective_block
from .profile import StereotypeRegistry

ATTRIBUTE_ROOT = "Method_Attribute_Input"


@dataclass(frozen=True)
class PlanStep:
    """One block application.

    ``function`` is the block's ML-descendant stereotype; ``params`` binds
    its declared attributes, mandatory first; ``extras`` carries the
    block's undeclared optional values verbatim. ``input_steps`` holds the
    indices of producing steps, each strictly less than ``index``.
    """

    index: int
    block: str
    function: str
    stage: str
    input_steps: tuple[int, ...] = ()
    params: Mapping[str, Literal] = field(default_factory=dict)
    extras: Mapping[str, Literal] = field(default_factory=dict)
    blackbox: bool = False


@dataclass(frozen=True)
class PipelinePlan:
    source_model: str
    steps: tuple[PlanStep, ...] = ()
    profile_hash: str | None = None

    def step_for(self, block: str) -> PlanStep:
        for step in self.steps:
            if step.block == block:
                return step
        raise KeyError(block)

    def input_blocks(self, step: PlanStep) -> tuple[str, ...]:
        return tuple(self.steps[i].block for i in step.input_steps)

    def to_json(self) -> dict[str, Any]:
        return {
            "source_model": self.source_model,
            "profile_hash": self.profile_hash,
            "steps": [
                {
                    "index": s.index,
                    "block": s.block,
                    "function": s.function,
                    "stage": s.stage,
                    "input_steps": list(s.input_steps),
                    "params": {k: _jsonable(v) for k, v in s.params.items()},
                    "extras": {k: _jsonable(v) for k, v in s.extras.items()},
                    "blackbox": s.blackbox,
                }
                for s in self.steps
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "PipelinePlan":
        steps = tuple(
            PlanStep(
                index=raw["index"],
                block=raw["block"],
                function=raw["function"],
                stage=raw["stage"],
                input_steps=tuple(raw.get("input_steps", ())),
                params={k: _from_jsonable(v) for k, v in raw.get("params", {}).items()},
                extras={k: _from_jsonable(v) for k, v in raw.get("extras", {}).items()},
                blackbox=bool(raw.get("blackbox", False)),
            )
            for raw in data.get("steps", ())
        )
        return cls(
            source_model=data.get("source_model", "model"),
            steps=steps,
            profile_hash=data.get("profile_hash"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _jsonable(value: Literal) -> Any:
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def _from_jsonable(value: Any) -> Literal:
    if isinstance(value, list):
        return tuple(_from_jsonable(v) for v in value)
    return value


def _chain_order(machine) -> list[str]:
    """State names from initial along transitions; linear chains only."""
    if machine.initial is None:
        raise NonLinearWorkflow(
            f"workflow '{machine.name}' has no initial state to start from"
        )
    outgoing: dict[str, list[str]] = {}
    for tr in machine.transitions:
        outgoing.setdefault(tr.source, []).append(tr.target)
    order = [machine.initial]
    seen = {machine.initial}
    current = machine.initial
    while True:
        nexts = outgoing.get(current, [])
        if not nexts:
            break
        if len(nexts) > 1:
            raise NonLinearWorkflow(
                f"state '{current}' branches into {len(nexts)} transitions; "
                "only linear workflows can be scheduled"
            )
        current = nexts[0]
        if current in seen:
            raise NonLinearWorkflow(
                f"transitions of workflow '{machine.name}' revisit state '{current}'"
            )
        seen.add(current)
        order.append(current)
    missing = [s.name for s in machine.states if s.name not in seen]
    if missing:
        raise NonLinearWorkflow(
            f"workflow '{machine.name}' never reaches state(s): " + ", ".join(missing)
        )
    return order


def _ml_stereotype(registry: StereotypeRegistry, block: Block) -> str | None:
    for st in block.applied_stereotypes:
        if registry.is_descendant(st, "ML"):
            return st
    return None


def _is_data_source(registry: StereotypeRegistry, stereotype: str) -> bool:
    return any(sd.package == "DataStorage" for sd in registry.ancestry(stereotype))


def _is_blackbox(registry: StereotypeRegistry, stereotype: str) -> bool:
    return any(sd.blackbox for sd in registry.ancestry(stereotype))


def _schema_of(block: Block) -> tuple[str, ...]:
    return tuple(f"{a.name}:{a.declared_type}" for a in block.attributes)


def _resolve_params(
    registry: StereotypeRegistry,
    block: Block,
    stereotype: str,
    producers: Iterable[Block],
) -> dict[str, Literal]:
    params: dict[str, Literal] = {}
    specs = registry.effective_attributes(stereotype)
    for spec in specs:
        if spec.default is not None:
            params[spec.name] = spec.default
    params.update(block.stereotype_values)

    spec_by_name = {s.name: s for s in specs}
    producer_list = list(producers)

    def attr_candidates(required: str):
        for producer in producer_list:
            for attr in producer.attributes:
                if attr.applied_stereotype is not None and registry.is_descendant(
                    attr.applied_stereotype, required
                ):
                    yield attr

    resolved_attr = None
    for spec in specs:
        if spec.kind.base != "ref" or spec.kind.ref is None:
            continue
        if not registry.is_descendant(spec.kind.ref, ATTRIBUTE_ROOT):
            continue
        if spec.name in params:
            bound = params[spec.name]
            resolved_attr = next(
                (
                    attr
                    for producer in producer_list
                    for attr in producer.attributes
                    if attr.name == bound
                ),
                None,
            )
            continue
        candidates = list(attr_candidates(spec.kind.ref))
        if len(candidates) != 1:
            raise UnresolvedInput(
                block.name,
                f"exactly one input attribute carrying '{spec.kind.ref}' "
                f"(found {len(candidates)})",
            )
        resolved_attr = candidates[0]
        params[spec.name] = resolved_attr.name

    fmt_spec = spec_by_name.get("input_format")
    if (
        fmt_spec is not None
        and "input_format" not in params
        and resolved_attr is not None
    ):
        source_format = resolved_attr.stereotype_values.get("format")
        if source_format is not None:
            params["input_format"] = source_format
    # declared-but-unbound optionals render as None so templates may name them
    for spec in specs:
        if spec.name not in params:
            params[spec.name] = None
    # mandatory bindings first, then optionals, each in declaration order
    ordered: dict[str, Literal] = {}
    for spec in specs:
        if spec.mandatory:
            ordered[spec.name] = params[spec.name]
    for spec in specs:
        if not spec.mandatory:
            ordered[spec.name] = params[spec.name]
    for name, value in params.items():
        if name not in ordered:
            ordered[name] = value
    return ordered


def derive_plan(model: Model, registry: StereotypeRegistry) -> PipelinePlan:
    """Linearize the model's workflow into a parameter-bound plan.

    Data sources consumed by scheduled blocks are prepended in declaration
    order; the remaining steps follow the state machine's transition chain.
    """
    if len(model.state_machines) > 1:
        raise NonLinearWorkflow(
            f"model declares {len(model.state_machines)} workflows; "
            "exactly one can be scheduled"
        )
    eff = {b.name: effective_block(model, b.name) for b in model.blocks}
    if not model.state_machines:
        return PipelinePlan(model.name, profile_hash=registry.source_hash)

    machine = model.state_machines[0]
    state_order = _chain_order(machine)
    target_of = {s.name: s.target_block for s in machine.states}
    targets = [target_of[name] for name in state_order if name in target_of]

    # transitively-needed sources, prepended in declaration order
    needed: set[str] = set(targets)
    frontier = list(targets)
    while frontier:
        block = eff.get(frontier.pop())
        if block is None:
            continue
        for ref in block.inputs:
            if ref.block not in needed and ref.block in eff:
                needed.add(ref.block)
                frontier.append(ref.block)
    source_blocks = [
        b.name
        for b in model.blocks
        if b.name in needed
        and b.name not in targets
        and (st := _ml_stereotype(registry, eff[b.name])) is not None
        and _is_data_source(registry, st)
    ]

    ordered = source_blocks + targets
    position = {name: i for i, name in enumerate(ordered)}
    steps: list[PlanStep] = []
    for index, name in enumerate(ordered):
        block = eff[name]
        stereotype = _ml_stereotype(registry, block)
        if stereotype is None:
            raise UnresolvedInput(name, "an ML stereotype to execute")
        input_steps = []
        for ref in block.inputs:
            if ref.block not in position:
                raise UnresolvedInput(name, ref.block)
            if position[ref.block] >= index:
                raise UnresolvedInput(name, ref.block)
            input_steps.append(position[ref.block])
        producers = [eff[ordered[i]] for i in input_steps]
        params = _resolve_params(registry, block, stereotype, producers)
        if _is_data_source(registry, stereotype):
            params.setdefault("schema", _schema_of(block))
        steps.append(
            PlanStep(
                index=index,
                block=name,
                function=stereotype,
                stage=block.stage,
                input_steps=tuple(input_steps),
                params=params,
                extras=dict(block.optional_values),
                blackbox=_is_blackbox(registry, stereotype),
            )
        )
    return PipelinePlan(
        source_model=model.name,
        steps=tuple(steps),
        profile_hash=registry.source_hash,
    )


def is_topological(plan: PipelinePlan) -> bool:
    """True when every step's inputs are produced by earlier steps."""
    return all(
        0 <= i < step.index for step in plan.steps for i in step.input_steps
    )


def all_topological_orders(plan: PipelinePlan, limit: int = 10) -> list[tuple[str, ...]]:
    """Every topological order of the plan's dependency graph.

    Exponential by nature; refuses plans beyond ``limit`` steps.
    """
    if len(plan.steps) > limit:
        raise TooLarge(
            f"enumerating orders of {len(plan.steps)} steps exceeds the limit of {limit}"
        )
    deps = {
        s.block: {plan.steps[i].block for i in s.input_steps} for s in plan.steps
    }
    names = [s.block for s in plan.steps]
    orders: list[tuple[str, ...]] = []

    def extend(prefix: list[str], placed: set[str]) -> None:
        if len(prefix) == len(names):
            orders.append(tuple(prefix))
            return
        for name in names:
            if name in placed or not deps[name] <= placed:
                continue
            prefix.append(name)
            placed.add(name)
            extend(prefix, placed)
            placed.discard(name)
            prefix.pop()

    extend([], set())
    return orders


def dependency_topo_orders(
    model: Model, registry: StereotypeRegistry, limit: int = 10
) -> list[tuple[str, ...]]:
    """Exhaustive topological orders of a model's scheduled blocks.

    A brute-force oracle for small instances; the order ``derive_plan``
    picks is always a member of this set.
    """
    return all_topological_orders(derive_plan(model, registry), limit)
