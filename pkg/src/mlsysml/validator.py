"""Semantic checks over parsed models.

``check_model`` walks a structurally sound model (the parser's output) and
returns a deterministic, sorted diagnostic stream. Every rule has a stable
code:

  E-201..E-211  errors that make a model unexecutable or ill-typed
  W-301..W-303  warnings about suspicious but runnable constructs
  I-301         informational notes

Analysis never aborts: each rule collects everything it can find. The
severity of the CustomCode rule is driven by configuration, which lets one
team run injection-free while another prototypes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .diagnostics import Diagnostic, Severity, sorted_diagnostics
from .errors import UnknownCode
from .model import Block, Model, effective_block
from .profile import StereotypeRegistry

CUSTOM_CODE_STEREOTYPE = "CustomCode"
ATTRIBUTE_ROOT = "Method_Attribute_Input"


@dataclass(frozen=True)
class TemplateParamInfo:
    """What a template pack can consume for one stereotype.

    ``names`` are the declared-attribute placeholders that appear in any
    template body; ``accepts_extras`` is true when a template expands
    undeclared optional values (the ``{{extras}}`` builtin).
    """

    names: frozenset[str] = frozenset()
    accepts_extras: bool = False


@dataclass(frozen=True)
class ValidationConfig:
    """Severity policy knobs.

    custom_code_policy: "error" (default), "warn", or "allow".
    unknown_optional_attrs: "warn" (default) or "allow"; governs W-303.
    template_params: per-stereotype placeholder index used by W-303. When
    None the rule stays silent, since without a template pack there is no
    notion of a known parameter.
    """

    custom_code_policy: str = "error"
    unknown_optional_attrs: str = "warn"
    template_params: Mapping[str, TemplateParamInfo] | None = None


_CATALOG: dict[str, tuple[Severity, str, str]] = {
    "E-201": (
        Severity.ERROR,
        "abstract stereotype instantiated",
        "Abstract stereotypes only organize the vocabulary; they carry no "
        "executable meaning, so applying one to a concrete element leaves "
        "the generator nothing to emit. Apply a concrete descendant instead.",
    ),
    "E-202": (
        Severity.ERROR,
        "mandatory stereotype attribute unbound",
        "A mandatory attribute is the minimum information a function needs "
        "to run (a join needs its keys, a conversion needs its format). "
        "Without a value or a declared default the step cannot execute.",
    ),
    "E-203": (
        Severity.ERROR,
        "value outside its enumeration",
        "Enumerations pin the closed set of values a tool can act on; "
        "anything else would silently fall through every generator branch.",
    ),
    "E-204": (
        Severity.ERROR,
        "reference target lacks the required stereotype",
        "A stereotype-typed attribute accepts only elements carrying that "
        "stereotype (or a descendant), so tools can rely on the referenced "
        "element's declared capabilities.",
    ),
    "E-205": (
        Severity.ERROR,
        "ambiguous input attribute",
        "The consumer needs exactly one input attribute of a given "
        "attribute stereotype. When the inputs expose none or several, the "
        "intended column must be named explicitly (input_attribute = \"...\").",
    ),
    "E-206": (
        Severity.ERROR,
        "dataflow cycle",
        "Blocks are function applications and associations are their "
        "inputs; a cycle means no evaluation order exists.",
    ),
    "E-207": (
        Severity.ERROR,
        "state targets a block without an ML stereotype",
        "Workflow states execute exactly one ML-stereotyped block; "
        "anything else has no function to run.",
    ),
    "E-208": (
        Severity.ERROR,
        "workflow order contradicts dataflow",
        "A consumer cannot run before a producer it reads from. The state "
        "machine's order must be a topological order of the dependency "
        "graph restricted to the scheduled blocks.",
    ),
    "E-209": (
        Severity.ERROR,
        "state machine incomplete or unreachable",
        "Execution starts at the initial state and follows transitions; a "
        "machine without an initial state or with unreachable states "
        "cannot describe one run.",
    ),
    "E-210": (
        Severity.ERROR,
        "inheritance override changes an attribute's kind",
        "A specialized block may refine values, not types: downstream "
        "consumers resolve attributes against the parent's declarations.",
    ),
    "E-211": (
        Severity.ERROR,
        "custom code forbidden by policy",
        "Verbatim code bypasses every guarantee the stereotype vocabulary "
        "provides and usually has a typed equivalent. Policy 'error' "
        "rejects it outright.",
    ),
    "W-301": (
        Severity.WARNING,
        "dead block",
        "The block carries an executable stereotype but no workflow state "
        "targets it and no scheduled block consumes it, so it will never "
        "run. Typically a leftover from an earlier modeling iteration.",
    ),
    "W-302": (
        Severity.WARNING,
        "custom code in use",
        "Verbatim code runs outside the typed vocabulary. Policy 'warn' "
        "permits it but keeps it visible in every report.",
    ),
    "W-303": (
        Severity.WARNING,
        "optional value matches no template parameter",
        "Optional block values exist to feed generator templates; one that "
        "no template consumes is dead configuration, often a typo.",
    ),
    "I-301": (
        Severity.INFO,
        "shared association treated as dataflow",
        "Shared and part associations carry identical dataflow meaning "
        "here; the aggregation distinction is preserved only as metadata.",
    ),
    "P-101": (Severity.ERROR, "syntax error", "The text does not follow the model grammar."),
    "P-102": (Severity.ERROR, "unknown stereotype", "The name resolves to nothing in the loaded profile."),
    "P-103": (Severity.ERROR, "unknown stage", "Stages are the fixed lifecycle packages."),
    "P-104": (Severity.ERROR, "duplicate block name", "Block names identify dataflow endpoints and must be unique."),
    "P-105": (Severity.ERROR, "literal does not fit the declared kind", "The bound value's shape disagrees with the attribute's declared kind."),
    "P-106": (Severity.ERROR, "unknown attribute stereotype", "The name after '@' resolves to nothing in the loaded profile."),
    "P-107": (Severity.ERROR, "invalid multiplicity", "Multiplicities are N, *, or N..M (M may be *)."),
    "P-108": (Severity.ERROR, "unknown block reference", "extends/input/realizes/state targets must name declared blocks."),
    "P-109": (Severity.ERROR, "self input", "A block cannot consume its own output."),
    "P-110": (Severity.ERROR, "block inheritance cycle", "Generalization chains must be acyclic to resolve."),
    "P-111": (Severity.ERROR, "duplicate attribute", "Attribute names are unique within a block."),
    "P-112": (Severity.ERROR, "workflow structure problem", "States must be unique and every referenced state declared."),
    "P-113": (Severity.ERROR, "unknown primitive type", "Attribute types come from the fixed primitive set."),
    "P-114": (Severity.ERROR, "stereotype applied to the wrong element kind", "Each stereotype declares whether it applies to blocks, attributes, or states."),
    "P-117": (Severity.ERROR, "multiple ML stereotypes on one block", "A block is one function application and names at most one function."),
}


def explain(code: str) -> str:
    """Human-readable rule text for a diagnostic code."""
    try:
        severity, title, rationale = _CATALOG[code]
    except KeyError:
        raise UnknownCode(code) from None
    return f"{code} ({severity}): {title}. {rationale}"


def catalog_codes() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


class _Checker:
    def __init__(self, model: Model, registry: StereotypeRegistry, config: ValidationConfig) -> None:
        self.model = model
        self.registry = registry
        self.config = config
        self.diags: list[Diagnostic] = []
        # parser output guarantees acyclic generalization, so this resolves
        self.eff: dict[str, Block] = {
            b.name: effective_block(model, b.name) for b in model.blocks
        }

    def emit(self, code: str, message: str, span) -> None:
        self.diags.append(Diagnostic(code, _CATALOG[code][0], message, span))

    def ml_function(self, block: Block) -> str | None:
        for st in block.applied_stereotypes:
            if self.registry.is_descendant(st, "ML"):
                return st
        return None

    # -- individual rules ----------------------------------------------------

    def check_abstract(self) -> None:
        for block in self.eff.values():
            for st in block.applied_stereotypes:
                if self.registry.stereotype(st).abstract:
                    self.emit(
                        "E-201",
                        f"block '{block.name}' applies abstract stereotype '{st}'",
                        block.span,
                    )
            for attr in block.attributes:
                if attr.applied_stereotype and self.registry.stereotype(attr.applied_stereotype).abstract:
                    self.emit(
                        "E-201",
                        f"attribute '{attr.name}' applies abstract stereotype "
                        f"'{attr.applied_stereotype}'",
                        attr.span,
                    )

    def check_mandatory_and_enums(self) -> None:
        for block in self.eff.values():
            for st in block.applied_stereotypes:
                for spec in self.registry.effective_attributes(st):
                    bound = spec.name in block.stereotype_values
                    if spec.mandatory and spec.default is None and not bound:
                        self.emit(
                            "E-202",
                            f"mandatory attribute '{spec.name}' of stereotype "
                            f"'{st}' is unbound on block '{block.name}'",
                            block.span,
                        )
                    if bound:
                        self.check_enum_value(
                            spec.kind, block.stereotype_values[spec.name],
                            spec.name, block.span,
                        )
            for attr in block.attributes:
                if attr.applied_stereotype is None:
                    continue
                specs = self.registry.effective_attributes(attr.applied_stereotype)
                for spec in specs:
                    bound = spec.name in attr.stereotype_values
                    if spec.mandatory and spec.default is None and not bound:
                        self.emit(
                            "E-202",
                            f"mandatory attribute '{spec.name}' of stereotype "
                            f"'{attr.applied_stereotype}' is unbound on "
                            f"attribute '{attr.name}'",
                            attr.span,
                        )
                    if bound:
                        self.check_enum_value(
                            spec.kind, attr.stereotype_values[spec.name],
                            spec.name, attr.span,
                        )

    def check_enum_value(self, kind, value, name: str, span) -> None:
        if kind.base == "list" and isinstance(value, (list, tuple)):
            for item in value:
                self.check_enum_value(kind.element, item, name, span)
            return
        enum = self.registry.enum_for_kind(kind)
        if enum is not None and value not in enum.values:
            self.emit(
                "E-203",
                f"value {value!r} for '{name}' is not one of enumeration "
                f"'{enum.name}' ({', '.join(enum.values)})",
                span,
            )

    def input_attributes(self, block: Block):
        """(input block name, attribute) pairs over the effective inputs."""
        for ref in block.inputs:
            producer = self.eff.get(ref.block)
            if producer is None:
                continue
            for attr in producer.attributes:
                yield producer.name, attr

    def check_refs_and_selectors(self) -> None:
        for block in self.eff.values():
            for st in block.applied_stereotypes:
                for spec in self.registry.effective_attributes(st):
                    if spec.kind.base != "ref" or spec.kind.ref is None:
                        continue
                    required = spec.kind.ref
                    bound = block.stereotype_values.get(spec.name)
                    if self.registry.is_descendant(required, ATTRIBUTE_ROOT):
                        self.check_attribute_ref(block, spec.name, required, bound)
                    else:
                        self.check_block_ref(block, spec.name, required, bound)

    def check_attribute_ref(self, block: Block, name: str, required: str, bound) -> None:
        candidates = [
            (producer, attr)
            for producer, attr in self.input_attributes(block)
            if attr.applied_stereotype is not None
            and self.registry.is_descendant(attr.applied_stereotype, required)
        ]
        if bound is None:
            if len(candidates) != 1:
                self.emit(
                    "E-205",
                    f"block '{block.name}' needs exactly one input attribute "
                    f"carrying '{required}' but its inputs expose "
                    f"{len(candidates)}; bind {name} = \"<attribute>\" to choose",
                    block.span,
                )
            return
        if not isinstance(bound, str):
            return  # form already rejected at parse
        matches = [
            (producer, attr)
            for producer, attr in self.input_attributes(block)
            if attr.name == bound
        ]
        if not matches:
            self.emit(
                "E-204",
                f"'{name}' on block '{block.name}' references attribute "
                f"{bound!r}, which none of its inputs declare",
                block.span,
            )
            return
        if not any(
            attr.applied_stereotype is not None
            and self.registry.is_descendant(attr.applied_stereotype, required)
            for _, attr in matches
        ):
            self.emit(
                "E-204",
                f"'{name}' on block '{block.name}' references attribute "
                f"{bound!r}, which does not carry stereotype '{required}'",
                block.span,
            )

    def check_block_ref(self, block: Block, name: str, required: str, bound) -> None:
        if bound is None or not isinstance(bound, str):
            return
        target = self.eff.get(bound)
        if target is None:
            self.emit(
                "E-204",
                f"'{name}' on block '{block.name}' references unknown block {bound!r}",
                block.span,
            )
            return
        if not any(self.registry.is_descendant(st, required) for st in target.applied_stereotypes):
            self.emit(
                "E-204",
                f"'{name}' on block '{block.name}' references block {bound!r}, "
                f"which does not carry stereotype '{required}'",
                block.span,
            )

    def check_dataflow_cycles(self) -> None:
        order = [b.name for b in self.model.blocks]
        index = {name: i for i, name in enumerate(order)}
        graph = {
            name: [ref.block for ref in block.inputs if ref.block in self.eff]
            for name, block in self.eff.items()
        }
        # Tarjan strongly connected components
        counter = [0]
        low: dict[str, int] = {}
        num: dict[str, int] = {}
        on_stack: set[str] = set()
        stack: list[str] = []
        components: list[list[str]] = []

        def strongconnect(v: str) -> None:
            work = [(v, iter(graph[v]))]
            num[v] = low[v] = counter[0]
            counter[0] += 1
            stack.append(v)
            on_stack.add(v)
            while work:
                node, it = work[-1]
                advanced = False
                for w in it:
                    if w not in num:
                        num[w] = low[w] = counter[0]
                        counter[0] += 1
                        stack.append(w)
                        on_stack.add(w)
                        work.append((w, iter(graph[w])))
                        advanced = True
                        break
                    if w in on_stack:
                        low[node] = min(low[node], num[w])
                if advanced:
                    continue
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[node])
                if low[node] == num[node]:
                    comp: list[str] = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == node:
                            break
                    components.append(comp)

        for name in order:
            if name not in num:
                strongconnect(name)
        for comp in components:
            if len(comp) < 2:
                continue
            members = sorted(comp, key=lambda n: index[n])
            first = self.eff[members[0]]
            self.emit(
                "E-206",
                "dataflow cycle: " + " -> ".join(members + [members[0]]),
                first.span,
            )

    def scheduled_targets(self) -> list[str]:
        out: list[str] = []
        for machine in self.model.state_machines:
            for state in machine.states:
                if state.target_block in self.eff:
                    out.append(state.target_block)
        return out

    def check_states(self) -> None:
        for machine in self.model.state_machines:
            for state in machine.states:
                target = self.eff.get(state.target_block)
                if target is None:
                    continue
                if self.ml_function(target) is None:
                    self.emit(
                        "E-207",
                        f"state '{state.name}' targets block '{target.name}', "
                        "which carries no ML stereotype",
                        state.span,
                    )

    def check_machine_shape(self) -> None:
        for machine in self.model.state_machines:
            names = {s.name for s in machine.states}
            if machine.initial is None:
                self.emit(
                    "E-209",
                    f"workflow '{machine.name}' declares no initial state",
                    machine.span,
                )
                continue
            reachable = {machine.initial}
            frontier = [machine.initial]
            adj: dict[str, list[str]] = {}
            for tr in machine.transitions:
                adj.setdefault(tr.source, []).append(tr.target)
            while frontier:
                current = frontier.pop()
                for nxt in adj.get(current, ()):
                    if nxt not in reachable:
                        reachable.add(nxt)
                        frontier.append(nxt)
            for state in machine.states:
                if state.name not in reachable:
                    self.emit(
                        "E-209",
                        f"state '{state.name}' is unreachable from the initial "
                        f"state '{machine.initial}'",
                        state.span,
                    )
            del names

    def machine_paths(self, machine) -> list[list[str]]:
        """Simple paths (state names) from the initial state."""
        if machine.initial is None:
            return []
        adj: dict[str, list[str]] = {}
        for tr in machine.transitions:
            adj.setdefault(tr.source, []).append(tr.target)
        paths: list[list[str]] = []

        def walk(node: str, path: list[str]) -> None:
            nexts = [n for n in adj.get(node, ()) if n not in path]
            if not nexts:
                paths.append(list(path))
                return
            for nxt in nexts:
                path.append(nxt)
                walk(nxt, path)
                path.pop()

        walk(machine.initial, [machine.initial])
        return paths

    def check_workflow_vs_dataflow(self) -> None:
        for machine in self.model.state_machines:
            target_of = {s.name: s.target_block for s in machine.states}
            machine_targets = set(target_of.values())
            for path in self.machine_paths(machine):
                blocks = [target_of[s] for s in path if s in target_of and target_of[s] in self.eff]
                position = {name: i for i, name in enumerate(blocks)}
                for i, name in enumerate(blocks):
                    for ref in self.eff[name].inputs:
                        producer = ref.block
                        if producer not in self.eff:
                            continue
                        if producer in position:
                            if position[producer] > i:
                                self.emit(
                                    "E-208",
                                    f"block '{name}' consumes '{producer}' but the "
                                    f"workflow schedules '{producer}' later",
                                    self.eff[name].span,
                                )
                            continue
                        if producer in machine_targets:
                            continue  # on another branch; that path checks it
                        if not self.is_data_source(producer):
                            self.emit(
                                "E-208",
                                f"block '{name}' consumes '{producer}', which is "
                                "neither a data source nor scheduled by the workflow",
                                self.eff[name].span,
                            )

    def is_data_source(self, name: str) -> bool:
        block = self.eff.get(name)
        if block is None:
            return False
        st = self.ml_function(block)
        if st is None:
            return False
        return any(sd.package == "DataStorage" for sd in self.registry.ancestry(st))

    def check_dead_blocks(self) -> None:
        alive: set[str] = set(self.scheduled_targets())
        frontier = list(alive)
        while frontier:
            current = frontier.pop()
            block = self.eff.get(current)
            if block is None:
                continue
            for ref in block.inputs:
                if ref.block not in alive and ref.block in self.eff:
                    alive.add(ref.block)
                    frontier.append(ref.block)
        for block in self.model.blocks:
            eff = self.eff[block.name]
            if self.ml_function(eff) is None:
                continue
            if block.name not in alive:
                self.emit(
                    "W-301",
                    f"block '{block.name}' carries an ML stereotype but is never "
                    "scheduled and feeds no scheduled block",
                    block.span,
                )

    def check_custom_code(self) -> None:
        policy = self.config.custom_code_policy
        if policy == "allow":
            return
        for block in self.eff.values():
            st = self.ml_function(block)
            if st is None or not self.registry.is_descendant(st, CUSTOM_CODE_STEREOTYPE):
                continue
            if policy == "warn":
                self.emit(
                    "W-302",
                    f"block '{block.name}' injects custom code (policy: warn)",
                    block.span,
                )
            else:
                self.emit(
                    "E-211",
                    f"block '{block.name}' injects custom code (policy: error)",
                    block.span,
                )

    def check_optional_values(self) -> None:
        if self.config.unknown_optional_attrs == "allow":
            return
        index = self.config.template_params
        if index is None:
            return
        for block in self.eff.values():
            if not block.optional_values:
                continue
            st = self.ml_function(block)
            if st is None:
                continue
            info = index.get(st)
            if info is None or info.accepts_extras:
                continue
            for name in block.optional_values:
                if name not in info.names:
                    self.emit(
                        "W-303",
                        f"optional value '{name}' on block '{block.name}' matches "
                        f"no template parameter of '{st}'",
                        block.span,
                    )

    def check_shared_inputs(self) -> None:
        for block in self.model.blocks:
            for ref in block.inputs:
                if ref.kind == "shared":
                    self.emit(
                        "I-301",
                        f"shared association to '{ref.block}' is treated as a "
                        "dataflow input, exactly like part",
                        block.span,
                    )

    def check_override_kinds(self) -> None:
        for block in self.model.blocks:
            if block.parent_block is None:
                continue
            lineage: list[Block] = []
            current: Block | None = block
            guard: set[str] = set()
            while current is not None and current.name not in guard:
                guard.add(current.name)
                lineage.append(current)
                current = next(
                    (b for b in self.model.blocks if b.name == current.parent_block), None
                )
            lineage.reverse()
            kinds: dict[str, str] = {}
            for member in lineage:
                for attr in member.attributes:
                    before = kinds.get(attr.name)
                    if before is not None and before != attr.declared_type and member.name == block.name:
                        self.emit(
                            "E-210",
                            f"attribute '{attr.name}' redeclared as "
                            f"{attr.declared_type} (inherited type {before})",
                            attr.span,
                        )
                    kinds[attr.name] = attr.declared_type

    def run(self) -> tuple[Diagnostic, ...]:
        self.check_abstract()
        self.check_mandatory_and_enums()
        self.check_refs_and_selectors()
        self.check_dataflow_cycles()
        self.check_states()
        self.check_machine_shape()
        self.check_workflow_vs_dataflow()
        self.check_override_kinds()
        self.check_dead_blocks()
        self.check_custom_code()
        self.check_optional_values()
        self.check_shared_inputs()
        return sorted_diagnostics(self.diags)


def check_model(
    model: Model,
    registry: StereotypeRegistry,
    config: ValidationConfig | None = None,
) -> tuple[Diagnostic, ...]:
    """Run every semantic rule; returns diagnostics sorted by location."""
    return _Checker(model, registry, config or ValidationConfig()).run()
