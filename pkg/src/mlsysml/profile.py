"""Stereotype profile: the vocabulary a model document is written against.

A profile file declares stereotypes (grouped into fixed packages, arranged
in single-inheritance trees per applies-to kind) and enumerations. The
loaded :class:`StereotypeRegistry` is immutable and closed under reference:
every parent, enum-ref, and stereotype-ref resolves inside it.

Inheritance is a forest with fixed roots per applies-to kind: ``ML`` for
block stereotypes, ``Method_Attribute_Input`` for attribute stereotypes,
and ``ML_Block_Connection`` for state stereotypes. A stereotype without a
parent must be its kind's root.

Grammar (see docs/profile-grammar.ebnf):

    enum Name { Value, "Other-Value" }
    stereotype Name in Package [extends Parent] [abstract] [blackbox]
            applies-to block {
        attr name: kind [mandatory] [= default];
    }

Attribute kinds: ``int``, ``float``, ``string``, ``bool``,
``datetime-format``, ``enum E``, ``ref S``, ``list of <kind>``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping

from ._lex import Token, tokenize
from .errors import (
    DuplicateName,
    ProfileCycleError,
    ProfileParseError,
    UnresolvedRef,
)

PACKAGES = (
    "Common",
    "Attributes",
    "DataStorage",
    "Algorithm",
    "PreProcessing",
    "AlgorithmWorkflow",
)

APPLIES_TO = ("block", "attribute", "state")

# Fixed inheritance root per applies-to kind.
ROOTS = {
    "block": "ML",
    "attribute": "Method_Attribute_Input",
    "state": "ML_Block_Connection",
}

_PRIMITIVE_KINDS = ("int", "float", "string", "bool", "datetime-format")


@dataclass(frozen=True)
class AttrKind:
    """Kind of a stereotype attribute.

    ``base`` is a primitive name, "enum", "ref", or "list"; ``ref`` names
    the enumeration or stereotype for enum/ref kinds; ``element`` holds the
    item kind for lists.
    """

    base: str
    ref: str | None = None
    element: "AttrKind | None" = None

    def __str__(self) -> str:
        if self.base == "enum":
            return f"enum {self.ref}"
        if self.base == "ref":
            return f"ref {self.ref}"
        if self.base == "list":
            return f"list of {self.element}"
        return self.base

    def accepts_form(self, value: object) -> bool:
        """Whether a literal has the right shape for this kind.

        Form only: enum membership and ref resolution are semantic checks
        that belong to the validator.
        """
        if self.base == "list":
            return isinstance(value, (list, tuple)) and all(
                self.element.accepts_form(v) for v in value  # type: ignore[union-attr]
            )
        if self.base == "bool":
            return isinstance(value, bool)
        if self.base == "int":
            return isinstance(value, int) and not isinstance(value, bool)
        if self.base == "float":
            return (isinstance(value, (int, float))
                    and not isinstance(value, bool))
        # string, datetime-format, enum, ref all bind string literals
        return isinstance(value, str)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: AttrKind
    mandatory: bool = False
    default: object | None = None
    line: int = 0
    column: int = 0

    def __post_init__(self) -> None:
        if self.default is not None and not self.kind.accepts_form(self.default):
            raise ProfileParseError(
                f"default for attribute '{self.name}' does not fit kind "
                f"'{self.kind}'",
                self.line,
                self.column,
            )


@dataclass(frozen=True)
class StereotypeDef:
    name: str
    package: str
    parent: str | None = None
    abstract: bool = False
    blackbox: bool = False
    applies_to: str = "block"
    attributes: tuple[AttributeSpec, ...] = ()
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class EnumerationDef:
    name: str
    values: tuple[str, ...] = field(default_factory=tuple)


class StereotypeRegistry:
    """Immutable set of stereotype and enumeration definitions.

    Built only by :func:`load_profile`; all lookups are by exact name.
    Reads are safe from any thread.
    """

    def __init__(
        self,
        stereotypes: dict[str, StereotypeDef],
        enumerations: dict[str, EnumerationDef],
        source_hash: str,
        source_path: str,
    ) -> None:
        self._stereotypes: Mapping[str, StereotypeDef] = MappingProxyType(dict(stereotypes))
        self._enumerations: Mapping[str, EnumerationDef] = MappingProxyType(dict(enumerations))
        self.source_hash = source_hash
        self.source_path = source_path

    # -- lookup ------------------------------------------------------------

    @property
    def stereotypes(self) -> Mapping[str, StereotypeDef]:
        return self._stereotypes

    @property
    def enumerations(self) -> Mapping[str, EnumerationDef]:
        return self._enumerations

    def __contains__(self, name: str) -> bool:
        return name in self._stereotypes

    def __iter__(self) -> Iterator[StereotypeDef]:
        return iter(self._stereotypes.values())

    def stereotype(self, name: str) -> StereotypeDef:
        try:
            return self._stereotypes[name]
        except KeyError:
            raise UnresolvedRef(name, "stereotype lookup") from None

    def enumeration(self, name: str) -> EnumerationDef:
        try:
            return self._enumerations[name]
        except KeyError:
            raise UnresolvedRef(name, "enumeration lookup") from None

    def packages(self) -> tuple[str, ...]:
        """The six fixed package names; all are present even when empty."""
        return PACKAGES

    # -- inheritance -------------------------------------------------------

    def is_descendant(self, name: str, ancestor: str) -> bool:
        """Reflexive-transitive inheritance test.

        Total: unknown names are nobody's descendant and nobody's ancestor
        (except trivially themselves when equal and known).
        """
        if name not in self._stereotypes or ancestor not in self._stereotypes:
            return False
        current: str | None = name
        while current is not None:
            if current == ancestor:
                return True
            current = self._stereotypes[current].parent
        return False

    def ancestry(self, name: str) -> list[StereotypeDef]:
        """Definitions from the root down to ``name`` itself."""
        chain: list[StereotypeDef] = []
        current: str | None = name
        while current is not None:
            sd = self.stereotype(current)
            chain.append(sd)
            current = sd.parent
        chain.reverse()
        return chain

    def effective_attributes(self, name: str) -> tuple[AttributeSpec, ...]:
        """Attribute specs visible on ``name``, inherited ones included.

        Root-first order; a redeclared name keeps its original position
        with the nearest descendant's declaration winning.
        """
        merged: dict[str, AttributeSpec] = {}
        for sd in self.ancestry(name):
            for spec in sd.attributes:
                merged[spec.name] = spec
        return tuple(merged.values())

    # -- convenience views ---------------------------------------------------

    def block_stereotypes(self, *, include_abstract: bool = True) -> tuple[StereotypeDef, ...]:
        return tuple(
            sd
            for sd in self._stereotypes.values()
            if sd.applies_to == "block" and (include_abstract or not sd.abstract)
        )

    def enum_for_kind(self, kind: AttrKind) -> EnumerationDef | None:
        if kind.base == "enum" and kind.ref is not None:
            return self._enumerations.get(kind.ref)
        return None


# ---------------------------------------------------------------------------
# loading


class _ProfileParser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str, tok: Token | None = None) -> ProfileParseError:
        tok = tok or self.peek()
        return ProfileParseError(message, tok.line, tok.column)

    def expect_ident(self, what: str) -> Token:
        tok = self.next()
        if tok.kind != "ident":
            raise self.fail(f"expected {what}, found {tok.text or 'end of file'!r}", tok)
        return tok

    def expect_punct(self, value: str) -> Token:
        tok = self.next()
        if not (tok.kind == "punct" and tok.value == value):
            raise self.fail(f"expected {value!r}, found {tok.text or 'end of file'!r}", tok)
        return tok

    def accept_punct(self, value: str) -> bool:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == value:
            self.next()
            return True
        return False

    # -- literals ------------------------------------------------------------

    def parse_literal(self) -> object:
        tok = self.peek()
        if tok.kind == "string":
            self.next()
            return tok.value
        if tok.kind in ("int", "float"):
            self.next()
            return tok.value
        if tok.kind == "ident" and tok.value in ("true", "false"):
            self.next()
            return tok.value == "true"
        if tok.kind == "punct" and tok.value == "[":
            self.next()
            items: list[object] = []
            if not self.accept_punct("]"):
                while True:
                    items.append(self.parse_literal())
                    if self.accept_punct("]"):
                        break
                    self.expect_punct(",")
            return tuple(items)
        raise self.fail(f"expected a literal, found {tok.text or 'end of file'!r}", tok)

    # -- kinds ---------------------------------------------------------------

    def parse_kind(self) -> AttrKind:
        tok = self.expect_ident("an attribute kind")
        word = tok.value
        if word in _PRIMITIVE_KINDS:
            return AttrKind(word)
        if word == "enum":
            return AttrKind("enum", ref=self.expect_ident("an enumeration name").value)
        if word == "ref":
            return AttrKind("ref", ref=self.expect_ident("a stereotype name").value)
        if word == "list":
            of = self.expect_ident("'of'")
            if of.value != "of":
                raise self.fail("expected 'of' after 'list'", of)
            return AttrKind("list", element=self.parse_kind())
        raise self.fail(f"unknown attribute kind {word!r}", tok)

    # -- declarations ----------------------------------------------------------

    def parse_enum(self) -> EnumerationDef:
        name = self.expect_ident("an enumeration name")
        self.expect_punct("{")
        values: list[str] = []
        while True:
            tok = self.next()
            if tok.kind == "ident":
                values.append(tok.value)
            elif tok.kind == "string":
                values.append(tok.value)
            else:
                raise self.fail("expected an enumeration value", tok)
            if self.accept_punct("}"):
                break
            self.expect_punct(",")
        if not values:
            raise self.fail("enumeration needs at least one value", name)
        return EnumerationDef(name.value, tuple(values))

    def parse_attr(self) -> AttributeSpec:
        name = self.expect_ident("an attribute name")
        self.expect_punct(":")
        kind = self.parse_kind()
        mandatory = False
        default: object | None = None
        tok = self.peek()
        if tok.kind == "ident" and tok.value == "mandatory":
            self.next()
            mandatory = True
        if self.accept_punct("="):
            default = self.parse_literal()
        self.expect_punct(";")
        return AttributeSpec(
            name.value, kind, mandatory=mandatory, default=default,
            line=name.line, column=name.column,
        )

    def parse_stereotype(self) -> StereotypeDef:
        name = self.expect_ident("a stereotype name")
        kw = self.expect_ident("'in'")
        if kw.value != "in":
            raise self.fail("expected 'in <Package>'", kw)
        package = self.expect_ident("a package name")
        if package.value not in PACKAGES:
            raise self.fail(
                f"unknown package {package.value!r}; expected one of {', '.join(PACKAGES)}",
                package,
            )
        parent: str | None = None
        abstract = False
        blackbox = False
        applies_to: str | None = None
        while True:
            tok = self.peek()
            if tok.kind != "ident":
                break
            if tok.value == "extends":
                self.next()
                parent = self.expect_ident("a parent stereotype name").value
            elif tok.value == "abstract":
                self.next()
                abstract = True
            elif tok.value == "blackbox":
                self.next()
                blackbox = True
            elif tok.value == "applies-to":
                self.next()
                kind_tok = self.expect_ident("'block', 'attribute', or 'state'")
                if kind_tok.value not in APPLIES_TO:
                    raise self.fail(
                        f"applies-to must be one of {', '.join(APPLIES_TO)}", kind_tok
                    )
                applies_to = kind_tok.value
                break
            else:
                raise self.fail(f"unexpected keyword {tok.value!r}", tok)
        if applies_to is None:
            raise self.fail(f"stereotype '{name.value}' is missing 'applies-to'", name)
        self.expect_punct("{")
        attrs: list[AttributeSpec] = []
        seen: set[str] = set()
        while not self.accept_punct("}"):
            kw = self.expect_ident("'attr' or '}'")
            if kw.value != "attr":
                raise self.fail("only 'attr' declarations may appear here", kw)
            spec = self.parse_attr()
            if spec.name in seen:
                raise DuplicateName(spec.name, f"attribute in stereotype '{name.value}'")
            seen.add(spec.name)
            attrs.append(spec)
        return StereotypeDef(
            name.value,
            package.value,
            parent=parent,
            abstract=abstract,
            blackbox=blackbox,
            applies_to=applies_to,
            attributes=tuple(attrs),
            line=name.line,
            column=name.column,
        )


def _check_forest(stereotypes: dict[str, StereotypeDef]) -> None:
    for sd in stereotypes.values():
        if sd.parent is None:
            expected = ROOTS[sd.applies_to]
            if sd.name != expected:
                raise ProfileParseError(
                    f"stereotype '{sd.name}' (applies-to {sd.applies_to}) has no "
                    f"parent; only '{expected}' may be a root",
                    sd.line,
                    sd.column,
                )
            continue
        if sd.parent not in stereotypes:
            raise UnresolvedRef(sd.parent, f"parent of '{sd.name}'")
        parent = stereotypes[sd.parent]
        if parent.applies_to != sd.applies_to:
            raise ProfileParseError(
                f"'{sd.name}' applies to {sd.applies_to} but extends "
                f"'{parent.name}', which applies to {parent.applies_to}",
                sd.line,
                sd.column,
            )

    # cycle detection over the parent relation
    state: dict[str, int] = {}  # 0 visiting, 1 done
    for start in stereotypes:
        if start in state:
            continue
        path: list[str] = []
        current: str | None = start
        while current is not None and state.get(current) != 1:
            if state.get(current) == 0:
                cycle = path[path.index(current):] + [current]
                raise ProfileCycleError(cycle)
            state[current] = 0
            path.append(current)
            current = stereotypes[current].parent
        for name in path:
            state[name] = 1


def _check_references(
    stereotypes: dict[str, StereotypeDef],
    enumerations: dict[str, EnumerationDef],
) -> None:
    def check_kind(kind: AttrKind, owner: str, attr: AttributeSpec) -> None:
        if kind.base == "enum":
            if kind.ref not in enumerations:
                raise UnresolvedRef(kind.ref or "?", f"enum kind of {owner}.{attr.name}")
        elif kind.base == "ref":
            if kind.ref not in stereotypes:
                raise UnresolvedRef(kind.ref or "?", f"ref kind of {owner}.{attr.name}")
        elif kind.base == "list":
            check_kind(kind.element, owner, attr)  # type: ignore[arg-type]

    for sd in stereotypes.values():
        for attr in sd.attributes:
            check_kind(attr.kind, sd.name, attr)
            if attr.default is not None:
                enum = enumerations.get(attr.kind.ref or "") if attr.kind.base == "enum" else None
                if enum is not None and attr.default not in enum.values:
                    raise ProfileParseError(
                        f"default {attr.default!r} is not a value of enumeration "
                        f"'{enum.name}'",
                        attr.line,
                        attr.column,
                    )


def _check_overrides(registry: StereotypeRegistry) -> None:
    # a child may redeclare an inherited attribute only with the same kind
    for sd in registry:
        seen: dict[str, AttrKind] = {}
        for ancestor in registry.ancestry(sd.name):
            for attr in ancestor.attributes:
                if attr.name in seen and seen[attr.name] != attr.kind:
                    raise DuplicateName(
                        attr.name,
                        f"'{ancestor.name}' redeclares it with kind '{attr.kind}' "
                        f"(inherited kind '{seen[attr.name]}')",
                    )
                seen[attr.name] = attr.kind


def load_profile(source: str, source_path: str = "<profile>") -> StereotypeRegistry:
    """Parse and resolve a profile document into a registry.

    Raises ProfileParseError, ProfileCycleError, UnresolvedRef, or
    DuplicateName; the registry is never partially constructed.
    """
    tokens, problems = tokenize(source)
    if problems:
        first = problems[0]
        raise ProfileParseError(first.message, first.line, first.column)

    parser = _ProfileParser(tokens)
    stereotypes: dict[str, StereotypeDef] = {}
    enumerations: dict[str, EnumerationDef] = {}
    while parser.peek().kind != "eof":
        kw = parser.expect_ident("'stereotype' or 'enum'")
        if kw.value == "stereotype":
            sd = parser.parse_stereotype()
            if sd.name in stereotypes or sd.name in enumerations:
                raise DuplicateName(sd.name)
            stereotypes[sd.name] = sd
        elif kw.value == "enum":
            ed = parser.parse_enum()
            if ed.name in enumerations or ed.name in stereotypes:
                raise DuplicateName(ed.name)
            enumerations[ed.name] = ed
        else:
            raise parser.fail(f"expected 'stereotype' or 'enum', found {kw.value!r}", kw)

    _check_forest(stereotypes)
    _check_references(stereotypes, enumerations)

    registry = StereotypeRegistry(
        stereotypes,
        enumerations,
        source_hash=hashlib.sha256(source.encode("utf-8")).hexdigest(),
        source_path=source_path,
    )
    _check_overrides(registry)
    return registry


def load_profile_file(path: str | Path) -> StereotypeRegistry:
    p = Path(path)
    return load_profile(p.read_text(encoding="utf-8"), str(p))


def default_profile_path() -> Path:
    """Filesystem path of the profile shipped with the package."""
    return Path(str(resources.files("mlsysml").joinpath("data/default.mlprofile")))


def default_registry() -> StereotypeRegistry:
    return load_profile_file(default_profile_path())
