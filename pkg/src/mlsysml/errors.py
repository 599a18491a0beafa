"""Exception hierarchy shared by every stage of the toolchain.

Each compiler stage raises a narrow subset of these; nothing here carries
behaviour beyond a message and, where useful, structured context that
callers (mainly the CLI and tests) can inspect without string matching.
"""

from __future__ import annotations


class MlSysMlError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# profile loading

class ProfileError(MlSysMlError):
    """Base class for profile-file loading failures."""


class ProfileParseError(ProfileError):
    """The profile document does not conform to the profile grammar.

    Also covers structural violations tied to a single declaration: a
    stereotype outside the known package roots, an inheritance root other
    than the fixed root for its applies-to kind, an applies-to mismatch
    with the parent, or a default literal that does not fit its kind.
    """

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(message)
        self.line = line
        self.column = column


class ProfileCycleError(ProfileError):
    """Stereotype inheritance contains a cycle; ``chain`` lists it."""

    def __init__(self, chain: list[str]) -> None:
        super().__init__("stereotype inheritance cycle: " + " -> ".join(chain))
        self.chain = list(chain)


class UnresolvedRef(ProfileError):
    """A parent, enum-ref, or stereotype-ref names nothing in the document."""

    def __init__(self, name: str, context: str = "") -> None:
        detail = f" ({context})" if context else ""
        super().__init__(f"unresolved reference to '{name}'{detail}")
        self.name = name


class DuplicateName(ProfileError):
    """Two declarations claim one name, or an override changes an attribute kind."""

    def __init__(self, name: str, detail: str = "") -> None:
        suffix = f": {detail}" if detail else ""
        super().__init__(f"duplicate name '{name}'{suffix}")
        self.name = name


# ---------------------------------------------------------------------------
# model access

class UnknownBlock(MlSysMlError, KeyError):
    """Block lookup by name found nothing. Lookup is case-sensitive."""

    def __init__(self, name: str) -> None:
        MlSysMlError.__init__(self, f"no block named '{name}' in model")
        self.name = name

    def __str__(self) -> str:  # KeyError quotes its arg; keep the message readable
        return self.args[0]


class InheritanceCycle(MlSysMlError):
    """Block generalization chain loops; ``chain`` lists the blocks."""

    def __init__(self, chain: list[str]) -> None:
        super().__init__("block inheritance cycle: " + " -> ".join(chain))
        self.chain = list(chain)


# ---------------------------------------------------------------------------
# validation

class UnknownCode(MlSysMlError):
    """``explain`` was asked about a diagnostic code that does not exist."""

    def __init__(self, code: str) -> None:
        super().__init__(f"unknown diagnostic code '{code}'")
        self.code = code


# ---------------------------------------------------------------------------
# scheduling

class SchedulerError(MlSysMlError):
    """Base class for plan derivation failures."""


class NonLinearWorkflow(SchedulerError):
    """The state machine does not describe a single initial-to-final path."""


class UnresolvedInput(SchedulerError):
    """A scheduled step consumes a block that no earlier step produces."""

    def __init__(self, consumer: str, producer: str) -> None:
        super().__init__(
            f"step '{consumer}' consumes '{producer}', which is neither a "
            "data source nor an earlier workflow step"
        )
        self.consumer = consumer
        self.producer = producer


class TooLarge(SchedulerError):
    """Brute-force order enumeration refused a graph over the size cap."""


# ---------------------------------------------------------------------------
# code generation

class CodegenError(MlSysMlError):
    """Base class for rendering failures."""


class MissingTemplate(CodegenError):
    def __init__(self, stereotype: str, target: str) -> None:
        super().__init__(f"no template for stereotype '{stereotype}' and target '{target}'")
        self.stereotype = stereotype
        self.target = target


class UnboundPlaceholder(CodegenError):
    def __init__(self, placeholder: str, stereotype: str) -> None:
        super().__init__(
            f"template for '{stereotype}' references '{{{{{placeholder}}}}}' "
            "but the step binds no such parameter"
        )
        self.placeholder = placeholder
        self.stereotype = stereotype


class EscapingError(CodegenError):
    """A parameter value cannot be rendered as a safe target-language literal."""


class SerializationError(CodegenError):
    """A rendered document cannot be serialized for its target."""


# ---------------------------------------------------------------------------
# interpretation

class RunError(MlSysMlError):
    """Base class for interpreter failures."""


class MissingFile(RunError):
    def __init__(self, path: str) -> None:
        super().__init__(f"input file not found: {path}")
        self.path = path


class TypeMismatch(RunError):
    def __init__(self, column: str, detail: str) -> None:
        super().__init__(f"column '{column}': {detail}")
        self.column = column


class JoinKeyMissing(RunError):
    def __init__(self, detail: str) -> None:
        super().__init__(detail)


class EmptyInput(RunError):
    def __init__(self, step: str, detail: str = "no rows to operate on") -> None:
        super().__init__(f"step '{step}': {detail}")
        self.step = step


class BadRatio(RunError):
    def __init__(self, ratio: float) -> None:
        super().__init__(f"split ratio must lie strictly between 0 and 1, got {ratio!r}")
        self.ratio = ratio


class SingularDesign(RunError):
    """The design matrix is rank-deficient; no pseudo-inverse fallback exists."""


class ConstantColumn(RunError):
    def __init__(self, column: str) -> None:
        super().__init__(f"column '{column}' is constant; z-score normalization is undefined")
        self.column = column


class UnsupportedFormatToken(RunError):
    def __init__(self, token: str, fmt: str) -> None:
        super().__init__(f"datetime format {fmt!r} uses unsupported token {token!r}")
        self.token = token
        self.fmt = fmt
