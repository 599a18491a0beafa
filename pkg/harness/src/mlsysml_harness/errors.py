"""Error types for the execution harness."""

from __future__ import annotations


class HarnessError(Exception):
    """Root of everything this package raises on purpose."""


class ToolchainUnavailable(HarnessError):
    """The mlsysml command line tool could not be found or does not answer."""

    def __init__(self, detail: str) -> None:
        super().__init__(f"mlsysml toolchain unavailable: {detail}")


class NonZeroExit(HarnessError):
    """A subprocess finished with a non-zero exit code."""

    def __init__(self, command: str, returncode: int, stderr: str) -> None:
        excerpt = stderr.strip()
        if len(excerpt) > 2000:
            excerpt = excerpt[:2000] + " ..."
        super().__init__(f"{command} exited with {returncode}: {excerpt}")
        self.command = command
        self.returncode = returncode
        self.stderr_excerpt = excerpt


class MissingMetricsOutput(HarnessError):
    """A generated script ran but left no readable metrics file behind."""

    def __init__(self, expected_path: str) -> None:
        super().__init__(f"no metrics file at {expected_path}")
        self.expected_path = expected_path


class IncompleteTemplatePack(HarnessError):
    """The template pack does not cover every concrete block stereotype."""

    def __init__(self, missing: list[str], extra: list[str]) -> None:
        parts = []
        if missing:
            parts.append("missing templates: " + ", ".join(missing))
        if extra:
            parts.append("templates without a stereotype: " + ", ".join(extra))
        super().__init__("; ".join(parts) or "template pack mismatch")
        self.missing = missing
        self.extra = extra
