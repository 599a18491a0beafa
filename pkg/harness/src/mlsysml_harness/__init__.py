"""Execution harness for mlsysml-generated pipeline scripts.

Runs the script a model generates, runs the interpreter on the same model,
and reports whether the two agree metric for metric. Talks to the
toolchain only through its command line.
"""

from .errors import (
    HarnessError,
    IncompleteTemplatePack,
    MissingMetricsOutput,
    NonZeroExit,
    ToolchainUnavailable,
)
from .harness import (
    assert_template_coverage,
    cross_check,
    execute_generated,
    find_toolchain,
    toolchain_info,
)
from .report import DEFAULT_TOLERANCE, HarnessReport, compare_metrics

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOLERANCE",
    "HarnessError",
    "HarnessReport",
    "IncompleteTemplatePack",
    "MissingMetricsOutput",
    "NonZeroExit",
    "ToolchainUnavailable",
    "assert_template_coverage",
    "compare_metrics",
    "cross_check",
    "execute_generated",
    "find_toolchain",
    "toolchain_info",
    "__version__",
]
