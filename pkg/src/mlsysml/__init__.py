"""Textual modeling of ML pipelines: parse, validate, schedule, generate, run.

The toolchain is a straight line, and each stage is importable on its own:

    registry = mlsysml.default_registry()
    result = mlsysml.parse_model(text, registry)
    diagnostics = mlsysml.check_model(result.model, registry)
    plan = mlsysml.derive_plan(result.model, registry)
    filename, code = mlsysml.generate(plan, "py-script")
    outcome = mlsysml.run(plan, data_dir)
"""

from .codegen import (
    RenderedDocument,
    generate,
    load_pack,
    render,
    template_param_index,
    write_notebook,
    write_script,
)
from .diagnostics import Diagnostic, Severity
from .errors import (
    CodegenError,
    MlSysMlError,
    ProfileError,
    RunError,
    SchedulerError,
)
from .interpreter import RunResult, fit_ols, run, split
from .model import Block, Model, State, StateMachine, effective_block, lookup_block
from .parser import ParseResult, format_model, parse_model, parse_model_file
from .profile import StereotypeRegistry, default_registry, load_profile, load_profile_file
from .scheduler import (
    PipelinePlan,
    PlanStep,
    dependency_topo_orders,
    derive_plan,
)
from .validator import ValidationConfig, check_model, explain

__version__ = "0.1.0"

__all__ = [
    "Block",
    "CodegenError",
    "Diagnostic",
    "MlSysMlError",
    "Model",
    "ParseResult",
    "PipelinePlan",
    "PlanStep",
    "ProfileError",
    "RenderedDocument",
    "RunError",
    "RunResult",
    "SchedulerError",
    "Severity",
    "State",
    "StateMachine",
    "StereotypeRegistry",
    "ValidationConfig",
    "check_model",
    "default_registry",
    "dependency_topo_orders",
    "derive_plan",
    "effective_block",
    "explain",
    "fit_ols",
    "format_model",
    "generate",
    "load_pack",
    "load_profile",
    "load_profile_file",
    "lookup_block",
    "parse_model",
    "parse_model_file",
    "render",
    "run",
    "split",
    "template_param_index",
    "write_notebook",
    "write_script",
    "__version__",
]
