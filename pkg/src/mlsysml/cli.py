"""Command line interface.

Subcommands cover the whole toolchain path: ``validate`` a model file,
``plan`` its execution order, ``graph`` its structure as DOT, ``gen``
runnable code, ``run`` it on local files, ``explain`` a diagnostic code,
``info`` the loaded vocabulary.

Exit codes (all subcommands):
  0  success; for validate: no diagnostics above info severity
  1  validate only: warnings present, no errors
  2  the model is semantically invalid, or cannot be scheduled
  3  invocation, I/O, parse, or environment failure

The stereotype profile resolves in order: ``--profile``, the
``MLSYSML_PROFILE`` environment variable, the built-in default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .codegen import (
    TARGETS,
    generate,
    load_pack,
    template_param_index,
)
from .diagnostics import Severity, has_errors
from .errors import (
    CodegenError,
    MlSysMlError,
    ProfileError,
    RunError,
    SchedulerError,
    UnknownCode,
)
from .interpreter import SUPPORTED_STEREOTYPES, run
from .model import Model, effective_block
from .parser import parse_model
from .profile import default_registry, load_profile_file
from .scheduler import derive_plan
from .validator import ValidationConfig, check_model, explain


@dataclass(frozen=True)
class CliConfig:
    """Everything one invocation needs, resolved from flags and env."""

    command: str
    model_path: str | None = None
    profile_path: str | None = None
    data_dir: str | None = None
    target: str = "py-script"
    seed: int = 42
    custom_code_policy: str = "error"
    output_path: str | None = None
    format: str = "text"
    templates_root: str | None = None
    code: str | None = None


class _Exit(Exception):
    def __init__(self, code: int, message: str | None = None) -> None:
        super().__init__(message or "")
        self.code = code
        self.message = message


class _ArgumentParser(argparse.ArgumentParser):
    # usage mistakes land in the environment-failure bucket, keeping exit
    # code 2 reserved for invalid models
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _Exit(3, f"{self.prog}: {message}")


def _registry(config: CliConfig):
    path = config.profile_path or os.environ.get("MLSYSML_PROFILE")
    try:
        if path:
            return load_profile_file(path)
        return default_registry()
    except ProfileError as exc:
        raise _Exit(3, f"profile error: {exc}") from None
    except OSError as exc:
        raise _Exit(3, f"cannot read profile: {exc}") from None


def _parse_file(config: CliConfig, registry):
    if not config.model_path:
        raise _Exit(3, "a model file is required")
    path = Path(config.model_path)
    if not path.is_file():
        raise _Exit(3, f"no such model file: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _Exit(3, f"cannot read {path}: {exc}") from None
    return parse_model(text, registry, file=str(path))


def _validation_config(config: CliConfig) -> ValidationConfig:
    index = None
    try:
        pack = load_pack("py-script", config.templates_root)
        index = template_param_index(pack)
    except (CodegenError, OSError):
        index = None
    return ValidationConfig(
        custom_code_policy=config.custom_code_policy, template_params=index
    )


def _print_diagnostics(diags, as_json: bool, stream=None) -> None:
    stream = stream or sys.stdout
    if as_json:
        print(json.dumps([d.to_json() for d in diags], indent=2), file=stream)
        return
    for d in diags:
        print(d.format_human(), file=stream)


def _severity_exit(diags) -> int:
    if any(d.severity is Severity.ERROR for d in diags):
        return 2
    if any(d.severity is Severity.WARNING for d in diags):
        return 1
    return 0


def _validated_model(config: CliConfig):
    """Parse + validate; parse failures exit 3, semantic errors exit 2."""
    registry = _registry(config)
    result = _parse_file(config, registry)
    if result.model is None:
        _print_diagnostics(result.diagnostics, as_json=False, stream=sys.stderr)
        raise _Exit(3, "the model did not parse")
    diags = check_model(result.model, registry, _validation_config(config))
    if has_errors(diags):
        _print_diagnostics(diags, as_json=False, stream=sys.stderr)
        raise _Exit(2, "the model did not validate")
    for d in diags:
        print(d.format_human(), file=sys.stderr)
    return registry, result.model


def _write_or_print(text: str, output_path: str | None) -> None:
    if output_path:
        Path(output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_validate(config: CliConfig) -> int:
    registry = _registry(config)
    result = _parse_file(config, registry)
    as_json = config.format == "json"
    if result.model is None:
        _print_diagnostics(result.diagnostics, as_json=as_json)
        return 3
    diags = check_model(result.model, registry, _validation_config(config))
    _print_diagnostics(diags, as_json=as_json)
    return _severity_exit(diags)


def cmd_plan(config: CliConfig) -> int:
    registry, model = _validated_model(config)
    try:
        plan = derive_plan(model, registry)
    except SchedulerError as exc:
        raise _Exit(2, f"cannot schedule: {exc}") from None
    _write_or_print(plan.dumps(), config.output_path)
    return 0


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot_label(parts: list[str]) -> str:
    body = "\\n".join(
        p.replace("\\", "\\\\").replace('"', '\\"') for p in parts
    )
    return '"' + body + '"'


def render_dot(model: Model) -> str:
    """Dependency and workflow edges of a model as a Graphviz digraph.

    Dataflow edges are solid (producer to consumer), with block
    generalization resolved so inherited inputs show; generalization
    itself is a dotted child-to-parent edge; workflow transitions are
    dashed edges between the blocks the states execute.
    """
    lines = [f"digraph {_dot_id(model.name)} {{"]
    if model.blocks:
        lines.append("  rankdir=LR;")
        lines.append("  node [shape=box];")
        resolved = {}
        for block in model.blocks:
            try:
                resolved[block.name] = effective_block(model, block.name)
            except MlSysMlError:
                resolved[block.name] = block
        for block in model.blocks:
            parts = [block.name]
            stereotypes = resolved[block.name].applied_stereotypes
            if stereotypes:
                parts.append("<<" + ", ".join(stereotypes) + ">>")
            lines.append(f"  {_dot_id(block.name)} [label={_dot_label(parts)}];")
        for block in model.blocks:
            for ref in resolved[block.name].inputs:
                lines.append(f"  {_dot_id(ref.block)} -> {_dot_id(block.name)};")
        for block in model.blocks:
            if block.parent_block:
                lines.append(
                    f"  {_dot_id(block.name)} -> {_dot_id(block.parent_block)}"
                    " [style=dotted, arrowhead=empty];"
                )
    for machine in model.state_machines:
        target_of = {s.name: s.target_block for s in machine.states}
        for tr in machine.transitions:
            a = target_of.get(tr.source)
            b = target_of.get(tr.target)
            if a and b:
                lines.append(f"  {_dot_id(a)} -> {_dot_id(b)} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_graph(config: CliConfig) -> int:
    registry = _registry(config)
    result = _parse_file(config, registry)
    if result.model is None:
        _print_diagnostics(result.diagnostics, as_json=False, stream=sys.stderr)
        raise _Exit(3, "the model did not parse")
    _write_or_print(render_dot(result.model), config.output_path)
    return 0


def cmd_gen(config: CliConfig) -> int:
    registry, model = _validated_model(config)
    try:
        plan = derive_plan(model, registry)
    except SchedulerError as exc:
        raise _Exit(2, f"cannot schedule: {exc}") from None
    try:
        filename, content = generate(plan, config.target, templates_root=config.templates_root)
    except CodegenError as exc:
        raise _Exit(3, f"generation failed: {exc}") from None
    out_dir = Path(config.output_path or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / filename
    out_path.write_text(content, encoding="utf-8")
    print(out_path)
    return 0


def cmd_run(config: CliConfig) -> int:
    registry, model = _validated_model(config)
    try:
        plan = derive_plan(model, registry)
    except SchedulerError as exc:
        raise _Exit(2, f"cannot schedule: {exc}") from None
    data_dir = Path(config.data_dir) if config.data_dir else Path(config.model_path).parent
    try:
        result = run(plan, data_dir, seed=config.seed)
    except RunError as exc:
        raise _Exit(3, f"run failed: {exc}") from None
    for block, reason in result.skipped:
        print(f"skipped {block}: {reason}", file=sys.stderr)
    text = json.dumps(result.to_json(), indent=2, sort_keys=True) + "\n"
    _write_or_print(text, config.output_path)
    return 0


def cmd_explain(config: CliConfig) -> int:
    try:
        print(explain(config.code or ""))
    except UnknownCode as exc:
        raise _Exit(3, str(exc)) from None
    return 0


def cmd_info(config: CliConfig) -> int:
    registry = _registry(config)
    packs = {}
    for target in TARGETS:
        try:
            pack = load_pack(target, config.templates_root)
            packs[target] = sorted(pack.templates)
        except (CodegenError, OSError):
            packs[target] = []
    concrete = sorted(
        sd.name for sd in registry.block_stereotypes(include_abstract=False)
    )
    if config.format == "json":
        payload = {
            "profile": {"path": registry.source_path, "sha256": registry.source_hash},
            "packages": list(registry.packages()),
            "block_stereotypes": concrete,
            "templates": packs,
            "interpreter_supported": sorted(SUPPORTED_STEREOTYPES),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0
    print(f"profile: {registry.source_path or '<built-in>'}")
    print(f"profile sha256: {registry.source_hash}")
    print("packages: " + ", ".join(registry.packages()))
    print(f"concrete block stereotypes ({len(concrete)}): " + ", ".join(concrete))
    for target, names in packs.items():
        print(f"templates [{target}]: {len(names)}")
    print(
        "interpreter-supported stereotypes: "
        + ", ".join(sorted(SUPPORTED_STEREOTYPES))
    )
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "plan": cmd_plan,
    "graph": cmd_graph,
    "gen": cmd_gen,
    "run": cmd_run,
    "explain": cmd_explain,
    "info": cmd_info,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="mlsysml",
        description="Model, validate, generate, and run ML pipelines described "
        "in a stereotype-based textual language.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser, model: bool = True) -> None:
        if model:
            sub.add_argument(
                "model_arg", nargs="?", metavar="model", help="model file to read"
            )
            sub.add_argument(
                "--model", dest="model_opt", help="model file to read (flag form)"
            )
        sub.add_argument("-p", "--profile", help="stereotype profile file")
        sub.add_argument(
            "--templates", help="directory holding template packs", default=None
        )

    validate = subs.add_parser("validate", help="run every semantic check")
    common(validate)
    validate.add_argument(
        "--format", choices=("text", "json"), default="text",
        help="diagnostic output format",
    )
    validate.add_argument(
        "--allow-custom-code",
        action="store_true",
        help="downgrade custom-code blocks from error to warning",
    )
    validate.set_defaults(command="validate")

    plan = subs.add_parser("plan", help="derive the execution plan as JSON")
    common(plan)
    plan.add_argument("-o", "--out", help="write the plan here instead of stdout")
    plan.add_argument("--allow-custom-code", action="store_true")
    plan.set_defaults(command="plan")

    graph = subs.add_parser("graph", help="emit the dependency+workflow graph as DOT")
    common(graph)
    graph.add_argument("-o", "--out", help="write the DOT text here instead of stdout")
    graph.set_defaults(command="graph")

    gen = subs.add_parser("gen", help="generate runnable code from the model")
    common(gen)
    gen.add_argument("-t", "--target", choices=TARGETS, default="py-script")
    gen.add_argument("-o", "--out", default=".", help="output directory")
    gen.add_argument("--allow-custom-code", action="store_true")
    gen.set_defaults(command="gen")

    run_cmd = subs.add_parser("run", help="execute the model on local files")
    common(run_cmd)
    run_cmd.add_argument(
        "--data-dir", help="data directory (default: the model's directory)"
    )
    run_cmd.add_argument(
        "--seed",
        type=int,
        default=int(os.environ.get("MLSYSML_SEED", "42")),
        help="shuffle seed (default: MLSYSML_SEED or 42)",
    )
    run_cmd.add_argument("-o", "--out", help="write the run report here instead of stdout")
    run_cmd.add_argument("--allow-custom-code", action="store_true")
    run_cmd.set_defaults(command="run")

    expl = subs.add_parser("explain", help="explain a diagnostic code")
    expl.add_argument("code", help="for example W-301")
    expl.set_defaults(command="explain")

    info = subs.add_parser("info", help="show profile, templates, and capabilities")
    common(info, model=False)
    info.add_argument(
        "--format", choices=("text", "json"), default="text",
        help="report output format",
    )
    info.set_defaults(command="info")

    return parser


def _config_from(args: argparse.Namespace) -> CliConfig:
    model_path = getattr(args, "model_opt", None) or getattr(args, "model_arg", None)
    policy = "warn" if getattr(args, "allow_custom_code", False) else "error"
    return CliConfig(
        command=args.command,
        model_path=model_path,
        profile_path=getattr(args, "profile", None),
        data_dir=getattr(args, "data_dir", None),
        target=getattr(args, "target", "py-script"),
        seed=getattr(args, "seed", 42),
        custom_code_policy=policy,
        output_path=getattr(args, "out", None),
        format=getattr(args, "format", "text"),
        templates_root=getattr(args, "templates", None),
        code=getattr(args, "code", None),
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from(args)
        return _COMMANDS[config.command](config)
    except _Exit as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    except MlSysMlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
