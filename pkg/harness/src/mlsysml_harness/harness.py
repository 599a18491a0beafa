"""Run generated pipeline scripts and cross-check them against the interpreter.

The harness talks to the mlsysml toolchain strictly over its command line:
``gen`` produces the script under test, ``run`` produces the reference
metrics, ``info --format json`` describes the template pack. Each script
executes in a fresh temporary directory with its inputs and outputs routed
through the documented environment variables, so concurrent harness runs
cannot see each other.
"""

from __future__ import annotations

import json
import os
import shlex
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Mapping, Sequence

from .errors import (
    IncompleteTemplatePack,
    MissingMetricsOutput,
    NonZeroExit,
    ToolchainUnavailable,
)
from .report import DEFAULT_TOLERANCE, HarnessReport, compare_metrics

_CLI_ENV = "MLSYSML_CLI"
_SCRIPT_TIMEOUT = 120


def find_toolchain() -> list[str]:
    """Locate a working mlsysml command.

    Resolution order: the MLSYSML_CLI environment variable (a shell-style
    command prefix), the ``mlsysml`` executable on PATH, then running the
    module under the current interpreter. The candidate must answer
    ``--version``.
    """
    override = os.environ.get(_CLI_ENV)
    if override:
        candidates = [shlex.split(override)]
    else:
        candidates = []
        if shutil.which("mlsysml"):
            candidates.append(["mlsysml"])
        candidates.append([sys.executable, "-m", "mlsysml"])
    last_failure = "no candidates"
    for command in candidates:
        try:
            probe = subprocess.run(
                command + ["--version"],
                capture_output=True,
                text=True,
                timeout=_SCRIPT_TIMEOUT,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            last_failure = f"{' '.join(command)}: {exc}"
            continue
        if probe.returncode == 0:
            return command
        last_failure = f"{' '.join(command)}: exit {probe.returncode}"
    raise ToolchainUnavailable(last_failure)


def _run_cli(command: Sequence[str]) -> subprocess.CompletedProcess:
    try:
        result = subprocess.run(
            list(command), capture_output=True, text=True, timeout=_SCRIPT_TIMEOUT
        )
    except OSError as exc:
        raise ToolchainUnavailable(f"{' '.join(command)}: {exc}") from None
    if result.returncode != 0:
        raise NonZeroExit(" ".join(map(str, command)), result.returncode, result.stderr)
    return result


def toolchain_info(
    cli: Sequence[str] | None = None, templates_root: str | Path | None = None
) -> dict:
    """The toolchain's machine-readable self-description."""
    command = list(cli) if cli is not None else find_toolchain()
    command += ["info", "--format", "json"]
    if templates_root is not None:
        command += ["--templates", str(templates_root)]
    return json.loads(_run_cli(command).stdout)


def assert_template_coverage(
    cli: Sequence[str] | None = None,
    templates_root: str | Path | None = None,
    target: str = "py-script",
) -> list[str]:
    """Every concrete block stereotype must have a template, and vice versa.

    Returns the sorted stereotype names on success.
    """
    info = toolchain_info(cli, templates_root)
    stereotypes = set(info.get("block_stereotypes", ()))
    templates = set(info.get("templates", {}).get(target, ()))
    missing = sorted(stereotypes - templates)
    extra = sorted(templates - stereotypes)
    if missing or extra:
        raise IncompleteTemplatePack(missing, extra)
    return sorted(stereotypes)


def _numeric_metrics(payload: Mapping) -> dict[str, float]:
    metrics = payload.get("metrics", {})
    return {
        str(name): float(value)
        for name, value in metrics.items()
        if isinstance(value, (int, float)) and not isinstance(value, bool)
    }


def execute_generated(
    script_path: str | Path, data_dir: str | Path, seed: int = 42
) -> dict[str, float]:
    """Run one generated py-script in isolation and collect its metrics.

    The script runs in a fresh temporary working directory; input files
    resolve under ``data_dir`` and the metrics file is read back from the
    private output directory, so nothing leaks between runs.
    """
    script = Path(script_path).resolve()
    if not script.is_file():
        raise MissingMetricsOutput(str(script))
    with tempfile.TemporaryDirectory(prefix="mlsysml-harness-") as workdir:
        env = dict(os.environ)
        env["MLSYSML_DATA_DIR"] = str(Path(data_dir).resolve())
        env["MLSYSML_OUT_DIR"] = workdir
        env["MLSYSML_SEED"] = str(seed)
        try:
            result = subprocess.run(
                [sys.executable, str(script)],
                capture_output=True,
                text=True,
                cwd=workdir,
                env=env,
                timeout=_SCRIPT_TIMEOUT,
            )
        except OSError as exc:
            raise NonZeroExit(str(script), -1, str(exc)) from None
        if result.returncode != 0:
            raise NonZeroExit(str(script), result.returncode, result.stderr)
        metrics_path = Path(workdir) / "metrics.json"
        if not metrics_path.is_file():
            raise MissingMetricsOutput(str(metrics_path))
        payload = json.loads(metrics_path.read_text(encoding="utf-8"))
    return _numeric_metrics(payload)


def cross_check(
    model_path: str | Path,
    data_dir: str | Path,
    seed: int = 42,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    templates_root: str | Path | None = None,
    cli: Sequence[str] | None = None,
) -> HarnessReport:
    """Generate, execute, interpret, compare.

    The model goes through ``gen`` and the produced script is executed; the
    same model goes through ``run`` on the same data and seed. The report
    compares the metrics both paths produced; steps the interpreter skipped
    contribute nothing to the comparison.
    """
    command = list(cli) if cli is not None else find_toolchain()
    assert_template_coverage(command, templates_root)

    model = Path(model_path).resolve()
    data = Path(data_dir).resolve()
    template_args = (
        ["--templates", str(templates_root)] if templates_root is not None else []
    )
    with tempfile.TemporaryDirectory(prefix="mlsysml-harness-") as tmp:
        gen_dir = Path(tmp) / "generated"
        gen = _run_cli(
            command + ["gen", str(model), "-o", str(gen_dir)] + template_args
        )
        script = Path(gen.stdout.strip().splitlines()[-1])
        generated = execute_generated(script, data, seed)

        interpreted_path = Path(tmp) / "interpreted.json"
        _run_cli(
            command
            + ["run", str(model), "--data-dir", str(data), "--seed", str(seed)]
            + ["-o", str(interpreted_path)]
            + template_args
        )
        payload = json.loads(interpreted_path.read_text(encoding="utf-8"))

    return compare_metrics(
        str(payload.get("model", model.stem)),
        generated,
        _numeric_metrics(payload),
        tolerance=tolerance,
        seed=seed,
    )
