"""Reference execution of pipeline plans at desk scale.

The interpreter runs a plan on small local files and exact, dependency-free
numerics, so every number it produces can be recomputed by hand:

* pseudo-randomness is a fixed 64-bit linear congruential generator
  (state <- state * 6364136223846793005 + 1442695040888963407 mod 2^64)
  driving a Fisher-Yates shuffle, seeded explicitly;
* the train split takes floor(ratio * n) rows of the shuffled order, and
  both partitions are re-sorted by original row index;
* linear regression solves the normal equations by Gaussian elimination
  with partial pivoting; a rank-deficient design raises instead of
  falling back to a pseudo-inverse.

Steps whose stereotype has no entry in the dispatch table are skipped, and
everything depending on them is skipped transitively; the run itself still
succeeds so partially-supported pipelines stay inspectable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .errors import (
    BadRatio,
    ConstantColumn,
    EmptyInput,
    MissingFile,
    SingularDesign,
    TypeMismatch,
    UnsupportedFormatToken,
)
from .scheduler import PipelinePlan, PlanStep
from .tables import Table, merge_inner, read_csv

_MASK = (1 << 64) - 1
_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407


def lcg_stream(seed: int):
    """The fixed 64-bit LCG; yields the raw state after each advance."""
    state = seed & _MASK
    while True:
        state = (state * _LCG_MULT + _LCG_INC) & _MASK
        yield state


def permutation(n: int, seed: int) -> list[int]:
    """Fisher-Yates over range(n), j drawn as state mod (i + 1)."""
    order = list(range(n))
    stream = lcg_stream(seed)
    for i in range(n - 1, 0, -1):
        j = next(stream) % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def split_indices(n: int, ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Shuffled train/test row indices, each re-sorted ascending."""
    if not 0.0 < ratio < 1.0:
        raise BadRatio(ratio)
    order = permutation(n, seed)
    cut = math.floor(ratio * n)
    return sorted(order[:cut]), sorted(order[cut:])


def split(table: Table, ratio: float, seed: int) -> tuple[Table, Table]:
    """Partition a table into train/test; floor(ratio*n) rows train.

    Deterministic for a fixed seed; the partitions are disjoint and their
    union is the input, both kept in original row order.
    """
    train_idx, test_idx = split_indices(len(table.rows), ratio, seed)
    return table.take(train_idx), table.take(test_idx)


def solve_linear_system(matrix: Sequence[Sequence[float]], rhs: Sequence[float]) -> list[float]:
    """Gaussian elimination with partial pivoting; raises on rank deficiency."""
    n = len(rhs)
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    scale = max((abs(v) for row in aug for v in row[:-1]), default=0.0)
    tol = 1e-9 * max(1.0, scale)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if abs(aug[pivot][col]) <= tol:
            raise SingularDesign()
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for r in range(col + 1, n):
            factor = aug[r][col] / aug[col][col]
            if factor == 0.0:
                continue
            for c in range(col, n + 1):
                aug[r][c] -= factor * aug[col][c]
    out = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = aug[r][n] - sum(aug[r][c] * out[c] for c in range(r + 1, n))
        out[r] = acc / aug[r][r]
    return out


def fit_ols(x: Sequence[Sequence[float]], y: Sequence[float]) -> tuple[list[float], float]:
    """Ordinary least squares via the normal equations.

    Returns (coefficients, intercept); the intercept column is appended
    internally so callers pass plain feature rows.
    """
    rows, targets = x, y
    if not rows:
        raise EmptyInput("fit", "no training rows")
    k = len(rows[0])
    m = k + 1
    ata = [[0.0] * m for _ in range(m)]
    aty = [0.0] * m
    for row, y in zip(rows, targets):
        ext = list(row) + [1.0]
        for i in range(m):
            aty[i] += ext[i] * y
            for j in range(m):
                ata[i][j] += ext[i] * ext[j]
    beta = solve_linear_system(ata, aty)
    return beta[:k], beta[k]


def mean_absolute_error(actual: Sequence[float], predicted: Sequence[float]) -> float:
    if not actual:
        raise EmptyInput("MAE", "no rows to score")
    return sum(abs(a - p) for a, p in zip(actual, predicted)) / len(actual)


def mean_squared_error(actual: Sequence[float], predicted: Sequence[float]) -> float:
    if not actual:
        raise EmptyInput("MSE", "no rows to score")
    return sum((a - p) ** 2 for a, p in zip(actual, predicted)) / len(actual)


def r_squared(actual: Sequence[float], predicted: Sequence[float]) -> float:
    if not actual:
        raise EmptyInput("R2", "no rows to score")
    mean = sum(actual) / len(actual)
    ss_tot = sum((a - mean) ** 2 for a in actual)
    ss_res = sum((a - p) ** 2 for a, p in zip(actual, predicted))
    if ss_tot <= 1e-12:
        # constant target: perfect iff the residuals vanish too
        return 1.0 if ss_res <= 1e-12 else 0.0
    return 1.0 - ss_res / ss_tot


def cosine_distance(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise TypeMismatch("vector", f"length {len(a)} vs {len(b)}")
    if not a:
        raise EmptyInput("CosineDistance", "empty vectors")
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ConstantColumn("vector")
    return 1.0 - dot / (norm_a * norm_b)


def normalize_values(values: Sequence[float], method: str, column: str) -> list[float]:
    if method == "MaxAbsScalar":
        peak = max(abs(v) for v in values)
        if peak == 0.0:
            # an all-zero column is already scaled; dividing would be undefined
            return [0.0 for _ in values]
        return [v / peak for v in values]
    if method == "MinMax":
        low, high = min(values), max(values)
        if high == low:
            raise ConstantColumn(column)
        return [(v - low) / (high - low) for v in values]
    if method == "ZScore":
        mean = sum(values) / len(values)
        var = sum((v - mean) ** 2 for v in values) / len(values)
        if var == 0.0:
            raise ConstantColumn(column)
        std = math.sqrt(var)
        return [(v - mean) / std for v in values]
    raise TypeMismatch(column, f"unknown normalization method {method!r}")


_FORMAT_TOKENS = frozenset("YmdHMS")


def check_datetime_format(fmt: str) -> str:
    """Reject formats outside the supported token set %Y %m %d %H %M %S."""
    i = 0
    while i < len(fmt):
        if fmt[i] == "%":
            if i + 1 >= len(fmt) or fmt[i + 1] not in _FORMAT_TOKENS:
                raise UnsupportedFormatToken(fmt[i : i + 2], fmt)
            i += 2
        else:
            i += 1
    return fmt


@dataclass
class RunResult:
    model_name: str
    values: dict[str, Any] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)
    metric_labels: dict[str, str] = field(default_factory=dict)
    executed: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def tables(self) -> dict[str, Table]:
        return {k: v for k, v in self.values.items() if isinstance(v, Table)}

    def to_json(self) -> dict[str, Any]:
        return {
            "model": self.model_name,
            "metrics": dict(self.metrics),
            "metric_labels": dict(self.metric_labels),
            "executed": list(self.executed),
            "skipped": [{"block": b, "reason": r} for b, r in self.skipped],
        }


def resolve_data_path(data_dir: Path, raw: str) -> Path:
    """Model paths are data-dir relative; absolute ones are re-rooted."""
    candidate = Path(raw.replace("\\", "/"))
    if candidate.is_absolute() or candidate.drive:
        parts = [p for p in candidate.parts if p not in ("/", "\\") and not p.endswith(":")]
        candidate = Path(*parts) if parts else Path(candidate.name)
    return data_dir / candidate


class _Runner:
    def __init__(self, plan: PipelinePlan, data_dir: Path, seed: int) -> None:
        self.plan = plan
        self.data_dir = data_dir
        self.seed = seed
        self.result = RunResult(plan.source_model)
        self.skipped_blocks: dict[str, str] = {}
        self.input_names = {s.block: plan.input_blocks(s) for s in plan.steps}

    def run(self) -> RunResult:
        for step in self.plan.steps:
            blocked = [i for i in self.inputs(step) if i in self.skipped_blocks]
            if blocked:
                reason = f"input '{blocked[0]}' was skipped"
                self.skip(step, reason)
                continue
            handler = _DISPATCH.get(step.function)
            if handler is None:
                self.skip(step, f"no interpreter support for stereotype '{step.function}'")
                continue
            self.result.values[step.block] = handler(self, step)
            self.result.executed.append(step.block)
        return self.result

    def skip(self, step: PlanStep, reason: str) -> None:
        self.skipped_blocks[step.block] = reason
        self.result.skipped.append((step.block, reason))

    def inputs(self, step: PlanStep) -> tuple[str, ...]:
        return self.input_names[step.block]

    def value(self, step: PlanStep, position: int = 0):
        try:
            name = self.inputs(step)[position]
        except IndexError:
            raise EmptyInput(step.block, f"missing input #{position}") from None
        return self.result.values[name]

    def table(self, step: PlanStep, position: int = 0) -> Table:
        value = self.value(step, position)
        if isinstance(value, dict) and "train" in value and "test" in value:
            return value["train"]
        if not isinstance(value, Table):
            raise TypeMismatch(
                step.block, f"input '{self.inputs(step)[position]}' is not a table"
            )
        return value

    def record_metric(self, step: PlanStep, value: float) -> float:
        key = step.function
        if key in self.result.metrics:
            key = f"{key}_{step.block}"
        self.result.metrics[key] = value
        label = step.params.get("text")
        if isinstance(label, str):
            self.result.metric_labels[key] = label
        return value

    # -- step handlers -------------------------------------------------------

    def run_csv(self, step: PlanStep) -> Table:
        raw = step.params.get("path")
        if not isinstance(raw, str):
            raise MissingFile(f"{step.block}: no path bound")
        schema = step.params.get("schema")
        delimiter = step.params.get("Delimiter", ",")
        encoding = str(step.params.get("Encoding", "UTF-8"))
        return read_csv(
            resolve_data_path(self.data_dir, raw),
            delimiter=str(delimiter),
            schema=list(schema) if isinstance(schema, (list, tuple)) else None,
            encoding=encoding,
        )

    def run_date_conversion(self, step: PlanStep) -> Table:
        from datetime import datetime

        table = self.table(step)
        column = step.params.get("input_attribute")
        in_fmt = step.params.get("input_format")
        out_fmt = step.params.get("format")
        if not isinstance(column, str) or not isinstance(in_fmt, str) or not isinstance(out_fmt, str):
            raise TypeMismatch(step.block, "date conversion needs input_attribute, input_format, format")
        check_datetime_format(in_fmt)
        check_datetime_format(out_fmt)

        def convert(value):
            try:
                return datetime.strptime(str(value), in_fmt).strftime(out_fmt)
            except ValueError as exc:
                raise TypeMismatch(column, f"cannot parse {value!r} with {in_fmt!r}: {exc}") from None

        return table.map_column(column, convert)

    def run_merge(self, step: PlanStep) -> Table:
        if len(step.input_steps) != 2:
            raise EmptyInput(
                step.block, f"merge expects 2 inputs, got {len(step.input_steps)}"
            )
        keys = step.params.get("MergeOn")
        if not isinstance(keys, (list, tuple)) or not keys:
            raise TypeMismatch(step.block, "MergeOn must list the join keys")
        merged = merge_inner(self.table(step, 0), self.table(step, 1), [str(k) for k in keys])
        if not merged.rows:
            raise EmptyInput(step.block, "inner join produced no rows")
        return merged

    def run_normalization(self, step: PlanStep) -> Table:
        table = self.table(step).copy()
        method = str(step.params.get("method"))
        out = table
        for column in table.numeric_columns():
            out = out.with_column(column, normalize_values(out.column(column), method, column))
        return out

    def run_split(self, step: PlanStep) -> dict[str, Table]:
        table = self.table(step)
        if not table.rows:
            raise EmptyInput(step.block, "nothing to split")
        ratio = step.params.get("ratio", 0.75)
        if isinstance(ratio, bool) or not isinstance(ratio, (int, float)):
            raise BadRatio(ratio)
        seed = step.extras.get("seed", self.seed)
        if not isinstance(seed, int) or isinstance(seed, bool):
            seed = self.seed
        train, test = split(table, float(ratio), seed)
        return {"train": train, "test": test}

    def run_linear_regression(self, step: PlanStep) -> dict[str, Any]:
        value = self.value(step)
        if isinstance(value, dict) and "train" in value:
            train, test = value["train"], value.get("test")
        elif isinstance(value, Table):
            train, test = value, None
        else:
            raise TypeMismatch(step.block, "regression needs a table or a split")
        target = step.params.get("target")
        if not isinstance(target, str) or not train.has_column(target):
            raise TypeMismatch(step.block, f"target column {target!r} not found")
        features = [c for c in train.numeric_columns() if c != target]
        if not features:
            raise EmptyInput(step.block, "no numeric feature columns")
        if not train.rows:
            raise EmptyInput(step.block, "training split is empty")
        rows = [[float(v) for v in row] for row in zip(*(train.column(f) for f in features))]
        targets = [float(v) for v in train.column(target)]
        coefficients, intercept = fit_ols(rows, targets)
        return {
            "kind": "linear_regression",
            "target": target,
            "features": features,
            "coefficients": dict(zip(features, coefficients)),
            "intercept": intercept,
            "test": test,
            "train_rows": len(rows),
        }

    def run_predict(self, step: PlanStep) -> Table:
        model = self.value(step)
        if not isinstance(model, dict) or model.get("kind") != "linear_regression":
            raise TypeMismatch(step.block, "predict needs a fitted regression model")
        test = model.get("test")
        if not isinstance(test, Table) or not test.rows:
            raise EmptyInput(step.block, "the model carries no held-out rows")
        features = model["features"]
        for name in features + [model["target"]]:
            if not test.has_column(name):
                raise TypeMismatch(name, "missing from the held-out rows")
        coef = model["coefficients"]
        predictions = []
        for row in zip(*(test.column(f) for f in features)):
            predictions.append(
                model["intercept"] + sum(coef[f] * float(v) for f, v in zip(features, row))
            )
        out = test.select(features)
        out = out.with_column("actual", [float(v) for v in test.column(model["target"])])
        return out.with_column("prediction", predictions)

    def scored_columns(self, step: PlanStep) -> tuple[list[float], list[float]]:
        table = self.table(step)
        for needed in ("actual", "prediction"):
            if not table.has_column(needed):
                raise TypeMismatch(needed, f"missing from input of '{step.block}'")
        return (
            [float(v) for v in table.column("actual")],
            [float(v) for v in table.column("prediction")],
        )

    def run_mae(self, step: PlanStep) -> float:
        actual, predicted = self.scored_columns(step)
        return self.record_metric(step, mean_absolute_error(actual, predicted))

    def run_mse(self, step: PlanStep) -> float:
        actual, predicted = self.scored_columns(step)
        return self.record_metric(step, mean_squared_error(actual, predicted))

    def run_r2(self, step: PlanStep) -> float:
        actual, predicted = self.scored_columns(step)
        return self.record_metric(step, r_squared(actual, predicted))

    def first_numeric_column(self, step: PlanStep, position: int) -> list[float]:
        table = self.table(step, position)
        numeric = table.numeric_columns()
        if not numeric:
            raise TypeMismatch(self.inputs(step)[position], "no numeric column to compare")
        return [float(v) for v in table.column(numeric[0])]

    def run_cosine_distance(self, step: PlanStep) -> float:
        if len(step.input_steps) == 2:
            a = self.first_numeric_column(step, 0)
            b = self.first_numeric_column(step, 1)
        elif len(step.input_steps) == 1:
            table = self.table(step, 0)
            names = table.numeric_columns()
            if len(names) < 2:
                raise TypeMismatch(step.block, "need two numeric columns to compare")
            a = [float(v) for v in table.column(names[0])]
            b = [float(v) for v in table.column(names[1])]
        else:
            raise EmptyInput(
                step.block,
                f"distance expects 1 or 2 inputs, got {len(step.input_steps)}",
            )
        return self.record_metric(step, cosine_distance(a, b))


_DISPATCH = {
    "CSV": _Runner.run_csv,
    "DateConversion": _Runner.run_date_conversion,
    "DataFrame_Merge": _Runner.run_merge,
    "Normalization": _Runner.run_normalization,
    "TrainTestSplit": _Runner.run_split,
    "LinearRegression": _Runner.run_linear_regression,
    "Predict": _Runner.run_predict,
    "MAE": _Runner.run_mae,
    "MSE": _Runner.run_mse,
    "R2": _Runner.run_r2,
    "CosineDistance": _Runner.run_cosine_distance,
}

SUPPORTED_STEREOTYPES = frozenset(_DISPATCH)


def run(plan: PipelinePlan, data_dir: str | Path, seed: int = 42) -> RunResult:
    """Execute a plan against files under ``data_dir``.

    Unsupported steps and their dependents are skipped, not failed; real
    data problems (missing files, bad types, singular designs) raise.
    """
    return _Runner(plan, Path(data_dir), seed).run()
