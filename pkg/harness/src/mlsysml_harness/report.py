"""The cross-check report: two metric maps and their comparison."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

DEFAULT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class HarnessReport:
    """One model executed twice, compared metric by metric.

    ``deltas`` covers exactly the metrics both paths produced; metrics only
    one side has (for example steps the interpreter skips) are listed
    separately and do not influence the verdict. ``status`` is ``"pass"``
    iff every shared delta is within ``tolerance``.
    """

    model: str
    generated_metrics: Mapping[str, float]
    interpreter_metrics: Mapping[str, float]
    deltas: Mapping[str, float]
    status: str
    target: str = "py-script"
    seed: int = 42
    tolerance: float = DEFAULT_TOLERANCE
    only_generated: tuple[str, ...] = field(default_factory=tuple)
    only_interpreted: tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "generated_metrics": dict(self.generated_metrics),
            "interpreter_metrics": dict(self.interpreter_metrics),
            "deltas": dict(self.deltas),
            "status": self.status,
            "target": self.target,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "only_generated": list(self.only_generated),
            "only_interpreted": list(self.only_interpreted),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def compare_metrics(
    model: str,
    generated: Mapping[str, float],
    interpreted: Mapping[str, float],
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    target: str = "py-script",
    seed: int = 42,
) -> HarnessReport:
    """Build the report for two metric maps.

    The verdict looks only at metrics present on both sides; an empty
    overlap passes trivially.
    """
    shared = sorted(set(generated) & set(interpreted))
    deltas = {name: abs(generated[name] - interpreted[name]) for name in shared}
    status = "pass" if all(d <= tolerance for d in deltas.values()) else "fail"
    return HarnessReport(
        model=model,
        generated_metrics=dict(generated),
        interpreter_metrics=dict(interpreted),
        deltas=deltas,
        status=status,
        target=target,
        seed=seed,
        tolerance=tolerance,
        only_generated=tuple(sorted(set(generated) - set(interpreted))),
        only_interpreted=tuple(sorted(set(interpreted) - set(generated))),
    )
