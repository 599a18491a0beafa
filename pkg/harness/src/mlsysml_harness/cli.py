"""Command line entry: cross-check one model and print the report.

Exit codes: 0 the report says pass, 1 it says fail, 3 the harness could
not complete (toolchain missing, script crashed, no metrics written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import HarnessError
from .harness import cross_check
from .report import DEFAULT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlsysml-harness",
        description="Execute the generated script for a model and compare its "
        "metrics against the interpreter's.",
    )
    parser.add_argument("model", help="model file to cross-check")
    parser.add_argument(
        "--data-dir", help="data directory (default: the model's directory)"
    )
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument(
        "--tolerance",
        type=float,
        default=DEFAULT_TOLERANCE,
        help="largest accepted metric difference",
    )
    parser.add_argument("--templates", help="template pack root to generate with")
    parser.add_argument("-o", "--out", help="write the report here instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    model = Path(args.model)
    data_dir = Path(args.data_dir) if args.data_dir else model.parent
    try:
        report = cross_check(
            model,
            data_dir,
            args.seed,
            tolerance=args.tolerance,
            templates_root=args.templates,
        )
    except HarnessError as exc:
        print(f"harness error: {exc}", file=sys.stderr)
        return 3
    text = report.dumps()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
