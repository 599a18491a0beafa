"""Desk-scale tabular data for the interpreter.

A ``Table`` is row-major, ordered, and dumb on purpose: a header list plus
rows of Python scalars. Everything the pipeline steps need (typed CSV
loading, column math, an inner join) lives here, implemented on plain
lists so a run is easy to trace by hand.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import JoinKeyMissing, MissingFile, TypeMismatch


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise TypeMismatch(
                    "row", f"expected {len(self.columns)} cells, got {len(row)}"
                )

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        try:
            i = self.columns.index(name)
        except ValueError:
            raise TypeMismatch(name, "no such column") from None
        return [row[i] for row in self.rows]

    def has_column(self, name: str) -> bool:
        return name in self.columns

    def select(self, names: Sequence[str]) -> "Table":
        indices = []
        for name in names:
            if name not in self.columns:
                raise TypeMismatch(name, "no such column")
            indices.append(self.columns.index(name))
        return Table(list(names), [[row[i] for i in indices] for row in self.rows])

    def with_column(self, name: str, values: Sequence) -> "Table":
        if len(values) != len(self.rows):
            raise TypeMismatch(name, f"{len(values)} values for {len(self.rows)} rows")
        if name in self.columns:
            i = self.columns.index(name)
            rows = [row[:i] + [v] + row[i + 1 :] for row, v in zip(self.rows, values)]
            return Table(list(self.columns), rows)
        return Table(
            list(self.columns) + [name],
            [row + [v] for row, v in zip(self.rows, values)],
        )

    def map_column(self, name: str, fn) -> "Table":
        return self.with_column(name, [fn(v) for v in self.column(name)])

    def take(self, indices: Iterable[int]) -> "Table":
        return Table(list(self.columns), [list(self.rows[i]) for i in indices])

    def numeric_columns(self) -> list[str]:
        out = []
        for name in self.columns:
            values = self.column(name)
            if values and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
            ):
                out.append(name)
        return out

    def copy(self) -> "Table":
        return Table(list(self.columns), [list(row) for row in self.rows])


_CASTS = {
    "String": str,
    "Datetime": str,
    "Image": str,
}


def _cast(value: str, declared: str, column: str):
    if declared in _CASTS:
        return _CASTS[declared](value)
    text = value.strip()
    try:
        if declared == "Integer":
            return int(text)
        if declared == "Float":
            return float(text)
        if declared == "Boolean":
            lowered = text.lower()
            if lowered in ("true", "1"):
                return True
            if lowered in ("false", "0"):
                return False
            raise ValueError(text)
    except ValueError:
        raise TypeMismatch(column, f"cannot read {value!r} as {declared}") from None
    raise TypeMismatch(column, f"unsupported declared type {declared!r}")


def parse_schema(schema: Sequence[str]) -> list[tuple[str, str]]:
    """``name:Type`` strings into (name, type) pairs."""
    pairs = []
    for entry in schema:
        name, _, declared = entry.partition(":")
        pairs.append((name, declared or "String"))
    return pairs


def read_csv(
    path: str | Path,
    delimiter: str = ",",
    schema: Sequence[str] | None = None,
    encoding: str = "UTF-8",
) -> Table:
    """Load a delimited file, typed by the block's declared schema.

    Columns are selected and ordered by the schema; a schema column missing
    from the file is an error, extra file columns are ignored. Without a
    schema every cell stays a string.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with path.open(newline="", encoding=encoding) as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise TypeMismatch(str(path), "file has no header row") from None
        raw_rows = [row for row in reader if row]
    if schema is None:
        return Table(header, [list(row) for row in raw_rows])
    pairs = parse_schema(schema)
    indices = []
    for name, _ in pairs:
        if name not in header:
            raise TypeMismatch(name, f"column missing from {path.name}")
        indices.append(header.index(name))
    rows = []
    for raw in raw_rows:
        rows.append(
            [_cast(raw[i], declared, name) for i, (name, declared) in zip(indices, pairs)]
        )
    return Table([name for name, _ in pairs], rows)


def to_csv(table: Table, delimiter: str = ",") -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter=delimiter, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(row)
    return buffer.getvalue()


def _key_pairs(on: Sequence[str], left: Table, right: Table) -> list[tuple[str, str]]:
    in_left = [k for k in on if left.has_column(k)]
    in_right = [k for k in on if right.has_column(k)]
    if in_left == list(on) and in_right == list(on):
        return [(k, k) for k in on]
    left_only = [k for k in on if left.has_column(k) and not right.has_column(k)]
    right_only = [k for k in on if right.has_column(k) and not left.has_column(k)]
    if len(left_only) != len(right_only) or len(left_only) + len(right_only) != len(on):
        missing = [k for k in on if not left.has_column(k) and not right.has_column(k)]
        raise JoinKeyMissing(
                f"cannot split keys {list(on)!r} between the two inputs"
                + (f"; unknown: {missing!r}" if missing else "")
        )
    return list(zip(left_only, right_only))


def merge_inner(left: Table, right: Table, on: Sequence[str]) -> Table:
    """Inner join, rows sorted by key.

    Keys present in both tables join same-named columns; otherwise the key
    list is split into left-side and right-side names and paired up in
    order. Non-key columns sharing a name get _x/_y suffixes.
    """
    pairs = _key_pairs(on, left, right)
    left_keys = [lk for lk, _ in pairs]
    right_keys = [rk for _, rk in pairs]
    same_named = all(lk == rk for lk, rk in pairs)

    right_kept = [
        c for c in right.columns if not (same_named and c in right_keys)
    ]
    overlap = {
        c
        for c in right_kept
        if c in left.columns and c not in right_keys and c not in left_keys
    }
    out_columns = [c + "_x" if c in overlap else c for c in left.columns]
    out_columns += [c + "_y" if c in overlap else c for c in right_kept]

    right_index: dict[tuple, list[list]] = {}
    rk_idx = [right.columns.index(k) for k in right_keys]
    kept_idx = [right.columns.index(c) for c in right_kept]
    for row in right.rows:
        key = tuple(row[i] for i in rk_idx)
        right_index.setdefault(key, []).append([row[i] for i in kept_idx])

    lk_idx = [left.columns.index(k) for k in left_keys]
    joined: list[tuple[tuple, list]] = []
    for row in left.rows:
        key = tuple(row[i] for i in lk_idx)
        for partner in right_index.get(key, ()):
            joined.append((key, list(row) + partner))
    joined.sort(key=lambda item: tuple(str(v) for v in item[0]))
    return Table(out_columns, [row for _, row in joined])


def read_pgm(path: str | Path) -> tuple[int, int, int, list[int]]:
    """Plain or binary PGM (P2/P5): (width, height, maxval, row-major pixels)."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    data = path.read_bytes()

    tokens: list[bytes] = []
    i = 0
    while i < len(data) and len(tokens) < 4:
        c = data[i : i + 1]
        if c in b" \t\r\n":
            i += 1
            continue
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and data[i : i + 1] not in b" \t\r\n":
            i += 1
        tokens.append(data[start:i])
    if len(tokens) < 4:
        raise TypeMismatch(str(path), "truncated PGM header")
    magic = tokens[0]
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise TypeMismatch(str(path), "non-numeric PGM header") from None
    count = width * height
    if magic == b"P2":
        rest = data[i:].split()
        pixels = [int(tok) for tok in rest[:count]]
    elif magic == b"P5":
        pixels = list(data[i + 1 : i + 1 + count])
    else:
        raise TypeMismatch(str(path), f"unsupported image magic {magic!r}")
    if len(pixels) != count:
        raise TypeMismatch(str(path), "pixel data shorter than header promises")
    return width, height, maxval, pixels


def scale_pixels(
    pixels: Sequence[int], width: int, height: int, new_width: int, new_height: int
) -> list[int]:
    """Nearest-neighbour rescale of a row-major grayscale raster."""
    out = []
    for y in range(new_height):
        src_y = min(height - 1, (y * height) // new_height)
        for x in range(new_width):
            src_x = min(width - 1, (x * width) // new_width)
            out.append(pixels[src_y * width + src_x])
    return out
