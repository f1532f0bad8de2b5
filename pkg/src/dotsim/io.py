"""Deterministic artifact serialization.

Float cells use a fixed 9-significant-digit scientific format with '.'
decimal so reruns are byte-identical across platforms and locales. All
writes go through a temp file in the target directory followed by an
atomic rename, so a crashed run never leaves a half-written artifact
under the final name.
"""
import json
import os
import tempfile

import numpy as np

__all__ = ["FLOAT_FORMAT", "write_csv", "write_json", "read_csv",
           "read_columns"]

FLOAT_FORMAT = "{:.8e}"


def _format_cell(value) -> str:
    # bool is an int subclass; reject it before the integer branch
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("boolean cell; write explicit 0/1 integers")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"non-finite cell value {value!r}")
        return FLOAT_FORMAT.format(float(value))
    if isinstance(value, str):
        if any(c in value for c in ",\n\r"):
            raise ValueError(f"cell text {value!r} needs quoting, which "
                             f"this fixed format does not do")
        return value
    raise TypeError(f"unsupported cell type {type(value).__name__}")


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".partial-")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    """Write rows of int/float/str cells under a comma-joined header."""
    header = list(header)
    lines = [",".join(header)]
    for index, row in enumerate(rows):
        cells = [_format_cell(value) for value in row]
        if len(cells) != len(header):
            raise ValueError(f"row {index} has {len(cells)} cells, "
                             f"header has {len(header)}")
        lines.append(",".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_csv(path):
    """Return (header, rows) with every cell still a string."""
    with open(path, "r", newline="") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    rows = []
    for number, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ValueError(f"{path}:{number}: {len(cells)} cells, "
                             f"header has {len(header)}")
        rows.append(cells)
    return header, rows


def read_columns(path, names):
    """Extract named columns as float arrays; errors name the missing ones."""
    header, rows = read_csv(path)
    missing = [name for name in names if name not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {', '.join(missing)}")
    idx = [header.index(name) for name in names]
    if not rows:
        return tuple(np.empty(0) for _ in idx)
    table = np.asarray(rows, dtype=object)
    return tuple(np.array([float(v) for v in table[:, i]]) for i in idx)
