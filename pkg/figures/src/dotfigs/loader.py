"""CSV artifact loading and figure-kind discovery.

A file's kind is recognized from its header, not its name, so a
directory can mix artifacts freely. Classification keys on a small
sentinel column set per kind; rendering then demands the full column
list, so a near-miss file fails loudly instead of being skipped.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

__all__ = ["FigureRecipe", "MissingColumns", "KINDS", "read_columns",
           "run_label", "discover"]

# sentinel: columns that identify a header; required: what the renderer
# reads. Sentinels are chosen so no artifact kind shadows another.
KINDS = {
    "interaction": {
        "sentinel": ("distance_nm", "v_ueV"),
        "required": ("distance_nm", "v_ueV", "model"),
        "xlabel": "distance (nm)",
        "ylabel": r"$V$ ($\mu$eV)",
    },
    "atom": {
        "sentinel": ("eb_per_ry",),
        "required": ("eta", "level", "eb_per_ry", "ry_ueV"),
        "xlabel": r"$\eta = t / V_0$",
        "ylabel": r"$E_\mathrm{b}$ (Ry)",
    },
    "molecule": {
        "sentinel": ("delta_ueV",),
        "required": ("r_over_aqd", "delta_ueV"),
        "xlabel": r"$R$ (units of $a_\mathrm{QD}$)",
        "ylabel": r"$\Delta$ ($\mu$eV)",
    },
    "screening": {
        "sentinel": ("v_bare_ueV",),
        "required": ("rho_nm", "v_bare_ueV", "v_image_ueV", "v_tiled_ueV"),
        "xlabel": r"$\rho$ (nm)",
        "ylabel": r"$V$ ($\mu$eV)",
    },
    "occupation": {
        "sentinel": ("n_ground",),
        "required": ("r_over_aqd", "site", "n_ground", "n_excited"),
        "xlabel": r"$R$ (units of $a_\mathrm{QD}$)",
        "ylabel": "site",
    },
}


class MissingColumns(ValueError):
    """A CSV lacks columns a renderer needs; names every one of them."""

    def __init__(self, path, columns):
        self.columns = tuple(columns)
        super().__init__(f"{path}: missing columns {', '.join(self.columns)}")


@dataclass(frozen=True)
class FigureRecipe:
    """One figure: its kind, input CSVs, axis labels and output stem."""

    kind: str
    inputs: tuple[str, ...]
    stem: str
    xlabel: str = ""
    ylabel: str = ""


def _read_table(path):
    with open(path, "r", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def read_columns(path, names, text=()):
    """Named columns as arrays, float unless listed in `text`.

    Raises MissingColumns naming every absent column at once.
    """
    header, rows = _read_table(path)
    missing = [name for name in names if name not in header]
    if missing:
        raise MissingColumns(path, missing)
    out = []
    for name in names:
        cells = [row[header.index(name)] for row in rows]
        if name in text:
            out.append(np.array(cells, dtype=str))
        else:
            out.append(np.array([float(cell) for cell in cells]))
    return tuple(out)


def run_label(csv_path) -> str:
    """Legend label for one run: its site count if the sidecar manifest
    is readable, the file stem otherwise."""
    try:
        with open(f"{csv_path}.manifest.json") as handle:
            sites = json.load(handle)["config"]["sites"]
        return f"N = {int(sites)}"
    except (OSError, KeyError, ValueError, TypeError):
        return os.path.splitext(os.path.basename(csv_path))[0]


def _classify(path):
    header, _ = _read_table(path)
    for kind, spec in KINDS.items():
        if all(name in header for name in spec["sentinel"]):
            return kind
    return None


def discover(csv_dir) -> list[FigureRecipe]:
    """Recipes for every recognized CSV under `csv_dir` (not recursive).

    Molecule runs each hold a single array size, so all molecule files
    fold into one overlaid figure; every other kind renders per file.
    """
    by_kind = {kind: [] for kind in KINDS}
    for name in sorted(os.listdir(csv_dir)):
        if not name.endswith(".csv"):
            continue
        kind = _classify(os.path.join(csv_dir, name))
        if kind is not None:
            by_kind[kind].append(os.path.join(csv_dir, name))

    recipes = []
    for kind, spec in KINDS.items():
        paths = by_kind[kind]
        if not paths:
            continue
        labels = {"xlabel": spec["xlabel"], "ylabel": spec["ylabel"]}
        if kind == "molecule":
            recipes.append(FigureRecipe(kind, tuple(paths), "molecule",
                                        **labels))
        else:
            for path in paths:
                stem = os.path.splitext(os.path.basename(path))[0]
                recipes.append(FigureRecipe(kind, (path,), stem, **labels))
    return recipes
