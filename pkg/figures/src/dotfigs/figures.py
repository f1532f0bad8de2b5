"""The five figure renderers.

Output bytes must depend only on the input files, so every render
starts from matplotlib's built-in defaults plus one fixed style dict
(the user's matplotlibrc never leaks in), the backend is Agg, and the
PDF writer is told not to stamp a creation date.
"""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .loader import KINDS, FigureRecipe, read_columns, run_label

__all__ = ["STATE_COLORS", "BALMER_RY", "render", "save"]

# the three lowest states keep these colors on every panel
STATE_COLORS = ("tab:blue", "tab:green", "tab:red")

# hydrogen-like reference energies, units of the effective Rydberg
BALMER_RY = (-1.0, -1.0 / 4.0, -1.0 / 9.0)

_STYLE = {
    "figure.figsize": (4.8, 3.4),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "figure.constrained_layout.use": True,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8,
}


def _fresh_style():
    matplotlib.rcdefaults()
    matplotlib.rcParams.update(_STYLE)


def _labels(recipe):
    spec = KINDS.get(recipe.kind, {})
    return (recipe.xlabel or spec.get("xlabel", ""),
            recipe.ylabel or spec.get("ylabel", ""))


def _render_interaction(recipe):
    """Pair interaction against distance, power-law fit on a log inset."""
    fig, ax = plt.subplots()
    inset = ax.inset_axes((0.50, 0.47, 0.46, 0.49))
    for path in recipe.inputs:
        dist, v, model = read_columns(path, KINDS["interaction"]["required"],
                                      text=("model",))
        keep = (dist > 0) & (v > 0)
        for name in np.unique(model[keep]):
            sel = keep & (model == name)
            order = np.argsort(dist[sel])
            d, w = dist[sel][order], v[sel][order]
            pts = ax.plot(d, w, "o", ms=3.5, label=str(name))
            inset.plot(d, w, "o", ms=2.5, color=pts[0].get_color())
            if d.size >= 2:
                slope, amp = np.polyfit(np.log(d), np.log(w), 1)
                grid = np.geomspace(d[0], d[-1], 64)
                fit = np.exp(amp) * grid ** slope
                label = rf"$\propto d^{{{slope:.2f}}}$"
                ax.plot(grid, fit, "-", lw=1.0,
                        color=pts[0].get_color(), label=label)
                inset.plot(grid, fit, "-", lw=1.0, color=pts[0].get_color())
    inset.set_xscale("log")
    inset.set_yscale("log")
    inset.tick_params(labelsize=7)
    xlabel, ylabel = _labels(recipe)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(loc="lower left")
    return fig


def _render_atom(recipe):
    """Binding-energy panel: Rydberg units on the left with the
    hydrogen-series dashes, the same ground level in ueV on the right."""
    fig, ax = plt.subplots()
    eta, level, eb, ry = read_columns(recipe.inputs[0],
                                      KINDS["atom"]["required"])
    for n, color in enumerate(STATE_COLORS):
        sel = level == n
        if not sel.any():
            continue
        order = np.argsort(eta[sel])
        ax.plot(eta[sel][order], eb[sel][order], marker="o", ms=3,
                color=color, label=f"level {n}")
    for y in BALMER_RY:
        ax.axhline(y, color="0.35", ls="--", lw=0.9, zorder=0)
    xlabel, ylabel = _labels(recipe)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(loc="lower right")

    right = ax.twinx()
    ground = level == 0
    order = np.argsort(eta[ground])
    right.plot(eta[ground][order], (eb * ry)[ground][order], "s",
               ms=3.5, color="0.15")
    right.set_ylabel(r"$E_\mathrm{b}$ ($\mu$eV)")
    right.grid(False)
    return fig


def _render_molecule(recipe):
    """Binding curves Delta(R), one per input run."""
    fig, ax = plt.subplots()
    for path in recipe.inputs:
        r, delta = read_columns(path, KINDS["molecule"]["required"])
        order = np.argsort(r)
        ax.plot(r[order], delta[order], marker="o", ms=3.5,
                label=run_label(path))
    ax.axhline(0.0, color="0.35", ls=":", lw=0.9, zorder=0)
    xlabel, ylabel = _labels(recipe)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    return fig


def _render_screening(recipe):
    """Bare, gate-screened and image-charge pair potentials."""
    fig, ax = plt.subplots()
    rho, bare, image, tiled = read_columns(recipe.inputs[0],
                                           KINDS["screening"]["required"])
    order = np.argsort(rho)
    ax.plot(rho[order], bare[order], ls="--", color="0.3", label="bare")
    ax.plot(rho[order], tiled[order], marker="o", ms=3.5,
            color="tab:blue", label="tiled gates")
    ax.plot(rho[order], image[order], color="tab:orange",
            label="image charge")
    ax.set_yscale("log")
    xlabel, ylabel = _labels(recipe)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    return fig


def _render_occupation(recipe):
    """Ground and excited per-site occupations as site-by-R heatmaps."""
    r, site, n_ground, n_excited = read_columns(
        recipe.inputs[0], KINDS["occupation"]["required"])
    rs, sites = np.unique(r), np.unique(site)
    tables = []
    for values in (n_ground, n_excited):
        table = np.full((sites.size, rs.size), np.nan)
        table[np.searchsorted(sites, site), np.searchsorted(rs, r)] = values
        tables.append(table)

    fig, axes = plt.subplots(1, 2, sharey=True, figsize=(6.4, 3.0))
    xlabel, ylabel = _labels(recipe)
    for ax, table, title in zip(axes, tables, ("ground", "excited")):
        # two electrons total, so the per-site scale is exactly [0, 2]
        im = ax.imshow(table, origin="lower", aspect="auto",
                       vmin=0.0, vmax=2.0, cmap="viridis")
        ax.set_xticks(range(rs.size), [f"{v:g}" for v in rs])
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.grid(False)
    axes[0].set_yticks(range(sites.size), [f"{int(s)}" for s in sites])
    axes[0].set_ylabel(ylabel)
    fig.colorbar(im, ax=list(axes), shrink=0.9,
                 label=r"$\langle n \rangle$")
    return fig


_RENDERERS = {
    "interaction": _render_interaction,
    "atom": _render_atom,
    "molecule": _render_molecule,
    "screening": _render_screening,
    "occupation": _render_occupation,
}


def render(recipe: FigureRecipe):
    """Build the matplotlib Figure for one recipe (no file output)."""
    if recipe.kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind {recipe.kind!r}")
    _fresh_style()
    return _RENDERERS[recipe.kind](recipe)


def save(fig, out_dir, stem, formats=("png", "pdf")):
    """Write `stem.<fmt>` under out_dir per format; returns the paths.

    The PDF creation-date stamp is suppressed so identical inputs give
    identical bytes on rerun.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for fmt in formats:
        path = os.path.join(out_dir, f"{stem}.{fmt}")
        extra = {"metadata": {"CreationDate": None}} if fmt == "pdf" else {}
        fig.savefig(path, format=fmt, **extra)
        paths.append(path)
    return paths
