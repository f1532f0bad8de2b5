"""Experiment orchestration: sweeps, artifacts, run manifests.

Every module computation here is a pure function of the config, so
sweep points can run on a worker pool; results are assembled in grid
order, which makes the output independent of the thread count. Artifacts
are written last, each atomically, and a failed run removes whatever it
had already written so no partial artifact set survives.
"""
import json
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig
from .electrostatics import (PhysicalConstants, TiledScreening, coulomb_bare,
                             load_gate_layout, screened_potential_image,
                             tile_layout)
from .io import read_columns, write_csv, write_json
from .layouts import builtin_layout
from .qchem import (atom_spectrum, molecule_binding, occupation_maps,
                    qc_scales)
from .stability import (AnticrossingModel, StabilityDiagram, fit_anticrossing,
                        simulate_diagram)
from .wannier import DotArray, InteractionModel, interaction_matrix

__all__ = ["run", "resolve_threads", "CSV_HEADERS"]

CSV_HEADERS = {
    "screen": ["rho_nm", "v_bare_ueV", "v_image_ueV", "v_tiled_ueV"],
    "params": ["site_i", "site_j", "distance_nm", "v_ueV", "model"],
    "atom": ["v0_ueV", "eta", "ry_ueV", "level", "e_ueV", "eb_per_ry"],
    "molecule": ["r_over_aqd", "e2_ueV", "e1_ueV", "vnn_ueV", "delta_ueV"],
    "occupation": ["r_over_aqd", "site", "n_ground", "n_excited",
                   "n_absdiff"],
    "stability": ["deps_i_ueV", "deps_j_ueV", "signal"],
}


def resolve_threads(config: ExperimentConfig) -> int:
    """Config value wins; 0 falls back to DOTSIM_THREADS, then to 1."""
    if config.threads > 0:
        return config.threads
    env = os.environ.get("DOTSIM_THREADS", "")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"DOTSIM_THREADS={env!r} is not an integer")
        if value < 1:
            raise ValueError(f"DOTSIM_THREADS must be >= 1, got {value}")
        return value
    return 1


def _ordered_map(fn, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _grid(p, low_key: str, high_key: str, steps_key: str) -> np.ndarray:
    return np.linspace(p[low_key], p[high_key], p[steps_key])


def _resolve_layout(p):
    name = p["layout"]
    if name in ("finger-gates", "full-plane"):
        layout, _ = builtin_layout(name)
    else:
        layout, _ = load_gate_layout(name)
    consts = PhysicalConstants.for_permittivity(p["rel_permittivity"],
                                                p["depth_nm"])
    return layout, consts


def _interaction_model(kind: str, p) -> InteractionModel:
    layout, consts = _resolve_layout(p)
    if kind == "tiled":
        return InteractionModel("tiled", consts, layout=layout,
                                tile_size=p["tile_nm"])
    return InteractionModel(kind, consts)


def _load_dot_array(path, p) -> DotArray:
    with open(path) as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict) or "centers" not in doc:
        raise ValueError(f"{path}: dot-array JSON needs a 'centers' list")
    return DotArray(np.asarray(doc["centers"], dtype=float),
                    spacing=float(doc.get("spacing_nm", p["a_qd_nm"])),
                    fwhm=np.asarray(doc.get("fwhm_nm", p["fwhm_nm"]),
                                    dtype=float))


def _run_screen(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    layout, consts = _resolve_layout(p)
    rhos = _grid(p, "rho_min_nm", "rho_max_nm", "rho_steps")
    system = TiledScreening(tile_layout(layout, p["tile_nm"]), consts)
    cx, cy = layout.center
    z = -consts.depth_d

    def one(rho):
        r1 = np.array([cx, cy, z])
        r2 = np.array([cx + rho, cy, z])
        return (float(rho), coulomb_bare(r1, r2, consts),
                screened_potential_image(r1, r2, consts),
                system.pair_potential(r1, r2, p["reference"]))

    rows = _ordered_map(one, list(rhos), threads)
    echo = [f"layout: {p['layout']}, {system.tiles.count} tiles at "
            f"{p['tile_nm']:g} nm, reference {p['reference']}"]
    return rows, echo


def _run_params(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    if p["dots"] is not None:
        dots = _load_dot_array(p["dots"], p)
    else:
        dots = DotArray.linear(p["sites"], p["a_qd_nm"], p["fwhm_nm"])
    model = _interaction_model(p["model"], p)
    vee = interaction_matrix(dots, model)
    x = dots.positions[:, 0]
    rows = []
    for i in range(dots.count):
        for j in range(i, dots.count):
            rows.append((i + 1, j + 1, abs(x[j] - x[i]),
                         float(vee[i, j]), p["model"]))
    echo = [f"{dots.count} dots, {p['model']} electron-electron model"]
    return rows, echo


def _run_atom(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    grid = _grid(p, "v0_min_ueV", "v0_max_ueV", "v0_steps")
    k = p["levels"]

    def one(v0):
        return atom_spectrum(p["sites"], p["t_ueV"], [v0], k=k,
                             a_qd=p["a_qd_nm"])

    results = _ordered_map(one, list(grid), threads)
    rows = []
    for v0, res in zip(grid, results):
        for level in range(k):
            rows.append((float(v0), float(res.eta[0]), float(res.rydberg[0]),
                         level, float(res.energies[0, level]),
                         float(res.binding_per_ry[0, level])))
    echo = [_scales_line("v0_min", p["t_ueV"], grid[0], p["a_qd_nm"]),
            _scales_line("v0_max", p["t_ueV"], grid[-1], p["a_qd_nm"])]
    return rows, echo


def _scales_line(label: str, t: float, v0: float, a_qd: float) -> str:
    s = qc_scales(t, v0, a_qd)
    return (f"scales at {label}: eta = {s.eta:.6g}, a0 = {s.bohr:.6g} nm, "
            f"Ry = {s.rydberg:.6g} ueV")


def _molecule_pieces(cfg: ExperimentConfig):
    p = cfg.params
    dots = DotArray.linear(p["sites"], p["a_qd_nm"], p["fwhm_nm"])
    vee = interaction_matrix(dots, _interaction_model(p["ee_model"], p))
    grid = _grid(p, "r_min", "r_max", "r_steps")
    echo = [_scales_line("v0", p["t_ueV"], p["v0_ueV"], p["a_qd_nm"]),
            f"{p['ee_model']} electron-electron model"]
    return p, vee, grid, echo


def _run_molecule(cfg: ExperimentConfig, threads: int):
    p, vee, grid, echo = _molecule_pieces(cfg)

    def one(r):
        return molecule_binding(p["sites"], p["t_ueV"], p["v0_ueV"], [r],
                                interaction=vee, a_qd=p["a_qd_nm"],
                                fwhm=p["fwhm_nm"], soft_core=p["soft_core"])

    results = _ordered_map(one, list(grid), threads)
    # e1 is the R-independent atom reference, stored once per result
    rows = [(float(r), float(res.e2[0]), float(res.e1),
             float(res.vnn[0]), float(res.delta[0]))
            for r, res in zip(grid, results)]
    return rows, echo


def _run_occupation(cfg: ExperimentConfig, threads: int):
    p, vee, grid, echo = _molecule_pieces(cfg)

    def one(r):
        return occupation_maps(p["sites"], p["t_ueV"], p["v0_ueV"], [r],
                               interaction=vee,
                               bias_slope=p["bias_slope_ueV"],
                               a_qd=p["a_qd_nm"], fwhm=p["fwhm_nm"],
                               soft_core=p["soft_core"])

    results = _ordered_map(one, list(grid), threads)
    rows = []
    for r, res in zip(grid, results):
        for site in range(p["sites"]):
            rows.append((float(r), site + 1,
                         float(res.ground[0, site]),
                         float(res.excited[0, site]),
                         float(res.absdiff[0, site])))
    echo.append(f"bias slope {p['bias_slope_ueV']:g} ueV per site")
    return rows, echo


def _run_stability_simulate(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    model = AnticrossingModel(v_ij=p["v_ij_ueV"], t_ij=p["t_ij_ueV"],
                              center_i=p["center_i_ueV"],
                              center_j=p["center_j_ueV"])
    span = p["span_ueV"]
    if span == 0.0:
        span = 1.5 * (model.v_ij + 2.0 * model.t_ij) + 30.0
    axis_i = model.center_i + np.linspace(-span, span, p["points"])
    axis_j = model.center_j + np.linspace(-span, span, p["points"])
    diag = simulate_diagram(model, axis_i, axis_j,
                            weights=(p["weight_i"], p["weight_j"]),
                            broadening=p["broadening_ueV"],
                            noise_sigma=p["noise"], seed=cfg.seed)
    rows = []
    for i, di in enumerate(diag.axis_i):
        for j, dj in enumerate(diag.axis_j):
            rows.append((float(di), float(dj), float(diag.signal[i, j])))
    echo = [f"diagonal gap 2(V + 2t) = {model.diagonal_gap:g} ueV, "
            f"broadening {p['broadening_ueV']:g} ueV"]
    return rows, echo


def _diagram_from_csv(path) -> StabilityDiagram:
    di, dj, sig = read_columns(path, CSV_HEADERS["stability"])
    axis_i = np.unique(di)
    axis_j = np.unique(dj)
    if axis_i.size * axis_j.size != sig.size:
        raise ValueError(f"{path}: rows do not tile a full "
                         f"{axis_i.size} x {axis_j.size} grid")
    order = np.lexsort((dj, di))
    return StabilityDiagram(axis_i, axis_j,
                            sig[order].reshape(axis_i.size, axis_j.size))


def _run_stability_fit(cfg: ExperimentConfig, threads: int):
    p = cfg.params
    diag = _diagram_from_csv(p["input"])
    fit = fit_anticrossing(diag, fix_t=p["fix_t_ueV"])
    report = {
        "parameters": {
            "v_ij_ueV": fit.model.v_ij,
            "t_ij_ueV": fit.model.t_ij,
            "center_i_ueV": fit.model.center_i,
            "center_j_ueV": fit.model.center_j,
        },
        "covariance": fit.covariance.tolist(),
        "covariance_order": ["v_ij_ueV", "t_ij_ueV", "center_i_ueV",
                             "center_j_ueV"],
        "residual_norm": fit.residual_norm,
        "n_points": fit.n_points,
        "input": p["input"],
    }
    echo = [f"fit: V = {fit.model.v_ij:.6g} ueV, t = {fit.model.t_ij:.6g} "
            f"ueV over {fit.n_points} residuals"]
    return report, echo


_RUNNERS = {
    "screen": _run_screen,
    "params": _run_params,
    "atom": _run_atom,
    "molecule": _run_molecule,
    "occupation": _run_occupation,
}


def run(config: ExperimentConfig, stream=None) -> list:
    """Execute one experiment; returns the artifact paths written.

    Any compute or write failure removes artifacts already written by
    this run before the exception propagates.
    """
    started = time.perf_counter()
    threads = resolve_threads(config)

    if config.kind == "stability":
        mode = config.params["mode"]
        if mode == "fit":
            payload, echo = _run_stability_fit(config, threads)
            artifacts = [("json", config.out, payload)]
        else:
            rows, echo = _run_stability_simulate(config, threads)
            artifacts = [("csv", config.out, CSV_HEADERS["stability"], rows)]
    else:
        rows, echo = _RUNNERS[config.kind](config, threads)
        artifacts = [("csv", config.out, CSV_HEADERS[config.kind], rows)]

    header_lines = [f"experiment: {config.kind}",
                    f"seed: {config.seed}, threads: {threads}"] + echo
    if stream is not None:
        for line in header_lines:
            print(f"# {line}", file=stream)

    written = []
    try:
        for spec in artifacts:
            if spec[0] == "csv":
                _, path, header, rows = spec
                write_csv(path, header, rows)
            else:
                _, path, payload = spec
                write_json(path, payload)
            written.append(path)
        manifest = {
            "experiment": config.kind,
            "config": config.echo(),
            "versions": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "dotsim": __version__,
            },
            "header_lines": header_lines,
            "artifacts": [os.path.basename(p) for p in written],
            "wall_time_s": time.perf_counter() - started,
        }
        manifest_path = f"{config.out}.manifest.json"
        write_json(manifest_path, manifest)
        written.append(manifest_path)
    except BaseException:
        for path in written:
            if os.path.exists(path):
                os.unlink(path)
        raise
    return written
