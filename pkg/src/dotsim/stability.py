"""Pairwise charge-stability diagrams and anti-crossing extraction.

The interdot region of a dot pair (i, j) is bounded in the detuning
plane by the two branches

    deps_i + deps_j = +-(V_ij + sqrt((deps_i - deps_j)^2 + 4 t_ij^2)),

measured from the anti-crossing center. ``simulate_diagram`` renders a
synthetic charge-sensor signal from the four-configuration two-site
model (empty, two hybridized single-charge states, doubly occupied)
with thermal occupation of the levels, ``detect_edges`` extracts
subpixel boundary points by gradient-ridge interpolation, and
``fit_anticrossing`` recovers the model parameters by weighted
orthogonal-distance least squares.

Units: energies and detunings in µeV, lever arms in µeV/mV.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.optimize import least_squares

__all__ = [
    "AnticrossingModel",
    "StabilityDiagram",
    "EdgeSet",
    "FitResult",
    "boundary_curves",
    "simulate_diagram",
    "detect_edges",
    "fit_anticrossing",
    "volts_to_energy",
]


@dataclass(frozen=True)
class AnticrossingModel:
    """Eq.-of-branches parameters of a single interdot anti-crossing."""

    v_ij: float
    t_ij: float
    center_i: float = 0.0
    center_j: float = 0.0
    lever_i: float = 1.0
    lever_j: float = 1.0

    def __post_init__(self):
        if self.v_ij < 0.0:
            raise ValueError(f"v_ij must be >= 0, got {self.v_ij}")
        if self.t_ij < 0.0:
            raise ValueError(f"t_ij must be >= 0, got {self.t_ij}")
        if self.lever_i <= 0.0 or self.lever_j <= 0.0:
            raise ValueError("lever arms must be positive")

    @property
    def diagonal_gap(self) -> float:
        """Branch separation 2 (V + 2t) along deps_i = deps_j."""
        return 2.0 * (self.v_ij + 2.0 * self.t_ij)


@dataclass(frozen=True)
class StabilityDiagram:
    """Sensor signal sampled on a rectangular detuning grid.

    ``signal[a, b]`` belongs to (axis_i[a], axis_j[b]).
    """

    axis_i: np.ndarray
    axis_j: np.ndarray
    signal: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        axis_i = np.asarray(self.axis_i, dtype=float)
        axis_j = np.asarray(self.axis_j, dtype=float)
        signal = np.asarray(self.signal, dtype=float)
        for name, axis in (("axis_i", axis_i), ("axis_j", axis_j)):
            if axis.ndim != 1 or axis.size < 2:
                raise ValueError(f"{name} must be a 1D grid")
            if np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} must be strictly monotone")
        if signal.shape != (axis_i.size, axis_j.size):
            raise ValueError(
                f"signal shape {signal.shape} does not match axes "
                f"({axis_i.size}, {axis_j.size})")
        if not np.all(np.isfinite(signal)):
            raise ValueError("signal must be finite")
        for arr, name in ((axis_i, "axis_i"), (axis_j, "axis_j"),
                          (signal, "signal")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class EdgeSet:
    """Subpixel boundary points with gradient-strength weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.size != points.shape[0]:
            raise ValueError("one weight per point required")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def is_empty(self) -> bool:
        return self.points.shape[0] == 0


@dataclass(frozen=True)
class FitResult:
    model: AnticrossingModel
    covariance: np.ndarray
    residual_norm: float
    n_points: int


def boundary_curves(model: AnticrossingModel, u_grid):
    """Branch points (deps_i, deps_j) over a difference-coordinate grid.

    Returns (upper, lower) arrays of shape (n, 2) in absolute
    detunings (the model centers are added).
    """
    u = np.asarray(u_grid, dtype=float)
    s = model.v_ij + np.hypot(u, 2.0 * model.t_ij)
    branches = []
    for sign in (1.0, -1.0):
        di = model.center_i + (sign * s + u) / 2.0
        dj = model.center_j + (sign * s - u) / 2.0
        branches.append(np.column_stack([di, dj]))
    return branches[0], branches[1]


def _thermal_occupations(s_rel, u_rel, v, t, broadening):
    """Boltzmann-averaged (<n_i>, <n_j>) of the four-level model."""
    half = np.hypot(u_rel / 2.0, t)
    if t == 0.0:
        occ = np.where(u_rel > 0, 1.0, np.where(u_rel < 0, 0.0, 0.5))
    else:
        gap = half - u_rel / 2.0
        occ = t * t / (t * t + gap * gap)
    zero, one = np.zeros_like(occ), np.ones_like(occ)
    # rows: empty, hybrid ground, hybrid excited, doubly occupied
    energies = np.stack([(s_rel + v) / 2.0, -half, half, (v - s_rel) / 2.0])
    n_i = np.stack([zero, occ, 1.0 - occ, one])
    n_j = np.stack([zero, 1.0 - occ, occ, one])
    boltz = np.exp(-(energies - energies.min(axis=0)) / broadening)
    boltz /= boltz.sum(axis=0)
    return (boltz * n_i).sum(axis=0), (boltz * n_j).sum(axis=0)


def _thermal_signal(s_rel, u_rel, v, t, weights, broadening):
    mean_i, mean_j = _thermal_occupations(s_rel, u_rel, v, t, broadening)
    return weights[0] * mean_i + weights[1] * mean_j


def simulate_diagram(model: AnticrossingModel, axis_i, axis_j=None,
                     weights=(1.0, 1.0), broadening: float = 10.0,
                     noise_sigma: float = 0.0,
                     seed: int = 0) -> StabilityDiagram:
    """Synthetic sensor signal on a detuning grid.

    ``broadening`` is the thermal energy scale in µeV; boundaries
    acquire logistic profiles with 10-90% width 2 ln(9) times it.
    Noise is seeded and additive Gaussian in signal units.
    """
    if broadening <= 0.0:
        raise ValueError(f"broadening must be > 0, got {broadening}")
    axis_i = np.asarray(axis_i, dtype=float)
    axis_j = axis_i if axis_j is None else np.asarray(axis_j, dtype=float)
    di = axis_i[:, None] - model.center_i
    dj = axis_j[None, :] - model.center_j
    signal = _thermal_signal(di + dj, di - dj, model.v_ij, model.t_ij,
                             np.asarray(weights, dtype=float), broadening)
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        signal = signal + rng.normal(0.0, noise_sigma, signal.shape)
    return StabilityDiagram(axis_i=axis_i, axis_j=axis_j, signal=signal,
                            noise_sigma=noise_sigma)


def _scan_ridges(grad, along_axis, across_axis, threshold):
    """Subpixel gradient maxima along rows of ``grad``.

    Returns (across position fixed per row, subpixel along position,
    peak height) triples; ``grad`` rows run along ``along_axis``.
    """
    g0 = grad[:, 1:-1]
    gm = grad[:, :-2]
    gp = grad[:, 2:]
    peak = (g0 >= gm) & (g0 > gp) & (g0 >= threshold)
    rows, cols = np.nonzero(peak)
    b = cols + 1
    denom = gm[rows, cols] - 2.0 * g0[rows, cols] + gp[rows, cols]
    with np.errstate(divide="ignore", invalid="ignore"):
        offset = 0.5 * (gm[rows, cols] - gp[rows, cols]) / denom
    offset = np.where(np.abs(denom) > 1e-300, offset, 0.0)
    offset = np.clip(offset, -0.5, 0.5)
    spacing = (along_axis[b + 1] - along_axis[b - 1]) / 2.0
    return across_axis[rows], along_axis[b] + offset * spacing, \
        grad[rows, b]


def detect_edges(diagram: StabilityDiagram, smooth_cells: float = 1.0,
                 rel_threshold: float = 0.2) -> EdgeSet:
    """Boundary points from gradient-magnitude ridges.

    The signal is pre-smoothed by ``smooth_cells`` grid cells, the
    gradient magnitude is scanned along both grid directions, and each
    local maximum above ``rel_threshold`` times the global maximum is
    refined to subpixel position by quadratic interpolation.  A flat
    diagram yields an empty result.
    """
    sig = diagram.signal
    if smooth_cells > 0.0:
        sig = gaussian_filter(sig, smooth_cells, mode="nearest")
    gi, gj = np.gradient(sig, diagram.axis_i, diagram.axis_j)
    grad = np.hypot(gi, gj)
    gmax = grad.max()
    if gmax == 0.0:
        return EdgeSet(points=np.empty((0, 2)), weights=np.empty(0))
    threshold = rel_threshold * gmax
    fi, sj, w_rows = _scan_ridges(grad, diagram.axis_j, diagram.axis_i,
                                  threshold)
    fj, si, w_cols = _scan_ridges(grad.T, diagram.axis_i, diagram.axis_j,
                                  threshold)
    points = np.concatenate([np.column_stack([fi, sj]),
                             np.column_stack([si, fj])])
    weights = np.concatenate([w_rows, w_cols])
    return EdgeSet(points=points, weights=weights)


def _branch_residuals(params, points, weights, fixed_t):
    v, t, ci, cj = params if fixed_t is None else (
        params[0], fixed_t, params[1], params[2])
    ds = points[:, 0] + points[:, 1] - (ci + cj)
    du = points[:, 0] - points[:, 1] - (ci - cj)
    dist = np.hypot(du, 2.0 * t)
    miss = np.abs(ds) - (v + dist)
    # first-order orthogonal (Sampson) distance in the detuning plane
    slope = du / np.maximum(dist, 1e-12)
    norm = np.sqrt(2.0 + 2.0 * slope**2)
    return np.sqrt(weights) * miss / norm


def fit_anticrossing(data, initial: AnticrossingModel = None,
                     fix_t: float = None) -> FitResult:
    """Recover anti-crossing parameters from edges or a whole diagram.

    An ``EdgeSet`` is fitted by weighted robust least squares on the
    orthogonal (Sampson) distance to the branch curves.  A
    ``StabilityDiagram`` runs edge detection for that fit first and
    then refines all parameters against the full two-dimensional
    signal patch, which removes the ridge bias that thermal broadening
    imprints on detected edges near the anti-crossing apex.

    Both branches must be present relative to the assumed center (the
    ``initial`` model's center, or the origin).  ``fix_t`` freezes the
    hopping at the given value.
    """
    if isinstance(data, StabilityDiagram):
        seed_fit = _fit_edge_points(detect_edges(data), initial, fix_t)
        return _fit_patch(data, seed_fit.model, fix_t)
    return _fit_edge_points(data, initial, fix_t)


def _fit_edge_points(edges: EdgeSet, initial: AnticrossingModel,
                     fix_t: float) -> FitResult:
    if edges.is_empty:
        raise ValueError("no edge points to fit")
    points = edges.points
    weights = edges.weights / edges.weights.mean()
    ci0 = initial.center_i if initial is not None else 0.0
    cj0 = initial.center_j if initial is not None else 0.0
    s = points[:, 0] + points[:, 1] - (ci0 + cj0)
    if np.all(s > 0):
        raise ValueError("points cover only the upper branch; the lower "
                         "branch (deps_i + deps_j < center) is missing")
    if np.all(s < 0):
        raise ValueError("points cover only the lower branch; the upper "
                         "branch (deps_i + deps_j > center) is missing")
    u = points[:, 0] - points[:, 1] - (ci0 - cj0)
    gap = np.quantile(np.abs(s), 0.05)
    u0 = u[np.argmin(np.abs(s))]
    if initial is not None:
        v0, t0 = initial.v_ij, initial.t_ij
    else:
        v0, t0 = 0.7 * gap, 0.15 * gap
    center = np.array([ci0 + u0 / 2.0, cj0 - u0 / 2.0])
    if fix_t is None:
        x0 = np.array([v0, max(t0, 1e-3), center[0], center[1]])
        bounds = ([0.0, 0.0, -np.inf, -np.inf], np.inf)
    else:
        if fix_t < 0.0:
            raise ValueError(f"fix_t must be >= 0, got {fix_t}")
        x0 = np.array([v0, center[0], center[1]])
        bounds = ([0.0, -np.inf, -np.inf], np.inf)
    result = least_squares(_branch_residuals, x0, bounds=bounds,
                           args=(points, weights, fix_t), loss="soft_l1",
                           f_scale=2.0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if fix_t is None:
        v, t, ci, cj = result.x
    else:
        v, ci, cj = result.x
        t = fix_t
    dof = max(points.shape[0] - result.x.size, 1)
    sigma2 = 2.0 * result.cost / dof
    core = sigma2 * np.linalg.pinv(result.jac.T @ result.jac)
    covariance = np.zeros((4, 4))
    if fix_t is None:
        covariance[:] = core
    else:
        keep = np.array([0, 2, 3])
        covariance[np.ix_(keep, keep)] = core
    model = AnticrossingModel(v_ij=float(v), t_ij=float(t),
                              center_i=float(ci), center_j=float(cj))
    return FitResult(model=model, covariance=covariance,
                     residual_norm=float(np.linalg.norm(result.fun)),
                     n_points=points.shape[0])


def _fit_patch(diagram: StabilityDiagram, seed: AnticrossingModel,
               fix_t: float) -> FitResult:
    """Refine parameters against the full signal patch.

    Nuisance parameters (thermal scale, per-dot sensor amplitudes,
    offset) are fitted alongside the model so the patch needs no
    calibration input.
    """
    axis_i, axis_j, sig = diagram.axis_i, diagram.axis_j, diagram.signal
    cell = min(np.diff(axis_i).min(), np.diff(axis_j).min())
    amp0 = (sig.max() - sig.min()) / 2.0

    def forward(theta):
        if fix_t is None:
            v, t, ci, cj, temp, amp_i, amp_j, base = theta
        else:
            v, ci, cj, temp, amp_i, amp_j, base = theta
            t = fix_t
        di = axis_i[:, None] - ci
        dj = axis_j[None, :] - cj
        mean_i, mean_j = _thermal_occupations(di + dj, di - dj, v, t, temp)
        return amp_i * mean_i + amp_j * mean_j + base

    def residual(theta):
        return (forward(theta) - sig).ravel()

    x0 = [seed.v_ij, seed.t_ij, seed.center_i, seed.center_j,
          2.0 * cell, amp0, amp0, sig.min()]
    lower = [0.0, 0.0, -np.inf, -np.inf, cell / 20.0, -np.inf, -np.inf,
             -np.inf]
    if fix_t is not None:
        del x0[1], lower[1]
    result = least_squares(residual, np.asarray(x0), bounds=(lower, np.inf),
                           xtol=1e-14, ftol=1e-14, gtol=1e-14)
    theta = result.x
    if fix_t is None:
        v, t, ci, cj = theta[:4]
        keep = np.array([0, 1, 2, 3])
    else:
        v, ci, cj = theta[:3]
        t = fix_t
        keep = np.array([0, 2, 3])
    dof = max(result.fun.size - theta.size, 1)
    sigma2 = 2.0 * result.cost / dof
    core = sigma2 * np.linalg.pinv(result.jac.T @ result.jac)
    covariance = np.zeros((4, 4))
    idx = np.arange(len(keep))
    covariance[np.ix_(keep, keep)] = core[np.ix_(idx, idx)]
    model = AnticrossingModel(v_ij=float(v), t_ij=float(t),
                              center_i=float(ci), center_j=float(cj))
    return FitResult(model=model, covariance=covariance,
                     residual_norm=float(np.linalg.norm(result.fun)),
                     n_points=result.fun.size)


def volts_to_energy(values_mv, lever_arm: float):
    """Gate-voltage detunings (mV) to energies (µeV) via the lever arm."""
    if lever_arm <= 0.0:
        raise ValueError(f"lever arm must be positive, got {lever_arm}")
    out = np.asarray(values_mv, dtype=float) * lever_arm
    return float(out) if np.isscalar(values_mv) else out
