"""Hubbard parameters from Gaussian dot orbitals.

Each dot carries a 2D Gaussian orbital of the stated FWHM, pinned in the
electron plane at depth d. Interaction elements average the chosen
electron-electron potential over the two single-dot charge densities:
the unscreened part has a closed form (Rayleigh-distributed separation),
the screening correction is smooth and integrates accurately with a
modest Gauss-Hermite product rule. Tunnel elements sandwich the kinetic
plus gate-potential Hamiltonian between the two Loewdin-orthogonalized
neighbor orbitals on a sampled grid.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.spatial.distance import cdist
from scipy.special import i0e

from .electrostatics import (DEFAULT_TILE_NM, GateLayout, PhysicalConstants,
                             TiledScreening, TileSet, tile_layout)

__all__ = [
    "DotArray", "InteractionModel", "PotentialGrid",
    "interaction_element", "interaction_matrix", "tunnel_element",
    "KINETIC_SCALE_UEV_NM2",
]

GAUSSIAN_FWHM_FACTOR = 2.0 * np.sqrt(2.0 * np.log(2.0))

# hbar^2 / (2 m* ) for m* = 0.067 m_e, in µeV nm^2
KINETIC_SCALE_UEV_NM2 = 3.8099841e4 / 0.067

MODEL_KINDS = ("bare", "image", "tiled")

MIN_QUAD_ORDER = 4

# grid requirements for tunnel elements: reach past the orbital tails
# and resolve the FWHM well enough for the high-order Laplacian
COVERAGE_SIGMAS = 4.0
MAX_SPACING_FWHM_FRACTION = 1.0 / 8.0


@dataclass(frozen=True)
class DotArray:
    """Quantum dot centers with Gaussian orbital widths.

    positions: (N, 2) centers in the electron plane, nm, ordered left to
    right. spacing is the nominal pitch used by downstream defaults.
    fwhm is the orbital full width at half maximum, one global value or
    one per dot.
    """

    positions: np.ndarray
    spacing: float = 160.0
    fwhm: np.ndarray = 45.0

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError(f"positions must be (N, 2), got {pos.shape}")
        if len(pos) < 1:
            raise ValueError("need at least one dot")
        if len(pos) > 1 and not np.all(np.diff(pos[:, 0]) > 0):
            raise ValueError("dot x coordinates must be strictly increasing")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        fwhm = np.broadcast_to(np.asarray(self.fwhm, dtype=float),
                               len(pos)).copy()
        if not np.all(fwhm > 0):
            raise ValueError("fwhm must be > 0 for every dot")
        pos.flags.writeable = False
        fwhm.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "fwhm", fwhm)

    @classmethod
    def linear(cls, n: int, spacing: float = 160.0,
               fwhm: float = 45.0) -> "DotArray":
        """Uniform chain along x, centered on the origin."""
        x = (np.arange(n) - (n - 1) / 2.0) * spacing
        return cls(np.column_stack([x, np.zeros(n)]), spacing, fwhm)

    @property
    def count(self) -> int:
        return len(self.positions)

    @property
    def widths(self) -> np.ndarray:
        """Gaussian width parameter w of each orbital, nm."""
        return self.fwhm / GAUSSIAN_FWHM_FACTOR


@dataclass(frozen=True)
class InteractionModel:
    """Which electron-electron potential the pair average uses.

    kind "bare" is the unscreened Coulomb potential, "image" the single
    image-charge screening of an ideal plane at depth d, "tiled" the
    induced-charge solution on the given gate layout.
    """

    kind: str
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)
    layout: GateLayout = None
    tile_size: float = DEFAULT_TILE_NM
    reference: str = "reservoir"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}, "
                             f"got {self.kind!r}")
        if self.kind == "tiled" and self.layout is None:
            raise ValueError("tiled interaction model requires a gate layout")
        if self.reference not in ("reservoir", "isolated"):
            raise ValueError(f"unknown reference {self.reference!r}")

    def screening(self) -> TiledScreening:
        """Factorized tile system, built once and cached."""
        cached = getattr(self, "_screening", None)
        if cached is None:
            tiles = tile_layout(self.layout, self.tile_size)
            cached = TiledScreening(tiles, self.consts)
            object.__setattr__(self, "_screening", cached)
        return cached


def _pair_width(dots: DotArray, i: int, j: int) -> float:
    # std of the separation vector of two Gaussian charge densities
    w = dots.widths
    return float(np.sqrt((w[i] ** 2 + w[j] ** 2) / 2.0))


def _bare_pair_energy(rho, s, coulomb_scale):
    """Mean of CS/|r1-r2| over two Gaussian densities, closed form.

    The separation is 2D normal with per-axis std s around the center
    distance rho, making |r1-r2| Rice distributed; the mean inverse
    distance is sqrt(pi/2)/s * exp(-x) I0(x) at x = rho^2/(4 s^2).
    """
    rho = np.asarray(rho, dtype=float)
    x = rho ** 2 / (4.0 * s ** 2)
    return coulomb_scale * np.sqrt(np.pi / 2.0) / s * i0e(x)


def _gh_nodes(center, width, order):
    # Gauss-Hermite product rule for a normalized 2D Gaussian density
    # with per-axis std width/sqrt(2): nodes at center + width * x
    x, w = hermgauss(order)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([center[0] + width * x1.ravel(),
                           center[1] + width * x2.ravel()])
    wts = np.outer(w, w).ravel() / np.pi
    return pts, wts


def _image_correction(pts_i, wts_i, pts_j, wts_j,
                      consts: PhysicalConstants) -> float:
    # f_im * CS/rho - CS/rho = -CS / sqrt(rho^2 + 4 d^2), smooth even
    # at coincident points
    d2 = cdist(pts_i, pts_j, "sqeuclidean")
    kernel = -consts.coulomb_scale / np.sqrt(d2 + 4.0 * consts.depth_d ** 2)
    return float(wts_i @ kernel @ wts_j)


def _tiled_load(system: TiledScreening, pts, wts) -> np.ndarray:
    pts3 = np.column_stack([pts, np.full(len(pts), -system.consts.depth_d)])
    return system.loads(pts3) @ wts


def _element(i, j, dots, model, quad_order):
    s = _pair_width(dots, i, j)
    rho = float(np.linalg.norm(dots.positions[i] - dots.positions[j]))
    bare = float(_bare_pair_energy(rho, s, model.consts.coulomb_scale))
    if model.kind == "bare":
        return bare
    pts_i, wts_i = _gh_nodes(dots.positions[i], dots.widths[i], quad_order)
    pts_j, wts_j = _gh_nodes(dots.positions[j], dots.widths[j], quad_order)
    if model.kind == "image":
        return bare + _image_correction(pts_i, wts_i, pts_j, wts_j,
                                        model.consts)
    system = model.screening()
    load_i = _tiled_load(system, pts_i, wts_i)
    load_j = _tiled_load(system, pts_j, wts_j)
    return bare + system.cross_energy(load_i, load_j, model.reference)


def _check_indices(dots: DotArray, *indices):
    for k in indices:
        if not 0 <= k < dots.count:
            raise ValueError(f"dot index {k} out of range for "
                             f"{dots.count} dots")


def interaction_element(i: int, j: int, dots: DotArray,
                        model: InteractionModel, quad_order: int = 16,
                        check_convergence: bool = False) -> float:
    """Density-averaged interaction of dots i and j, µeV; i = j gives U.

    check_convergence re-evaluates at twice the order and warns when the
    two estimates differ by more than 1%.
    """
    _check_indices(dots, i, j)
    if quad_order < MIN_QUAD_ORDER:
        raise ValueError(f"quad_order must be >= {MIN_QUAD_ORDER}, "
                         f"got {quad_order}")
    value = _element(i, j, dots, model, quad_order)
    if check_convergence and model.kind != "bare":
        refined = _element(i, j, dots, model, 2 * quad_order)
        if abs(refined - value) > 0.01 * abs(refined):
            warnings.warn(
                f"quadrature order {quad_order} not converged for pair "
                f"({i}, {j}): {value:.6g} vs {refined:.6g} µeV at order "
                f"{2 * quad_order}", UserWarning, stacklevel=2)
    return value


def interaction_matrix(dots: DotArray, model: InteractionModel,
                       quad_order: int = 16) -> np.ndarray:
    """Full symmetric V matrix; diagonal entries are the on-site U."""
    if quad_order < MIN_QUAD_ORDER:
        raise ValueError(f"quad_order must be >= {MIN_QUAD_ORDER}, "
                         f"got {quad_order}")
    n = dots.count
    w = dots.widths
    rho = cdist(dots.positions, dots.positions)
    s = np.sqrt((w[:, None] ** 2 + w[None, :] ** 2) / 2.0)
    vee = _bare_pair_energy(rho, s, model.consts.coulomb_scale)
    if model.kind == "bare":
        return (vee + vee.T) / 2.0

    nodes = [_gh_nodes(dots.positions[k], w[k], quad_order)
             for k in range(n)]
    if model.kind == "tiled":
        system = model.screening()
        loads = np.column_stack([_tiled_load(system, p, wt)
                                 for p, wt in nodes])
        vee += system.cross_energy_matrix(loads, model.reference)
    else:
        for a in range(n):
            for b in range(a, n):
                corr = _image_correction(nodes[a][0], nodes[a][1],
                                         nodes[b][0], nodes[b][1],
                                         model.consts)
                vee[a, b] += corr
                if b != a:
                    vee[b, a] += corr
    return (vee + vee.T) / 2.0


@dataclass(frozen=True)
class PotentialGrid:
    """Gate-defined potential sampled on a uniform rectangular grid.

    xs and ys are strictly increasing coordinate vectors in nm; values
    holds the potential in µeV with shape (len(ys), len(xs)).
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        for name, axis in (("xs", xs), ("ys", ys)):
            if axis.ndim != 1 or len(axis) < 9:
                raise ValueError(f"{name} must be 1D with at least 9 points")
            steps = np.diff(axis)
            if not np.all(steps > 0):
                raise ValueError(f"{name} must be strictly increasing")
            if np.ptp(steps) > 1e-9 * steps[0]:
                raise ValueError(f"{name} must be uniformly spaced")
        if vals.shape != (len(ys), len(xs)):
            raise ValueError(f"values must have shape {(len(ys), len(xs))}, "
                             f"got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite")
        for arr in (xs, ys, vals):
            arr.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "values", vals)

    @property
    def spacing(self):
        return float(self.xs[1] - self.xs[0]), float(self.ys[1] - self.ys[0])


def _laplacian_o4(f: np.ndarray, hx: float, hy: float) -> np.ndarray:
    # fourth-order central stencil; the two-cell frame stays zero, which
    # the coverage requirement makes harmless for the Gaussian tails
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    lap = np.zeros_like(f)
    lap[2:-2, :] = (c[0] * f[:-4] + c[1] * f[1:-3] + c[2] * f[2:-2]
                    + c[3] * f[3:-1] + c[4] * f[4:]) / hy ** 2
    lap[:, 2:-2] += (c[0] * f[:, :-4] + c[1] * f[:, 1:-3] + c[2] * f[:, 2:-2]
                     + c[3] * f[:, 3:-1] + c[4] * f[:, 4:]) / hx ** 2
    return lap


def _check_grid_for_dots(grid: PotentialGrid, dots: DotArray, i, j):
    hx, hy = grid.spacing
    max_h = float(np.min(dots.fwhm[[i, j]])) * MAX_SPACING_FWHM_FRACTION
    if max(hx, hy) > max_h * (1 + 1e-12):
        raise ValueError(
            f"grid spacing {max(hx, hy):.3g} nm too coarse, the Laplacian "
            f"needs spacing <= fwhm/8 = {max_h:.3g} nm")
    for k in (i, j):
        reach = COVERAGE_SIGMAS * dots.widths[k]
        cx, cy = dots.positions[k]
        if (cx - reach < grid.xs[0] or cx + reach > grid.xs[-1]
                or cy - reach < grid.ys[0] or cy + reach > grid.ys[-1]):
            raise ValueError(
                f"grid does not cover dot {k}: need the orbital center "
                f"+- {reach:.3g} nm inside the sampled window")


def tunnel_element(i: int, j: int, dots: DotArray,
                   potential_samples: PotentialGrid) -> float:
    """Hopping t_ij between adjacent dots, µeV (negative for plain wells).

    Builds the two Gaussian orbitals on the sampled grid, forms the 2x2
    Hamiltonian of kinetic energy plus the sampled potential, and
    Loewdin-orthogonalizes. Symmetric in i and j by construction.
    """
    _check_indices(dots, i, j)
    if abs(i - j) != 1:
        raise ValueError(f"tunnel elements are defined for adjacent dots, "
                         f"got ({i}, {j})")
    i, j = min(i, j), max(i, j)
    _check_grid_for_dots(potential_samples, dots, i, j)

    hx, hy = potential_samples.spacing
    area = hx * hy
    xg, yg = np.meshgrid(potential_samples.xs, potential_samples.ys,
                         indexing="xy")

    orbitals = []
    for k in (i, j):
        cx, cy = dots.positions[k]
        w = dots.widths[k]
        phi = np.exp(-((xg - cx) ** 2 + (yg - cy) ** 2) / (2.0 * w ** 2))
        phi /= np.sqrt(np.sum(phi ** 2) * area)
        orbitals.append(phi)

    vloc = potential_samples.values
    hphi = [(-KINETIC_SCALE_UEV_NM2 * _laplacian_o4(phi, hx, hy)
             + vloc * phi) for phi in orbitals]

    s_off = float(np.sum(orbitals[0] * orbitals[1]) * area)
    smat = np.array([[1.0, s_off], [s_off, 1.0]])
    hmat = np.empty((2, 2))
    for a in range(2):
        for b in range(2):
            hmat[a, b] = np.sum(orbitals[a] * hphi[b]) * area
    hmat = (hmat + hmat.T) / 2.0

    evals, evecs = np.linalg.eigh(smat)
    if evals[0] <= 1e-12:
        raise ValueError("orbital overlap matrix is singular, the dots "
                         "are too close for distinct orbitals")
    s_inv_half = (evecs * evals ** -0.5) @ evecs.T
    t_matrix = s_inv_half @ hmat @ s_inv_half
    return float(t_matrix[0, 1])
