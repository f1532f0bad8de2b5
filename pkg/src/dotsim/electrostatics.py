"""Electrostatics of electrons under a patterned metallic gate layer.

Units are fixed throughout the package: lengths in nm, energies in µeV,
charges in units of the elementary charge e. The Coulomb prefactor
``coulomb_scale`` is k0*e^2/eps_r expressed in µeV*nm, so the bare pair
interaction is simply ``coulomb_scale / distance``.

Two screening models are provided for electrons a distance ``depth_d``
below a metal layer at z = 0:

* an infinite ideal plane, handled in closed form with a single image
  charge per electron, and
* an arbitrary partial gate coverage, handled by tiling the metal into
  point-like patches that are forced onto a common potential while
  conserving the total induced charge (one dense linear solve).

The tiled pair interaction is referenced so that it vanishes at large
separation: it keeps the part of the tile-charge energy that couples the
two electrons and drops each electron's separation-independent
self-energy with its own induced charge, which makes the result directly
comparable with the bare and image-charge forms. By default the finite
simulated window exchanges charge with the (unsimulated) far gate metal,
as real voltage-biased gates do; ``reference="isolated"`` instead keeps
the window strictly neutral, which adds the window charging energy
q1*q2/C and is mostly useful for studying that finite-size effect.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.spatial.distance import cdist

# k0*e^2 in vacuum, rounded as 1.44 eV*nm = 1.44e6 ueV*nm
VACUUM_COULOMB_UEV_NM = 1.44e6
GAAS_PERMITTIVITY = 12.9
DEFAULT_DEPTH_NM = 90.0
DEFAULT_TILE_NM = 20.0

# dense (m+1)x(m+1) solves get slow and memory-hungry past this
MAX_TILES = 20_000


@dataclass(frozen=True)
class PhysicalConstants:
    """Material and geometry constants for the screening problem.

    coulomb_scale : k0*e^2/eps_r in µeV*nm (> 0)
    rel_permittivity : relative permittivity (>= 1)
    depth_d : depth of the electron plane below the gate metal, nm (> 0)
    """

    coulomb_scale: float = VACUUM_COULOMB_UEV_NM / GAAS_PERMITTIVITY
    rel_permittivity: float = GAAS_PERMITTIVITY
    depth_d: float = DEFAULT_DEPTH_NM

    def __post_init__(self) -> None:
        if not self.coulomb_scale > 0:
            raise ValueError(f"coulomb_scale must be > 0, got {self.coulomb_scale}")
        if not self.rel_permittivity >= 1:
            raise ValueError(
                f"rel_permittivity must be >= 1, got {self.rel_permittivity}"
            )
        if not self.depth_d > 0:
            raise ValueError(f"depth_d must be > 0, got {self.depth_d}")

    @classmethod
    def for_permittivity(cls, rel_permittivity: float = GAAS_PERMITTIVITY,
                         depth_d: float = DEFAULT_DEPTH_NM) -> "PhysicalConstants":
        return cls(VACUUM_COULOMB_UEV_NM / rel_permittivity,
                   rel_permittivity, depth_d)


def _segments_cross(p, q, r, s) -> bool:
    # proper intersection test via orientation signs
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return int(v > 0) - int(v < 0)

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _check_simple(poly: np.ndarray) -> None:
    k = len(poly)
    for a in range(k):
        pa, qa = poly[a], poly[(a + 1) % k]
        for b in range(a + 2, k):
            if a == 0 and b == k - 1:
                continue  # shares the closing vertex
            if _segments_cross(pa, qa, poly[b], poly[(b + 1) % k]):
                raise ValueError(f"polygon is self-intersecting near edge {a}")


@dataclass(frozen=True)
class GateLayout:
    """Metal gate pattern: simple polygons inside a rectangular window.

    polygons : list of (k, 2) float arrays, vertices in nm (z = 0 plane)
    bounding_box : ((x0, y0), (x1, y1)) simulated window, nm

    Overlapping or touching polygons are fine; tiling merges them.
    """

    polygons: tuple
    bounding_box: tuple

    def __post_init__(self) -> None:
        (x0, y0), (x1, y1) = self.bounding_box
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate bounding_box {self.bounding_box}")
        polys = tuple(np.asarray(p, dtype=float) for p in self.polygons)
        object.__setattr__(self, "polygons", polys)
        object.__setattr__(self, "bounding_box", ((float(x0), float(y0)),
                                                  (float(x1), float(y1))))
        for i, p in enumerate(polys):
            if p.ndim != 2 or p.shape[1] != 2 or len(p) < 3:
                raise ValueError(f"polygon {i} is not a list of >= 3 2D vertices")
            if (p[:, 0].min() < x0 - 1e-9 or p[:, 0].max() > x1 + 1e-9
                    or p[:, 1].min() < y0 - 1e-9 or p[:, 1].max() > y1 + 1e-9):
                raise ValueError(f"polygon {i} extends outside the bounding box")
            _check_simple(p)

    @property
    def center(self) -> np.ndarray:
        (x0, y0), (x1, y1) = self.bounding_box
        return np.array([(x0 + x1) / 2, (y0 + y1) / 2])

    def translated(self, dx: float, dy: float) -> "GateLayout":
        (x0, y0), (x1, y1) = self.bounding_box
        return GateLayout(tuple(p + [dx, dy] for p in self.polygons),
                          ((x0 + dx, y0 + dy), (x1 + dx, y1 + dy)))

    def to_json_dict(self, consts: PhysicalConstants) -> dict:
        return {"polygons": [p.tolist() for p in self.polygons],
                "bounding_box": [list(self.bounding_box[0]),
                                 list(self.bounding_box[1])],
                "depth_nm": consts.depth_d,
                "rel_permittivity": consts.rel_permittivity}

    @staticmethod
    def from_json_dict(doc: dict) -> tuple["GateLayout", "PhysicalConstants"]:
        known = {"polygons", "bounding_box", "depth_nm", "rel_permittivity"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown layout keys {sorted(unknown)}")
        for key in ("polygons", "bounding_box"):
            if key not in doc:
                raise ValueError(f"layout document is missing {key!r}")
        (x0, y0), (x1, y1) = doc["bounding_box"]
        layout = GateLayout(tuple(np.asarray(p, float) for p in doc["polygons"]),
                            ((x0, y0), (x1, y1)))
        consts = PhysicalConstants.for_permittivity(
            float(doc.get("rel_permittivity", GAAS_PERMITTIVITY)),
            float(doc.get("depth_nm", DEFAULT_DEPTH_NM)))
        return layout, consts


def load_gate_layout(path) -> tuple[GateLayout, PhysicalConstants]:
    with open(path, encoding="utf-8") as fh:
        return GateLayout.from_json_dict(json.load(fh))


def save_gate_layout(path, layout: GateLayout, consts: PhysicalConstants) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(layout.to_json_dict(consts), fh, indent=1)
        fh.write("\n")


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule containment for an (n, 2) array of points."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    xv, yv = poly[:, 0], poly[:, 1]
    for i in range(len(poly)):
        x1, y1 = xv[i - 1], yv[i - 1]
        x2, y2 = xv[i], yv[i]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xs)
    return inside


@dataclass(frozen=True)
class TileSet:
    """Square-grid discretization of the metal into point tiles.

    centers : (m, 3) tile centers on the z = 0 surface plane, nm
    areas : (m,) tile areas, nm^2
    tile_size : grid pitch, nm
    """

    centers: np.ndarray
    areas: np.ndarray
    tile_size: float

    def __post_init__(self) -> None:
        centers = np.asarray(self.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] != 3:
            raise ValueError(f"centers must be (m, 3), got {centers.shape}")
        areas = np.asarray(self.areas, dtype=float)
        if len(areas) != len(centers):
            raise ValueError("areas and centers lengths differ")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "areas", areas)

    @property
    def count(self) -> int:
        return len(self.centers)


def tile_layout(layout: GateLayout, tile_size: float = DEFAULT_TILE_NM) -> TileSet:
    """Lay a square grid over the bounding box and keep centers on metal.

    Tiles are ordered row-major, y first then x. A center covered by
    several polygons is kept once.
    """
    (x0, y0), (x1, y1) = layout.bounding_box
    if not tile_size > 0:
        raise ValueError(f"tile_size must be > 0, got {tile_size}")
    if tile_size >= min(x1 - x0, y1 - y0):
        raise ValueError(f"tile_size {tile_size} does not fit in the "
                         f"bounding box {layout.bounding_box}")
    xs = np.arange(x0 + tile_size / 2, x1, tile_size)
    ys = np.arange(y0 + tile_size / 2, y1, tile_size)
    X, Y = np.meshgrid(xs, ys, indexing="xy")  # rows sweep y, columns x
    grid = np.column_stack([X.ravel(), Y.ravel()])
    keep = np.zeros(len(grid), dtype=bool)
    for poly in layout.polygons:
        keep |= points_in_polygon(grid, poly)
    kept = grid[keep]
    if len(kept) == 0:
        raise ValueError("no tile centers fall on metal; layout/tile_size "
                         "produce an empty tiling")
    if len(kept) > MAX_TILES:
        raise ValueError(f"{len(kept)} tiles exceed the dense-solver cap "
                         f"of {MAX_TILES}; increase tile_size")
    centers = np.column_stack([kept, np.zeros(len(kept))])
    areas = np.full(len(kept), tile_size ** 2)
    return TileSet(centers, areas, float(tile_size))


@dataclass(frozen=True)
class TileChargeSolution:
    """Induced tile charges for a given electron configuration.

    charges : (m,) induced charge per tile, units of e (sums to 0)
    common_potential : potential of the metal, µeV per unit charge
    """

    charges: np.ndarray
    common_potential: float


def _tile_coulomb_matrix(centers: np.ndarray, cs: float) -> np.ndarray:
    d = cdist(centers, centers)
    np.fill_diagonal(d, np.inf)  # a tile does not act on itself
    if np.any(d < 1e-9):
        raise ValueError("duplicate tile centers make the system singular")
    m = cs / d
    np.fill_diagonal(m, 0.0)
    return m


def _as_electron_array(electrons) -> np.ndarray:
    r = np.atleast_2d(np.asarray(electrons, dtype=float))
    if r.size and (r.ndim != 2 or r.shape[1] != 3):
        raise ValueError(f"electrons must be 3D points, got shape {r.shape}")
    if r.size and np.any(r[:, 2] >= 0):
        raise ValueError("electrons must lie below the z = 0 surface plane")
    return r


def _electron_loads(centers: np.ndarray, electrons: np.ndarray,
                    consts: PhysicalConstants) -> np.ndarray:
    """(m, k) matrix of coulomb_scale / |s_i - r_k|."""
    d = cdist(centers, electrons)
    if np.any(d < 1e-9):
        raise ValueError("an electron coincides with a tile center")
    return consts.coulomb_scale / d


def solve_tile_charges(tiles: TileSet, electrons,
                       consts: PhysicalConstants) -> TileChargeSolution:
    """Solve the tiled-conductor response to point electrons of charge -e.

    Every tile is forced onto one (unknown) common potential and the
    induced charges sum to zero, giving a dense (m+1)x(m+1) system for
    (lambda_1..lambda_m, V_common):

        sum_{j != i} cs*lambda_j/|s_j - s_i| - V = sum_k cs/|s_i - r_k|
        sum_i lambda_i = 0

    The right-hand side cancels the potential the (negative) electrons
    produce at tile i; a tile's own charge does not act on itself, so
    accuracy at short range is controlled by tile_size.
    """
    m = tiles.count
    if m < 2:
        raise ValueError(f"need at least 2 tiles, got {m}")
    if m > MAX_TILES:
        raise ValueError(f"{m} tiles exceed the cap of {MAX_TILES}")
    electrons = _as_electron_array(electrons)
    a = np.zeros((m + 1, m + 1))
    a[:m, :m] = _tile_coulomb_matrix(tiles.centers, consts.coulomb_scale)
    a[:m, m] = -1.0
    a[m, :m] = 1.0
    b = np.zeros(m + 1)
    if len(electrons):
        b[:m] = _electron_loads(tiles.centers, electrons, consts).sum(axis=1)
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as err:
        raise ValueError(f"tile system is singular ({err}); check for "
                         "duplicate tile centers") from err
    return TileChargeSolution(charges=x[:m], common_potential=float(x[m]))


class TiledScreening:
    """Factorized tile response for repeated evaluations on one layout.

    Keeps the LU decomposition of the tile-tile Coulomb matrix M so each
    extra electron position costs one triangular solve. The charge
    conserving solution follows from the grounded one by a rank-one
    update along M^-1 1, with the common potential fixed by neutrality.
    """

    def __init__(self, tiles: TileSet, consts: PhysicalConstants):
        if tiles.count < 2:
            raise ValueError(f"need at least 2 tiles, got {tiles.count}")
        if tiles.count > MAX_TILES:
            raise ValueError(f"{tiles.count} tiles exceed the cap of {MAX_TILES}")
        self.tiles = tiles
        self.consts = consts
        m = _tile_coulomb_matrix(tiles.centers, consts.coulomb_scale)
        self._lu = lu_factor(m, overwrite_a=True)
        self._unit = lu_solve(self._lu, np.ones(tiles.count))  # M^-1 1
        self._capacity = float(self._unit.sum())               # 1^T M^-1 1

    @property
    def charging_energy(self) -> float:
        """e^2/C of the isolated tiled window, µeV."""
        return 1.0 / self._capacity

    def loads(self, electrons) -> np.ndarray:
        return _electron_loads(self.tiles.centers,
                               _as_electron_array(electrons), self.consts)

    def solve(self, electrons) -> TileChargeSolution:
        """Charge-conserving solution, identical to solve_tile_charges."""
        b = self.loads(electrons).sum(axis=1)
        lam_g = lu_solve(self._lu, b)
        v = -float(lam_g.sum()) / self._capacity
        return TileChargeSolution(charges=lam_g + v * self._unit,
                                  common_potential=v)

    def cross_energy(self, load1: np.ndarray, load2: np.ndarray,
                     reference: str = "reservoir") -> float:
        """Induced-charge part of the pair interaction, µeV.

        load1/load2 are per-tile Coulomb load vectors (possibly
        quadrature aggregates) of the two charge densities.
        """
        x2 = lu_solve(self._lu, load2)
        cross = -float(load1 @ x2)
        if reference == "isolated":
            q1 = float(self._unit @ load1)
            q2 = float(self._unit @ load2)
            cross += q1 * q2 / self._capacity
        elif reference != "reservoir":
            raise ValueError(f"unknown reference {reference!r}")
        return cross

    def cross_energy_matrix(self, loads: np.ndarray,
                            reference: str = "reservoir") -> np.ndarray:
        """All pairwise cross energies of the load columns at once.

        loads has shape (tiles, k); the result is the symmetric (k, k)
        matrix whose [a, b] entry equals cross_energy(loads[:, a],
        loads[:, b], reference). One factorized solve per column.
        """
        loads = np.asarray(loads, dtype=float)
        if loads.ndim != 2 or loads.shape[0] != self.tiles.count:
            raise ValueError(f"loads must be ({self.tiles.count}, k), "
                             f"got {loads.shape}")
        x = lu_solve(self._lu, loads)
        cross = -(loads.T @ x)
        if reference == "isolated":
            q = self._unit @ loads
            cross += np.outer(q, q) / self._capacity
        elif reference != "reservoir":
            raise ValueError(f"unknown reference {reference!r}")
        return (cross + cross.T) / 2.0

    def pair_potential(self, r1, r2, reference: str = "reservoir") -> float:
        b = self.loads([r1, r2])
        return (coulomb_bare(r1, r2, self.consts)
                + self.cross_energy(b[:, 0], b[:, 1], reference))


def coulomb_bare(r1, r2, consts: PhysicalConstants) -> float:
    """Unscreened point Coulomb energy, µeV."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    d = float(np.linalg.norm(r1 - r2))
    if d < 1e-12:
        raise ValueError("coincident points have no finite Coulomb energy")
    return consts.coulomb_scale / d


def _image_factor_rho(rho, depth: float):
    """Plane screening factor 1 - rho/sqrt(rho^2 + 4 d^2), vectorized."""
    rho = np.asarray(rho, dtype=float)
    return 1.0 - rho / np.hypot(rho, 2.0 * depth)


def _lateral_separation(r1, r2, depth: float) -> float:
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if abs(r1[2] - r2[2]) > 1e-9:
        raise ValueError(f"electrons at different depths ({r1[2]} vs {r2[2]}); "
                         "the image form assumes one common plane")
    if abs(r1[2] + depth) > 1e-6:
        raise ValueError(f"electrons must sit at z = {-depth} nm, got {r1[2]}")
    return float(np.hypot(r1[0] - r2[0], r1[1] - r2[1]))


def image_screening_factor(r1, r2, depth: float) -> float:
    """Suppression factor of an ideal infinite plane a height ``depth`` above.

    Equals 1 - rho/sqrt(rho^2 + 4*depth^2) with rho the lateral
    separation; 1 at rho = 0, decreasing toward 0, asymptotically
    2*depth^2/rho^2.
    """
    if not depth > 0:
        raise ValueError(f"depth must be > 0, got {depth}")
    return float(_image_factor_rho(_lateral_separation(r1, r2, depth), depth))


def screened_potential_image(r1, r2, consts: PhysicalConstants) -> float:
    """Pair energy below an infinite grounded plane (image charges), µeV.

    Both electrons must sit on the common plane z = -depth_d; the
    lateral separation sets the suppression.
    """
    rho = _lateral_separation(r1, r2, consts.depth_d)
    if rho < 1e-12:
        raise ValueError("coincident electrons")
    return float(_image_factor_rho(rho, consts.depth_d)) * consts.coulomb_scale / rho


def screened_potential_tiled(tiles: TileSet, r1, r2, consts: PhysicalConstants,
                             reference: str = "reservoir",
                             system: TiledScreening | None = None) -> float:
    """Pair interaction energy under the tiled gate metal, µeV.

    This is the interaction part of the tile-charge energy: the full
    two-electron solve minus each electron's separation-independent
    self-energy with its own induced charge, so the result decays to
    zero at large separation and is directly comparable with
    coulomb_bare and screened_potential_image. Symmetric in r1, r2.
    """
    if system is None:
        system = TiledScreening(tiles, consts)
    return system.pair_potential(r1, r2, reference)


def screening_curves(layout: GateLayout, consts: PhysicalConstants,
                     rhos, tile_size: float = DEFAULT_TILE_NM,
                     reference: str = "reservoir") -> np.ndarray:
    """Bare/image/tiled pair potentials vs separation, one solve per layout.

    Electron 1 is anchored at the window center; electron 2 is placed a
    distance rho along +x. Returns rows (rho, v_bare, v_image, v_tiled).
    """
    rhos = np.asarray(rhos, dtype=float)
    system = TiledScreening(tile_layout(layout, tile_size), consts)
    cx, cy = layout.center
    z = -consts.depth_d
    out = np.empty((len(rhos), 4))
    for n, rho in enumerate(rhos):
        r1 = np.array([cx, cy, z])
        r2 = np.array([cx + rho, cy, z])
        out[n] = (rho, coulomb_bare(r1, r2, consts),
                  screened_potential_image(r1, r2, consts),
                  system.pair_potential(r1, r2, reference))
    return out
