"""Artificial atoms and molecules on a dot chain.

A nucleus is a pinned attractive charge that offsets the site energies
like a Coulomb center; the hopping t plays the role of the inverse mass
and the dot pitch that of the lattice constant. With eta = t/V0 the
problem maps onto hydrogen-like units with Bohr radius eta * a_QD and
Rydberg V0^2/t, which is what all binding energies are reported in.
"""
from dataclasses import dataclass, field

import numpy as np

from .hubbard import HubbardParams, build_hamiltonian, diagonalize, \
    enumerate_sector
from .layouts import builtin_layout
from .wannier import DotArray, InteractionModel, interaction_matrix

__all__ = [
    "NucleusSpec", "QcScales", "AtomResult", "MoleculeResult",
    "OccupationResult", "nuclear_offsets", "qc_scales", "atom_spectrum",
    "molecule_binding", "bias_offsets", "occupation_maps",
    "default_interaction_model",
]

SINGULARITY_GUARD = 1e-6  # fraction of a_QD


@dataclass(frozen=True)
class NucleusSpec:
    """Attractive center of strength V0 (µeV measured at distance a_QD).

    position may be a bare x coordinate or an (x, y) point in nm. A
    positive soft_core radius replaces 1/r by 1/(r + s), which permits
    on-site placement.
    """

    position: np.ndarray
    strength: float
    soft_core: float = 0.0

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.position, dtype=float))
        if pos.shape == (1,):
            pos = np.array([pos[0], 0.0])
        if pos.shape != (2,):
            raise ValueError(f"position must be scalar x or (x, y), "
                             f"got shape {pos.shape}")
        if not self.strength > 0:
            raise ValueError(f"strength must be > 0, got {self.strength}")
        if self.soft_core < 0:
            raise ValueError(f"soft_core must be >= 0, got {self.soft_core}")
        pos.flags.writeable = False
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class QcScales:
    """Hydrogen-like units of the chain: eta = t/V0, a0 = eta a_QD."""

    eta: float
    bohr: float
    rydberg: float


def qc_scales(t: float, v0: float, a_qd: float = 160.0) -> QcScales:
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    if not v0 > 0:
        raise ValueError(f"v0 must be > 0, got {v0}")
    if not a_qd > 0:
        raise ValueError(f"a_qd must be > 0, got {a_qd}")
    eta = t / v0
    return QcScales(eta=eta, bohr=eta * a_qd, rydberg=v0 * v0 / t)


def nuclear_offsets(dots: DotArray, nuclei) -> np.ndarray:
    """Site offsets eps_i = sum_k V0_k a_QD / |tau_i - R_k|, µeV."""
    eps = np.zeros(dots.count)
    for nuc in nuclei:
        if not isinstance(nuc, NucleusSpec):
            raise TypeError(f"expected NucleusSpec, got {type(nuc).__name__}")
        dist = np.linalg.norm(dots.positions - nuc.position, axis=1)
        if nuc.soft_core == 0.0 \
                and np.any(dist < SINGULARITY_GUARD * dots.spacing):
            raise ValueError(
                "nucleus coincides with a dot center; place it at a "
                "mid-bond position or give it a soft-core radius")
        eps += nuc.strength * dots.spacing / (dist + nuc.soft_core)
    return eps


def bias_offsets(n_sites: int, slope: float, center=None) -> np.ndarray:
    """Linear detuning ramp (i - x_c) * slope over 1-based site index."""
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    if center is None:
        center = (n_sites + 1) / 2.0
    return (np.arange(1, n_sites + 1) - center) * float(slope)


def default_interaction_model() -> InteractionModel:
    """Tiled-gate screening on the shipped finger-gate layout."""
    layout, consts = builtin_layout("finger-gates")
    return InteractionModel("tiled", consts, layout=layout)


def _central_midbond_x(dots: DotArray) -> float:
    # even chains: the true center; odd chains: the mid-bond just right
    # of the central dot (both neighbours are equivalent by symmetry)
    x = dots.positions[:, 0]
    if len(x) < 2:
        raise ValueError("need at least 2 dots to place a mid-bond nucleus")
    i = len(x) // 2 - 1 if len(x) % 2 == 0 else (len(x) - 1) // 2
    return 0.5 * (x[i] + x[i + 1])


def _resolve_interaction(interaction, dots: DotArray) -> np.ndarray:
    if interaction is None:
        interaction = default_interaction_model()
    if isinstance(interaction, InteractionModel):
        return interaction_matrix(dots, interaction)
    vee = np.asarray(interaction, dtype=float)
    if vee.shape != (dots.count, dots.count):
        raise ValueError(f"interaction matrix must be "
                         f"{(dots.count, dots.count)}, got {vee.shape}")
    if not np.allclose(vee, vee.T, atol=1e-9):
        raise ValueError("interaction matrix must be symmetric")
    return vee


@dataclass(frozen=True)
class AtomResult:
    """Single-electron spectra on the v0 grid, energies shaped (G, k)."""

    n_sites: int
    t: float
    a_qd: float
    v0_grid: np.ndarray
    eta: np.ndarray
    rydberg: np.ndarray
    energies: np.ndarray
    binding: np.ndarray
    binding_per_ry: np.ndarray


def atom_spectrum(n_sites: int, t: float, v0_grid, k: int = 3,
                  a_qd: float = 160.0) -> AtomResult:
    """Lowest k one-electron levels for a centered nucleus, per V0.

    Binding energies follow the E_b = E + 2t convention that zeroes the
    open-chain band bottom in the large-N limit.
    """
    v0_grid = np.atleast_1d(np.asarray(v0_grid, dtype=float))
    if not np.all(v0_grid > 0):
        raise ValueError("all v0 values must be > 0")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    dots = DotArray.linear(n_sites, a_qd)
    x_nuc = _central_midbond_x(dots)
    basis = enumerate_sector(n_sites, 1, 0)
    energies = np.empty((len(v0_grid), k))
    for g, v0 in enumerate(v0_grid):
        eps = nuclear_offsets(dots, [NucleusSpec(x_nuc, v0)])
        params = HubbardParams.homogeneous(n_sites, t, u=0.0, eps=eps)
        h = build_hamiltonian(params, basis)
        energies[g] = diagonalize(h, basis, k).energies
    eta = t / v0_grid
    rydberg = v0_grid ** 2 / t
    binding = energies + 2.0 * t
    return AtomResult(n_sites=n_sites, t=t, a_qd=a_qd, v0_grid=v0_grid,
                      eta=eta, rydberg=rydberg, energies=energies,
                      binding=binding,
                      binding_per_ry=binding / rydberg[:, None])


@dataclass(frozen=True)
class MoleculeResult:
    """Dissociation data per internuclear distance R (a_QD units).

    e2 already contains the nucleus-nucleus repulsion V_nn; e1 is the
    one-electron single-nucleus ground energy shared by all R.
    """

    n_sites: int
    t: float
    v0: float
    r_grid: np.ndarray
    e2: np.ndarray
    e1: float
    vnn: np.ndarray
    delta: np.ndarray


def _validated_r_grid(r_grid) -> np.ndarray:
    r_grid = np.atleast_1d(np.asarray(r_grid, dtype=float))
    if not np.all(r_grid > 0):
        raise ValueError("internuclear distances must be > 0")
    if len(r_grid) > 1 and not np.all(np.diff(r_grid) > 0):
        raise ValueError("r_grid must be strictly ascending")
    return r_grid


def _molecule_nuclei(dots: DotArray, v0: float, r_aqd: float,
                     soft_core: float) -> list:
    half = 0.5 * r_aqd * dots.spacing
    center = _central_midbond_x(dots)
    return [NucleusSpec(center - half, v0, soft_core),
            NucleusSpec(center + half, v0, soft_core)]


def _two_electron_states(params: HubbardParams, k: int):
    """Lowest states across the S_z sectors of two electrons.

    (0, 2) mirrors (2, 0) exactly (no magnetic terms), so only (1, 1)
    and (2, 0) are solved; ties keep the S_z = 0 state first.
    """
    found = []
    for n_up, n_down in ((1, 1), (2, 0)):
        basis = enumerate_sector(params.n_sites, n_up, n_down)
        kk = min(k, basis.dimension)
        res = diagonalize(build_hamiltonian(params, basis), basis, kk)
        for m in range(kk):
            found.append((float(res.energies[m]), res.occupations[m]))
    found.sort(key=lambda pair: pair[0])
    return found[:k]


def molecule_binding(n_sites: int, t: float, v0: float, r_grid,
                     interaction=None, a_qd: float = 160.0,
                     fwhm: float = 45.0,
                     soft_core: float = 0.0) -> MoleculeResult:
    """Born-Oppenheimer dissociation curve of the two-nucleus chain.

    interaction picks the electron-electron matrix: None for the default
    tiled-gate screening, an InteractionModel, or a precomputed (N, N)
    matrix whose diagonal carries the on-site U.
    """
    r_grid = _validated_r_grid(r_grid)
    dots = DotArray.linear(n_sites, a_qd, fwhm)
    vee = _resolve_interaction(interaction, dots)
    base = HubbardParams.from_interaction_matrix(t, vee)

    e1 = float(atom_spectrum(n_sites, t, [v0], k=1, a_qd=a_qd)
               .energies[0, 0])
    e2 = np.empty(len(r_grid))
    for g, r in enumerate(r_grid):
        nuclei = _molecule_nuclei(dots, v0, r, soft_core)
        params = base.with_offsets(nuclear_offsets(dots, nuclei))
        e2[g] = _two_electron_states(params, 1)[0][0] + v0 / r
    vnn = v0 / r_grid
    return MoleculeResult(n_sites=n_sites, t=t, v0=v0, r_grid=r_grid,
                          e2=e2, e1=e1, vnn=vnn, delta=e2 - 2.0 * e1)


@dataclass(frozen=True)
class OccupationResult:
    """Ground and first-excited <n_i> tables on the (R, site) grid."""

    n_sites: int
    r_grid: np.ndarray
    ground: np.ndarray
    excited: np.ndarray
    absdiff: np.ndarray


# states this close to the ground level count as its spin manifold
GROUND_MANIFOLD_UEV = 0.5


def occupation_maps(n_sites: int, t: float, v0: float, r_grid,
                    interaction=None, bias_slope: float = 0.0,
                    a_qd: float = 160.0, fwhm: float = 45.0,
                    soft_core: float = 0.0) -> OccupationResult:
    """Per-site occupations of the ground and first excited states.

    Near dissociation the singlet-triplet pair is degenerate far below
    a µeV and carries the same density, so the excited table holds the
    first state resolved above the ground manifold (the charge
    excitation a resonant drive can address), not the spin partner.
    """
    r_grid = _validated_r_grid(r_grid)
    dots = DotArray.linear(n_sites, a_qd, fwhm)
    vee = _resolve_interaction(interaction, dots)
    base = HubbardParams.from_interaction_matrix(t, vee)
    bias = bias_offsets(n_sites, bias_slope)

    ground = np.empty((len(r_grid), n_sites))
    excited = np.empty((len(r_grid), n_sites))
    for g, r in enumerate(r_grid):
        nuclei = _molecule_nuclei(dots, v0, r, soft_core)
        eps = nuclear_offsets(dots, nuclei) + bias
        params = base.with_offsets(eps)
        for k in (8, 24):
            states = _two_electron_states(params, k)
            floor = states[0][0] + GROUND_MANIFOLD_UEV
            lifted = [occ for e, occ in states if e > floor]
            if lifted:
                break
        else:
            raise RuntimeError(f"no state above the ground manifold "
                               f"among the {k} lowest at R = {r}")
        ground[g] = states[0][1]
        excited[g] = lifted[0]
    return OccupationResult(n_sites=n_sites, r_grid=r_grid, ground=ground,
                            excited=excited,
                            absdiff=np.abs(ground - excited))
