"""Extended Fermi-Hubbard model on a finite chain of dots.

The Hamiltonian, in µeV,

    H = sum_i U_i n_i^ n_iv  +  sum_{i != j} V_ij n_i n_j
        - sum_i eps_i n_i    -  sum_<ij>,sigma t_ij (c+_is c_js + h.c.)

acts in a fixed (n_up, n_down) sector. Note the interaction sum runs
over ORDERED pairs: each unordered pair {i, j} contributes 2 V_ij n_i
n_j, exactly as written, with the on-site cost carried separately by U.

Basis states are pairs of occupation bitmasks (up_bits, down_bits),
bit i = site i occupied, listed in ascending lexicographic order.
Fermionic order is species-major (all up modes, then all down modes), so
a same-spin hop between sites i < j picks up the parity of the occupied
same-spin sites strictly between i and j; cross-spin terms never occur.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

# dense solves are faster and exact below this dimension
DENSE_DIMENSION_LIMIT = 4000


def _as_hops(t, n_sites: int) -> tuple:
    """Normalize the hopping input to ((i, j, t_ij), ...) with i < j."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        t = np.full(n_sites - 1, float(t))
    if t.ndim == 1:
        if len(t) != n_sites - 1:
            raise ValueError(f"nearest-neighbour t must have length "
                             f"{n_sites - 1}, got {len(t)}")
        return tuple((i, i + 1, float(t[i])) for i in range(n_sites - 1))
    if t.shape != (n_sites, n_sites):
        raise ValueError(f"t must be a length-{n_sites - 1} list or an "
                         f"({n_sites}, {n_sites}) matrix, got {t.shape}")
    if not np.array_equal(t, t.T):
        raise ValueError("hopping matrix must be symmetric")
    if np.any(np.diag(t) != 0):
        raise ValueError("hopping matrix diagonal must be zero")
    return tuple((i, j, float(t[i, j]))
                 for i in range(n_sites) for j in range(i + 1, n_sites)
                 if t[i, j] != 0.0)


@dataclass(frozen=True)
class HubbardParams:
    """Parameter set of the chain Hamiltonian. All energies in µeV.

    t : nearest-neighbour couplings (length N-1), or a full symmetric
        hopping matrix for longer-range terms
    u : on-site costs U_i (length N)
    v : symmetric inter-site matrix V_ij with zero diagonal
    eps : local offsets eps_i (length N), default all zero
    """

    n_sites: int
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    eps: np.ndarray = None
    hops: tuple = None

    def __post_init__(self) -> None:
        n = self.n_sites
        if n < 1:
            raise ValueError(f"n_sites must be >= 1, got {n}")
        object.__setattr__(self, "hops", _as_hops(self.t, n))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        u = np.broadcast_to(np.asarray(self.u, dtype=float), (n,)).copy()
        object.__setattr__(self, "u", u)
        v = np.asarray(self.v, dtype=float)
        if v.shape != (n, n):
            raise ValueError(f"v must be ({n}, {n}), got {v.shape}")
        if not np.allclose(v, v.T, rtol=0, atol=1e-12):
            raise ValueError("v must be symmetric")
        if np.any(np.diag(v) != 0):
            raise ValueError("v diagonal must be zero; on-site cost goes in u")
        object.__setattr__(self, "v", v)
        eps = np.zeros(n) if self.eps is None else \
            np.broadcast_to(np.asarray(self.eps, dtype=float), (n,)).copy()
        object.__setattr__(self, "eps", eps)
        for arr in (self.u, self.v, eps):
            arr.flags.writeable = False

    @classmethod
    def homogeneous(cls, n_sites: int, t: float, u: float,
                    v=None, eps=None) -> "HubbardParams":
        """Uniform chain: equal nearest-neighbour t and equal U."""
        return cls(n_sites=n_sites,
                   t=np.full(n_sites - 1, float(t)),
                   u=np.full(n_sites, float(u)),
                   v=np.zeros((n_sites, n_sites)) if v is None else v,
                   eps=eps)

    @classmethod
    def from_interaction_matrix(cls, t, vee, eps=None) -> "HubbardParams":
        """Split a dense interaction matrix into U (diagonal) and V."""
        vee = np.asarray(vee, dtype=float)
        n = len(vee)
        v = vee.copy()
        np.fill_diagonal(v, 0.0)
        return cls(n_sites=n, t=t, u=np.diag(vee).copy(), v=v, eps=eps)

    def with_offsets(self, eps) -> "HubbardParams":
        return HubbardParams(self.n_sites, self.t, self.u, self.v, eps)


def _masks(n_sites: int, count: int) -> list:
    return sorted(sum(1 << i for i in c)
                  for c in combinations(range(n_sites), count))


def _occupancy_rows(masks, n_sites: int) -> np.ndarray:
    rows = np.zeros((len(masks), n_sites), dtype=np.uint8)
    for a, m in enumerate(masks):
        for i in range(n_sites):
            if (m >> i) & 1:
                rows[a, i] = 1
    return rows


class SectorBasis:
    """Occupation basis of a fixed (n_up, n_down) particle sector.

    states : tuple of (up_bits, down_bits), ascending lexicographic
    dimension : C(N, n_up) * C(N, n_down)
    """

    def __init__(self, n_sites: int, n_up: int, n_down: int):
        if n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {n_sites}")
        if not (0 <= n_up <= n_sites and 0 <= n_down <= n_sites):
            raise ValueError(f"electron counts ({n_up}, {n_down}) out of "
                             f"range for {n_sites} sites")
        self.n_sites = n_sites
        self.n_up = n_up
        self.n_down = n_down
        ups = _masks(n_sites, n_up)
        downs = _masks(n_sites, n_down)
        self.states = tuple((u, d) for u in ups for d in downs)
        self.dimension = len(self.states)
        self.index = {s: a for a, s in enumerate(self.states)}
        up_rows = _occupancy_rows(ups, n_sites)
        down_rows = _occupancy_rows(downs, n_sites)
        self.up_occ = np.repeat(up_rows, len(downs), axis=0)
        self.down_occ = np.tile(down_rows, (len(ups), 1))
        self.up_occ.flags.writeable = False
        self.down_occ.flags.writeable = False

    @property
    def label(self) -> str:
        return f"({self.n_up},{self.n_down})"

    def __repr__(self) -> str:
        return (f"SectorBasis(n_sites={self.n_sites}, sector={self.label}, "
                f"dimension={self.dimension})")


def enumerate_sector(n_sites: int, n_up: int, n_down: int) -> SectorBasis:
    """Complete ordered occupation basis of the (n_up, n_down) sector."""
    return SectorBasis(n_sites, n_up, n_down)


def build_hamiltonian(params: HubbardParams, basis: SectorBasis) -> sp.csr_matrix:
    """Assemble the sector Hamiltonian as a real symmetric sparse matrix."""
    if params.n_sites != basis.n_sites:
        raise ValueError(f"params have {params.n_sites} sites but basis has "
                         f"{basis.n_sites}")
    n = params.n_sites
    dim = basis.dimension
    up = basis.up_occ.astype(float)
    down = basis.down_occ.astype(float)
    n_tot = up + down
    diag = (up * down) @ params.u
    diag += np.einsum("si,ij,sj->s", n_tot, params.v, n_tot)
    diag -= n_tot @ params.eps

    rows = list(range(dim))
    cols = list(range(dim))
    vals = list(diag)
    index = basis.index
    for a, (ubits, dbits) in enumerate(basis.states):
        for i, j, t in params.hops:
            if t == 0.0:
                continue
            bit_i, bit_j = 1 << i, 1 << j
            between = ((1 << j) - 1) ^ ((1 << (i + 1)) - 1)
            for spin_up in (True, False):
                mask = ubits if spin_up else dbits
                occ_i = bool(mask & bit_i)
                if occ_i == bool(mask & bit_j):
                    continue  # hop needs exactly one occupied endpoint
                new = mask ^ bit_i ^ bit_j
                state = (new, dbits) if spin_up else (ubits, new)
                sign = -1.0 if (mask & between).bit_count() & 1 else 1.0
                rows.append(index[state])
                cols.append(a)
                vals.append(-t * sign)
    h = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim))
    return h.tocsr()


@dataclass(frozen=True)
class SpectrumResult:
    """Lowest eigenpairs of one sector.

    energies : ascending, µeV
    occupations : (k, N) matrix of per-site <n_i> per eigenstate
    sector : "(n_up,n_down)" label
    vectors : (dimension, k) eigenvector columns, sign-canonicalized
    """

    energies: np.ndarray
    occupations: np.ndarray
    sector: str
    vectors: np.ndarray


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    # first amplitude above noise made positive, for reproducible output
    vecs = vecs.copy()
    for col in range(vecs.shape[1]):
        nz = np.nonzero(np.abs(vecs[:, col]) > 1e-12)[0]
        if len(nz) and vecs[nz[0], col] < 0:
            vecs[:, col] = -vecs[:, col]
    return vecs


def diagonalize(h: sp.spmatrix, basis: SectorBasis, k: int,
                method: str = "auto") -> SpectrumResult:
    """Lowest k eigenpairs of a sector Hamiltonian.

    Dense below dimension 4000 (exact LAPACK), Lanczos above. Each
    reported pair is verified to satisfy |H v - E v| <= 1e-8 |H|.
    """
    dim = basis.dimension
    if h.shape != (dim, dim):
        raise ValueError(f"matrix shape {h.shape} does not match the "
                         f"dimension-{dim} basis")
    if not 1 <= k <= dim:
        raise ValueError(f"k must be in [1, {dim}], got {k}")
    if method == "auto":
        method = "dense" if (dim < DENSE_DIMENSION_LIMIT or k > dim - 2) \
            else "iterative"
    if method == "dense":
        dense = np.asarray(h.todense()) if sp.issparse(h) else np.asarray(h)
        if k < dim:
            vals, vecs = eigh(dense, subset_by_index=(0, k - 1))
        else:
            vals, vecs = eigh(dense)
    elif method == "iterative":
        if k > dim - 2:
            raise ValueError(f"iterative solver needs k <= dimension-2 "
                             f"({dim - 2}), got {k}")
        v0 = np.full(dim, 1.0 / np.sqrt(dim))  # fixed start for determinism
        try:
            vals, vecs = eigsh(h.tocsc() if sp.issparse(h) else h, k=k,
                               which="SA", v0=v0)
        except ArpackNoConvergence as err:
            best = getattr(err, "eigenvalues", np.array([]))
            raise RuntimeError(f"Lanczos did not converge; "
                               f"{len(best)}/{k} pairs found") from err
    else:
        raise ValueError(f"unknown method {method!r}")

    order = np.argsort(vals)
    vals = np.asarray(vals)[order][:k]
    vecs = _canonical_signs(np.asarray(vecs)[:, order][:, :k])
    hnorm = float(np.abs(h).sum(axis=1).max()) if dim > 1 else float(abs(h[0, 0]))
    tol = 1e-8 * max(hnorm, 1e-300)
    for e, v in zip(vals, vecs.T):
        resid = float(np.linalg.norm(h @ v - e * v))
        if resid > tol:
            raise RuntimeError(f"eigenpair residual {resid:.3e} exceeds "
                               f"{tol:.3e} (|H| = {hnorm:.3e})")
    occ = np.vstack([occupations(v, basis) for v in vecs.T]) if k else \
        np.zeros((0, basis.n_sites))
    return SpectrumResult(energies=vals, occupations=occ,
                          sector=basis.label, vectors=vecs)


def occupations(vector: np.ndarray, basis: SectorBasis) -> np.ndarray:
    """Per-site <n_i> of a normalized sector vector."""
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (basis.dimension,):
        raise ValueError(f"vector length {vector.shape} does not match "
                         f"dimension {basis.dimension}")
    norm = np.linalg.norm(vector)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"vector norm {norm} deviates from 1 by more than 1e-6")
    weight = vector ** 2
    return weight @ (basis.up_occ + basis.down_occ).astype(float)


def dump_hamiltonian(h: sp.spmatrix, path) -> None:
    """Write the matrix in "row col value" coordinate text form."""
    coo = h.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17e}\n")
