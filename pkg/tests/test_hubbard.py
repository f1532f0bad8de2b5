"""Unit tests for sector bases and Hamiltonian construction.

The oracle here is a full-space (4^N dimensional) Jordan-Wigner kron
construction built independently in this file, restricted to each
sector. Mode order: all spin-up sites first, then all spin-down sites.
"""
from functools import reduce

import numpy as np
import pytest
import scipy.sparse as sp

from dotsim.hubbard import (HubbardParams, build_hamiltonian, diagonalize,
                            enumerate_sector, occupations)

I2 = np.eye(2)
SZ = np.diag([1.0, -1.0])
ANNIHILATE = np.array([[0.0, 1.0], [0.0, 0.0]])  # |occupied> -> |empty>


def mode_annihilators(n_modes):
    ops = []
    for k in range(n_modes):
        factors = [SZ] * k + [ANNIHILATE] + [I2] * (n_modes - k - 1)
        ops.append(reduce(np.kron, factors))
    return ops


def full_space_hamiltonian(n_sites, hops, u, v, eps):
    """Dense 4^N Hamiltonian from explicit ladder operators."""
    c = mode_annihilators(2 * n_sites)
    num = [ci.T @ ci for ci in c]
    n_tot = [num[i] + num[n_sites + i] for i in range(n_sites)]
    dim = 4 ** n_sites
    h = np.zeros((dim, dim))
    for i in range(n_sites):
        h += u[i] * (num[i] @ num[n_sites + i])
        h -= eps[i] * n_tot[i]
    for i in range(n_sites):
        for j in range(n_sites):
            if i != j:
                h += v[i, j] * (n_tot[i] @ n_tot[j])
    for i, j, t in hops:
        for s in (0, n_sites):
            hop = c[s + i].T @ c[s + j]
            h -= t * (hop + hop.T)
    return h


def full_space_index(state, n_sites):
    """Index of a (up_bits, down_bits) state in the kron product basis."""
    u, d = state
    idx = 0
    for i in range(n_sites):
        if (u >> i) & 1:
            idx |= 1 << (2 * n_sites - 1 - i)
        if (d >> i) & 1:
            idx |= 1 << (n_sites - 1 - i)
    return idx


def random_params(n_sites, rng):
    t = rng.uniform(10, 40, n_sites - 1)
    u = rng.uniform(100, 300, n_sites)
    v = rng.uniform(10, 80, (n_sites, n_sites))
    v = (v + v.T) / 2
    np.fill_diagonal(v, 0.0)
    eps = rng.uniform(-50, 50, n_sites)
    return HubbardParams(n_sites=n_sites, t=t, u=u, v=v, eps=eps)


class TestEnumerateSector:
    @pytest.mark.parametrize("n, up, down, dim", [
        (2, 1, 0, 2), (10, 1, 1, 100), (6, 3, 3, 400), (4, 0, 0, 1),
    ])
    def test_dimension(self, n, up, down, dim):
        basis = enumerate_sector(n, up, down)
        assert basis.dimension == dim
        assert len(basis.states) == dim

    def test_ordering_and_uniqueness(self):
        basis = enumerate_sector(5, 2, 1)
        states = list(basis.states)
        assert states == sorted(states)
        assert len(set(states)) == len(states)
        for u, d in states:
            assert bin(u).count("1") == 2 and bin(d).count("1") == 1

    @pytest.mark.parametrize("up, down", [(-1, 0), (0, 4), (5, 0)])
    def test_out_of_range(self, up, down):
        with pytest.raises(ValueError):
            enumerate_sector(3, up, down)


class TestHubbardParams:
    def test_homogeneous_constructor(self):
        p = HubbardParams.homogeneous(4, t=20.0, u=250.0)
        assert np.allclose(p.t, 20.0) and len(p.t) == 3
        assert np.allclose(p.u, 250.0)
        assert np.allclose(p.v, 0.0)
        assert np.allclose(p.eps, 0.0)

    def test_asymmetric_v_rejected(self):
        v = np.zeros((3, 3))
        v[0, 1] = 5.0
        with pytest.raises(ValueError, match="symmetric"):
            HubbardParams(3, t=[1, 1], u=[0, 0, 0], v=v, eps=[0, 0, 0])

    def test_nonzero_v_diagonal_rejected(self):
        v = np.eye(3)
        with pytest.raises(ValueError, match="diagonal"):
            HubbardParams(3, t=[1, 1], u=[0, 0, 0], v=v, eps=[0, 0, 0])

    def test_wrong_t_length_rejected(self):
        with pytest.raises(ValueError):
            HubbardParams(3, t=[1.0], u=[0, 0, 0], v=np.zeros((3, 3)),
                          eps=[0, 0, 0])

    def test_t_matrix_accepted(self):
        tm = np.zeros((3, 3))
        tm[0, 1] = tm[1, 0] = 20.0
        tm[0, 2] = tm[2, 0] = 5.0
        p = HubbardParams(3, t=tm, u=[0, 0, 0], v=np.zeros((3, 3)),
                          eps=[0, 0, 0])
        assert set(p.hops) == {(0, 1, 20.0), (0, 2, 5.0)}


class TestBuildHamiltonian:
    def test_single_particle_two_site(self):
        p = HubbardParams.homogeneous(2, t=7.0, u=0.0)
        basis = enumerate_sector(2, 1, 0)
        h = build_hamiltonian(p, basis)
        vals = np.linalg.eigvalsh(h.toarray())
        assert np.allclose(vals, [-7.0, 7.0], atol=1e-14)

    def test_two_site_hubbard_analytic(self):
        t, u = 20.0, 250.0
        p = HubbardParams.homogeneous(2, t=t, u=u)
        basis = enumerate_sector(2, 1, 1)
        vals = np.sort(np.linalg.eigvalsh(build_hamiltonian(p, basis).toarray()))
        root = np.sqrt(u ** 2 + 16 * t ** 2)
        expected = np.sort([0.0, u, (u - root) / 2, (u + root) / 2])
        assert np.allclose(vals, expected, atol=1e-12 * max(1.0, u))

    def test_hermitian_exactly(self):
        rng = np.random.default_rng(3)
        p = random_params(4, rng)
        h = build_hamiltonian(p, enumerate_sector(4, 2, 1))
        assert (h != h.T).nnz == 0

    @pytest.mark.parametrize("n_sites", [2, 3, 4])
    def test_bruteforce_equivalence_all_sectors(self, n_sites):
        rng = np.random.default_rng(17 + n_sites)
        p = random_params(n_sites, rng)
        hops = [(i, i + 1, p.t[i]) for i in range(n_sites - 1)]
        hf = full_space_hamiltonian(n_sites, hops, p.u, p.v, p.eps)
        for up in range(n_sites + 1):
            for down in range(n_sites + 1):
                basis = enumerate_sector(n_sites, up, down)
                idx = [full_space_index(s, n_sites) for s in basis.states]
                hr = hf[np.ix_(idx, idx)]
                hp = build_hamiltonian(p, basis).toarray()
                assert np.max(np.abs(hp - hr)) < 1e-10
                assert np.allclose(np.linalg.eigvalsh(hp),
                                   np.linalg.eigvalsh(hr), atol=1e-10)

    def test_long_range_hop_signs(self):
        # fermionic parity matters once hops cross occupied sites
        n = 4
        tm = np.zeros((n, n))
        tm[0, 2] = tm[2, 0] = 13.0
        tm[1, 3] = tm[3, 1] = 8.0
        tm[0, 1] = tm[1, 0] = 21.0
        p = HubbardParams(n, t=tm, u=[50.0] * n, v=np.zeros((n, n)),
                          eps=[1.0, -2.0, 3.0, -4.0])
        hf = full_space_hamiltonian(n, list(p.hops), p.u, p.v, p.eps)
        for up, down in [(2, 1), (1, 2), (2, 2), (3, 1)]:
            basis = enumerate_sector(n, up, down)
            idx = [full_space_index(s, n) for s in basis.states]
            hp = build_hamiltonian(p, basis).toarray()
            assert np.max(np.abs(hp - hf[np.ix_(idx, idx)])) < 1e-10

    def test_sector_closure(self):
        n = 4
        rng = np.random.default_rng(5)
        p = random_params(n, rng)
        hops = [(i, i + 1, p.t[i]) for i in range(n - 1)]
        hf = full_space_hamiltonian(n, hops, p.u, p.v, p.eps)
        basis = enumerate_sector(n, 2, 1)
        idx = [full_space_index(s, n) for s in basis.states]
        vec = np.zeros(4 ** n)
        vec[idx] = rng.normal(size=basis.dimension)
        out = hf @ vec
        outside = np.delete(out, idx)
        assert np.max(np.abs(outside)) < 1e-12

    def test_site_relabel_invariance(self):
        n = 4
        rng = np.random.default_rng(11)
        p = random_params(n, rng)
        perm = np.array([0, 2, 1, 3])  # swap sites 1 and 2
        tm = np.zeros((n, n))
        for i in range(n - 1):
            tm[i, i + 1] = tm[i + 1, i] = p.t[i]
        tperm = tm[np.ix_(perm, perm)]
        p2 = HubbardParams(n, t=tperm, u=np.asarray(p.u)[perm],
                           v=np.asarray(p.v)[np.ix_(perm, perm)],
                           eps=np.asarray(p.eps)[perm])
        for up, down in [(1, 0), (1, 1), (2, 1), (2, 2)]:
            basis = enumerate_sector(n, up, down)
            e1 = np.linalg.eigvalsh(build_hamiltonian(p, basis).toarray())
            e2 = np.linalg.eigvalsh(build_hamiltonian(p2, basis).toarray())
            assert np.allclose(e1, e2, atol=1e-10)

    def test_dimension_mismatch_rejected(self):
        p = HubbardParams.homogeneous(3, t=10.0, u=100.0)
        basis = enumerate_sector(4, 1, 1)
        with pytest.raises(ValueError):
            build_hamiltonian(p, basis)


class TestDiagonalize:
    def test_diagonal_matrix(self):
        basis = enumerate_sector(2, 1, 0)
        h = sp.csr_matrix(np.diag([3.0, 1.0]))
        res = diagonalize(h, basis, k=2)
        assert np.allclose(res.energies, [1.0, 3.0])

    def test_two_by_two_hopping(self):
        basis = enumerate_sector(2, 1, 0)
        t = 12.5
        h = sp.csr_matrix(np.array([[0.0, -t], [-t, 0.0]]))
        res = diagonalize(h, basis, k=2)
        assert np.allclose(res.energies, [-t, t])

    def test_dense_vs_iterative(self):
        p = HubbardParams.homogeneous(6, t=20.0, u=250.0,
                                      eps=[5.0, -3.0, 8.0, 1.0, -6.0, 2.0])
        basis = enumerate_sector(6, 3, 3)
        h = build_hamiltonian(p, basis)
        dense = diagonalize(h, basis, k=3, method="dense")
        iterative = diagonalize(h, basis, k=3, method="iterative")
        assert np.allclose(dense.energies, iterative.energies, atol=1e-6)

    def test_result_contract(self):
        p = HubbardParams.homogeneous(6, t=20.0, u=250.0)
        basis = enumerate_sector(6, 3, 3)
        h = build_hamiltonian(p, basis)
        res = diagonalize(h, basis, k=5)
        assert res.sector == "(3,3)"
        assert np.all(np.diff(res.energies) >= -1e-12)
        assert res.occupations.shape == (5, 6)
        assert np.allclose(res.occupations.sum(axis=1), 6.0, atol=1e-8)
        hnorm = np.abs(h).sum(axis=1).max()
        for e, vec in zip(res.energies, res.vectors.T):
            assert np.linalg.norm(h @ vec - e * vec) <= 1e-8 * hnorm

    def test_sign_canonical(self):
        p = HubbardParams.homogeneous(5, t=20.0, u=250.0)
        basis = enumerate_sector(5, 1, 0)
        h = build_hamiltonian(p, basis)
        res = diagonalize(h, basis, k=3)
        for vec in res.vectors.T:
            first = vec[np.nonzero(np.abs(vec) > 1e-12)[0][0]]
            assert first > 0

    def test_bad_k_rejected(self):
        basis = enumerate_sector(2, 1, 0)
        h = sp.csr_matrix(np.eye(2))
        for k in (0, 3):
            with pytest.raises(ValueError):
                diagonalize(h, basis, k=k)


class TestOccupations:
    def test_single_basis_state(self):
        basis = enumerate_sector(3, 1, 0)  # up masks 1, 2, 4 in order
        vec = np.array([1.0, 0.0, 0.0])
        assert np.allclose(occupations(vec, basis), [1.0, 0.0, 0.0])

    def test_equal_superposition(self):
        basis = enumerate_sector(3, 1, 0)
        vec = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
        assert np.allclose(occupations(vec, basis), [0.5, 0.5, 0.0])

    def test_unnormalized_rejected(self):
        basis = enumerate_sector(3, 1, 0)
        with pytest.raises(ValueError):
            occupations(np.array([1.0, 1.0, 0.0]), basis)

    def test_mirror_symmetric_ground_state(self):
        n = 5
        eps = np.array([10.0, 40.0, 90.0, 40.0, 10.0])
        v = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    v[i, j] = 60.0 / abs(i - j)
        p = HubbardParams(n, t=[20.0] * (n - 1), u=[250.0] * n, v=v, eps=eps)
        basis = enumerate_sector(n, 1, 1)
        res = diagonalize(build_hamiltonian(p, basis), basis, k=1)
        occ = res.occupations[0]
        assert np.allclose(occ, occ[::-1], atol=1e-8)
        assert occ.sum() == pytest.approx(2.0, abs=1e-8)
