"""Unit tests for Gaussian-orbital interaction and tunnel elements.

Independent oracles: seeded Monte-Carlo sampling of the pair integral,
the closed-form kinetic matrix element of two orthogonalized Gaussians,
and the point-charge potentials from the electrostatics module.
"""
import numpy as np
import pytest

from dotsim.electrostatics import PhysicalConstants, coulomb_bare
from dotsim.layouts import finger_gate_layout
from dotsim.wannier import (DotArray, InteractionModel, PotentialGrid,
                            interaction_element, interaction_matrix,
                            tunnel_element)

CONSTS = PhysicalConstants()
CS = CONSTS.coulomb_scale
D = CONSTS.depth_d
WIDTH_45 = 45.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))  # orbital width param


def mc_pair_energy(tau_i, tau_j, fwhm, weight_fn, n_samples=10_000_000,
                   seed=20260815):
    """Monte-Carlo estimate of <w(|r1 - r2|)> over two Gaussian densities."""
    width = fwhm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    sigma_density = width / np.sqrt(2.0)
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    while done < n_samples:
        c = min(1_000_000, n_samples - done)
        r1 = tau_i + rng.normal(scale=sigma_density, size=(c, 2))
        r2 = tau_j + rng.normal(scale=sigma_density, size=(c, 2))
        dist = np.hypot(r1[:, 0] - r2[:, 0], r1[:, 1] - r2[:, 1])
        total += weight_fn(dist).sum()
        done += c
    return total / n_samples


class TestDotArray:
    def test_linear_constructor(self):
        dots = DotArray.linear(4)
        assert dots.spacing == 160.0
        assert np.allclose(dots.positions[:, 0], [-240, -80, 80, 240])
        assert np.allclose(dots.positions[:, 1], 0.0)
        assert np.allclose(dots.fwhm, 45.0)

    def test_positions_must_increase(self):
        with pytest.raises(ValueError):
            DotArray(np.array([[0.0, 0.0], [0.0, 160.0]]))
        with pytest.raises(ValueError):
            DotArray(np.array([[160.0, 0.0], [0.0, 0.0]]))

    def test_fwhm_validation(self):
        with pytest.raises(ValueError):
            DotArray.linear(3, fwhm=0.0)

    def test_per_dot_fwhm(self):
        dots = DotArray(np.array([[0.0, 0.0], [160.0, 0.0]]),
                        fwhm=[45.0, 30.0])
        assert np.allclose(dots.fwhm, [45.0, 30.0])


class TestInteractionModel:
    def test_tiled_requires_layout(self):
        with pytest.raises(ValueError, match="layout"):
            InteractionModel("tiled", CONSTS)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            InteractionModel("dressed", CONSTS)


class TestInteractionElement:
    def test_onsite_bare_vs_monte_carlo(self):
        dots = DotArray.linear(2)
        u = interaction_element(0, 0, dots, InteractionModel("bare", CONSTS))
        mc = mc_pair_energy(dots.positions[0], dots.positions[0], 45.0,
                            lambda r: CS / r)
        assert u == pytest.approx(mc, rel=5e-3)

    def test_offsite_image_vs_monte_carlo(self):
        dots = DotArray.linear(2)
        v = interaction_element(0, 1, dots, InteractionModel("image", CONSTS))

        def screened(r):
            return (1 - r / np.hypot(r, 2 * D)) * CS / r

        mc = mc_pair_energy(dots.positions[0], dots.positions[1], 45.0,
                            screened)
        assert v == pytest.approx(mc, rel=5e-3)

    def test_point_limit_bare(self):
        dots = DotArray.linear(2, fwhm=1.0)
        v = interaction_element(0, 1, dots, InteractionModel("bare", CONSTS))
        r1 = [*dots.positions[0], -D]
        r2 = [*dots.positions[1], -D]
        assert v == pytest.approx(coulomb_bare(r1, r2, CONSTS), rel=1e-3)

    def test_symmetry_tiled(self):
        model = InteractionModel("tiled", CONSTS,
                                 layout=finger_gate_layout(half_window=400.0))
        dots = DotArray.linear(3)
        v01 = interaction_element(0, 1, dots, model)
        v10 = interaction_element(1, 0, dots, model)
        assert v01 == pytest.approx(v10, rel=1e-10)

    def test_quad_order_too_small_rejected(self):
        dots = DotArray.linear(2)
        with pytest.raises(ValueError):
            interaction_element(0, 1, dots, InteractionModel("bare", CONSTS),
                                quad_order=2)

    def test_convergence_warning_on_underresolved_kernel(self):
        # a shallow gate plane makes the screening kernel vary on a scale
        # much finer than the orbital, which a low order cannot resolve
        shallow = PhysicalConstants.for_permittivity(12.9, 4.0)
        dots = DotArray(np.array([[0.0, 0.0], [40.0, 0.0]]), fwhm=45.0)
        model = InteractionModel("image", shallow)
        with pytest.warns(UserWarning, match="quadrature"):
            interaction_element(0, 1, dots, model, quad_order=4,
                                check_convergence=True)

    def test_no_warning_at_default_order(self):
        import warnings
        dots = DotArray.linear(2)
        model = InteractionModel("image", CONSTS)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            interaction_element(0, 1, dots, model, check_convergence=True)


class TestInteractionMatrix:
    def test_translation_invariance_by_distance(self):
        dots = DotArray.linear(5)
        for kind in ("bare", "image"):
            vee = interaction_matrix(dots, InteractionModel(kind, CONSTS))
            for k in (1, 2, 3):
                vals = [vee[i, i + k] for i in range(5 - k)]
                assert np.ptp(vals) < 1e-6 * vals[0]

    def test_monotone_decay(self):
        dots = DotArray.linear(6)
        model = InteractionModel("tiled", CONSTS,
                                 layout=finger_gate_layout(half_window=640.0))
        vee = interaction_matrix(dots, model)
        row = vee[0]
        assert np.all(np.diff(row) < 0)

    def test_diagonal_is_onsite(self):
        dots = DotArray.linear(3)
        model = InteractionModel("image", CONSTS)
        vee = interaction_matrix(dots, model)
        for i in range(3):
            assert vee[i, i] == pytest.approx(
                interaction_element(i, i, dots, model), rel=1e-12)

    def test_symmetric_positive(self):
        dots = DotArray.linear(4)
        model = InteractionModel("tiled", CONSTS,
                                 layout=finger_gate_layout(half_window=400.0))
        vee = interaction_matrix(dots, model)
        assert np.array_equal(vee, vee.T)
        assert np.all(vee > 0)

    def test_model_ordering_elementwise(self):
        dots = DotArray.linear(4)
        lay = finger_gate_layout(half_window=400.0)
        bare = interaction_matrix(dots, InteractionModel("bare", CONSTS))
        tiled = interaction_matrix(dots, InteractionModel("tiled", CONSTS,
                                                          layout=lay))
        image = interaction_matrix(dots, InteractionModel("image", CONSTS))
        assert np.all(bare >= tiled - 1e-9)
        assert np.all(tiled >= image - 1e-9)
        off = ~np.eye(4, dtype=bool)
        assert np.all(bare[off] > tiled[off])
        assert np.all(tiled[off] > image[off])

    def test_quadrature_converged_at_default_order(self):
        dots = DotArray.linear(6)
        lay = finger_gate_layout(half_window=640.0)
        for model in (InteractionModel("image", CONSTS),
                      InteractionModel("tiled", CONSTS, layout=lay)):
            v16 = interaction_matrix(dots, model, quad_order=16)
            v32 = interaction_matrix(dots, model, quad_order=32)
            assert np.max(np.abs(v32 - v16) / np.abs(v32)) < 0.01

    def test_point_limit_narrowing_orbitals(self):
        devs = []
        for fwhm in (20.0, 10.0, 5.0):
            dots = DotArray.linear(4, fwhm=fwhm)
            vee = interaction_matrix(dots, InteractionModel("image", CONSTS))
            worst = 0.0
            for i in range(4):
                for j in range(i + 1, 4):
                    r1 = [*dots.positions[i], -D]
                    r2 = [*dots.positions[j], -D]
                    from dotsim.electrostatics import screened_potential_image
                    point = screened_potential_image(r1, r2, CONSTS)
                    worst = max(worst, abs(vee[i, j] - point) / point)
            devs.append(worst)
        assert devs[0] > devs[1] > devs[2]


def gaussian_grid(dots, i, j, spacing, margin_sigmas=5.0):
    w = max(np.max(dots.widths), 1.0)
    lo = dots.positions[[i, j], :].min(axis=0) - margin_sigmas * w
    hi = dots.positions[[i, j], :].max(axis=0) + margin_sigmas * w
    xs = np.arange(lo[0], hi[0] + spacing, spacing)
    ys = np.arange(lo[1], hi[1] + spacing, spacing)
    return xs, ys


def kinetic_oracle(a, w, kappa):
    """Closed-form <1|T|2> of two Loewdin-orthogonalized 2D Gaussians."""
    s = np.exp(-a ** 2 / (4 * w ** 2))
    return -kappa * s * a ** 2 / (4 * w ** 4 * (1 - s ** 2))


class TestTunnelElement:
    def setup_method(self):
        self.dots = DotArray(np.array([[-30.0, 0.0], [30.0, 0.0]]),
                             spacing=60.0, fwhm=45.0)

    def grid(self, potential_fn=None, spacing=5.0):
        xs, ys = gaussian_grid(self.dots, 0, 1, spacing)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        values = np.zeros_like(X) if potential_fn is None else potential_fn(X, Y)
        return PotentialGrid(xs, ys, values)

    def test_kinetic_closed_form(self):
        from dotsim.wannier import KINETIC_SCALE_UEV_NM2
        t = tunnel_element(0, 1, self.dots, self.grid())
        expected = kinetic_oracle(60.0, WIDTH_45, KINETIC_SCALE_UEV_NM2)
        assert t == pytest.approx(expected, rel=0.01)

    def test_symmetry_exact(self):
        grid = self.grid(lambda x, y: 300.0 * np.exp(-(x ** 2 + y ** 2) / 450.0))
        assert tunnel_element(0, 1, self.dots, grid) \
            == tunnel_element(1, 0, self.dots, grid)

    def test_barrier_suppresses_tunneling(self):
        ts = []
        for height in (0.0, 250.0, 500.0, 750.0):
            grid = self.grid(lambda x, y, h=height:
                             h * np.exp(-(x ** 2) / (2 * 15.0 ** 2)))
            ts.append(abs(tunnel_element(0, 1, self.dots, grid)))
        assert ts[0] > ts[1] > ts[2] > ts[3]

    def test_nonadjacent_rejected(self):
        dots = DotArray.linear(3, spacing=60.0)
        xs, ys = gaussian_grid(dots, 0, 2, 5.0)
        grid = PotentialGrid(xs, ys, np.zeros((len(ys), len(xs))))
        with pytest.raises(ValueError):
            tunnel_element(0, 2, dots, grid)

    def test_coarse_grid_rejected(self):
        xs, ys = gaussian_grid(self.dots, 0, 1, 9.0)
        grid = PotentialGrid(xs, ys, np.zeros((len(ys), len(xs))))
        with pytest.raises(ValueError, match="spacing"):
            tunnel_element(0, 1, self.dots, grid)

    def test_short_grid_rejected(self):
        xs = np.arange(-60.0, 60.0, 5.0)
        ys = np.arange(-60.0, 60.0, 5.0)
        grid = PotentialGrid(xs, ys, np.zeros((len(ys), len(xs))))
        with pytest.raises(ValueError, match="cover"):
            tunnel_element(0, 1, self.dots, grid)
