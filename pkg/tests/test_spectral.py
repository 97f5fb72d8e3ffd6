import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conveyance import spectral
from conveyance.errors import FitDomainError, GridMismatchError, NoResonanceError
from conveyance.model import Grid, PhysicalParams, PotentialSpec


@pytest.fixture(scope="module")
def small_decomp(params):
    grid = Grid.from_bounds(-10.0, 10.0, 0.1)
    h = spectral.build_hamiltonian(grid, PotentialSpec(params, 0.0))
    return h, spectral.diagonalize(h)


class TestHamiltonian:
    def test_t_hop_value(self, params):
        grid = Grid.from_bounds(-10.0, 10.0, 0.1)
        h = spectral.build_hamiltonian(grid, PotentialSpec(params, 0.0))
        assert h.t_hop == pytest.approx(50.0, rel=1e-14)

    def test_three_point_free_spectrum(self):
        # tridiagonal (-t, 2t, -t) on 3 points: eigenvalues 2t, 2t +/- sqrt(2) t
        grid = Grid.from_bounds(0.0, 0.2, 0.1)
        t = 50.0
        h = spectral.DiscreteHamiltonian(grid, np.full(3, 2 * t), t)
        decomp = spectral.diagonalize(h)
        expected = np.sort([2 * t, 2 * t - np.sqrt(2) * t, 2 * t + np.sqrt(2) * t])
        assert np.allclose(decomp.energies, expected, atol=1e-10)

    def test_free_particle_box_limit(self, params):
        # V = 0: lowest eigenvalue approaches hbar^2 pi^2 / (2 m (x_max-x_min)^2)
        grid = Grid.from_bounds(-2.0, 2.0, 0.01)
        t = params.hbar**2 / (2 * params.mass * grid.dx**2)
        h = spectral.DiscreteHamiltonian(grid, np.full(grid.n_points, 2 * t), t)
        e0 = spectral.diagonalize(h).energies[0]
        box = np.pi**2 * params.hbar**2 / (2 * params.mass * (grid.x_max - grid.x_min) ** 2)
        assert e0 == pytest.approx(box, rel=0.011)

    def test_ground_energy_vs_analytic(self, params, small_decomp):
        _, decomp = small_decomp
        assert decomp.energies[0] == pytest.approx(-0.5, abs=2e-3)

    def test_four_negative_levels_m10(self):
        grid = Grid.from_bounds(-10.0, 10.0, 0.1)
        h = spectral.build_hamiltonian(grid, PotentialSpec(PhysicalParams(mass=10.0), 0.0))
        e = spectral.diagonalize(h).energies
        assert int(np.sum(e < 0)) == 4

    def test_orthonormality_and_count(self, small_decomp):
        _, decomp = small_decomp
        n = decomp.grid.n_points
        assert decomp.energies.shape == (n,)
        gram = decomp.vectors.T @ decomp.vectors
        assert np.max(np.abs(gram - np.eye(n))) < 1e-8

    def test_eigen_residual(self, small_decomp):
        h, decomp = small_decomp
        h_norm = np.max(np.abs(decomp.energies))
        for k in (0, 5, 100):
            resid = h.apply(decomp.vectors[:, k]) - decomp.energies[k] * decomp.vectors[:, k]
            assert np.linalg.norm(resid) < 1e-8 * h_norm

    def test_trace_identity(self, small_decomp):
        h, decomp = small_decomp
        assert np.sum(decomp.energies) == pytest.approx(np.sum(h.diagonal), rel=1e-6)


class TestEnergyDiagram:
    def test_rest_row_contains_bound_energy(self, params):
        grid = Grid.from_bounds(-10.0, 10.0, 0.1)
        rows = spectral.energy_diagram(params, [0.0, 0.2], grid, k_max=5)
        assert rows.shape == (2, 5)
        assert rows[0, 0] == pytest.approx(-0.5, abs=2e-3)

    def test_continuum_spacing_scales_with_mass(self):
        grid = Grid.from_bounds(-10.0, 10.0, 0.1)
        spacings = {}
        for m in (1.0, 10.0):
            h = spectral.build_hamiltonian(grid, PotentialSpec(PhysicalParams(mass=m), 0.0))
            e = spectral.diagonalize(h).energies
            band = e[(e > 0.05) & (e < 0.4)]
            spacings[m] = np.mean(np.diff(band))
        ratio = spacings[1.0] / spacings[10.0]
        assert abs(ratio - np.sqrt(10.0)) / np.sqrt(10.0) < 0.2

    def test_downhill_levels_slope_down(self, params):
        # states living on the x < 0 ramp sink as the tilt grows
        grid = Grid.from_bounds(-10.0, 10.0, 0.1)
        rows = spectral.energy_diagram(params, [0.2, 0.3], grid, k_max=25)
        ramp = rows[0] < -0.6  # below the metastable branch: ramp-localized
        assert ramp.any()
        assert np.all(rows[1, ramp] < rows[0, ramp])


class TestExpansion:
    def test_eigenstate_gives_delta(self, params, small_decomp):
        _, decomp = small_decomp
        coeffs = spectral.expansion_coefficients(decomp.wavefunction(0), decomp)
        assert coeffs.weights[0] == pytest.approx(1.0, abs=1e-10)
        assert np.sum(coeffs.weights[1:]) < 1e-10

    def test_completeness(self, params, small_decomp):
        _, decomp = small_decomp
        psi = spectral.ground_state(decomp.grid, PotentialSpec(params, 0.0))
        coeffs = spectral.expansion_coefficients(psi, decomp)
        assert np.sum(coeffs.weights) == pytest.approx(1.0, abs=1e-8)

    def test_grid_mismatch(self, params, small_decomp):
        _, decomp = small_decomp
        with pytest.raises(GridMismatchError):
            spectral.expansion_coefficients(np.ones(7), decomp)

    def test_distribution_widens_with_acceleration(self, params):
        grid = Grid.from_bounds(-40.0, 40.0, 0.1)
        psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0))
        variances = []
        for a in (0.2, 0.4, 0.6, 0.8, 1.0):
            decomp = spectral.diagonalize(
                spectral.build_hamiltonian(grid, PotentialSpec(params, a))
            )
            c = spectral.expansion_coefficients(psi0, decomp)
            mean = np.sum(c.weights * c.energies)
            variances.append(np.sum(c.weights * (c.energies - mean) ** 2))
        assert np.all(np.diff(variances) > 0)


class TestDephasing:
    def test_single_component_is_stationary(self):
        coeffs = spectral.OverlapCoefficients(np.array([-0.5]), np.array([1.0 + 0j]))
        p = spectral.dephasing_survival(coeffs, np.linspace(0, 30, 50))
        assert np.allclose(p, 1.0, atol=1e-14)

    def test_two_level_beat(self):
        gap = 0.35
        coeffs = spectral.OverlapCoefficients(
            np.array([0.0, gap]), np.array([np.sqrt(0.5), np.sqrt(0.5)], dtype=complex)
        )
        t = np.linspace(0, 40, 200)
        p = spectral.dephasing_survival(coeffs, t)
        assert np.allclose(p, 0.5 * (1 + np.cos(gap * t)), atol=1e-12)

    def test_starts_at_one_and_bounded(self, params, small_decomp):
        _, decomp = small_decomp
        psi = spectral.ground_state(decomp.grid, PotentialSpec(params, 0.0))
        coeffs = spectral.expansion_coefficients(psi, decomp)
        p = spectral.dephasing_survival(coeffs, np.linspace(0, 50, 300))
        assert p[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all((p >= 0) & (p <= 1 + 1e-12))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=2, max_value=12), st.integers(min_value=0, max_value=10**6))
    def test_double_sum_identity(self, n, seed):
        rng = np.random.default_rng(seed)
        amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        amps /= np.linalg.norm(amps)
        energies = np.sort(rng.uniform(-1.0, 1.0, n))
        coeffs = spectral.OverlapCoefficients(energies, amps)
        t = rng.uniform(0.0, 20.0, 7)
        single = spectral.dephasing_survival(coeffs, t)
        double = spectral.double_sum_survival(coeffs, t)
        assert np.allclose(single, double, atol=1e-12)

    def test_long_time_average(self):
        rng = np.random.default_rng(3)
        n = 20
        amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        amps /= np.linalg.norm(amps)
        energies = np.sort(np.cumsum(rng.uniform(0.05, 0.2, n)))
        coeffs = spectral.OverlapCoefficients(energies, amps)
        t = np.linspace(0.0, 1e5, 400001)
        p = spectral.dephasing_survival(coeffs, t)
        avg = np.trapezoid(p, t) / t[-1]
        assert avg == pytest.approx(np.sum(coeffs.weights**2), abs=1e-3)


class TestFits:
    def test_pure_exponential_self_consistency(self):
        t = np.linspace(0, 50, 400)
        fit = spectral.fit_exponential(t, np.exp(-0.1 * t))
        assert fit.gamma == pytest.approx(0.1, abs=1e-10)
        assert fit.offset is None

    def test_offset_form_recovery(self):
        t = np.linspace(0, 120, 600)
        p = 0.2 + 0.8 * np.exp(-0.05 * t)
        fit = spectral.fit_exponential(t, p, offset=True)
        assert fit.offset == pytest.approx(0.2, abs=1e-6)
        assert fit.amplitude == pytest.approx(0.8, abs=1e-6)
        assert fit.gamma == pytest.approx(0.05, abs=1e-6)

    def test_nonpositive_rejected(self):
        t = np.linspace(0, 10, 50)
        with pytest.raises(FitDomainError):
            spectral.fit_exponential(t, 1e-3 - 1e-4 * t)

    def test_lorentzian_self_consistency(self):
        e = np.linspace(-1.0, 1.0, 301)
        w = 0.3 / ((e - 0.12) ** 2 + 0.05**2)
        fit = spectral.lorentzian_fit(e, w)
        assert fit.center == pytest.approx(0.12, abs=1e-8)
        assert fit.width == pytest.approx(0.05, abs=1e-8)
        assert fit.scale == pytest.approx(0.3, abs=1e-8)

    def test_lorentzian_needs_levels(self):
        with pytest.raises(NoResonanceError):
            spectral.lorentzian_fit(np.array([0.0, 1.0]), np.array([1.0, 0.5]))


class TestRelaxationPipeline:
    def test_gamma_relax_near_paper_value(self, relax_pipeline):
        _, _, fit, _ = relax_pipeline(0.2)
        assert fit.gamma == pytest.approx(0.044290, abs=5e-4)

    def test_fit_window_is_late_and_pre_reflection(self, relax_pipeline):
        times, p, fit, _ = relax_pipeline(0.2)
        assert fit.window[0] > 0.0
        assert fit.window[1] < times[-1]

    def test_lorentzian_width_matches_relaxation(self, relax_pipeline):
        _, _, fit, coeffs = relax_pipeline(0.2)
        lfit = spectral.lorentzian_fit(coeffs.energies, coeffs.weights, half_window=0.4)
        assert abs(lfit.width - fit.gamma) / fit.gamma < 0.3
        # peak sits on the tilted (resonance) level, near the untilted e_0
        assert abs(lfit.center - (-0.56123)) <= 0.01
        assert abs(lfit.center - (-0.5)) <= 0.07
