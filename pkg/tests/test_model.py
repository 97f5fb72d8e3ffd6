import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conveyance.errors import InvalidLevelError
from conveyance.model import (
    Grid,
    PhysicalParams,
    PotentialSpec,
    bound_state_count,
    bound_state_energies,
    bound_state_wavefunction,
    has_metastable_well,
    metastable_slope_limit,
    tilted_potential,
    well_potential,
)


class TestWellPotential:
    def test_minimum_at_center(self, params):
        assert well_potential(params, 0.0) == -1.0
        assert well_potential(params, 3.7, x0=3.7) == -1.0

    def test_asymptote(self, params):
        assert abs(well_potential(params, 50.0)) < 1e-12
        assert abs(well_potential(params, -50.0)) < 1e-12

    def test_unit_offset_value(self, params):
        assert well_potential(params, 1.0) == pytest.approx(
            math.tanh(1.0) ** 2 - 1.0, abs=1e-15
        )

    def test_range_and_parity(self, params):
        x = np.linspace(-8, 8, 401)
        v = well_potential(params, x)
        assert np.all(v >= -1.0) and np.all(v < 0.0)
        assert np.allclose(v, v[::-1], atol=1e-15)


class TestTiltedPotential:
    def test_zero_slope_reduces_to_well(self, params):
        spec = PotentialSpec(params, 0.0)
        x = np.linspace(-5, 5, 101)
        assert np.array_equal(tilted_potential(spec, x), well_potential(params, x))

    def test_slope_vanishes_at_origin(self, params):
        spec = PotentialSpec(params, 0.2)
        assert tilted_potential(spec, 0.0) == -1.0

    def test_far_value(self, params):
        spec = PotentialSpec(params, 0.2)
        expected = (math.tanh(5.0) ** 2 - 1.0) + 0.2 * 5.0
        assert tilted_potential(spec, 5.0) == pytest.approx(expected, abs=1e-14)

    def test_exact_linear_decomposition(self, params):
        spec = PotentialSpec(params, 0.37)
        x = np.linspace(-11, 11, 301)
        assert np.array_equal(
            tilted_potential(spec, x), well_potential(params, x) + 0.37 * x
        )


class TestMetastableWell:
    def test_limit_value(self, params):
        assert metastable_slope_limit(params) == pytest.approx(
            4.0 / (3.0 * math.sqrt(3.0)), rel=1e-14
        )

    def test_below_and_above(self, params):
        assert has_metastable_well(PotentialSpec(params, 0.2))
        assert not has_metastable_well(PotentialSpec(params, 0.9))

    def test_untilted(self, params):
        assert has_metastable_well(PotentialSpec(params, 0.0))

    def test_negative_acceleration_rejected(self, params):
        with pytest.raises(ValueError):
            has_metastable_well(PotentialSpec(params, -0.1))

    @given(st.floats(min_value=0.0, max_value=0.769))
    def test_monotone_in_a(self, a):
        p = PhysicalParams()
        if has_metastable_well(PotentialSpec(p, a)):
            assert has_metastable_well(PotentialSpec(p, a / 2))


class TestBoundStates:
    def test_single_level_m1(self, params):
        e = bound_state_energies(params)
        assert len(e) == 1
        assert e[0] == pytest.approx(-0.5, abs=1e-14)

    def test_four_levels_m10(self):
        p = PhysicalParams(mass=10.0)
        e = bound_state_energies(p)
        # sqrt(2*10 + 1/4) = 4.5: brackets 4, 3, 2, 1
        assert len(e) == 4
        assert np.allclose(e, [-0.8, -0.45, -0.2, -0.05], atol=1e-14)

    def test_energies_inside_well(self):
        for m in (1.0, 3.0, 10.0, 42.0):
            e = bound_state_energies(PhysicalParams(mass=m))
            assert np.all(e > -1.0) and np.all(e < 0.0)
            assert np.all(np.diff(e) > 0)

    def test_count(self):
        assert bound_state_count(PhysicalParams()) == 1
        assert bound_state_count(PhysicalParams(mass=10.0)) == 4


class TestBoundWavefunctions:
    grid = Grid.from_bounds(-30.0, 30.0, 0.01)

    def test_unit_norm(self):
        p = PhysicalParams(mass=10.0)
        for n in range(4):
            psi = bound_state_wavefunction(p, n, self.grid)
            assert self.grid.dx * np.sum(psi**2) == pytest.approx(1.0, abs=1e-10)

    def test_parity(self):
        p = PhysicalParams(mass=10.0)
        for n in range(4):
            psi = bound_state_wavefunction(p, n, self.grid)
            sign = (-1) ** n
            assert np.allclose(psi, sign * psi[::-1], atol=1e-10)

    def test_ground_state_nodeless_positive(self, params):
        psi = bound_state_wavefunction(params, 0, self.grid)
        assert np.all(psi > -1e-15)

    def test_first_excited_zero_at_center(self):
        p = PhysicalParams(mass=10.0)
        psi = bound_state_wavefunction(p, 1, self.grid)
        assert abs(psi[self.grid.index_of(0.0)]) < 1e-12

    def test_orthogonality(self):
        p = PhysicalParams(mass=10.0)
        states = [bound_state_wavefunction(p, n, self.grid) for n in range(4)]
        for i in range(4):
            for j in range(i + 1, 4):
                overlap = self.grid.dx * np.sum(states[i] * states[j])
                assert abs(overlap) < 1e-10

    def test_invalid_level(self, params):
        with pytest.raises(InvalidLevelError):
            bound_state_wavefunction(params, 1, self.grid)


class TestGrid:
    def test_point_count_formula(self):
        g = Grid.from_bounds(-10.0, 10.0, 0.1)
        assert g.n_points == 201
        assert g.points[0] == -10.0
        assert g.points[-1] == pytest.approx(10.0, abs=1e-12)

    def test_inconsistent_count_rejected(self):
        with pytest.raises(ValueError):
            Grid(-10.0, 10.0, 0.1, 200)

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            Grid.from_bounds(0.0, 0.1, 0.1)

    @given(
        st.floats(min_value=0.01, max_value=1.0),
        st.integers(min_value=3, max_value=500),
    )
    def test_roundtrip(self, dx, n):
        g = Grid(0.0, (n - 1) * dx, dx, n)
        assert len(g.points) == n
        assert np.allclose(np.diff(g.points), dx)


def test_discrete_ground_energy_second_order_in_dx(params):
    """ED ground energy converges to the analytic -0.5 at O(dx^2)."""
    from conveyance import spectral
    from conveyance.model import PotentialSpec

    errors = []
    for dx in (0.1, 0.05):
        grid = Grid.from_bounds(-10.0, 10.0, dx)
        h = spectral.build_hamiltonian(grid, PotentialSpec(params, 0.0))
        decomp = spectral.diagonalize(h)
        errors.append(abs(decomp.energies[0] + 0.5))
    assert errors[0] / errors[1] >= 3.0
