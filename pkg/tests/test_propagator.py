import numpy as np
import pytest

from conveyance import spectral
from conveyance.errors import GridMismatchError
from conveyance.model import Grid, PhysicalParams, PotentialSpec, well_potential
from conveyance.propagator import (
    AbsorbingPotential,
    TimeGrid,
    UniformAcceleration,
    WaveFunction,
    cn_step,
    propagate_moving_frame,
    reflection_monitor,
    survival_p,
    survival_P_rest,
)


@pytest.fixture(scope="module")
def small_grid():
    return Grid.from_bounds(-20.0, 20.0, 0.1)


@pytest.fixture(scope="module")
def ground(params, small_grid):
    return spectral.ground_state(small_grid, PotentialSpec(params, 0.0))


class TestCnStep:
    def test_eigenmode_cayley_phase(self):
        # a discrete box mode is an exact eigenvector: one step multiplies
        # it by (1 - i E dt/2)/(1 + i E dt/2)
        n, dx, dt = 64, 0.1, 0.03
        t_hop = 1.0 / (2 * dx**2)
        j = np.arange(n)
        mode = np.sin(np.pi * (j + 1) / (n + 1)).astype(complex)
        energy = 2 * t_hop * (1 - np.cos(np.pi / (n + 1)))
        zero = np.zeros(n)
        out = cn_step(mode, zero, zero, dt, 1.0, dx)
        cayley = (1 - 0.5j * energy * dt) / (1 + 0.5j * energy * dt)
        assert np.max(np.abs(out - cayley * mode)) < 1e-12

    def test_norm_conserved_per_step(self, params, small_grid, ground):
        x = small_grid.points
        v = well_potential(params, x) + 0.2 * x
        psi = ground.astype(complex)
        for _ in range(20):
            before = np.sum(np.abs(psi) ** 2)
            psi = cn_step(psi, v, v, 0.05, 1.0, small_grid.dx)
            after = np.sum(np.abs(psi) ** 2)
            assert abs(after / before - 1.0) < 1e-12

    def test_cumulative_norm_drift(self, params, small_grid, ground):
        spec = PotentialSpec(params, 0.2)
        tg = TimeGrid(0.01, 10_000)
        traj = propagate_moving_frame(
            WaveFunction(small_grid, ground), UniformAcceleration(0.2), tg, params
        )
        assert abs(traj.norm[-1] - 1.0) < 1e-8

    def test_absorber_norm_non_increasing(self, params, small_grid, ground):
        x = small_grid.points
        absorber = AbsorbingPotential(5.0, 5.0, "both")
        v = well_potential(params, x) + 0.4 * x + absorber.profile(small_grid)
        psi = ground.astype(complex)
        norms = [np.sum(np.abs(psi) ** 2)]
        for _ in range(200):
            psi = cn_step(psi, v, v, 0.05, 1.0, small_grid.dx)
            norms.append(np.sum(np.abs(psi) ** 2))
        assert np.all(np.diff(norms) <= 1e-14)

    def test_time_reversibility(self, params, small_grid, ground):
        x = small_grid.points
        v = well_potential(params, x) + 0.3 * x
        psi0 = ground.astype(complex)
        psi = psi0.copy()
        for _ in range(400):
            psi = cn_step(psi, v, v, 0.02, 1.0, small_grid.dx)
        for _ in range(400):
            psi = cn_step(psi, v, v, -0.02, 1.0, small_grid.dx)
        err = np.sqrt(small_grid.dx * np.sum(np.abs(psi - psi0) ** 2))
        assert err < 1e-8


class TestPropagation:
    def test_stationary_ground_state(self, params, small_grid, ground):
        tg = TimeGrid(0.05, 400)
        traj = propagate_moving_frame(
            WaveFunction(small_grid, ground), UniformAcceleration(0.0), tg, params
        )
        assert np.all(np.abs(traj.p - 1.0) < 1e-8)
        assert np.all(np.abs(traj.P - 1.0) < 1e-8)

    def test_matches_dephasing_sum(self, params, ground):
        # same discrete H: CN differs from the exact spectral evolution
        # only through the O(dt^2) Cayley phase error
        grid = Grid.from_bounds(-50.0, 50.0, 0.1)
        psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0))
        decomp = spectral.diagonalize(
            spectral.build_hamiltonian(grid, PotentialSpec(params, 0.2))
        )
        coeffs = spectral.expansion_coefficients(psi0, decomp)
        tg = TimeGrid(5e-4, 10_000)  # t <= 5
        traj = propagate_moving_frame(
            WaveFunction(grid, psi0), UniformAcceleration(0.2), tg, params,
            compute_P=False, snapshot_stride=10**9,
        )
        exact = spectral.dephasing_survival(coeffs, traj.times)
        assert np.max(np.abs(traj.p - exact)) < 1e-6

    def test_dt_convergence_second_order(self, params, small_grid, ground):
        spec = UniformAcceleration(0.2)
        tau = 4.0
        finals = []
        for dt in (0.08, 0.04, 0.02):
            tg = TimeGrid(dt, round(tau / dt))
            traj = propagate_moving_frame(
                WaveFunction(small_grid, ground), spec, tg, params,
                compute_P=False, snapshot_stride=10**9,
            )
            finals.append(traj.p[-1])
        ratio = (finals[0] - finals[1]) / (finals[1] - finals[2])
        assert 3.0 < ratio < 5.0

    def test_monotone_envelope_after_transient(self, params, ground):
        grid = Grid.from_bounds(-120.0, 20.0, 0.1)
        psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0))
        absorber = AbsorbingPotential(20.0, 10.0, "left")
        tg = TimeGrid(0.05, 1200)
        traj = propagate_moving_frame(
            WaveFunction(grid, psi0), UniformAcceleration(0.2), tg, params,
            absorber=absorber, compute_P=False, snapshot_stride=10**9,
        )
        p = traj.p[traj.times > 5.0]
        from scipy.signal import argrelmax

        peaks = p[argrelmax(p, order=3)]
        if len(peaks) > 1:
            assert np.all(np.diff(peaks) <= 1e-10)

    def test_survival_lookup(self, params, small_grid, ground):
        tg = TimeGrid(0.05, 100)
        traj = propagate_moving_frame(
            WaveFunction(small_grid, ground), UniformAcceleration(0.0), tg, params
        )
        assert survival_p(traj, 0.0) == pytest.approx(1.0, abs=1e-12)
        assert survival_P_rest(traj, 2.5) == pytest.approx(1.0, abs=1e-8)
        with pytest.raises(ValueError):
            survival_p(traj, 0.033)

    def test_rest_frame_survival_equals_moving_when_velocity_zero(
        self, params, small_grid, ground
    ):
        # xdot0(t) = xdot0(0) = 0 throughout: P(t) = p(t) exactly
        tg = TimeGrid(0.05, 200)
        traj = propagate_moving_frame(
            WaveFunction(small_grid, ground), UniformAcceleration(0.0), tg, params
        )
        assert np.max(np.abs(traj.p - traj.P)) < 1e-12


class TestReflectionMonitor:
    def test_bound_state_never_reflects(self, params, small_grid, ground):
        tg = TimeGrid(0.05, 400)
        traj = propagate_moving_frame(
            WaveFunction(small_grid, ground), UniformAcceleration(0.0), tg, params
        )
        assert reflection_monitor(traj) is None

    def test_open_run_reflects(self, params):
        grid = Grid.from_bounds(-50.0, 50.0, 0.1)
        psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0))
        tg = TimeGrid(0.05, 1000)
        traj = propagate_moving_frame(
            WaveFunction(grid, psi0), UniformAcceleration(0.4), tg, params,
            compute_P=False, snapshot_stride=10**9,
        )
        assert reflection_monitor(traj) is not None

    def test_absorber_suppresses_reflection(self, params):
        grid = Grid.from_bounds(-100.0, 20.0, 0.1)
        psi0 = spectral.ground_state(grid, PotentialSpec(params, 0.0))
        absorber = AbsorbingPotential(20.0, 10.0, "left")
        tg = TimeGrid(0.05, 2000)
        traj = propagate_moving_frame(
            WaveFunction(grid, psi0), UniformAcceleration(0.2), tg, params,
            absorber=absorber, compute_P=False, snapshot_stride=10**9,
        )
        assert reflection_monitor(traj) is None


class TestWaveFunction:
    def test_norm_and_overlap(self, params, small_grid, ground):
        wf = WaveFunction(small_grid, ground)
        assert wf.norm() == pytest.approx(1.0, abs=1e-12)
        assert wf.overlap(wf) == pytest.approx(1.0, abs=1e-12)

    def test_grid_mismatch(self, small_grid, ground):
        other = Grid.from_bounds(-10.0, 10.0, 0.1)
        with pytest.raises(GridMismatchError):
            WaveFunction(other, ground)

    def test_nonfinite_rejected(self, small_grid):
        bad = np.full(small_grid.n_points, np.nan, dtype=complex)
        with pytest.raises(ValueError):
            WaveFunction(small_grid, bad)


class TestAbsorbingPotential:
    def test_profile_sides(self, small_grid):
        left = AbsorbingPotential(3.0, 5.0, "left").profile(small_grid)
        assert left[0] == pytest.approx(-3.0j, abs=1e-12)
        assert abs(left[-1]) == 0.0
        both = AbsorbingPotential(3.0, 5.0, "both").profile(small_grid)
        assert both[-1] == pytest.approx(-3.0j, abs=1e-12)
        assert np.all(both.imag <= 0)

    def test_too_wide_rejected(self, small_grid):
        with pytest.raises(ValueError):
            AbsorbingPotential(3.0, 45.0, "left").profile(small_grid)
