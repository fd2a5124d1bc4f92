"""Oracle tests for the planar system behind stationary radial solutions."""

import functools
import math

import numpy as np
import pytest

from ksradial.core import ModelParams, RadialGrid
from ksradial.pde import spatial_operator
from ksradial.phaseplane import (
    PhaseTrajectory,
    count_crossings,
    count_crossings_certified,
    integrate_separatrix,
    interior_fixed_point,
    linearization_eigenvalues,
    lyapunov,
    stationary_mass_profile,
    vector_field,
)


@functools.lru_cache(maxsize=None)
def separatrix(d, tau0=0.0, tau1=80.0, launch=1e-8):
    return integrate_separatrix(d, (tau0, tau1), launch_offset=launch)


class TestVectorField:
    def test_fixed_points(self):
        for d in (3, 7, 12):
            assert vector_field(d, 0.0, 0.0) == (0.0, 0.0)
            xs, zs = interior_fixed_point(d)
            assert vector_field(d, xs, zs) == (0.0, 0.0)

    def test_arithmetic_sample(self):
        assert vector_field(3, 2.0, 0.0) == (4.0, 2.0)

    def test_vectorized(self):
        dX, dZ = vector_field(3, np.array([0.0, 2.0]), np.array([0.0, 0.0]))
        np.testing.assert_array_equal(dX, [0.0, 4.0])
        np.testing.assert_array_equal(dZ, [0.0, 2.0])

    def test_rejects_low_dimension(self):
        with pytest.raises(ValueError):
            vector_field(2, 1.0, 1.0)


class TestLyapunov:
    def test_zero_at_interior_point(self):
        for d in (3, 5, 11):
            xs, zs = interior_fixed_point(d)
            assert lyapunov(d, xs, zs) == 0.0

    def test_axis_value(self):
        # at (2(d-2), 0) the log term vanishes and only (Z-2)^2/2 remains
        for d in (3, 6):
            assert lyapunov(d, 2.0 * (d - 2), 0.0) == 2.0

    def test_doubled_x_value(self):
        for d in (3, 4, 9):
            expected = 2.0 * (d - 2) * (1.0 - math.log(2.0))
            assert lyapunov(d, 4.0 * (d - 2), 2.0) == pytest.approx(expected, rel=1e-14)

    def test_needs_positive_x(self):
        with pytest.raises(ValueError):
            lyapunov(3, 0.0, 1.0)
        with pytest.raises(ValueError):
            lyapunov(3, -1.0, 1.0)


class TestLinearization:
    def test_three_dimensional_spiral(self):
        lo, hi = linearization_eigenvalues(3)
        assert hi == pytest.approx((-1.0 + 1j * math.sqrt(7.0)) / 2.0, rel=1e-15)
        assert lo == pytest.approx((-1.0 - 1j * math.sqrt(7.0)) / 2.0, rel=1e-15)

    def test_double_root_boundary(self):
        # discriminant (d-2)(d-10) vanishes at d=10: double eigenvalue -4
        lo, hi = linearization_eigenvalues(10)
        assert lo == hi == -4.0

    def test_first_node_dimension(self):
        assert linearization_eigenvalues(11) == (-6.0, -3.0)

    def test_origin_saddle(self):
        for d in (3, 8):
            assert linearization_eigenvalues(d, at="origin") == (2.0, -(d - 2))

    def test_spiral_node_dichotomy(self):
        for d in range(3, 16):
            lo, hi = linearization_eigenvalues(d)
            oscillatory = (d - 2) * (d - 10) < 0
            assert (lo.imag != 0.0) == oscillatory
            assert (hi.imag != 0.0) == oscillatory

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            linearization_eigenvalues(3, at="saddle")


class TestSeparatrix:
    @pytest.mark.parametrize("d", [3, 5, 9, 12])
    def test_joins_origin_to_interior_point(self, d):
        traj = separatrix(d)
        xs, zs = interior_fixed_point(d)
        assert traj.termination == "fixed_point"
        dist = math.hypot(traj.X[-1] - xs, traj.Z[-1] - zs)
        assert dist < 1e-6
        assert traj.terminal_distance < 1e-6

    def test_stays_in_quadrant(self):
        for d in (3, 12):
            traj = separatrix(d)
            assert traj.X.min() > 0.0
            assert traj.Z.min() > 0.0

    def test_launch_slope(self):
        # the unstable eigenvector of the origin is (d, 1)
        for d in (3, 7):
            traj = separatrix(d)
            assert traj.Z[0] / traj.X[0] == pytest.approx(1.0 / d, rel=1e-12)

    def test_launch_offset_study(self):
        # the launch rule is a choice; the resulting curve must not depend on
        # it.  Compare Z at the first crossing of X = 0.01 across offsets.
        heights = []
        for launch in (1e-6, 1e-8, 1e-10):
            traj = separatrix(3, launch=launch)
            k = int(np.searchsorted(traj.X, 0.01))
            # linear interpolation onto X = 0.01 between samples k-1, k
            w = (0.01 - traj.X[k - 1]) / (traj.X[k] - traj.X[k - 1])
            heights.append((1.0 - w) * traj.Z[k - 1] + w * traj.Z[k])
        assert max(heights) - min(heights) < 1e-6

    def test_lyapunov_monotone(self):
        for d in (3, 11):
            traj = separatrix(d)
            vals = lyapunov(d, traj.X, traj.Z)
            slack = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
            assert np.all(np.diff(vals) <= slack)

    def test_lyapunov_dissipation_rate(self):
        # numerical dL/dtau must match -(d-2)(Z-2)^2; finite differences on
        # the dense interpolant, away from zero-derivative crossings and from
        # the launch transient where X is below the interpolant's resolution
        d = 3
        traj = separatrix(d)
        h = 1e-5
        checked = 0
        for tau in np.linspace(traj.taus[0] + 1.0, traj.taus[-1] / 3.0, 9):
            x, z = (v.item() for v in traj.state(tau))
            if abs(z - 2.0) < 0.3 or x < 0.01:
                continue
            lp = lyapunov(d, *(v.item() for v in traj.state(tau + h)))
            lm = lyapunov(d, *(v.item() for v in traj.state(tau - h)))
            numeric = (lp - lm) / (2.0 * h)
            exact = -(d - 2) * (z - 2.0) ** 2
            assert numeric == pytest.approx(exact, rel=1e-6)
            checked += 1
        assert checked >= 3

    def test_bad_spans_rejected(self):
        with pytest.raises(ValueError):
            integrate_separatrix(3, (0.0, 0.0))
        with pytest.raises(ValueError):
            integrate_separatrix(3, (0.0, math.inf))
        with pytest.raises(ValueError):
            integrate_separatrix(3, (0.0, 10.0), launch_offset=0.0)


class TestCrossings:
    def test_constant_trajectory(self):
        taus = np.linspace(0.0, 1.0, 5)
        traj = PhaseTrajectory(
            d=3,
            taus=taus,
            X=np.ones(5),
            Z=np.full(5, 1.5),
            termination="tau_span",
            terminal_distance=1.0,
            fixed_point_tol=1e-9,
            n_rhs_evaluations=0,
        )
        assert count_crossings(traj, 2.0) == 0

    def test_sampled_count_in_three_dimensions(self):
        # weak damping: crossings are large-amplitude and the plain sampled
        # count already sees at least three
        assert count_crossings(separatrix(3), 2.0) >= 3

    @pytest.mark.parametrize("d", [3, 5, 9])
    def test_oscillatory_dimensions(self, d):
        # spiral approach: the scaled concentration recrosses its limit at
        # least three times (in d=9 the third crossing peaks ~4e-12, far
        # below (X,Z)-integration noise: only the polar count resolves it)
        assert count_crossings_certified(d) >= 3

    @pytest.mark.parametrize("d", [12, 14])
    def test_monotone_dimensions(self, d):
        assert count_crossings_certified(d) <= 1

    def test_certified_count_matches_amplitude_ladder(self):
        # damping grows with d, so the certified counts must not increase
        counts = [count_crossings_certified(d) for d in range(3, 10)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts[-1] == 3

    def test_certified_validation(self):
        with pytest.raises(ValueError):
            count_crossings_certified(3, fixed_point_tol=0.0)
        with pytest.raises(ValueError):
            count_crossings_certified(3, launch_offset=-1.0)

    def test_increasing_tau_required(self):
        with pytest.raises(ValueError):
            PhaseTrajectory(
                d=3,
                taus=np.array([0.0, 0.0, 1.0]),
                X=np.ones(3),
                Z=np.ones(3),
                termination="tau_span",
                terminal_distance=1.0,
                fixed_point_tol=1e-9,
                n_rhs_evaluations=0,
            )


class TestStationaryProfile:
    def test_singular_tail(self):
        # far out the profile must merge into the singular steady state:
        # r^{2-d} M(r) -> 2 sigma_d
        d = 3
        traj = separatrix(d, tau0=-8.0, tau1=80.0)
        grid = RadialGrid.log_spaced(math.exp(46.0), 512, r_inner=1e-3)
        profile = stationary_mass_profile(d, traj, grid)
        r_last = grid.nodes[-1]
        limit = 2.0 * ModelParams(d).sigma_d
        assert profile.values[-1] / r_last ** (d - 2) == pytest.approx(limit, rel=1e-6)

    def test_global_mass_bound(self):
        d = 3
        traj = separatrix(d, tau0=-8.0)
        grid = RadialGrid.log_spaced(100.0, 256, r_inner=1e-3)
        profile = stationary_mass_profile(d, traj, grid)
        sigma = ModelParams(d).sigma_d
        bound = 4.0 * (d - 1) * sigma * grid.nodes[1:] ** (d - 2)
        assert np.all(profile.values[1:] <= bound)

    def test_spatial_operator_residual_shrinks(self):
        # a reconstructed stationary profile is a discrete near-equilibrium:
        # the PDE right-hand side must shrink like h^2 under refinement
        d = 3
        tau0 = 0.5 * math.log(1e-8 * d / math.hypot(d, 1.0))  # central density ~1
        traj = separatrix(d, tau0=tau0, tau1=50.0)
        sups = []
        for n in (256, 512):
            grid = RadialGrid.uniform(16.0, n)
            profile = stationary_mass_profile(d, traj, grid)
            sups.append(float(np.max(np.abs(spatial_operator(profile)))))
        assert sups[0] / sups[1] > 3.5

    def test_grid_range_checked(self):
        d = 3
        short = integrate_separatrix(d, (0.0, 5.0))
        assert short.termination == "tau_span"
        with pytest.raises(ValueError):
            # outermost node needs tau = log 300 > 5 from an unconverged orbit
            stationary_mass_profile(d, short, RadialGrid.uniform(300.0, 64))
        with pytest.raises(ValueError):
            # first positive node sits before the launch tau
            stationary_mass_profile(d, short, RadialGrid.uniform(1.0, 64))

    def test_converged_orbit_extends(self):
        d = 3
        traj = separatrix(d, tau0=-2.0)
        r_max = math.exp(traj.taus[-1] + 3.0)
        grid = RadialGrid.log_spaced(r_max, 64, r_inner=1.0)
        profile = stationary_mass_profile(d, traj, grid)
        limit = 2.0 * ModelParams(d).sigma_d
        assert profile.values[-1] / r_max ** (d - 2) == pytest.approx(limit, rel=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            stationary_mass_profile(4, separatrix(3), RadialGrid.uniform(1.0, 32))
