"""Oracle tests for the self-similar shooting solver."""

import math

import numpy as np
import pytest

from ksradial.core import ModelParams, RadialGrid, radial_concentration
from ksradial.pde import SolverConfig, evolve
from ksradial.phaseplane import vector_field
from ksradial.selfsimilar import (
    ShotRejectedError,
    TailNotConvergedError,
    extract_epsilon,
    growth_bound,
    nonautonomous_field,
    profile_rhs,
    selfsimilar_to_mass,
    shoot_for_epsilon,
    shoot_profile,
)


class TestProfileRhs:
    def test_zero_profile(self):
        assert profile_rhs(3, 1.0, 0.0, 0.0) == 0.0

    def test_singular_at_origin(self):
        with pytest.raises(ValueError):
            profile_rhs(3, 0.0, 1.0, 1.0)

    def test_quadratic_term_breaks_linearity(self):
        one = profile_rhs(4, 2.0, 1.0, 1.0)
        two = profile_rhs(4, 2.0, 2.0, 2.0)
        assert two != pytest.approx(2.0 * one, rel=1e-12)

    @pytest.mark.parametrize("d", [3, 5, 8])
    def test_launch_series_balance(self, d):
        # the power a y^{d/2} must annihilate the leading (1/y) terms: the
        # relative defect of zeta'' against the equation shrinks like y
        a = 0.7
        defects = []
        for y in (1e-4, 1e-6):
            zeta = a * y ** (0.5 * d)
            zp = 0.5 * d * a * y ** (0.5 * d - 1.0)
            zpp = 0.5 * d * (0.5 * d - 1.0) * a * y ** (0.5 * d - 2.0)
            defects.append(abs(profile_rhs(d, y, zeta, zp) - zpp) / abs(zpp))
        assert defects[0] < 1e-3
        assert defects[0] / defects[1] == pytest.approx(100.0, rel=0.05)


class TestGrowthBound:
    def test_three_dimensional_value(self):
        # (1 - 2/3)*1 + 4*2*1 = 25/3
        assert growth_bound(3, 1.0) == pytest.approx(25.0 / 3.0, rel=1e-15)

    def test_vectorized(self):
        out = growth_bound(4, np.array([1.0, 4.0]))
        np.testing.assert_allclose(out, [0.5 + 12.0, 0.5 * 16 + 12.0 * 4.0])


class TestShootProfile:
    @pytest.mark.parametrize("d", [3, 4, 5, 7])
    def test_small_amplitude_limit(self, d):
        # the linearized profile equation is a Kummer equation whose
        # regular solution is y^{d/2} M(1, d/2+1, -y/4); its large-y
        # asymptotics give eps/a -> d exactly as a -> 0
        shot = shoot_profile(d, 1e-6)
        assert shot.epsilon / 1e-6 == pytest.approx(float(d), rel=1e-4)

    def test_amplitude_linear_in_leading_coefficient(self):
        e1 = shoot_profile(3, 1e-4).epsilon
        e2 = shoot_profile(3, 2e-4).epsilon
        assert e2 / e1 == pytest.approx(2.0, rel=1e-3)

    def test_accepted_shot_invariants(self):
        shot = shoot_profile(3, 0.1)
        assert shot.epsilon is not None and shot.epsilon > 0.0
        # nondecreasing, below the a-priori bound at every node
        assert np.all(shot.zeta_prime >= 0.0)
        assert np.all(shot.zeta <= growth_bound(3, shot.y))
        # scaled tail flat over the last decade
        tail = shot.y >= shot.y_max / 10.0
        w = shot.y[tail] ** (1.0 - 1.5) * shot.zeta[tail]
        assert np.ptp(w) / np.mean(w) < 0.01

    def test_refined_residual_shrinks(self):
        # second differences of the dense profile against the equation's
        # right-hand side: defect must drop ~4x when the spacing is halved
        shot = shoot_profile(3, 0.1)
        sups = []
        for h in (0.05, 0.025):
            y = np.arange(1.0, 100.0, h)
            zeta = np.asarray(shot.interpolant(y))[0]
            zp = np.asarray(shot.interpolant(y))[1]
            fd2 = (zeta[2:] - 2.0 * zeta[1:-1] + zeta[:-2]) / h**2
            rhs = np.array(
                [profile_rhs(3, yi, zi, pi) for yi, zi, pi in zip(y, zeta, zp)]
            )
            sups.append(float(np.max(np.abs(fd2 - rhs[1:-1]))))
        assert sups[0] / sups[1] > 3.5

    def test_short_tail_leaves_amplitude_unset(self):
        # a y_max of 1e3 leaves ~1.4% tail variation: no amplitude claimed
        shot = shoot_profile(3, 0.1, y_max=1e3)
        assert shot.epsilon is None
        with pytest.raises(TailNotConvergedError):
            extract_epsilon(shot)

    def test_flatness_knob(self):
        shot = shoot_profile(3, 0.1)
        with pytest.raises(TailNotConvergedError):
            extract_epsilon(shot, flatness=1e-6)

    def test_zero_profile_amplitude(self):
        zero = shoot_profile(3, 0.1)
        zeroed = type(zero)(
            d=3, a=1.0, y=zero.y, zeta=np.zeros_like(zero.zeta),
            zeta_prime=np.zeros_like(zero.zeta),
        )
        with pytest.raises(TailNotConvergedError):
            extract_epsilon(zeroed)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            shoot_profile(3, 0.0)
        with pytest.raises(ValueError):
            shoot_profile(3, -1.0)
        with pytest.raises(ValueError):
            shoot_profile(3, 0.1, y_max=500.0)
        with pytest.raises(ValueError):
            shoot_profile(2, 0.1)

    def test_evaluation_branches(self):
        shot = shoot_profile(3, 0.25)
        assert shot(0.0) == 0.0
        # below the launch point the leading power is used
        assert shot(1e-8) == pytest.approx(0.25 * (1e-8) ** 1.5, rel=1e-12)
        with pytest.raises(ValueError):
            shot(2e4)
        with pytest.raises(ValueError):
            shot(-1.0)


class TestShootForEpsilon:
    def test_hits_target(self):
        shot = shoot_for_epsilon(3, 0.25)
        assert shot.epsilon == pytest.approx(0.25, abs=1e-9)
        assert 0.0 < shot.a < 0.5

    def test_unreachable_target(self):
        with pytest.raises(ValueError):
            shoot_for_epsilon(3, 5.0)
        with pytest.raises(ValueError):
            shoot_for_epsilon(3, -0.1)


class TestNonautonomousField:
    def test_origin_fixed_for_all_times(self):
        for tau in (-5.0, 0.0, 3.0):
            assert nonautonomous_field(3, tau, 0.0, 0.0) == (0.0, 0.0)

    def test_reduces_to_autonomous_backwards(self):
        # the drive decays like e^{2 tau}: at tau=-20 the two fields agree
        for d in (3, 6):
            for X, Z in ((1.0, 1.0), (5.0, 0.3), (2.0 * (d - 2), 2.0)):
                aX, aZ = vector_field(d, X, Z)
                nX, nZ = nonautonomous_field(d, -20.0, X, Z)
                assert abs(nX - aX) < 1e-8
                assert nZ == aZ

    def test_sector_monotonicity(self):
        # Z grows exactly where X > (d-2) Z, at any tau
        rng = np.random.default_rng(7)
        for _ in range(50):
            X, Z = rng.uniform(0.0, 10.0, size=2)
            tau = rng.uniform(-3.0, 3.0)
            _, dZ = nonautonomous_field(5, tau, X, Z)
            assert (dZ > 0.0) == (X > 3.0 * Z)

    def test_shot_is_a_trajectory(self):
        # map the profile to phase coordinates X = 2 y^{2-d/2} zeta',
        # Z = y^{1-d/2} zeta with y = e^{2 tau}: finite differences of the
        # dense profile must reproduce the nonautonomous field
        d, shot = 3, shoot_profile(3, 0.1)
        h = 1e-5

        def phase(tau):
            y = math.exp(2.0 * tau)
            zeta, zp = (float(v) for v in shot.interpolant(y))
            return 2.0 * y ** (2.0 - 0.5 * d) * zp, y ** (1.0 - 0.5 * d) * zeta

        for tau in (-1.0, 0.0, 1.0, 2.0):
            X, Z = phase(tau)
            Xp, Zp = phase(tau + h)
            Xm, Zm = phase(tau - h)
            dX, dZ = nonautonomous_field(d, tau, X, Z)
            assert (Xp - Xm) / (2.0 * h) == pytest.approx(dX, rel=1e-5)
            assert (Zp - Zm) / (2.0 * h) == pytest.approx(dZ, rel=1e-5)

    def test_phase_endpoint(self):
        # far field: the orbit lands at (2(d-2) eps, 2 eps)
        d, shot = 3, shoot_profile(3, 0.1)
        y = shot.y_max
        zeta, zp = (float(v) for v in shot.interpolant(y))
        X = 2.0 * y ** (2.0 - 0.5 * d) * zp
        Z = y ** (1.0 - 0.5 * d) * zeta
        assert X == pytest.approx(2.0 * (d - 2) * shot.epsilon, rel=1e-2)
        assert Z == pytest.approx(2.0 * shot.epsilon, rel=1e-3)


class TestSelfsimilarToMass:
    def test_origin_and_small_radius_closed_form(self):
        # below the launch point M = sigma_d a r^d / t by pure algebra
        d, a, t = 3, 0.2, 2.0
        shot = shoot_profile(d, a)
        grid = RadialGrid.uniform(1e-4, 32)
        profile = selfsimilar_to_mass(d, shot, t, grid)
        assert profile.values[0] == 0.0
        sigma = ModelParams(d).sigma_d
        expected = sigma * a * grid.nodes[1:] ** d / t
        np.testing.assert_allclose(profile.values[1:], expected, rtol=1e-10)

    def test_concentration_time_invariance(self):
        # sampling the same y-nodes at each t is a pure change of variables:
        # the concentration values agree to rounding
        d, shot = 3, shoot_profile(3, 0.1)
        ys = np.geomspace(1e-4, 9e3, 200)
        values = []
        for t in (0.5, 1.0, 2.0, 4.0):
            grid = RadialGrid(np.concatenate([[0.0], np.sqrt(ys * t)]))
            values.append(radial_concentration(selfsimilar_to_mass(d, shot, t, grid)))
        assert max(values) - min(values) <= 1e-8 * values[0]

    def test_concentration_level(self):
        # the far field is eps times the singular steady state, so the
        # concentration approaches 2 eps sigma_d
        d, shot = 3, shoot_profile(3, 0.05)
        grid = RadialGrid.log_spaced(90.0, 256, r_inner=1e-2)
        conc = radial_concentration(selfsimilar_to_mass(d, shot, 1.0, grid))
        sigma = ModelParams(d).sigma_d
        assert conc == pytest.approx(2.0 * shot.epsilon * sigma, rel=1e-2)

    def test_pde_cross_check(self):
        # evolving the t=1 slice with the mass solver to t=2 must land on
        # the t=2 slice: the strongest sign convention check in the package
        d, shot = 3, shoot_profile(3, 0.1)
        grid = RadialGrid.uniform(60.0, 1024)
        start = selfsimilar_to_mass(d, shot, 1.0, grid)
        target = selfsimilar_to_mass(d, shot, 2.0, grid)
        config = SolverConfig(n=1024, r_max=60.0, dt_init=1e-3, dt_max=5e-3)
        result = evolve(start, config, 2.0)
        final = result.trajectory[-1]
        assert abs(final.time - 2.0) < 1e-9
        err = np.max(np.abs(final.values - target.values)) / np.max(target.values)
        assert err < 1e-3

    def test_domain_errors(self):
        d, shot = 3, shoot_profile(3, 0.1)
        with pytest.raises(ValueError):
            selfsimilar_to_mass(d, shot, 1.0, RadialGrid.uniform(200.0, 32))
        with pytest.raises(ValueError):
            selfsimilar_to_mass(d, shot, 0.0, RadialGrid.uniform(1.0, 32))
        with pytest.raises(ValueError):
            selfsimilar_to_mass(4, shot, 1.0, RadialGrid.uniform(1.0, 32))
