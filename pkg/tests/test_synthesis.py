import math

import numpy as np
import pytest

import spininvert as si
from spininvert.bloch import U_MAX
from spininvert.synthesis import _newton_2d, bang_final_state

from conftest import PAPER_DELTA

# Exact two-bang optima for |delta| < U_MAX: the optimal pulse lasts exactly
# one precession period 2*pi/sqrt(U_MAX^2 + delta^2).  Frozen from the
# closed-form rotation composition; the oracle reproduces them.
TWO_BANG_TF = {
    math.pi / 2: 0.9701425001453319,
    math.pi: 0.8944271909999159,
    1.5 * math.pi: 0.8,
}


class TestBangBangPulse:
    def test_durations_and_signs(self):
        p = si.BangBangPulse(U_MAX, 1, np.array([0.2, 0.5]), 0.7)
        assert np.allclose(p.durations(), [0.2, 0.3, 0.2])
        assert list(p.signs()) == [1, -1, 1]

    def test_to_pulse_is_x_axis(self):
        p = si.BangBangPulse(U_MAX, -1, np.array([0.1]), 0.3)
        pl = p.to_pulse()
        assert all(s.uy == 0.0 for s in pl.segments)
        assert [s.ux for s in pl.segments] == [-U_MAX, U_MAX]

    def test_rejects_unordered_switches(self):
        with pytest.raises(ValueError):
            si.BangBangPulse(U_MAX, 1, np.array([0.5, 0.2]), 0.7)

    def test_rejects_switch_past_end(self):
        with pytest.raises(ValueError):
            si.BangBangPulse(U_MAX, 1, np.array([0.8]), 0.7)


class TestShoot:
    def test_resonant_pi_rotation(self):
        prob = si.ShootingProblem(delta=0.0)
        r = si.shoot(prob, np.array([0.0, -1.0 / U_MAX, 0.0]), 0.5)
        assert np.linalg.norm(r) < 1e-9

    def test_off_resonance_resonant_time_fails(self):
        prob = si.ShootingProblem(delta=PAPER_DELTA)
        r = si.shoot(prob, np.array([0.3 / U_MAX, -1.0 / U_MAX, 0.0]), 0.5)
        assert np.linalg.norm(r) > 0.1

    def test_converged_paper_costate(self, paper_solution):
        prob = si.ShootingProblem(delta=PAPER_DELTA)
        r = si.shoot(prob, paper_solution.costate0, paper_solution.t_f)
        assert np.linalg.norm(r[:2]) < 1e-10

    def test_rejects_unnormalized_costate(self):
        prob = si.ShootingProblem(delta=0.0)
        with pytest.raises(ValueError):
            si.shoot(prob, np.array([0.0, -1.0, 0.0]), 0.5)


class TestSolve:
    def test_resonant_limit(self):
        sol = si.solve_inversion_single(0.0, si.SolverConfig())
        assert sol.pulse.n_switches == 0
        assert abs(sol.t_f - 0.5) < 1e-9

    def test_paper_case_duration(self, paper_solution):
        # T_p = 6.409 ms at rfmax 120.75 Hz -> normalized 0.77389, within 1%
        assert abs(paper_solution.t_f - 0.77389) <= 0.008
        assert paper_solution.residual_norm < 1e-10
        assert not paper_solution.refined

    def test_paper_case_stable_across_seeds(self):
        sols = [si.solve_inversion_single(
            math.pi, si.SolverConfig(multistart_count=48, seed=s))
            for s in (0, 1234)]
        assert sols[0].pulse.n_switches == sols[1].pulse.n_switches
        assert abs(sols[0].t_f - sols[1].t_f) < 1e-12

    @pytest.mark.parametrize("delta", [math.pi / 2, math.pi, 1.5 * math.pi])
    def test_two_bang_regime(self, delta):
        sol = si.solve_inversion_single(delta, si.SolverConfig())
        assert sol.pulse.n_switches == 1
        assert abs(sol.t_f - TWO_BANG_TF[delta]) < 1e-6

    def test_feasibility_of_returned_pulse(self, paper_solution):
        final, _ = si.propagate_final(si.NORTH, paper_solution.pulse.to_pulse(),
                                      PAPER_DELTA, 1e-5)
        assert final[2] <= -1.0 + 1e-6

    def test_mirror_degeneracy_reported(self, pi_offset_solution):
        assert pi_offset_solution.multiplicity >= 2

    def test_mirror_costate_same_tf_paper(self, paper_solution):
        p0 = paper_solution.costate0
        px, tf, rn, z, n_sw = _newton_2d(
            PAPER_DELTA, math.copysign(1.0, -p0[1] * U_MAX), p0[0],
            paper_solution.t_f, 1e-5, 1e-10, 40, 64)
        assert rn < 1e-9 and z < 0
        assert abs(tf - paper_solution.t_f) < 1e-9

    def test_mirror_costate_same_tf_two_bang(self, pi_offset_solution):
        p0 = pi_offset_solution.costate0.copy()
        p0[1] = -p0[1]
        pt = si.ExtremalPoint(np.array([si.NORTH]), np.array([p0]), math.pi)
        traj = si.integrate_extremal(pt, pi_offset_solution.t_f, dt=1e-5)
        assert len(traj.switches) == 1
        assert np.allclose(traj.states[-1, 0], [0, 0, -1.0], atol=1e-5)


class TestRefine:
    def test_fixed_point_at_resonant_optimum(self):
        pulse = si.BangBangPulse(U_MAX, 1, np.empty(0), 0.5)
        res = si.refine_switching_times(pulse, 0.0)
        assert abs(res.pulse.t_f - 0.5) < 1e-12

    def test_paper_case_cross_validation(self, paper_solution):
        res = si.refine_switching_times(paper_solution.pulse, PAPER_DELTA)
        assert abs(res.pulse.t_f - paper_solution.t_f) < 1e-6
        assert res.converged

    def test_perturbed_recovery(self, pi_offset_solution):
        truth = pi_offset_solution.pulse
        bumped = si.BangBangPulse(U_MAX, truth.initial_sign,
                                  truth.switch_times + 1e-3, truth.t_f)
        res = si.refine_switching_times(bumped, math.pi)
        assert res.converged
        assert abs(res.pulse.t_f - truth.t_f) < 1e-6
        assert np.max(np.abs(res.pulse.switch_times
                             - truth.switch_times)) < 1e-6

    def test_never_worse_than_feasible_input(self, pi_offset_solution):
        res = si.refine_switching_times(pi_offset_solution.pulse, math.pi)
        assert res.pulse.t_f <= pi_offset_solution.t_f + 1e-10

    def test_rejects_infeasible_start(self):
        pulse = si.BangBangPulse(U_MAX, 1, np.empty(0), 0.5)
        with pytest.raises(ValueError):
            si.refine_switching_times(pulse, PAPER_DELTA)


class TestOracle:
    def test_resonant_no_switch(self):
        res = si.brute_force_oracle(0.0, 0, 200)
        assert abs(res.pulse.t_f - 0.5) <= 2.0 / 200
        assert abs(res.pulse.t_f - 0.5) < 1e-5  # polish is much tighter

    def test_single_bang_cannot_invert_off_resonance(self):
        with pytest.raises(si.OracleInfeasibleError) as e:
            si.brute_force_oracle(math.pi, 0, 200)
        assert e.value.best_z > -1.0 + 1e-3

    @pytest.mark.parametrize("delta", [math.pi / 2, math.pi, 1.5 * math.pi])
    def test_two_bang_against_closed_form(self, delta):
        res = si.brute_force_oracle(delta, 1, 400)
        assert abs(res.pulse.t_f - TWO_BANG_TF[delta]) < 1e-4

    @pytest.mark.parametrize("delta", [math.pi / 2, math.pi, 1.5 * math.pi])
    def test_matches_shooting(self, delta):
        res = si.brute_force_oracle(delta, 1, 400)
        sol = si.solve_inversion_single(delta, si.SolverConfig())
        assert abs(res.pulse.t_f - sol.t_f) < 1e-3
        assert res.pulse.n_switches == sol.pulse.n_switches

    def test_oracle_pulse_inverts(self):
        res = si.brute_force_oracle(math.pi, 1, 400)
        v = bang_final_state(res.pulse.switch_times, res.pulse.t_f,
                             res.pulse.initial_sign, math.pi)
        assert v[2] <= -1.0 + 1e-9

    def test_guards(self):
        with pytest.raises(ValueError):
            si.brute_force_oracle(1.0, 4, 100)
        with pytest.raises(ValueError):
            si.brute_force_oracle(1.0, 3, 100)
        with pytest.raises(ValueError):
            si.brute_force_oracle(1.0, 1, 500)


class TestBaseline:
    def test_duration(self):
        p = si.pi_pulse_baseline()
        assert p.duration == 0.5

    def test_inverts_on_resonance(self):
        final, _ = si.propagate_final(si.NORTH, si.pi_pulse_baseline(), 0.0,
                                      1e-4)
        assert abs(final[2] + 1.0) < 1e-9

    def test_fails_off_resonance(self):
        final, _ = si.propagate_final(si.NORTH, si.pi_pulse_baseline(),
                                      PAPER_DELTA, 1e-4)
        assert final[2] > -0.9


class TestLift:
    def _bb(self):
        return si.BangBangPulse(U_MAX, 1, np.array([0.21]), 0.6)

    def test_zero_angle_is_identity(self):
        bb = self._bb()
        lifted = si.lift_to_two_controls(bb, 0.0)
        base = bb.to_pulse()
        for a, b in zip(lifted.segments, base.segments):
            assert (a.duration, a.ux, a.uy) == (b.duration, b.ux, b.uy)

    def test_pi_gives_minus_y_axis(self):
        lifted = si.lift_to_two_controls(self._bb(), math.pi)
        assert abs(lifted.segments[0].ux) < 1e-12
        assert abs(lifted.segments[0].uy + U_MAX) < 1e-12

    @pytest.mark.parametrize("phi0", [0.0, math.pi, 2 * math.pi])
    def test_rotate_back_bit_exact(self, phi0):
        bb = self._bb()
        lifted = si.lift_to_two_controls(bb, phi0)
        back = si.rotate_pulse(lifted, -0.5 * phi0)
        for a, b in zip(back.segments, bb.to_pulse().segments):
            assert a.duration == b.duration
            assert a.ux == b.ux and a.uy == b.uy

    def test_rotate_back_generic_angle(self):
        bb = self._bb()
        phi0 = 0.8
        back = si.rotate_pulse(si.lift_to_two_controls(bb, phi0), -0.5 * phi0)
        for a, b in zip(back.segments, bb.to_pulse().segments):
            assert abs(a.ux - b.ux) < 1e-14 and abs(a.uy - b.uy) < 1e-14

    def test_norm_is_amplitude_everywhere(self):
        lifted = si.lift_to_two_controls(self._bb(), 1.234)
        for s in lifted.segments:
            assert abs(s.amplitude - U_MAX) < 1e-12

    def test_simulated_states_agree_under_rotation(self, paper_solution):
        phi0 = 1.1
        lifted = si.lift_to_two_controls(paper_solution.pulse, phi0)
        direct, _ = si.propagate_final(si.NORTH, lifted, PAPER_DELTA, 1e-4)
        base, _ = si.propagate_final(si.NORTH, paper_solution.pulse.to_pulse(),
                                     PAPER_DELTA, 1e-4)
        assert np.max(np.abs(direct - si.rotate_z(base, 0.5 * phi0))) < 1e-9
