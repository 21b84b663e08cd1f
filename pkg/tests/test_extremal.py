import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import spininvert as si
from spininvert.bloch import U_MAX
from spininvert.synthesis import _bang_axes, _rotate_about

from conftest import PAPER_DELTA, two_spin_paper_start


def _single_point(m, p, delta):
    return si.ExtremalPoint(np.array([m]), np.array([p]), delta)


# ---------------------------------------------------------------------------
# finite-difference vector-field oracle in the (theta, phi) chart
# ---------------------------------------------------------------------------

def _field_g(q):
    th, ph = q
    return np.array([-math.sin(ph), -math.cos(ph) / math.tan(th)])


def _field_f(q, delta):
    return np.array([0.0, delta])


def fd_lie(a, b, q, h=1e-5):
    """lie(A, B) = J_A B - J_B A by central differences."""
    ja = np.empty((2, 2))
    jb = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        ja[:, j] = (a(q + e) - a(q - e)) / (2 * h)
        jb[:, j] = (b(q + e) - b(q - e)) / (2 * h)
    return ja @ b(q) - jb @ a(q)


class TestSwitchingFunction:
    def test_north_pole_example(self):
        pt = _single_point([0.0, 0.0, 1.0], [0.0, -1.0, 0.0], 1.0)
        assert si.switching_function(pt, "x") == 1.0

    def test_orthogonal_costate_gives_zero(self):
        pt = _single_point([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 1.0)
        assert si.switching_function(pt, "x") == 0.0

    def test_equator_spherical_check(self):
        # theta = pi/2, phi = 0: both spherical terms vanish for any costate
        m = np.array([1.0, 0.0, 0.0])
        p = si.cartesian_costate(si.SphericalState(1.0, math.pi / 2, 0.0),
                                 p_theta=0.7, p_phi=-0.4)
        pt = _single_point(m, p, 2.0)
        assert abs(si.switching_function(pt, "x")) < 1e-15

    def test_single_spin_has_no_y_axis(self):
        pt = _single_point([0.0, 0.0, 1.0], [0.0, -1.0, 0.0], 1.0)
        with pytest.raises(ValueError):
            si.switching_function(pt, "y")


class TestHamiltonians:
    def test_single_drift_free_pole(self):
        pt = _single_point([0.0, 0.0, 1.0], [0.0, -1.0, 0.0], 0.0)
        assert abs(si.pseudo_hamiltonian_single(pt, U_MAX) - U_MAX) < 1e-14

    def test_single_orthogonal_costate(self):
        # costate orthogonal to both drift and control fields at the point
        pt = _single_point([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 3.0)
        for u in (0.0, 1.0, -U_MAX):
            assert abs(si.pseudo_hamiltonian_single(pt, u)) < 1e-14

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10))
    def test_single_linear_in_u_max(self, py, pz, delta):
        pt = _single_point([0.0, 0.0, 1.0], [0.4, py, pz], delta)
        manual = max(si.pseudo_hamiltonian_single(pt, U_MAX),
                     si.pseudo_hamiltonian_single(pt, -U_MAX))
        assert abs(si.max_pseudo_hamiltonian_single(pt) - manual) < 1e-12

    def _equator_pair(self, phi, p_theta_a, p_theta_b, p_phi_a, p_phi_b):
        m = si.from_spherical(si.SphericalState(1.0, math.pi / 2, phi))
        s = si.SphericalState(1.0, math.pi / 2, phi)
        pa = si.cartesian_costate(s, p_theta_a, p_phi_a)
        pb = si.cartesian_costate(s, p_theta_b, p_phi_b)
        return np.array([m, m]), np.array([pa, pb])

    def test_two_spin_equator_symmetric(self):
        # p_theta = 1 on both spins, equal azimuths, zero p_phi: the control
        # projections have magnitude 2, so H = U_MAX * 2
        states, costates = self._equator_pair(0.3, 1.0, 1.0, 0.0, 0.0)
        pt = si.ExtremalPoint(states, costates, 5.0)
        assert abs(si.normal_hamiltonian_two_spin(pt) - 2 * U_MAX) < 1e-12

    def test_two_spin_equator_asymmetric(self):
        # p_theta = (1, 0), p_phi = (1/2, -1/2), delta = 1: drift term 1,
        # projection magnitude 1, so H = 1 + U_MAX
        states, costates = self._equator_pair(0.7, 1.0, 0.0, 0.5, -0.5)
        pt = si.ExtremalPoint(states, costates, 1.0)
        assert abs(si.normal_hamiltonian_two_spin(pt) - (1.0 + U_MAX)) < 1e-12

    def test_two_spin_flags_switching_surface(self):
        pt = si.ExtremalPoint(np.array([[0, 0, 1.0], [0, 0, 1.0]]),
                              np.zeros((2, 3)), 1.0)
        with pytest.raises(si.OnSwitchingSurfaceError):
            si.normal_hamiltonian_two_spin(pt)


class TestOptimalControls:
    def test_three_four_five(self):
        # projections (3, 4) at the pole: Gx = (0,-1,0), Gy = (1,0,0)
        pa = np.array([4.0, -3.0, 0.0])
        pt = si.ExtremalPoint(np.array([[0, 0, 1.0], [0, 0, 1.0]]),
                              np.array([pa, np.zeros(3)]), 1.0)
        ux, uy = si.optimal_controls_two_spin(pt)
        assert abs(ux - U_MAX * 0.6) < 1e-12
        assert abs(uy - U_MAX * 0.8) < 1e-12
        assert abs(math.hypot(ux, uy) - U_MAX) < 1e-12

    def test_pure_x_projection(self):
        pa = np.array([0.0, -2.5, 0.0])
        pt = si.ExtremalPoint(np.array([[0, 0, 1.0], [0, 0, 1.0]]),
                              np.array([pa, np.zeros(3)]), 1.0)
        ux, uy = si.optimal_controls_two_spin(pt)
        assert (ux, uy) == (U_MAX, 0.0)

    def test_control_line_fixed_for_inversion_extremal(self, paper_solution):
        pt0 = two_spin_paper_start(paper_solution)
        traj = si.integrate_extremal(pt0, paper_solution.t_f, dt=1e-4)
        angles = np.arctan2(traj.controls[:, 1], traj.controls[:, 0])
        # all controls on the x line: angle 0 or pi
        line = np.minimum(np.abs(angles), np.abs(np.abs(angles) - math.pi))
        assert np.max(line) < 1e-12


class TestExtremalRhs:
    def test_hamiltonian_stationary_single(self):
        pt = _single_point([0.6, 0.0, 0.8], [0.1, -0.3, 0.2], 2.0)
        d = si.extremal_rhs(pt)
        eps = 1e-7
        pt2 = si.ExtremalPoint(pt.states + eps * d.states,
                               pt.costates + eps * d.costates, pt.delta)
        h1 = si.max_pseudo_hamiltonian_single(pt)
        h2 = si.max_pseudo_hamiltonian_single(pt2)
        assert abs(h2 - h1) / eps < 1e-5

    def test_symmetry_subspace_preserved(self):
        # theta/p_theta equal, azimuths and p_phi mirrored: the derivative
        # stays in the subspace (x_b, p_b) = M (x_a, p_a), M = diag(1,-1,1)
        m = np.array([1.0, -1.0, 1.0])
        xa = np.array([0.5, 0.6, math.sqrt(1 - 0.25 - 0.36)])
        pa = np.array([0.2, -0.1, 0.05])
        pt = si.ExtremalPoint(np.array([xa, m * xa]), np.array([pa, m * pa]),
                              3.0)
        d = si.extremal_rhs(pt)
        assert np.max(np.abs(d.states[1] - m * d.states[0])) < 1e-14
        assert np.max(np.abs(d.costates[1] - m * d.costates[0])) < 1e-14

    def test_pole_start_descends(self):
        pa = np.array([0.3, -0.4, 0.0])
        pb = np.array([-0.2, -0.5, 0.0])
        pt = si.ExtremalPoint(np.array([si.NORTH, si.NORTH]),
                              np.array([pa, pb]), PAPER_DELTA)
        traj = si.integrate_extremal(pt, 0.05, dt=1e-4)
        assert traj.states[-1, 0, 2] < 1.0 - 1e-4
        assert traj.states[-1, 1, 2] < 1.0 - 1e-4

    def test_rhs_raises_on_zero_switching_function(self):
        pt = _single_point([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 1.0)
        with pytest.raises(ValueError):
            si.extremal_rhs(pt)


class TestIntegrateExtremal:
    def test_resonant_pure_bang(self):
        pt = _single_point([0.0, 0.0, 1.0], [0.0, -1.0, 0.0], 0.0)
        traj = si.integrate_extremal(pt, 0.5, dt=1e-4)
        assert traj.switches == []
        assert np.allclose(traj.states[-1, 0], [0.0, 0.0, -1.0], atol=1e-8)

    def test_paper_case_switch_times_match_pulse(self, paper_solution):
        p0 = paper_solution.costate0
        pt = _single_point(si.NORTH, p0, PAPER_DELTA)
        traj = si.integrate_extremal(pt, paper_solution.t_f, dt=1e-5)
        times = np.array([s.time for s in traj.switches])
        assert times.size == paper_solution.pulse.n_switches
        assert np.max(np.abs(times - paper_solution.pulse.switch_times)) < 1e-9

    def test_paper_case_crossings_are_transversal(self, paper_solution):
        pt = _single_point(si.NORTH, paper_solution.costate0, PAPER_DELTA)
        traj = si.integrate_extremal(pt, paper_solution.t_f, dt=1e-5)
        for rec in traj.switches:
            assert rec.kind == "crossing"
            assert rec.phi_value < 1e-12
            assert rec.sign_before == -rec.sign_after
        # phi changes sign across +/- 1e-9 around each located zero
        i_sw = 0
        plus, minus, speed = _bang_axes(PAPER_DELTA)
        for rec in traj.switches:
            i = int(np.searchsorted(traj.times, rec.time))
            x, p = traj.states[i, 0], traj.costates[i, 0]
            ax_b = plus if rec.sign_before > 0 else minus
            ax_a = plus if rec.sign_after > 0 else minus
            xb = _rotate_about(ax_b, -speed * 1e-9, x)
            pb = _rotate_about(ax_b, -speed * 1e-9, p)
            xa = _rotate_about(ax_a, speed * 1e-9, x)
            pa = _rotate_about(ax_a, speed * 1e-9, p)
            phi_b = xb[1] * pb[2] - xb[2] * pb[1]
            phi_a = xa[1] * pa[2] - xa[2] * pa[1]
            assert phi_b * phi_a < 0.0
            i_sw += 1
        assert i_sw == 6

    def test_two_bang_optimum_has_one_tangent_switch(self, pi_offset_solution):
        pt = _single_point(si.NORTH, pi_offset_solution.costate0, math.pi)
        traj = si.integrate_extremal(pt, pi_offset_solution.t_f, dt=1e-5)
        assert len(traj.switches) == 1
        assert traj.switches[0].kind == "tangent"
        assert abs(traj.switches[0].time
                   - pi_offset_solution.pulse.switch_times[0]) < 1e-6
        assert np.allclose(traj.states[-1, 0], [0, 0, -1.0], atol=1e-5)

    def test_single_hamiltonian_conserved(self, paper_solution):
        pt = _single_point(si.NORTH, paper_solution.costate0, PAPER_DELTA)
        traj = si.integrate_extremal(pt, paper_solution.t_f, dt=1e-5)
        h = []
        for i in range(0, len(traj.times), 101):
            p = traj.point_at(i)
            h.append(si.max_pseudo_hamiltonian_single(p))
        h = np.array(h)
        assert np.max(np.abs(h - h[0])) < 1e-6

    def test_chattering_guard(self):
        pt = _single_point(si.NORTH, np.array([-0.235536 / U_MAX,
                                               -1.0 / U_MAX, 0.0]),
                           PAPER_DELTA)
        with pytest.raises(si.ChatteringError):
            si.integrate_extremal(pt, 0.775, dt=1e-4, max_switches=3)

    def test_singular_diagnostic(self):
        # costate nearly radial on the equator: the switching function and
        # its derivative are both pinned at ~1e-14
        x0 = np.array([math.cos(0.3), math.sin(0.3), 0.0])
        p0 = x0 + np.array([0.0, 0.0, 1e-14])
        pt = _single_point(x0, p0, 1.0)
        with pytest.raises(si.SingularArcError):
            si.integrate_extremal(pt, 0.5, dt=1e-3)

    def test_bad_start_rejected(self):
        pt = _single_point(si.NORTH, np.array([0.0, 0.0, 1.0]), 1.0)
        with pytest.raises(ValueError):
            si.integrate_extremal(pt, 0.5, dt=1e-3)


class TestSingularLocus:
    def test_equator_is_zero(self):
        for phi in np.linspace(0, 2 * math.pi, 7):
            s = si.SphericalState(1.0, math.pi / 2, phi)
            assert si.singular_locus_value(s, 5.0) == 0.0

    def test_known_value(self):
        s = si.SphericalState(1.0, math.pi / 4, 0.3)
        assert abs(si.singular_locus_value(s, 1.0) - (-1.0)) < 1e-12

    def test_drift_free_degenerate(self):
        s = si.SphericalState(1.0, 1.1, 0.3)
        assert si.singular_locus_value(s, 0.0) == 0.0

    def test_poles_rejected(self):
        with pytest.raises(ValueError):
            si.singular_locus_value(si.SphericalState(1.0, 0.0, 0.0), 1.0)

    @pytest.mark.parametrize("delta", [1.0, 8 * math.pi])
    def test_against_fd_brackets(self, delta):
        g = _field_g
        f = lambda q: _field_f(q, delta)
        worst = 0.0
        for th in np.linspace(0.2, math.pi - 0.2, 20):
            for ph in np.linspace(0.0, 2 * math.pi, 20, endpoint=False):
                q = np.array([th, ph])
                w = fd_lie(g, f, q)
                det = g(q)[0] * w[1] - g(q)[1] * w[0]
                ana = si.singular_locus_value(
                    si.SphericalState(1.0, th, ph), delta)
                worst = max(worst, abs(det - ana))
        assert worst < 1e-6


class TestSingularControl:
    def test_zero_on_locus(self):
        for phi, delta in ((math.pi / 4, 1.0), (1.0, 8 * math.pi)):
            s = si.SphericalState(1.0, math.pi / 2, phi)
            assert si.singular_control(s, delta) == 0.0

    def test_admissible(self):
        for phi in np.linspace(0.1, 2 * math.pi, 9):
            s = si.SphericalState(1.0, math.pi / 2, phi)
            assert abs(si.singular_control(s, 5.0)) <= U_MAX

    def test_off_locus_rejected(self):
        with pytest.raises(ValueError):
            si.singular_control(si.SphericalState(1.0, 1.0, 0.0), 1.0)

    @pytest.mark.parametrize("phi,delta", [(math.pi / 4, 1.0),
                                           (1.0, 8 * math.pi)])
    def test_against_fd_bracket_feedback(self, phi, delta):
        # coefficients of the second derivative of the switching function,
        # projected on the costate annihilating G and lie(G, F)
        g = _field_g
        f = lambda q: _field_f(q, delta)
        w = lambda q: fd_lie(g, f, q)
        q = np.array([math.pi / 2, phi])
        p_ann = np.array([0.0, 1.0])
        assert abs(p_ann @ g(q)) < 1e-9
        assert abs(p_ann @ w(q)) < 1e-9
        drift_coef = p_ann @ fd_lie(f, w, q)
        control_coef = p_ann @ fd_lie(g, w, q)
        assert abs(control_coef) > 0.1 * delta  # solvable for u_s
        u_s = -drift_coef / control_coef
        assert abs(u_s - si.singular_control(
            si.SphericalState(1.0, math.pi / 2, phi), delta)) < 1e-6


class TestCanonicalPhases:
    def test_equal_azimuths(self):
        m = si.from_spherical(si.SphericalState(1.0, 1.0, 0.8))
        pt = si.ExtremalPoint(np.array([m, m]), np.zeros((2, 3)), 1.0)
        cp = si.canonical_phases(pt)
        assert abs(cp.phi_plus - 1.6) < 1e-12
        assert abs(cp.phi_minus) < 1e-12

    def test_pole_start_zero_momenta(self):
        pt = si.ExtremalPoint(np.array([si.NORTH, si.NORTH]),
                              np.array([[0.3, -0.4, 0.0], [0.1, 0.2, 0.0]]),
                              1.0)
        cp = si.canonical_phases(pt)
        assert cp.p_phi_plus == 0.0 and cp.p_phi_minus == 0.0
        assert cp.phi_plus == 0.0  # pole convention

    def test_momentum_split_consistent(self):
        xa = si.from_spherical(si.SphericalState(1.0, 1.2, 0.4))
        xb = si.from_spherical(si.SphericalState(1.0, 0.9, -1.1))
        pa, pb = np.array([0.2, 0.4, -0.1]), np.array([-0.3, 0.1, 0.2])
        pt = si.ExtremalPoint(np.array([xa, xb]), np.array([pa, pb]), 1.0)
        cp = si.canonical_phases(pt)
        ppa = xa[0] * pa[1] - xa[1] * pa[0]
        ppb = xb[0] * pb[1] - xb[1] * pb[0]
        assert abs((cp.p_phi_plus + cp.p_phi_minus) - ppa) < 1e-15
        assert abs((cp.p_phi_plus - cp.p_phi_minus) - ppb) < 1e-15


class TestCostateViews:
    @given(theta=st.floats(0.1, math.pi - 0.1), phi=st.floats(0, 6.2),
           pt=st.floats(-3, 3), pp=st.floats(-3, 3))
    def test_round_trip(self, theta, phi, pt, pp):
        s = si.SphericalState(1.0, theta, phi)
        p = si.cartesian_costate(s, pt, pp)
        m = si.from_spherical(s)
        pt2, pp2 = si.spherical_costate(m, p)
        assert abs(pt2 - pt) < 1e-9 * max(1, abs(pt))
        assert abs(pp2 - pp) < 1e-9 * max(1, abs(pp))


class TestTwoSpinFlow:
    def test_symmetric_subspace_invariance(self):
        m = np.array([1.0, -1.0, 1.0])
        xa = si.NORTH.copy()
        pa = np.array([0.27, -0.31, 0.0])
        pt = si.ExtremalPoint(np.array([xa, m * xa]), np.array([pa, m * pa]),
                              1.5 * math.pi)
        traj = si.integrate_extremal(pt, 0.8, dt=1e-4)
        viol = max(
            np.max(np.abs(traj.states[:, 1] - traj.states[:, 0] * m)),
            np.max(np.abs(traj.costates[:, 1] - traj.costates[:, 0] * m)))
        assert viol < 1e-8

    def test_generic_hamiltonian_conserved(self):
        pa = np.array([0.21, -0.33, 0.0])
        pb = np.array([-0.11, -0.42, 0.0])
        pt = si.ExtremalPoint(np.array([si.NORTH, si.NORTH]),
                              np.array([pa, pb]), 2.0)
        traj = si.integrate_extremal(pt, 2.0, dt=1e-5)
        h = np.array([si.normal_hamiltonian_two_spin(traj.point_at(i))
                      for i in range(0, len(traj.times), 211)])
        assert np.max(np.abs(h - h[0])) < 1e-6

    def test_p_phi_plus_conserved_generic(self):
        pa = np.array([0.21, -0.33, 0.1])
        pb = np.array([-0.11, -0.42, -0.2])
        pt = si.ExtremalPoint(np.array([si.NORTH, si.NORTH]),
                              np.array([pa, pb]), 2.0)
        traj = si.integrate_extremal(pt, 1.0, dt=1e-4)
        vals = np.array([si.p_phi_plus_invariant(traj.point_at(i))
                         for i in range(0, len(traj.times), 101)])
        assert np.max(np.abs(vals - vals[0])) < 1e-8
