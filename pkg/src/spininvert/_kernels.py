"""Numba inner loops: fixed-step RK4 for Bloch and extremal flows.

Everything here works on raw float64 arrays so the jitted code stays
allocation-free.  The public modules wrap these in friendlier types.

Status codes returned by the extremal integrators:
    0  completed
    1  switch limit exceeded (chattering guard)
    2  singular-arc suspicion (switching function flat at zero / on the
       switching surface)
    3  invalid start (switching function exactly zero at t = 0)
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_CHATTER = 1
STATUS_SINGULAR = 2
STATUS_BAD_START = 3


@njit(cache=True, nogil=True, inline="always")
def _bloch_rhs(y, ux, uy, delta, out):
    # precession about (ux, uy, delta)
    out[0] = -delta * y[1] + uy * y[2]
    out[1] = delta * y[0] - ux * y[2]
    out[2] = ux * y[1] - uy * y[0]


@njit(cache=True, nogil=True)
def _rk4_bloch(y, ux, uy, delta, h, out):
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    tmp = np.empty(3)
    _bloch_rhs(y, ux, uy, delta, k1)
    for i in range(3):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _bloch_rhs(tmp, ux, uy, delta, k2)
    for i in range(3):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _bloch_rhs(tmp, ux, uy, delta, k3)
    for i in range(3):
        tmp[i] = y[i] + h * k3[i]
    _bloch_rhs(tmp, ux, uy, delta, k4)
    for i in range(3):
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def propagate_sampled(m0, taus, uxs, uys, delta, dt, times, states):
    """Integrate a piecewise-constant pulse, recording every step.

    ``times``/``states`` must be preallocated with room for
    1 + sum(ceil(tau/dt)) samples.  Returns the number of samples written.
    Segment boundaries are always sample points (the last step of each
    segment is clipped).
    """
    y = m0.copy()
    t = 0.0
    k = 0
    times[k] = 0.0
    states[k, 0] = y[0]
    states[k, 1] = y[1]
    states[k, 2] = y[2]
    k += 1
    ynew = np.empty(3)
    for s in range(taus.shape[0]):
        tau = taus[s]
        ux = uxs[s]
        uy = uys[s]
        done = 0.0
        while done < tau - 1e-15:
            h = dt
            if done + h > tau:
                h = tau - done
            _rk4_bloch(y, ux, uy, delta, h, ynew)
            for i in range(3):
                y[i] = ynew[i]
            done += h
            t += h
            times[k] = t
            states[k, 0] = y[0]
            states[k, 1] = y[1]
            states[k, 2] = y[2]
            k += 1
    return k


@njit(cache=True, nogil=True)
def propagate_final(m0, taus, uxs, uys, delta, dt):
    """Same integration as propagate_sampled but returns only the final
    state and the worst norm deviation seen at step boundaries."""
    y = m0.copy()
    ynew = np.empty(3)
    worst = abs(np.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2) - 1.0)
    for s in range(taus.shape[0]):
        tau = taus[s]
        ux = uxs[s]
        uy = uys[s]
        done = 0.0
        while done < tau - 1e-15:
            h = dt
            if done + h > tau:
                h = tau - done
            _rk4_bloch(y, ux, uy, delta, h, ynew)
            for i in range(3):
                y[i] = ynew[i]
            done += h
            nrm = abs(np.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2) - 1.0)
            if nrm > worst:
                worst = nrm
    return y, worst


# ---------------------------------------------------------------------------
# Single-spin extremal flow (state + costate, one control along x)
# ---------------------------------------------------------------------------
#
# Both the state and the costate precess about (u, 0, delta), so the joint
# 6-vector y = (x, p) obeys two copies of the Bloch right-hand side.  The
# switching function is phi = y*pz - z*py = (x cross p) . e_x and its time
# derivative -delta*(z*px - x*pz) does not depend on the control, which makes
# event location stable across the bang flip.


@njit(cache=True, nogil=True, inline="always")
def _ext_rhs(y, u, delta, out):
    out[0] = -delta * y[1]
    out[1] = delta * y[0] - u * y[2]
    out[2] = u * y[1]
    out[3] = -delta * y[4]
    out[4] = delta * y[3] - u * y[5]
    out[5] = u * y[4]


@njit(cache=True, nogil=True)
def _rk4_ext(y, u, delta, h, out):
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    _ext_rhs(y, u, delta, k1)
    for i in range(6):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _ext_rhs(tmp, u, delta, k2)
    for i in range(6):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _ext_rhs(tmp, u, delta, k3)
    for i in range(6):
        tmp[i] = y[i] + h * k3[i]
    _ext_rhs(tmp, u, delta, k4)
    for i in range(6):
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True, inline="always")
def _phi(y):
    return y[1] * y[5] - y[2] * y[4]


@njit(cache=True, nogil=True, inline="always")
def _phidot(y, delta):
    return -delta * (y[2] * y[3] - y[0] * y[5])


@njit(cache=True, nogil=True)
def _locate(y, u, delta, h, sgn, on_phidot, time_tol):
    """Bisect over the sub-step [0, h] for the first zero of phi (or of
    phidot when on_phidot), returning the bracket end past the zero."""
    ya = np.empty(6)
    a = 0.0
    b = h
    while b - a > time_tol:
        m = 0.5 * (a + b)
        _rk4_ext(y, u, delta, m, ya)
        f = _phidot(ya, delta) if on_phidot else _phi(ya)
        if sgn * f > 0.0:
            a = m
        else:
            b = m
    return b


@njit(cache=True, nogil=True)
def extremal_single(x0, p0, delta, u0, t_max, dt, max_switches,
                    time_tol, touch_tol, singular_tol,
                    sw_times, sw_phis, sw_kinds,
                    times, states, record):
    """Bang-bang extremal with event detection.

    Control feedback is u0*sign(phi).  Two event kinds are handled:

    * crossing: phi changes sign across a step; the zero is bisected to
      ``time_tol`` and the control flips there.
    * tangent: phidot changes sign (a local extremum of phi) with |phi| at
      the extremum below ``touch_tol``.  Isolated double zeros of this kind
      occur at the two-bang optima, where the control also flips, provided
      the flipped branch is consistent (delta * p_phi > 0 at the zero).

    Returns (status, n_switches, n_samples, y_final, t_closest, d_closest)
    where the closest approach is to the south pole.
    """
    y = np.empty(6)
    for i in range(3):
        y[i] = x0[i]
        y[3 + i] = p0[i]
    ynew = np.empty(6)
    yz = np.empty(6)
    n_sw = 0
    n_rec = 0
    if record:
        times[n_rec] = 0.0
        for i in range(6):
            states[n_rec, i] = y[i]
        n_rec += 1
    phi = _phi(y)
    if phi == 0.0:
        return STATUS_BAD_START, 0, n_rec, y, 0.0, 2.0
    u = u0 if phi > 0.0 else -u0
    t = 0.0
    d_best = np.sqrt(y[0] ** 2 + y[1] ** 2 + (y[2] + 1.0) ** 2)
    t_best = 0.0
    flat = 0
    while t < t_max - 1e-15:
        h = dt
        if t + h > t_max:
            h = t_max - t
        _rk4_ext(y, u, delta, h, ynew)
        sgn = 1.0 if u > 0.0 else -1.0
        phi_new = _phi(ynew)
        event = False
        ts = h
        if sgn * phi_new < 0.0:
            ts = _locate(y, u, delta, h, sgn, False, time_tol)
            event = True
        else:
            pd0 = _phidot(y, delta)
            pd1 = _phidot(ynew, delta)
            # extremum of phi headed toward zero inside the step
            if sgn * pd0 < 0.0 <= sgn * pd1 and \
                    min(abs(phi), abs(phi_new)) < 1e3 * touch_tol:
                ts = _locate(y, u, delta, h, -sgn, True, time_tol)
                _rk4_ext(y, u, delta, ts, yz)
                p_phi = yz[0] * yz[4] - yz[1] * yz[3]
                # ts >= 1e-9 rejects re-detecting the zero an arc starts on
                if ts >= 1e-9 and abs(_phi(yz)) <= touch_tol \
                        and delta * p_phi > 0.0:
                    event = True
        if event:
            if n_sw >= max_switches:
                return STATUS_CHATTER, n_sw, n_rec, y, t_best, d_best
            _rk4_ext(y, u, delta, ts, yz)
            for i in range(6):
                y[i] = yz[i]
            t += ts
            sw_times[n_sw] = t
            sw_phis[n_sw] = abs(_phi(y))
            sw_kinds[n_sw] = 0 if sgn * phi_new < 0.0 else 1
            n_sw += 1
            u = -u
        else:
            for i in range(6):
                y[i] = ynew[i]
            t += h
        if record:
            times[n_rec] = t
            for i in range(6):
                states[n_rec, i] = y[i]
            n_rec += 1
        phi = _phi(y)
        # singular-arc suspicion: phi and phidot both pinned at zero
        if abs(phi) < singular_tol and abs(_phidot(y, delta)) < singular_tol:
            flat += 1
            if flat > 2:
                return STATUS_SINGULAR, n_sw, n_rec, y, t_best, d_best
        else:
            flat = 0
        d = np.sqrt(y[0] ** 2 + y[1] ** 2 + (y[2] + 1.0) ** 2)
        if d < d_best:
            d_best = d
            t_best = t
    return STATUS_OK, n_sw, n_rec, y, t_best, d_best


# ---------------------------------------------------------------------------
# Two-spin extremal flow (12 states: x_a, p_a, x_b, p_b; offsets +/- delta)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _rho(y, out):
    # out = (p.Gx, p.Gy) summed over both spins
    rx = (y[4] * (-y[2]) + y[5] * y[1]) + (y[10] * (-y[8]) + y[11] * y[7])
    ry = (y[3] * y[2] - y[5] * y[0]) + (y[9] * y[8] - y[11] * y[6])
    out[0] = rx
    out[1] = ry


@njit(cache=True, nogil=True)
def _ext2_rhs(y, delta, u0, out):
    r = np.empty(2)
    _rho(y, r)
    rho = np.sqrt(r[0] ** 2 + r[1] ** 2)
    ux = u0 * r[0] / rho
    uy = u0 * r[1] / rho
    # spin a (+delta): x and p both precess about (ux, uy, +delta)
    out[0] = -delta * y[1] + uy * y[2]
    out[1] = delta * y[0] - ux * y[2]
    out[2] = ux * y[1] - uy * y[0]
    out[3] = -delta * y[4] + uy * y[5]
    out[4] = delta * y[3] - ux * y[5]
    out[5] = ux * y[4] - uy * y[3]
    # spin b (-delta)
    out[6] = delta * y[7] + uy * y[8]
    out[7] = -delta * y[6] - ux * y[8]
    out[8] = ux * y[7] - uy * y[6]
    out[9] = delta * y[10] + uy * y[11]
    out[10] = -delta * y[9] - ux * y[11]
    out[11] = ux * y[10] - uy * y[9]


@njit(cache=True, nogil=True)
def _ext2_rhs_frozen(y, delta, ux, uy, out):
    out[0] = -delta * y[1] + uy * y[2]
    out[1] = delta * y[0] - ux * y[2]
    out[2] = ux * y[1] - uy * y[0]
    out[3] = -delta * y[4] + uy * y[5]
    out[4] = delta * y[3] - ux * y[5]
    out[5] = ux * y[4] - uy * y[3]
    out[6] = delta * y[7] + uy * y[8]
    out[7] = -delta * y[6] - ux * y[8]
    out[8] = ux * y[7] - uy * y[6]
    out[9] = delta * y[10] + uy * y[11]
    out[10] = -delta * y[9] - ux * y[11]
    out[11] = ux * y[10] - uy * y[9]


@njit(cache=True, nogil=True)
def _rk4_ext2_frozen(y, delta, ux, uy, h, out):
    # constant-control step: used to relocate steps onto switching-surface
    # passages, where the feedback flips inside the step
    k1 = np.empty(12)
    k2 = np.empty(12)
    k3 = np.empty(12)
    k4 = np.empty(12)
    tmp = np.empty(12)
    _ext2_rhs_frozen(y, delta, ux, uy, k1)
    for i in range(12):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _ext2_rhs_frozen(tmp, delta, ux, uy, k2)
    for i in range(12):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _ext2_rhs_frozen(tmp, delta, ux, uy, k3)
    for i in range(12):
        tmp[i] = y[i] + h * k3[i]
    _ext2_rhs_frozen(tmp, delta, ux, uy, k4)
    for i in range(12):
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def _rk4_ext2(y, delta, u0, h, out):
    k1 = np.empty(12)
    k2 = np.empty(12)
    k3 = np.empty(12)
    k4 = np.empty(12)
    tmp = np.empty(12)
    _ext2_rhs(y, delta, u0, k1)
    for i in range(12):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _ext2_rhs(tmp, delta, u0, k2)
    for i in range(12):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _ext2_rhs(tmp, delta, u0, k3)
    for i in range(12):
        tmp[i] = y[i] + h * k3[i]
    _ext2_rhs(tmp, delta, u0, k4)
    for i in range(12):
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True, nogil=True)
def extremal_two(y0, delta, u0, t_max, dt, max_switches, time_tol, rho_floor,
                 sw_times, sw_phis, times, states, controls):
    """Two-control extremal with feedback (ux, uy) = u0 * rho / |rho|.

    The integration steps are split at passages through the switching
    surface (rho reversing direction across a step); there the feedback
    formula flips by itself, so only the step boundary needs relocating.
    Records every step into the provided buffers; returns
    (status, n_switches, n_samples).
    """
    y = y0.copy()
    ynew = np.empty(12)
    yz = np.empty(12)
    r0 = np.empty(2)
    r1 = np.empty(2)
    n_sw = 0
    n_rec = 0
    t = 0.0
    _rho(y, r0)
    if np.sqrt(r0[0] ** 2 + r0[1] ** 2) < rho_floor:
        return STATUS_BAD_START, 0, n_rec
    times[n_rec] = 0.0
    for i in range(12):
        states[n_rec, i] = y[i]
    rho = np.sqrt(r0[0] ** 2 + r0[1] ** 2)
    controls[n_rec, 0] = u0 * r0[0] / rho
    controls[n_rec, 1] = u0 * r0[1] / rho
    n_rec += 1
    while t < t_max - 1e-15:
        h = dt
        if t + h > t_max:
            h = t_max - t
        _rho(y, r0)
        _rk4_ext2(y, delta, u0, h, ynew)
        _rho(ynew, r1)
        if r0[0] * r1[0] + r0[1] * r1[1] < 0.0:
            # direction reversed through the switching surface: relocate the
            # step end onto the passage, using frozen-control sub-steps so no
            # stage evaluates the feedback on the far side
            rho0 = np.sqrt(r0[0] ** 2 + r0[1] ** 2)
            ux_f = u0 * r0[0] / rho0
            uy_f = u0 * r0[1] / rho0
            use_x = abs(r0[0]) + abs(r1[0]) >= abs(r0[1]) + abs(r1[1])
            f0 = r0[0] if use_x else r0[1]
            sgn = 1.0 if f0 > 0.0 else -1.0
            a = 0.0
            b = h
            while b - a > time_tol:
                m = 0.5 * (a + b)
                _rk4_ext2_frozen(y, delta, ux_f, uy_f, m, yz)
                _rho(yz, r1)
                f = r1[0] if use_x else r1[1]
                if sgn * f > 0.0:
                    a = m
                else:
                    b = m
            ts = b
            if n_sw >= max_switches:
                return STATUS_CHATTER, n_sw, n_rec
            _rk4_ext2_frozen(y, delta, ux_f, uy_f, ts, yz)
            for i in range(12):
                y[i] = yz[i]
            t += ts
            _rho(y, r1)
            sw_times[n_sw] = t
            sw_phis[n_sw] = np.sqrt(r1[0] ** 2 + r1[1] ** 2)
            n_sw += 1
        else:
            rho = np.sqrt(r1[0] ** 2 + r1[1] ** 2)
            if rho < rho_floor:
                return STATUS_SINGULAR, n_sw, n_rec
            for i in range(12):
                y[i] = ynew[i]
            t += h
        times[n_rec] = t
        for i in range(12):
            states[n_rec, i] = y[i]
        _rho(y, r1)
        rho = np.sqrt(r1[0] ** 2 + r1[1] ** 2)
        controls[n_rec, 0] = u0 * r1[0] / rho
        controls[n_rec, 1] = u0 * r1[1] / rho
        n_rec += 1
    return STATUS_OK, n_sw, n_rec
