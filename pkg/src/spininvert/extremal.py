"""Pontryagin extremal flow for the inversion problem.

Covers both formulations: a single spin driven by one control along x, and
the two-spin system (offsets +delta and -delta) driven by two controls.
Costates are kept Cartesian (three components per spin); the sphere
constraint is preserved by the dynamics itself and the spherical costates
(p_theta, p_phi) are derived views used only for diagnostics.

Conventions:

* the drift field is F = (-delta*y, delta*x, 0) per spin (sign of delta
  flips for spin b),
* the control fields are Gx = (0, -z, y) and Gy = (z, 0, -x),
* the switching function of the single-control problem is phi = p . Gx,
* maximized Hamiltonians are normalized so that their value is +1 per spin
  at the north pole (costate scale is fixed, removing it from shooting
  unknowns).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bloch import U_MAX, DEFAULT_DT, SphericalState


class ChatteringError(RuntimeError):
    """Event count exceeded the switch limit."""


class SingularArcError(RuntimeError):
    """The switching function stayed at zero over a step."""


class OnSwitchingSurfaceError(ValueError):
    """Both control projections vanish; the normal control is undefined."""


@dataclass
class ExtremalPoint:
    """Joint state/costate, one row per spin ((1,3) or (2,3) arrays)."""

    states: np.ndarray
    costates: np.ndarray
    delta: float

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.costates = np.atleast_2d(np.asarray(self.costates, dtype=float))
        if self.states.shape != self.costates.shape:
            raise ValueError("state/costate shape mismatch")
        if self.states.shape[0] not in (1, 2) or self.states.shape[1] != 3:
            raise ValueError("expected (1,3) or (2,3) arrays")

    @property
    def two_spin(self) -> bool:
        return self.states.shape[0] == 2

    def offsets(self) -> np.ndarray:
        if self.two_spin:
            return np.array([self.delta, -self.delta])
        return np.array([self.delta])


@dataclass(frozen=True)
class SwitchingRecord:
    """A located zero of the switching function.

    ``kind`` is "crossing" for a transversal sign change and "tangent" for
    an isolated double zero (the switching function touches zero with zero
    slope; this is the generic situation at the two-bang optimum).
    sign_before/sign_after are the control signs, which flip in both cases.
    """

    time: float
    sign_before: int
    sign_after: int
    phi_value: float
    kind: str = "crossing"


@dataclass(frozen=True)
class CanonicalPhase:
    """Sum/difference azimuths and their conjugate momenta."""

    phi_plus: float
    phi_minus: float
    p_phi_plus: float
    p_phi_minus: float


@dataclass
class ExtremalTrajectory:
    times: np.ndarray
    states: np.ndarray      # (N, n_spin, 3)
    costates: np.ndarray    # (N, n_spin, 3)
    controls: np.ndarray    # (N, 2)
    delta: float
    switches: list[SwitchingRecord] = field(default_factory=list)

    def point_at(self, i: int) -> ExtremalPoint:
        return ExtremalPoint(self.states[i], self.costates[i], self.delta)

    @property
    def final_point(self) -> ExtremalPoint:
        return self.point_at(-1)


# ---------------------------------------------------------------------------
# pointwise quantities
# ---------------------------------------------------------------------------


def _proj_gx(x: np.ndarray, p: np.ndarray) -> float:
    return float(x[1] * p[2] - x[2] * p[1])


def _proj_gy(x: np.ndarray, p: np.ndarray) -> float:
    return float(x[2] * p[0] - x[0] * p[2])


def _p_phi(x: np.ndarray, p: np.ndarray) -> float:
    # angular momentum about z; equals the spherical costate p_phi
    return float(x[0] * p[1] - x[1] * p[0])


def switching_function(pt: ExtremalPoint, axis: str = "x") -> float:
    """Projection of the costate on the chosen control field, summed over
    spins.  The single-spin problem only uses the x axis."""
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    if not pt.two_spin and axis == "y":
        raise ValueError("single-spin problem has only the x control")
    proj = _proj_gx if axis == "x" else _proj_gy
    return sum(proj(x, p) for x, p in zip(pt.states, pt.costates))


def control_projections(pt: ExtremalPoint) -> tuple[float, float]:
    rx = sum(_proj_gx(x, p) for x, p in zip(pt.states, pt.costates))
    ry = sum(_proj_gy(x, p) for x, p in zip(pt.states, pt.costates))
    return rx, ry


def _drift_term(pt: ExtremalPoint) -> float:
    ds = pt.offsets()
    return sum(d * _p_phi(x, p)
               for d, x, p in zip(ds, pt.states, pt.costates))


def pseudo_hamiltonian_single(pt: ExtremalPoint, u: float) -> float:
    """p.(F + u*Gx); linear in the control."""
    if pt.two_spin:
        raise ValueError("single-spin Hamiltonian on a two-spin point")
    if abs(u) > U_MAX + 1e-12:
        raise ValueError("control exceeds amplitude bound")
    return _drift_term(pt) + u * switching_function(pt, "x")


def max_pseudo_hamiltonian_single(pt: ExtremalPoint) -> float:
    """Hamiltonian maximized over |u| <= U_MAX."""
    return _drift_term(pt) + U_MAX * abs(switching_function(pt, "x"))


RHO_FLOOR = 1e-10


def optimal_controls_two_spin(pt: ExtremalPoint) -> tuple[float, float]:
    """Maximizing controls u = U_MAX * (p.Gx, p.Gy)/|(p.Gx, p.Gy)|."""
    if not pt.two_spin:
        raise ValueError("two-spin controls on a single-spin point")
    rx, ry = control_projections(pt)
    rho = math.hypot(rx, ry)
    if rho < RHO_FLOOR:
        raise OnSwitchingSurfaceError(
            f"control projections vanish (|rho| = {rho:.3e})")
    return U_MAX * rx / rho, U_MAX * ry / rho


def normal_hamiltonian_two_spin(pt: ExtremalPoint) -> float:
    """Maximized two-control Hamiltonian.

    H = delta*(p_phi_a - p_phi_b) + U_MAX * |(p.Gx, p.Gy)|.  The amplitude
    bound multiplies the control term so that H is constant along extremals
    whose controls saturate |u| = U_MAX.
    """
    if not pt.two_spin:
        raise ValueError("expected a two-spin point")
    rx, ry = control_projections(pt)
    rho = math.hypot(rx, ry)
    if rho < RHO_FLOOR:
        raise OnSwitchingSurfaceError(
            f"on the switching surface (|rho| = {rho:.3e})")
    return _drift_term(pt) + U_MAX * rho


def extremal_rhs(pt: ExtremalPoint) -> ExtremalPoint:
    """Hamiltonian vector field with the maximizing control substituted.

    Raises at exact zeros of the switching quantities, where the control is
    decided by the event logic of integrate_extremal instead.
    """
    if pt.two_spin:
        ux, uy = optimal_controls_two_spin(pt)
    else:
        phi = switching_function(pt, "x")
        if phi == 0.0:
            raise ValueError("switching function is zero; control undefined")
        ux, uy = U_MAX * math.copysign(1.0, phi), 0.0
    ds = pt.offsets()
    dx = np.empty_like(pt.states)
    dp = np.empty_like(pt.costates)
    for i, (d, x, p) in enumerate(zip(ds, pt.states, pt.costates)):
        omega = np.array([ux, uy, d])
        dx[i] = np.cross(omega, x)
        dp[i] = np.cross(omega, p)
    return ExtremalPoint(dx, dp, pt.delta)


# ---------------------------------------------------------------------------
# singular locus diagnostics (single spin, spherical chart)
# ---------------------------------------------------------------------------


def singular_locus_value(s: SphericalState, delta: float) -> float:
    """det(G, [G, F]) in the (theta, phi) chart: -delta*cot(theta).

    Zero exactly on the equator, which is where singular arcs live (the
    representable midpoint pi/2 maps to exactly 0).
    """
    if s.theta <= 0.0 or s.theta >= math.pi:
        raise ValueError("poles are outside the spherical chart")
    if s.theta == 0.5 * math.pi:
        return 0.0
    return -delta * math.cos(s.theta) / math.sin(s.theta)


def singular_control(s: SphericalState, delta: float,
                     tol: float = 1e-9) -> float:
    """Feedback control on the singular locus.

    Requiring the second derivative of the switching function to vanish,
    projected on the costate direction annihilating G and [G, F], leaves
    u_s * delta * p_phi = 0, hence u_s = 0: staying on the equator forces
    theta' = -u*sin(phi) = 0 for generic phi.
    """
    if abs(s.theta - 0.5 * math.pi) > tol:
        raise ValueError("point is not on the singular locus (equator)")
    return 0.0


# ---------------------------------------------------------------------------
# canonical phases
# ---------------------------------------------------------------------------


def spherical_costate(x: np.ndarray, p: np.ndarray) -> tuple[float, float]:
    """(p_theta, p_phi) views of a Cartesian costate at a Cartesian point."""
    r = float(np.linalg.norm(x))
    st = math.hypot(x[0], x[1]) / r
    ct = x[2] / r
    if st == 0.0:
        p_theta = math.hypot(p[0], p[1]) * r  # direction degenerate at poles
    else:
        cp, sp = x[0] / (r * st), x[1] / (r * st)
        p_theta = r * (ct * (cp * p[0] + sp * p[1]) - st * p[2])
    return p_theta, _p_phi(x, p)


def cartesian_costate(s: SphericalState, p_theta: float, p_phi: float,
                      p_r: float = 0.0) -> np.ndarray:
    """Inverse of spherical_costate for points away from the poles."""
    st, ct = math.sin(s.theta), math.cos(s.theta)
    if st == 0.0:
        raise ValueError("costate chart is singular at the poles")
    cp, sp = math.cos(s.phi), math.sin(s.phi)
    e_r = np.array([st * cp, st * sp, ct])
    e_t = np.array([ct * cp, ct * sp, -st])
    e_p = np.array([-sp, cp, 0.0])
    return p_r * e_r + (p_theta / s.r) * e_t + (p_phi / (s.r * st)) * e_p


def canonical_phases(pt: ExtremalPoint) -> CanonicalPhase:
    """Sum/difference azimuth coordinates with conjugate momenta.

    p_phi+/- = (p_phi_a +/- p_phi_b)/2, computed through the Cartesian
    angular-momentum form, which stays finite at the poles.
    """
    if not pt.two_spin:
        raise ValueError("canonical phases are a two-spin diagnostic")
    xa, xb = pt.states
    pa, pb = pt.costates
    phi_a = math.atan2(xa[1], xa[0]) if (xa[0], xa[1]) != (0.0, 0.0) else 0.0
    phi_b = math.atan2(xb[1], xb[0]) if (xb[0], xb[1]) != (0.0, 0.0) else 0.0
    ppa, ppb = _p_phi(xa, pa), _p_phi(xb, pb)
    return CanonicalPhase(
        phi_plus=phi_a + phi_b,
        phi_minus=phi_a - phi_b,
        p_phi_plus=0.5 * (ppa + ppb),
        p_phi_minus=0.5 * (ppa - ppb),
    )


def p_phi_plus_invariant(pt: ExtremalPoint) -> float:
    """x_a p_ya - y_a p_xa + x_b p_yb - y_b p_xb; conserved along two-spin
    extremals and zero on extremals started at the poles."""
    return sum(_p_phi(x, p) for x, p in zip(pt.states, pt.costates))


# ---------------------------------------------------------------------------
# integration with event detection
# ---------------------------------------------------------------------------

PHI_TOL = 1e-12
TIME_TOL = 1e-13
TOUCH_TOL = 1e-9
SINGULAR_TOL = 1e-13


def _raise_for_status(status: int, n_sw: int, max_switches: int):
    if status == _kernels.STATUS_CHATTER:
        raise ChatteringError(
            f"more than {max_switches} switching events; aborting")
    if status == _kernels.STATUS_SINGULAR:
        raise SingularArcError(
            "switching function vanished over a step (singular arc?)")
    if status == _kernels.STATUS_BAD_START:
        raise ValueError("switching quantity is zero at the initial point")


def integrate_extremal(pt0: ExtremalPoint, t_max: float,
                       dt: float = DEFAULT_DT, max_switches: int = 64,
                       touch_tol: float = TOUCH_TOL) -> ExtremalTrajectory:
    """Integrate the extremal flow, locating switching events.

    Single-spin mode: bang-bang feedback u = U_MAX*sign(phi) with bisection
    (time resolution 1e-13) plus a secant-grade relocation of each zero of
    phi; both transversal crossings and isolated tangential zeros flip the
    control.  Two-spin mode: smooth feedback from the control projections,
    with steps split where the projection vector reverses through the
    switching surface.

    Raises ChatteringError past ``max_switches`` events and SingularArcError
    if the switching quantity stays pinned at zero.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    n_max = int(math.ceil(t_max / dt)) + 2 * max_switches + 4
    sw_t = np.empty(max_switches)
    sw_phi = np.empty(max_switches)
    if pt0.two_spin:
        y0 = np.concatenate([pt0.states[0], pt0.costates[0],
                             pt0.states[1], pt0.costates[1]])
        times = np.empty(n_max)
        states = np.empty((n_max, 12))
        controls = np.empty((n_max, 2))
        status, n_sw, n = _kernels.extremal_two(
            y0, float(pt0.delta), U_MAX, float(t_max), float(dt),
            max_switches, TIME_TOL, RHO_FLOOR, sw_t, sw_phi,
            times, states, controls)
        _raise_for_status(status, n_sw, max_switches)
        sts = states[:n].reshape(n, 2, 6)
        switches = _records_two(sw_t[:n_sw], sw_phi[:n_sw], controls, times[:n])
        return ExtremalTrajectory(
            times=times[:n].copy(),
            states=sts[:, :, 0:3].copy(),
            costates=sts[:, :, 3:6].copy(),
            controls=controls[:n].copy(),
            delta=pt0.delta,
            switches=switches,
        )
    x0 = pt0.states[0]
    p0 = pt0.costates[0]
    sw_kind = np.empty(max_switches, dtype=np.int64)
    times = np.empty(n_max)
    states6 = np.empty((n_max, 6))
    status, n_sw, n, yf, _, _ = _kernels.extremal_single(
        x0, p0, float(pt0.delta), U_MAX, float(t_max), float(dt),
        max_switches, TIME_TOL, float(touch_tol), SINGULAR_TOL,
        sw_t, sw_phi, sw_kind, times, states6, True)
    _raise_for_status(status, n_sw, max_switches)
    phi0 = x0[1] * p0[2] - x0[2] * p0[1]
    sign = 1 if phi0 > 0 else -1
    switches = []
    for i in range(n_sw):
        switches.append(SwitchingRecord(
            time=float(sw_t[i]),
            sign_before=sign,
            sign_after=-sign,
            phi_value=float(sw_phi[i]),
            kind="crossing" if sw_kind[i] == 0 else "tangent",
        ))
        sign = -sign
    # reconstruct the scalar control at each sample from the switch times
    u = np.empty(n)
    sgn = 1.0 if phi0 > 0 else -1.0
    j = 0
    for i in range(n):
        while j < n_sw and times[i] >= sw_t[j] - 1e-15:
            sgn = -sgn
            j += 1
        u[i] = U_MAX * sgn
    controls = np.column_stack([u, np.zeros(n)])
    return ExtremalTrajectory(
        times=times[:n].copy(),
        states=states6[:n, 0:3].reshape(n, 1, 3).copy(),
        costates=states6[:n, 3:6].reshape(n, 1, 3).copy(),
        controls=controls,
        delta=pt0.delta,
        switches=switches,
    )


def _records_two(sw_t, sw_phi, controls, times) -> list[SwitchingRecord]:
    recs = []
    for t, phi in zip(sw_t, sw_phi):
        i = int(np.searchsorted(times, t))
        before = controls[max(0, i - 1), 0]
        after = controls[min(len(times) - 1, i + 1), 0]
        recs.append(SwitchingRecord(
            time=float(t),
            sign_before=1 if before >= 0 else -1,
            sign_after=1 if after >= 0 else -1,
            phi_value=float(phi),
            kind="crossing",
        ))
    return recs
