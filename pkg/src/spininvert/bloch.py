"""Normalized Bloch dynamics for a spin-1/2 magnetization under transverse rf.

Working units throughout: magnetization is a unit vector (x, y, z), the
control amplitude is bounded by U_MAX = 2*pi, the offset ``delta`` is the
chemical shift divided by the maximum rf amplitude (times 2*pi), and one
unit of time equals 1/rfmax seconds.  The equations of motion are a plain
precession about the instantaneous field vector (ux, uy, delta):

    dx/dt = -delta*y + uy*z
    dy/dt =  delta*x - ux*z
    dz/dt =  ux*y - uy*x

All simulation is Cartesian; spherical coordinates are provided for
diagnostics only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

U_MAX = 2.0 * math.pi
"""Normalized control amplitude bound."""

DEFAULT_DT = 1e-5
"""Default integrator step in normalized time."""

AMPLITUDE_SLACK = 1e-12

NORTH = np.array([0.0, 0.0, 1.0])
SOUTH = np.array([0.0, 0.0, -1.0])


class AmplitudeBoundError(ValueError):
    """A pulse segment exceeds the control amplitude bound."""

    def __init__(self, index: int, amplitude: float):
        self.index = index
        self.amplitude = amplitude
        super().__init__(
            f"segment {index}: |u| = {amplitude:.6g} exceeds bound {U_MAX:.6g}"
        )


@dataclass(frozen=True)
class PulseSegment:
    """Constant control (ux, uy) held for a normalized duration."""

    duration: float
    ux: float
    uy: float

    @property
    def amplitude(self) -> float:
        return math.hypot(self.ux, self.uy)


@dataclass
class Pulse:
    """Piecewise-constant control schedule.

    Segments are half-open intervals [t_i, t_{i+1}); the control at a
    boundary instant takes the value of the following segment.  ``units_hz``
    optionally records the physical rf maximum (omega_max / 2*pi, in Hz)
    used for denormalization.
    """

    segments: list[PulseSegment] = field(default_factory=list)
    units_hz: float | None = None

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def validate(self) -> None:
        if not self.segments:
            raise ValueError("pulse has no segments")
        if self.duration <= 0.0:
            raise ValueError("pulse has non-positive total duration")
        for i, s in enumerate(self.segments):
            if s.duration < 0.0:
                raise ValueError(f"segment {i}: negative duration")
            if s.amplitude > U_MAX + AMPLITUDE_SLACK:
                raise AmplitudeBoundError(i, s.amplitude)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        tau = np.array([s.duration for s in self.segments])
        ux = np.array([s.ux for s in self.segments])
        uy = np.array([s.uy for s in self.segments])
        return tau, ux, uy

    def control_at(self, t: float) -> tuple[float, float]:
        """Control active at time t (following-segment value at boundaries)."""
        acc = 0.0
        for s in self.segments:
            if t < acc + s.duration:
                return s.ux, s.uy
            acc += s.duration
        last = self.segments[-1]
        return last.ux, last.uy


@dataclass(frozen=True)
class SphericalState:
    """Diagnostic spherical coordinates; r is 1 on the Bloch sphere."""

    r: float
    theta: float
    phi: float


@dataclass
class Trajectory:
    """Time-stamped magnetization samples from a fixed-step integration."""

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))


def bloch_rhs(m: np.ndarray, delta: float, ux: float, uy: float) -> np.ndarray:
    """Time derivative of the magnetization; always orthogonal to m."""
    return np.array([
        -delta * m[1] + uy * m[2],
        delta * m[0] - ux * m[2],
        ux * m[1] - uy * m[0],
    ])


def rotate_z(m: np.ndarray, alpha: float) -> np.ndarray:
    """Rotate about the z axis: (x, y) -> (c*x + s*y, -s*x + c*y)."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([c * m[0] + s * m[1], -s * m[0] + c * m[1], m[2]])


def rotate_pulse(pulse: Pulse, alpha: float) -> Pulse:
    """Apply the rotate_z planar map to every segment's control vector.

    Using the same matrix as rotate_z makes propagation equivariant:
    rotating the initial state and the pulse by the same angle rotates the
    whole trajectory.
    """
    c, s = math.cos(alpha), math.sin(alpha)
    segs = [
        PulseSegment(seg.duration, c * seg.ux + s * seg.uy,
                     -s * seg.ux + c * seg.uy)
        for seg in pulse.segments
    ]
    return Pulse(segs, units_hz=pulse.units_hz)


def to_spherical(m: np.ndarray) -> SphericalState:
    r = float(np.linalg.norm(m))
    if r == 0.0:
        raise ValueError("zero vector has no spherical representation")
    theta = math.acos(max(-1.0, min(1.0, m[2] / r)))
    if theta == 0.0 or theta == math.pi or (m[0] == 0.0 and m[1] == 0.0):
        phi = 0.0  # pole convention
    else:
        phi = math.atan2(m[1], m[0]) % (2.0 * math.pi)
    return SphericalState(r, theta, phi)


def from_spherical(s: SphericalState) -> np.ndarray:
    st = math.sin(s.theta)
    return np.array([
        s.r * st * math.cos(s.phi),
        s.r * st * math.sin(s.phi),
        s.r * math.cos(s.theta),
    ])


def normalize_units(time_s: float, field_hz: float, offset_hz: float,
                    rfmax_hz: float) -> tuple[float, float, float]:
    """Physical (s, Hz) -> normalized (tau, u, delta).

    tau = rfmax * t, u = 2*pi*field/rfmax, delta = 2*pi*offset/rfmax.
    """
    if rfmax_hz <= 0.0:
        raise ValueError("rfmax_hz must be positive")
    tau = rfmax_hz * time_s
    u = 2.0 * math.pi * field_hz / rfmax_hz
    delta = 2.0 * math.pi * offset_hz / rfmax_hz
    return tau, u, delta


def denormalize_units(tau: float, u: float, delta: float,
                      rfmax_hz: float) -> tuple[float, float, float]:
    """Inverse of normalize_units."""
    if rfmax_hz <= 0.0:
        raise ValueError("rfmax_hz must be positive")
    time_s = tau / rfmax_hz
    field_hz = u * rfmax_hz / (2.0 * math.pi)
    offset_hz = delta * rfmax_hz / (2.0 * math.pi)
    return time_s, field_hz, offset_hz


def _check_start(m0: np.ndarray) -> np.ndarray:
    m0 = np.asarray(m0, dtype=float)
    if abs(np.linalg.norm(m0) - 1.0) > 1e-6:
        raise ValueError("initial magnetization must lie on the unit sphere")
    return m0


def propagate(m0: np.ndarray, pulse: Pulse, delta: float,
              dt: float = DEFAULT_DT) -> Trajectory:
    """Fixed-step classical RK4 integration of a pulse.

    Every integrator step is a sample point and segment boundaries are hit
    exactly (the last step of a segment is clipped).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    m0 = _check_start(m0)
    pulse.validate()
    tau, ux, uy = pulse.as_arrays()
    n_max = 1 + int(sum(math.ceil(t / dt - 1e-12) + 1 for t in tau))
    times = np.empty(n_max)
    states = np.empty((n_max, 3))
    n = _kernels.propagate_sampled(m0, tau, ux, uy, float(delta), float(dt),
                                   times, states)
    return Trajectory(times[:n].copy(), states[:n].copy())


def propagate_final(m0: np.ndarray, pulse: Pulse, delta: float,
                    dt: float = DEFAULT_DT) -> tuple[np.ndarray, float]:
    """Final state and worst norm deviation, without storing the trajectory."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    m0 = _check_start(m0)
    pulse.validate()
    tau, ux, uy = pulse.as_arrays()
    y, worst = _kernels.propagate_final(m0, tau, ux, uy, float(delta),
                                        float(dt))
    return y, float(worst)
