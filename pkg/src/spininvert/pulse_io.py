"""Bit-stable serialization: pulse JSON, spectrometer shape files, and
trajectory/sweep CSV.

All numbers are written as decimal literals with 17 significant digits,
which round-trips IEEE doubles exactly while staying human-readable.
Files are UTF-8 with Unix newlines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bloch import U_MAX, AMPLITUDE_SLACK, Pulse, PulseSegment


class PulseIOError(Exception):
    """Base for pulse file problems."""


class MalformedPulseFileError(PulseIOError):
    """File is not valid JSON."""


class PulseSchemaError(PulseIOError):
    """JSON is valid but does not match the pulse schema."""


class AmplitudeBoundViolation(PulseIOError):
    """A stored segment exceeds the amplitude bound."""

    def __init__(self, index: int, amplitude: float, bound: float):
        self.index = index
        super().__init__(f"segments[{index}]: amplitude {amplitude:.6g} "
                         f"exceeds bound {bound:.6g}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_pulse_json(pulse: Pulse, path: str | Path) -> None:
    """Schema: {"u0": num, "units_hz": num|null, "segments":
    [{"tau":, "ux":, "uy":}, ...]}; lossless decimal round trip."""
    pulse.validate()
    lines = ["{"]
    lines.append(f'  "u0": {_fmt(U_MAX)},')
    units = "null" if pulse.units_hz is None else _fmt(pulse.units_hz)
    lines.append(f'  "units_hz": {units},')
    lines.append('  "segments": [')
    for i, s in enumerate(pulse.segments):
        sep = "," if i + 1 < len(pulse.segments) else ""
        lines.append(f'    {{"tau": {_fmt(s.duration)}, "ux": {_fmt(s.ux)}, '
                     f'"uy": {_fmt(s.uy)}}}{sep}')
    lines.append("  ]")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pulse_json(path: str | Path) -> Pulse:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedPulseFileError(
            f"{path}: invalid JSON at line {e.lineno} column {e.colno}: "
            f"{e.msg}") from e
    if not isinstance(doc, dict):
        raise PulseSchemaError(f"{path}: top level must be an object")
    for key in ("u0", "units_hz", "segments"):
        if key not in doc:
            raise PulseSchemaError(f"{path}: missing field '{key}'")
    u0 = doc["u0"]
    if not isinstance(u0, (int, float)) or u0 <= 0:
        raise PulseSchemaError(f"{path}: 'u0' must be a positive number")
    units = doc["units_hz"]
    if units is not None and not isinstance(units, (int, float)):
        raise PulseSchemaError(f"{path}: 'units_hz' must be a number or null")
    if not isinstance(doc["segments"], list) or not doc["segments"]:
        raise PulseSchemaError(f"{path}: 'segments' must be a non-empty list")
    bound = min(float(u0), U_MAX)
    segs = []
    for i, row in enumerate(doc["segments"]):
        if not isinstance(row, dict):
            raise PulseSchemaError(f"{path}: segments[{i}] must be an object")
        vals = {}
        for key in ("tau", "ux", "uy"):
            if key not in row or not isinstance(row[key], (int, float)):
                raise PulseSchemaError(
                    f"{path}: segments[{i}].{key} must be a number")
            vals[key] = float(row[key])
        if vals["tau"] < 0:
            raise PulseSchemaError(
                f"{path}: segments[{i}].tau must be non-negative")
        amp = math.hypot(vals["ux"], vals["uy"])
        if amp > bound + AMPLITUDE_SLACK:
            raise AmplitudeBoundViolation(i, amp, bound)
        segs.append(PulseSegment(vals["tau"], vals["ux"], vals["uy"]))
    return Pulse(segs, units_hz=None if units is None else float(units))


# ---------------------------------------------------------------------------
# shape files
# ---------------------------------------------------------------------------


@dataclass
class ShapeFile:
    """Uniform-dwell amplitude/phase table for spectrometer playback."""

    header: list[str] = field(default_factory=list)
    rows: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    dwell_s: float = 0.0

    @property
    def duration_s(self) -> float:
        return self.dwell_s * len(self.rows)


def export_shape(pulse: Pulse, n_samples: int, rfmax_hz: float) -> ShapeFile:
    """Resample a pulse onto n_samples uniform dwells.

    Rows whose window aligns with segment boundaries copy the segment
    control; windows straddling a boundary store the duration-weighted
    average control, which preserves the control integral.
    amplitude_fraction = |u| / U_MAX, phase in degrees in [0, 360).
    """
    pulse.validate()
    if rfmax_hz <= 0:
        raise ValueError("rfmax_hz must be positive")
    if n_samples < len(pulse.segments):
        raise ValueError("need at least one sample per segment")
    total = pulse.duration
    dwell = total / n_samples
    edges = np.concatenate([[0.0],
                            np.cumsum([s.duration for s in pulse.segments])])
    rows = np.empty((n_samples, 2))
    for i in range(n_samples):
        w0, w1 = i * dwell, (i + 1) * dwell
        ux = uy = 0.0
        for k, s in enumerate(pulse.segments):
            lo = max(w0, edges[k])
            hi = min(w1, edges[k + 1])
            if hi > lo:
                ux += s.ux * (hi - lo)
                uy += s.uy * (hi - lo)
        ux /= (w1 - w0)
        uy /= (w1 - w0)
        amp = math.hypot(ux, uy) / U_MAX
        phase = math.degrees(math.atan2(uy, ux)) % 360.0
        rows[i, 0] = min(amp, 1.0)
        rows[i, 1] = phase
    header = [
        f"samples={n_samples}",
        f"dwell_s={_fmt(dwell / rfmax_hz)}",
        f"duration_s={_fmt(total / rfmax_hz)}",
        f"rfmax_hz={_fmt(rfmax_hz)}",
    ]
    return ShapeFile(header=header, rows=rows, dwell_s=dwell / rfmax_hz)


def shape_to_pulse(shape: ShapeFile, rfmax_hz: float) -> Pulse:
    """Rebuild a piecewise-constant pulse from a shape table (for
    verification of the resampling)."""
    tau = shape.dwell_s * rfmax_hz
    segs = []
    for amp, phase in shape.rows:
        a = math.radians(phase)
        segs.append(PulseSegment(tau, amp * U_MAX * math.cos(a),
                                 amp * U_MAX * math.sin(a)))
    return Pulse(segs)


def write_shape(shape: ShapeFile, path: str | Path) -> None:
    lines = [f"# {h}" for h in shape.header]
    for amp, phase in shape.rows:
        lines.append(f"{_fmt(amp)} {_fmt(phase)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# CSV writers
# ---------------------------------------------------------------------------

TRAJECTORY_HEADER = "t,x_a,y_a,z_a,x_b,y_b,z_b,ux,uy"


def controls_at(pulse: Pulse, times: np.ndarray) -> np.ndarray:
    """Control samples on a time grid (value of the segment containing each
    instant; boundary instants take the following segment)."""
    edges = np.concatenate([[0.0],
                            np.cumsum([s.duration for s in pulse.segments])])
    idx = np.searchsorted(edges, np.asarray(times, float), side="right") - 1
    idx = np.clip(idx, 0, len(pulse.segments) - 1)
    ux = np.array([pulse.segments[i].ux for i in idx])
    uy = np.array([pulse.segments[i].uy for i in idx])
    return np.column_stack([ux, uy])


def write_trajectory_csv(times: np.ndarray, states_a: np.ndarray,
                         states_b: np.ndarray | None, controls: np.ndarray,
                         path: str | Path) -> None:
    """One row per sample; single-spin runs leave the b columns empty."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(TRAJECTORY_HEADER + "\n")
            for i, t in enumerate(times):
                a = states_a[i]
                if states_b is None:
                    mid = ",,"
                else:
                    b = states_b[i]
                    mid = f"{_fmt(b[0])},{_fmt(b[1])},{_fmt(b[2])}"
                f.write(f"{_fmt(t)},{_fmt(a[0])},{_fmt(a[1])},{_fmt(a[2])},"
                        f"{mid},{_fmt(controls[i, 0])},{_fmt(controls[i, 1])}"
                        "\n")
    except OSError as e:
        raise PulseIOError(f"cannot write trajectory to {path}: {e}") from e


SWEEP_HEADER = "delta,z_final,xy_final"


def write_sweep_csv(rows, path: str | Path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(SWEEP_HEADER + "\n")
            for r in rows:
                f.write(f"{_fmt(r.delta)},{_fmt(r.z_final)},"
                        f"{_fmt(r.xy_final)}\n")
    except OSError as e:
        raise PulseIOError(f"cannot write sweep to {path}: {e}") from e
