"""Command-line front end.

Physical units (Hz, seconds) live at this boundary; everything below works
in normalized quantities.  Exit codes: 0 success, 2 bad arguments,
3 numerical non-convergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bloch import U_MAX, DEFAULT_DT, NORTH, propagate
from .pulse_io import (PulseIOError, controls_at, export_shape,
                       read_pulse_json, write_pulse_json, write_shape,
                       write_sweep_csv, write_trajectory_csv)
from .synthesis import (OracleInfeasibleError, SolverConfig, SynthesisError,
                        brute_force_oracle, pi_pulse_baseline,
                        refine_switching_times, solve_inversion_single)
from .twospin import (OffsetPair, TwoSpinState, propagate_two,
                      robustness_sweep, symmetrize, verify_inversion)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


@dataclass
class RunConfig:
    delta: float | None
    offset_hz: float | None
    rfmax_hz: float | None
    dt: float
    tol: float
    max_switches: int
    multistarts: int
    seed: int
    jobs: int
    out: Path | None
    format: str

    def resolved_delta(self) -> float:
        """Exactly one of --delta / --offset-hz must be present."""
        if (self.delta is None) == (self.offset_hz is None):
            raise UsageError("give exactly one of --delta or --offset-hz")
        if self.delta is not None:
            return self.delta
        if self.rfmax_hz is None:
            raise UsageError("--offset-hz requires --rfmax-hz")
        return 2.0 * math.pi * self.offset_hz / self.rfmax_hz

    def solver(self) -> SolverConfig:
        return SolverConfig(newton_tol=self.tol, multistart_count=self.multistarts,
                            dt=self.dt, max_switches=self.max_switches,
                            seed=self.seed, jobs=self.jobs)


class UsageError(ValueError):
    pass


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=float, default=None,
                   help="normalized offset (2*pi*offset/rfmax)")
    p.add_argument("--offset-hz", type=float, default=None,
                   help="chemical-shift offset in Hz (needs --rfmax-hz)")
    p.add_argument("--rfmax-hz", type=float, default=None,
                   help="maximum rf amplitude in Hz")
    p.add_argument("--dt", type=float, default=DEFAULT_DT,
                   help="integrator step, normalized time")
    p.add_argument("--tol", type=float, default=1e-10,
                   help="shooting residual tolerance")
    p.add_argument("--max-switches", type=int, default=64)
    p.add_argument("--multistarts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0,
                   help="multistart ordering seed")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker threads for sweeps")
    p.add_argument("--out", type=Path, default=None, help="output path")
    p.add_argument("--format", choices=["json", "shape", "csv"], default=None)
    p.add_argument("--shape-samples", type=int, default=4096,
                   help="rows when exporting a shape file")


def _config(args) -> RunConfig:
    if args.dt <= 0:
        raise UsageError("--dt must be positive")
    if args.tol <= 0:
        raise UsageError("--tol must be positive")
    for name in ("max_switches", "multistarts", "jobs"):
        if getattr(args, name) <= 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    return RunConfig(
        delta=args.delta, offset_hz=args.offset_hz, rfmax_hz=args.rfmax_hz,
        dt=args.dt, tol=args.tol, max_switches=args.max_switches,
        multistarts=args.multistarts, seed=args.seed, jobs=args.jobs,
        out=args.out, format=args.format,
    )


def _print_duration(tf: float, rfmax_hz: float | None) -> None:
    if rfmax_hz:
        print(f"duration: {tf:.9f} normalized = {tf / rfmax_hz * 1e3:.4f} ms "
              f"at rfmax {rfmax_hz:g} Hz")
    else:
        print(f"duration: {tf:.9f} normalized")


def cmd_synth(args) -> int:
    cfg = _config(args)
    delta = cfg.resolved_delta()
    try:
        sol = solve_inversion_single(delta, cfg.solver())
    except SynthesisError as e:
        print(f"synthesis failed: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    check = refine_switching_times(sol.pulse, delta, newton_tol=cfg.tol)
    drift = abs(check.pulse.t_f - sol.pulse.t_f)
    pulse = sol.pulse.to_pulse(units_hz=cfg.rfmax_hz)
    out = cfg.out or Path("pulse.json")
    try:
        if cfg.format == "shape":
            if not cfg.rfmax_hz:
                raise UsageError("shape output requires --rfmax-hz")
            write_shape(export_shape(pulse, args.shape_samples, cfg.rfmax_hz),
                        out)
        else:
            write_pulse_json(pulse, out)
    except (OSError, PulseIOError) as e:
        print(f"cannot write {out}: {e}", file=sys.stderr)
        return EXIT_IO
    print(f"offset delta = {delta:.9f} ({delta / (2 * math.pi):.6f} of rfmax)")
    _print_duration(sol.pulse.t_f, cfg.rfmax_hz)
    print(f"switches: {sol.pulse.n_switches} "
          f"(initial sign {sol.pulse.initial_sign:+d})")
    print(f"shooting residual: {sol.residual_norm:.3e}"
          + (" (direct-refined)" if sol.refined else ""))
    print(f"refinement cross-check: t_f agrees to {drift:.3e}")
    if sol.multiplicity > 1:
        print(f"note: {sol.multiplicity} distinct optima share this t_f "
              "(mirror degeneracy)")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    delta = cfg.resolved_delta()
    try:
        pulse = read_pulse_json(args.pulse)
    except PulseIOError as e:
        print(str(e), file=sys.stderr)
        return EXIT_IO
    out = cfg.out or Path("trajectory.csv")
    if args.single:
        traj = propagate(NORTH, pulse, delta, cfg.dt)
        states_b = None
        times, states_a = traj.times, traj.states
        z_msg = f"z_final = {states_a[-1, 2]:+.6f}"
    else:
        s0 = TwoSpinState(NORTH.copy(), NORTH.copy())
        tt = propagate_two(s0, pulse, delta, cfg.dt)
        times, states_a, states_b = tt.times, tt.spin_a, tt.spin_b
        z_msg = (f"z_a_final = {states_a[-1, 2]:+.6f}, "
                 f"z_b_final = {states_b[-1, 2]:+.6f}")
    try:
        write_trajectory_csv(times, states_a, states_b,
                             controls_at(pulse, times), out)
    except PulseIOError as e:
        print(str(e), file=sys.stderr)
        return EXIT_IO
    print(f"simulated {len(times)} samples over {times[-1]:.6f}; {z_msg}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    delta_a = cfg.resolved_delta()
    delta_b = args.delta_b if args.delta_b is not None else -delta_a
    try:
        pulse = read_pulse_json(args.pulse)
    except PulseIOError as e:
        print(str(e), file=sys.stderr)
        return EXIT_IO
    pair = OffsetPair(delta_a, delta_b)
    red = symmetrize(pair)
    report = verify_inversion(pulse, pair, cfg.dt)
    doc = report.to_dict()
    doc["delta_a"] = delta_a
    doc["delta_b"] = delta_b
    doc["delta_sym"] = red.delta_sym
    doc["frame_shift"] = red.frame_shift
    import json
    text = json.dumps(doc, indent=2, sort_keys=True)
    if cfg.out:
        try:
            cfg.out.write_text(text + "\n", encoding="utf-8")
        except OSError as e:
            print(f"cannot write {cfg.out}: {e}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {cfg.out}")
    else:
        print(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    try:
        pulse = read_pulse_json(args.pulse)
    except PulseIOError as e:
        print(str(e), file=sys.stderr)
        return EXIT_IO
    rows = robustness_sweep(pulse, args.delta_min, args.delta_max,
                            args.points, cfg.dt, jobs=cfg.jobs)
    out = cfg.out or Path("sweep.csv")
    try:
        write_sweep_csv(rows, out)
    except PulseIOError as e:
        print(str(e), file=sys.stderr)
        return EXIT_IO
    worst = max(rows, key=lambda r: r.z_final)
    print(f"swept {args.points} offsets in "
          f"[{args.delta_min:g}, {args.delta_max:g}]; "
          f"worst z_final {worst.z_final:+.6f} at delta {worst.delta:g}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _config(args)
    delta = cfg.resolved_delta()
    try:
        res = brute_force_oracle(delta, args.switches, args.grid)
    except OracleInfeasibleError as e:
        print(f"oracle: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"oracle t_f = {res.pulse.t_f:.9f} "
          f"({res.pulse.n_switches} switches; grid stage gave "
          f"{res.grid_t_f:.6f})")
    if args.pulse:
        try:
            other = read_pulse_json(args.pulse)
        except PulseIOError as e:
            print(str(e), file=sys.stderr)
            return EXIT_IO
        dt_f = other.duration - res.pulse.t_f
        print(f"comparison: pulse file duration {other.duration:.9f} "
              f"(difference {dt_f:+.3e})")
    out = cfg.out
    if out:
        try:
            write_pulse_json(res.pulse.to_pulse(units_hz=cfg.rfmax_hz), out)
        except (OSError, PulseIOError) as e:
            print(f"cannot write {out}: {e}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {out}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg = _config(args)
    pulse = pi_pulse_baseline()
    pulse.units_hz = cfg.rfmax_hz
    out = cfg.out or Path("baseline.json")
    try:
        if cfg.format == "shape":
            if not cfg.rfmax_hz:
                raise UsageError("shape output requires --rfmax-hz")
            write_shape(export_shape(pulse, args.shape_samples, cfg.rfmax_hz),
                        out)
        else:
            write_pulse_json(pulse, out)
    except (OSError, PulseIOError) as e:
        print(f"cannot write {out}: {e}", file=sys.stderr)
        return EXIT_IO
    _print_duration(pulse.duration, cfg.rfmax_hz)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spininvert",
        description="Time-optimal bang-bang inversion pulses for spin pairs "
                    "with opposite offsets: synthesis, simulation, "
                    "verification and export.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize the time-optimal pulse")
    _common_flags(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("simulate", help="forward-simulate a pulse file")
    _common_flags(p)
    p.add_argument("pulse", type=Path, help="pulse JSON file")
    p.add_argument("--single", action="store_true",
                   help="simulate one spin instead of the +/- pair")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="fidelity report for a pulse on a pair")
    _common_flags(p)
    p.add_argument("pulse", type=Path)
    p.add_argument("--delta-b", type=float, default=None,
                   help="second spin offset (default: -delta)")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep", help="offset robustness sweep")
    _common_flags(p)
    p.add_argument("pulse", type=Path)
    p.add_argument("--delta-min", type=float, required=True)
    p.add_argument("--delta-max", type=float, required=True)
    p.add_argument("--points", type=int, default=33)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force grid oracle")
    _common_flags(p)
    p.add_argument("--switches", type=int, default=1)
    p.add_argument("--grid", type=int, default=400)
    p.add_argument("--pulse", type=Path, default=None,
                   help="compare against this pulse file")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("baseline", help="resonant pi-pulse baseline")
    _common_flags(p)
    p.set_defaults(fn=cmd_baseline)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SynthesisError, OracleInfeasibleError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
