"""Time-optimal simultaneous inversion of two spins with opposite offsets.

The package synthesizes the minimum-time bang-bang pulse that drives a
spin-1/2 magnetization from the north to the south pole of the Bloch sphere
under a bounded transverse control and a fixed offset, verifies by forward
simulation that the same pulse simultaneously inverts the mirrored spin at
the opposite offset, and exports the result in spectrometer-friendly
formats.
"""

from .bloch import (U_MAX, DEFAULT_DT, NORTH, SOUTH, Pulse, PulseSegment,
                    SphericalState, Trajectory, bloch_rhs, from_spherical,
                    normalize_units, denormalize_units, propagate,
                    propagate_final, rotate_pulse, rotate_z, to_spherical)
from .extremal import (CanonicalPhase, ChatteringError, ExtremalPoint,
                       ExtremalTrajectory, OnSwitchingSurfaceError,
                       SingularArcError, SwitchingRecord, canonical_phases,
                       cartesian_costate, extremal_rhs, integrate_extremal,
                       max_pseudo_hamiltonian_single,
                       normal_hamiltonian_two_spin, optimal_controls_two_spin,
                       p_phi_plus_invariant, pseudo_hamiltonian_single,
                       singular_control, singular_locus_value,
                       spherical_costate, switching_function)
from .synthesis import (BangBangPulse, InversionSolution, OracleInfeasibleError,
                        OracleResult, RefineResult, ShootingProblem,
                        SolverConfig, SynthesisError, bang_final_state,
                        brute_force_oracle, lift_to_two_controls,
                        pi_pulse_baseline, refine_switching_times, shoot,
                        solve_inversion_single)
from .twospin import (FidelityReport, OffsetPair, SweepRow, SymmetricReduction,
                      TwoSpinState, TwoSpinTrajectory, mirror_check,
                      phase_ramp_pulse, propagate_two, robustness_sweep,
                      symmetrize, verify_inversion)

__version__ = "0.1.0"
