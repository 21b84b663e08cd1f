import math

import numpy as np
import pytest

import spininvert as si

PAPER_DELTA = 8 * math.pi
PAPER_OFFSET_HZ = 483.0
PAPER_RFMAX_HZ = 120.75
PAPER_TP_MS = 6.409


@pytest.fixture(scope="session")
def paper_solution() -> si.InversionSolution:
    """Time-optimal pulse for the experimental case (offset 4x rf max)."""
    return si.solve_inversion_single(PAPER_DELTA, si.SolverConfig())


@pytest.fixture(scope="session")
def paper_pulse(paper_solution) -> si.Pulse:
    return paper_solution.pulse.to_pulse(units_hz=PAPER_RFMAX_HZ)


@pytest.fixture(scope="session")
def pi_offset_solution() -> si.InversionSolution:
    """Two-bang optimum at delta = pi (folded-switch regime)."""
    return si.solve_inversion_single(math.pi, si.SolverConfig())


def two_spin_paper_start(sol: si.InversionSolution) -> si.ExtremalPoint:
    """Both spins at the north pole with mirrored costates, which realizes
    the simultaneous-inversion extremal for an x-axis control."""
    p_a = sol.costate0
    p_b = np.array([-p_a[0], p_a[1], p_a[2]])
    return si.ExtremalPoint(np.array([si.NORTH, si.NORTH]),
                            np.array([p_a, p_b]), PAPER_DELTA)
