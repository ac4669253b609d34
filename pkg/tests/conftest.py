"""Shared fixtures: the expensive solves and kernels are session-scoped."""

import numpy as np
import pytest

import qmchannel as qc


@pytest.fixture(scope="session")
def units():
    return qc.NATURAL_UNITS


@pytest.fixture(scope="session")
def harmonic(units):
    return qc.PotentialSpec.harmonic(units)


@pytest.fixture(scope="session")
def osc_grid(units):
    # default working grid: [-12 sigma, 12 sigma], 2048 points
    return qc.oscillator_grid(units)


@pytest.fixture(scope="session")
def h_obs(harmonic, osc_grid):
    return harmonic.hamiltonian(osc_grid)


@pytest.fixture(scope="session")
def ground_solution(harmonic, osc_grid):
    return qc.solve_bound_states(harmonic, osc_grid, 1)


@pytest.fixture(scope="session")
def ground(ground_solution):
    return ground_solution.states[0]


@pytest.fixture(scope="session")
def six_states(harmonic, osc_grid):
    return qc.solve_bound_states(harmonic, osc_grid, 6)


@pytest.fixture(scope="session")
def make_gaussian_state(units):
    """Factory for analytic Gaussian wavepackets exp(-(x-x0)^2/4 s^2) e^(ikx)."""

    def _make(grid, s=None, k=0.0, x0=0.0):
        if s is None:
            s = qc.oscillator_sigma(units)
        x = grid.points
        envelope = np.exp(-((x - x0) ** 2) / (4.0 * s**2))
        psi = envelope * np.exp(1j * k * x) if k != 0.0 else envelope
        return qc.WaveFunction.from_values(grid, psi, units)

    return _make
