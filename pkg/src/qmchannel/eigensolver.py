"""Bound states of the 1D stationary Schroedinger problem on a uniform grid.

The Hamiltonian is discretized with the standard 3-point kinetic stencil and
Dirichlet conditions (the wavefunction is pinned to zero at both grid ends),
giving a real symmetric tridiagonal matrix over the interior points.  The
lowest k eigenpairs come from scipy's tridiagonal solver; states are
quadrature-normalized and sign-fixed so repeated solves are bit-identical.

Dirichlet walls at the boundary only approximate a problem on the whole line
if the requested states have already decayed there, so every state is
checked for boundary decay and DomainTooSmallError is raised otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainTooSmallError, GridMismatchError
from .grid import Grid, GridFunction, norm
from .state import (
    NATURAL_UNITS,
    Observable,
    PhysicalUnits,
    WaveFunction,
    hamiltonian_observable,
)

BOUNDARY_TOL = 1e-6  # largest |Psi| tolerated next to a Dirichlet wall
_SIGN_REL = 1e-8  # sign convention looks at the first component above this


@dataclass(frozen=True)
class PotentialSpec:
    """A potential: the built-in harmonic trap or a user-supplied table.

    Tables are tied to the grid they were sampled on; asking for values on a
    different grid raises GridMismatchError rather than silently
    interpolating.
    """

    kind: str
    units: PhysicalUnits = NATURAL_UNITS
    table: Optional[GridFunction] = None

    def __post_init__(self):
        if self.kind not in ("harmonic", "user_table"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "user_table":
            if self.table is None:
                raise ValueError("user_table potential needs a table")
            if not np.all(np.isfinite(self.table.values)):
                raise ValueError("potential table contains non-finite values")
        elif self.table is not None:
            raise ValueError("harmonic potential does not take a table")

    @classmethod
    def harmonic(cls, units: PhysicalUnits = NATURAL_UNITS) -> "PotentialSpec":
        return cls("harmonic", units)

    @classmethod
    def from_table(
        cls, table: GridFunction, units: PhysicalUnits = NATURAL_UNITS
    ) -> "PotentialSpec":
        return cls("user_table", units, table)

    def values_on(self, grid: Grid) -> np.ndarray:
        if self.kind == "harmonic":
            u = self.units
            return 0.5 * u.mass * u.omega**2 * grid.points**2
        if self.table.grid != grid:
            raise GridMismatchError("potential table was sampled on a different grid")
        return np.asarray(self.table.values, dtype=np.float64)

    def hamiltonian(self, grid: Grid) -> Observable:
        """Matrix-free Hamiltonian observable for this potential on ``grid``."""
        v = self.values_on(grid)
        return hamiltonian_observable(lambda x: v, self.units)


@dataclass(frozen=True)
class EigenSolution:
    """The lowest-k bound states: ascending energies and normalized states."""

    energies: np.ndarray
    states: tuple[WaveFunction, ...]
    potential: PotentialSpec

    def __post_init__(self):
        energies = np.array(self.energies, dtype=np.float64, copy=True)
        energies.flags.writeable = False
        object.__setattr__(self, "energies", energies)
        if len(self.states) != energies.size:
            raise ValueError("one state per energy required")
        if energies.size > 1 and not np.all(np.diff(energies) > 0.0):
            raise ValueError("energies must be strictly ascending")

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    @property
    def k(self) -> int:
        return int(self.energies.size)


def solve_bound_states(
    potential: PotentialSpec,
    grid: Grid,
    k: int,
    boundary_tol: float = BOUNDARY_TOL,
) -> EigenSolution:
    """Lowest ``k`` eigenpairs of the discretized Hamiltonian.

    Raises DomainTooSmallError if any returned state fails to decay below
    ``boundary_tol`` next to the grid edges.
    """
    if not 1 <= k <= grid.n - 2:
        raise ValueError(f"k must be between 1 and n-2={grid.n - 2}, got {k}")
    units = potential.units
    v = potential.values_on(grid)
    t = units.hbar**2 / (2.0 * units.mass * grid.h**2)
    diag = 2.0 * t + v[1:-1]
    off = np.full(grid.n - 3, -t)
    energies, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))

    states = []
    for s in range(k):
        psi = np.zeros(grid.n)
        psi[1:-1] = vectors[:, s]
        psi /= norm(GridFunction(grid, psi))
        # fix the overall sign: first component above threshold is positive
        big = np.abs(psi) > _SIGN_REL * float(np.max(np.abs(psi)))
        if psi[int(np.argmax(big))] < 0.0:
            psi = -psi
        edge = max(abs(psi[1]), abs(psi[-2]))
        if edge > boundary_tol:
            raise DomainTooSmallError(
                f"state {s} has |Psi|={edge:.3e} next to the boundary "
                f"(tolerance {boundary_tol:.1e}); widen the domain"
            )
        states.append(WaveFunction(GridFunction(grid, psi), units))
    return EigenSolution(energies, tuple(states), potential)


def residual_norm(solution: EigenSolution, index: int) -> float:
    """Quadrature norm of H Psi_s - E_s Psi_s for state ``index``."""
    if not 0 <= index < solution.k:
        raise IndexError(f"state index {index} out of range 0..{solution.k - 1}")
    h = solution.potential.hamiltonian(solution.grid)
    state = solution.states[index]
    r = h.apply(state.psi).values - solution.energies[index] * state.psi.values
    return norm(GridFunction(solution.grid, r))


def write_eigensolution_csv(solution: EigenSolution, path) -> None:
    """Dump states as CSV: x, psi_0 .. psi_{k-1} (states are real-valued)."""
    header = "x," + ",".join(f"psi_{s}" for s in range(solution.k))
    x = solution.grid.points
    cols = [np.real(st.psi.values) for st in solution.states]
    lines = [header]
    for i in range(solution.grid.n):
        row = ",".join(repr(float(c[i])) for c in cols)
        lines.append(f"{float(x[i])!r},{row}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
