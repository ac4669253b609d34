"""Wavefunctions, observables, and intrinsic statistical descriptors.

A state is a unit-normalized complex wavefunction on a grid together with
the physical constants it was built with.  Observables are matrix-free
linear maps on grid functions.  The intrinsic descriptors of a state with
respect to an observable A are the quadrature versions of

    mean      <A>   = (Psi, A Psi)
    deviation sigma = || (A - <A>) Psi ||
    moments   m_k   = (Psi, (A - <A>)^k Psi),  k = 2, 3, 4

computed directly from the wavefunction, before any measurement model is
applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonSymmetricOperatorError
from .grid import Grid, GridFunction, derivative, inner_product, integrate, normalize

NORM_TOL = 1e-10
# expectation values of symmetric operators must be real; anything beyond
# this (absolute, or relative for large values) indicates a broken operator
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class PhysicalUnits:
    """Constants entering the dynamics: hbar, particle mass, trap frequency."""

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


NATURAL_UNITS = PhysicalUnits()

#: CODATA value, used when a run is configured with SI units
HBAR_SI = 1.054571817e-34


def oscillator_sigma(units: PhysicalUnits = NATURAL_UNITS) -> float:
    """Position spread of the harmonic-oscillator ground state, sqrt(hbar/2m omega)."""
    return float(np.sqrt(units.hbar / (2.0 * units.mass * units.omega)))


def oscillator_grid(
    units: PhysicalUnits = NATURAL_UNITS,
    n: int = 2048,
    gamma: float = 0.0,
    half_width_sigmas: float = 12.0,
) -> Grid:
    """Symmetric grid wide enough for oscillator work at device width ``gamma``.

    The half-width covers ``half_width_sigmas`` standard deviations of the
    widest density in play: the ground state itself, or the blurred density
    of spread sqrt(sigma^2 + gamma^2) when a measurement channel is present.
    """
    sigma = oscillator_sigma(units)
    spread = max(sigma, float(np.hypot(sigma, gamma)))
    half_width = half_width_sigmas * spread
    return Grid(-half_width, half_width, n)


@dataclass(frozen=True)
class WaveFunction:
    """Unit-normalized wavefunction on a grid.

    Construction validates the quadrature norm; use :meth:`from_values` to
    normalize raw samples.
    """

    psi: GridFunction
    units: PhysicalUnits = NATURAL_UNITS

    def __post_init__(self):
        total = integrate(GridFunction(self.psi.grid, np.abs(self.psi.values) ** 2))
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(
                f"wavefunction must be unit-normalized, got |Psi|^2 integral {total!r}"
            )

    @classmethod
    def from_values(
        cls, grid: Grid, values, units: PhysicalUnits = NATURAL_UNITS
    ) -> "WaveFunction":
        """Normalize raw samples and wrap them as a state."""
        return cls(normalize(GridFunction(grid, np.asarray(values))), units)

    @property
    def grid(self) -> Grid:
        return self.psi.grid


@dataclass(frozen=True)
class Observable:
    """A named linear map on grid functions.

    ``apply`` must be linear; descriptor routines additionally assume it is
    symmetric with respect to the quadrature inner product and raise
    NonSymmetricOperatorError when an expectation value comes out complex.
    """

    name: str
    apply: Callable[[GridFunction], GridFunction]
    units: PhysicalUnits = NATURAL_UNITS


def position_observable(units: PhysicalUnits = NATURAL_UNITS) -> Observable:
    def apply(f: GridFunction) -> GridFunction:
        return GridFunction(f.grid, f.grid.points * f.values)

    return Observable("x", apply, units)


def momentum_observable(units: PhysicalUnits = NATURAL_UNITS) -> Observable:
    hbar = units.hbar

    def apply(f: GridFunction) -> GridFunction:
        return GridFunction(f.grid, -1j * hbar * derivative(f, 1).values)

    return Observable("p", apply, units)


def hamiltonian_observable(
    potential: Callable[[np.ndarray], np.ndarray],
    units: PhysicalUnits = NATURAL_UNITS,
    name: str = "H",
) -> Observable:
    """Hamiltonian -hbar^2/2m d^2/dx^2 + V(x) for a potential callable."""
    prefactor = units.hbar**2 / (2.0 * units.mass)

    def apply(f: GridFunction) -> GridFunction:
        kinetic = -prefactor * derivative(f, 2).values
        return GridFunction(f.grid, kinetic + potential(f.grid.points) * f.values)

    return Observable(name, apply, units)


def harmonic_hamiltonian(units: PhysicalUnits = NATURAL_UNITS) -> Observable:
    """Hamiltonian of the harmonic trap V = m omega^2 x^2 / 2."""
    m, w = units.mass, units.omega

    def v(x: np.ndarray) -> np.ndarray:
        return 0.5 * m * w**2 * x**2

    return hamiltonian_observable(v, units, name="H")


def density(state: WaveFunction) -> GridFunction:
    """Probability density rho = |Psi|^2 (real, nonnegative, unit integral)."""
    return GridFunction(state.grid, np.abs(state.psi.values) ** 2)


def current(state: WaveFunction) -> GridFunction:
    """Probability current j = (hbar/m) Im(conj(Psi) dPsi/dx).

    Identically zero (exactly, not just numerically) for real wavefunctions.
    """
    if not state.psi.is_complex:
        return GridFunction(state.grid, np.zeros(state.grid.n))
    dpsi = derivative(state.psi, 1)
    j = (state.units.hbar / state.units.mass) * np.imag(
        np.conj(state.psi.values) * dpsi.values
    )
    return GridFunction(state.grid, j)


def in_mean(state: WaveFunction, observable: Observable) -> float:
    """Intrinsic mean (Psi, A Psi); must be real for a symmetric observable."""
    value = inner_product(state.psi, observable.apply(state.psi))
    mean = float(np.real(value))
    imag = float(np.imag(value))
    if abs(imag) > max(IMAG_TOL, IMAG_TOL * abs(mean)):
        raise NonSymmetricOperatorError(
            f"<{observable.name}> has imaginary part {imag:.3e}; "
            "observable is not symmetric on this grid"
        )
    return mean


def _residual(state: WaveFunction, observable: Observable, mean: float) -> np.ndarray:
    return observable.apply(state.psi).values - mean * state.psi.values


def in_deviation(state: WaveFunction, observable: Observable) -> float:
    """Intrinsic standard deviation ||(A - <A>) Psi||.

    Computed from the residual rather than <A^2> - <A>^2, which keeps it
    well-defined (and tiny rather than NaN) on eigenstates.
    """
    mean = in_mean(state, observable)
    r = _residual(state, observable, mean)
    var = float(np.sum(state.grid.trapezoid_weights * np.abs(r) ** 2))
    return float(np.sqrt(max(var, 0.0)))


def central_moment(state: WaveFunction, observable: Observable, order: int) -> float:
    """Central moment (Psi, (A - <A>)^order Psi) for order in {2, 3, 4}."""
    if order not in (2, 3, 4):
        raise ValueError(f"central moment order must be 2, 3 or 4, got {order}")
    mean = in_mean(state, observable)
    g = state.psi
    for _ in range(order):
        g = GridFunction(g.grid, observable.apply(g).values - mean * g.values)
    value = inner_product(state.psi, g)
    moment = float(np.real(value))
    imag = float(np.imag(value))
    if abs(imag) > max(IMAG_TOL, IMAG_TOL * abs(moment)):
        raise NonSymmetricOperatorError(
            f"central moment {order} of {observable.name} has imaginary part {imag:.3e}"
        )
    return moment


@dataclass(frozen=True)
class DescriptorSet:
    """Mean and deviation of one observable, optionally with moments 3 and 4."""

    mean: float
    deviation: float
    higher_moments: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.deviation < 0.0:
            raise ValueError(f"deviation must be nonnegative, got {self.deviation}")


def descriptor_set(
    state: WaveFunction, observable: Observable, include_higher: bool = False
) -> DescriptorSet:
    """Intrinsic descriptors of ``state`` with respect to ``observable``."""
    mean = in_mean(state, observable)
    dev = in_deviation(state, observable)
    higher = None
    if include_higher:
        higher = (
            central_moment(state, observable, 3),
            central_moment(state, observable, 4),
        )
    return DescriptorSet(mean=mean, deviation=dev, higher_moments=higher)
