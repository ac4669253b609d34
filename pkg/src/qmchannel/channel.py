"""Measurement channels: device kernels acting on density and current.

A channel is a pair of kernels (Gamma for the probability density, Lambda
for the probability current).  Applied to the intrinsic density rho_in and
current j_in of a state, they produce the predicted post-measurement pair

    rho_pd(x) = integral Gamma(x, x') rho_in(x') dx'
    j_pd(x)   = integral Lambda(x, x') j_in(x') dx'

discretized with the grid's quadrature weights.  The Gaussian family uses
K(x, x') proportional to exp(-(x - x')^2 / 2 gamma^2), doubly normalized so
that both integral K dx and integral K dx' equal 1; this keeps rho_pd a
probability density.  The predicted wavefunction is rebuilt from (rho_pd,
j_pd) in polar form, which lets every intrinsic descriptor be re-evaluated
on the predicted state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (
    GridMismatchError,
    InconsistentChannelError,
    KernelNormalizationError,
    ZeroNormError,
)
from .grid import Grid, GridFunction, require_same_grid
from .state import PhysicalUnits, NATURAL_UNITS, WaveFunction, DescriptorSet, descriptor_set

# double normalization drives row/column quadrature sums to 1 within this
_NORMALIZATION_TOL = 1e-12
# iterate the scaling vectors a bit below it so the scaled matrix lands inside
_SINKHORN_TOL = 5e-13
_SINKHORN_MAX_ITER = 2000

# reconstruction: density floor (relative to the peak) below which the phase
# is not defined, and the largest relative current tolerated there
_RHO_FLOOR_REL = 1e-12
_J_TAIL_REL = 1e-6


@dataclass(frozen=True)
class Kernel:
    """Discrete kernel K[i, j] ~ K(x_i, x_j) on a grid.

    ``normalization_mode`` records which quadrature sums were normalized:
    "row", "column", "both", or "none".
    """

    grid: Grid
    values: np.ndarray
    normalization_mode: str = "none"

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"kernel must be {self.grid.n} x {self.grid.n}, got {values.shape}"
            )
        if self.normalization_mode not in ("row", "column", "both", "none"):
            raise ValueError(f"unknown normalization mode {self.normalization_mode!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def row_integrals(self) -> np.ndarray:
        """integral K(x_i, x') dx' for each i."""
        return self.values @ self.grid.trapezoid_weights

    def column_integrals(self) -> np.ndarray:
        """integral K(x, x_j) dx for each j."""
        return self.grid.trapezoid_weights @ self.values


@dataclass(frozen=True)
class GaussianChannelSpec:
    """Width parameter of a Gaussian device kernel on a given grid.

    gamma = 0 (or anything below half a grid spacing) means an ideal device:
    the kernel degenerates to the discrete identity.
    """

    grid: Grid
    gamma: float

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    @property
    def is_ideal(self) -> bool:
        return self.gamma < 0.5 * self.grid.h


def _sums_deviation(values: np.ndarray, w: np.ndarray) -> float:
    rows = values @ w
    cols = w @ values
    return float(max(np.max(np.abs(rows - 1.0)), np.max(np.abs(cols - 1.0))))


def _doubly_normalize_symmetric(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    # symmetric scaling-vector fixed point: find s > 0 with
    # diag(s) K diag(s) doubly normalized.  One matvec per sweep; converges
    # in a few dozen sweeps where alternating row/column scaling needs
    # hundreds for narrow kernels.
    row = values @ w
    if np.any(row <= 0.0) or not np.all(np.isfinite(row)):
        raise KernelNormalizationError("kernel has a row with nonpositive mass")
    s = 1.0 / np.sqrt(row)
    for _ in range(_SINKHORN_MAX_ITER):
        r = s * (values @ (w * s))
        if float(np.max(np.abs(r - 1.0))) < _SINKHORN_TOL:
            break
        s = s * r**-0.5
    else:
        raise KernelNormalizationError(
            f"symmetric double normalization did not reach {_SINKHORN_TOL} "
            f"in {_SINKHORN_MAX_ITER} sweeps"
        )
    return s[:, None] * values * s[None, :]


def _doubly_normalize_alternating(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = values.copy()
    for _ in range(_SINKHORN_MAX_ITER):
        rows = out @ w
        if np.any(rows <= 0.0) or not np.all(np.isfinite(rows)):
            raise KernelNormalizationError("kernel has a row with nonpositive mass")
        out /= rows[:, None]
        cols = w @ out
        if np.any(cols <= 0.0) or not np.all(np.isfinite(cols)):
            raise KernelNormalizationError("kernel has a column with nonpositive mass")
        out /= cols[None, :]
        if _sums_deviation(out, w) < _NORMALIZATION_TOL:
            return out
    raise KernelNormalizationError(
        f"alternating double normalization did not reach {_NORMALIZATION_TOL} "
        f"in {_SINKHORN_MAX_ITER} sweeps"
    )


def normalize_kernel(grid: Grid, values: np.ndarray, mode: str = "both") -> Kernel:
    """Normalize kernel quadrature sums to 1.

    mode "row" or "column" is a single exact rescale of that index; "both"
    runs the iterative double normalization and guarantees both families of
    sums within 1e-12.
    """
    values = np.array(values, dtype=np.float64, copy=True)
    w = grid.trapezoid_weights
    if mode == "row":
        rows = values @ w
        if np.any(rows <= 0.0):
            raise KernelNormalizationError("kernel has a row with nonpositive mass")
        out = values / rows[:, None]
    elif mode == "column":
        cols = w @ values
        if np.any(cols <= 0.0):
            raise KernelNormalizationError("kernel has a column with nonpositive mass")
        out = values / cols[None, :]
    elif mode == "both":
        if np.array_equal(values, values.T):
            out = _doubly_normalize_symmetric(values, w)
        else:
            out = _doubly_normalize_alternating(values, w)
        dev = _sums_deviation(out, w)
        if not dev < _NORMALIZATION_TOL:
            raise KernelNormalizationError(
                f"double normalization left sums off by {dev:.3e}"
            )
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    return Kernel(grid, out, normalization_mode=mode)


def identity_kernel(grid: Grid) -> Kernel:
    """Discrete identity: K = diag(1/w_i);  K (w rho) = rho exactly."""
    return Kernel(grid, np.diag(1.0 / grid.trapezoid_weights), normalization_mode="both")


def build_gaussian_kernel(spec: GaussianChannelSpec) -> Kernel:
    """Doubly normalized Gaussian kernel of width ``spec.gamma``.

    Widths below half a grid spacing cannot be resolved and snap to the
    discrete identity, so the ideal-device limit is exact rather than a
    badly aliased near-delta.
    """
    if spec.is_ideal:
        return identity_kernel(spec.grid)
    x = spec.grid.points
    d = x[:, None] - x[None, :]
    raw = np.exp(-(d * d) / (2.0 * spec.gamma**2))
    return normalize_kernel(spec.grid, raw, mode="both")


@dataclass(frozen=True)
class ChannelModel:
    """Kernel pair: Gamma blurs the density, Lambda blurs the current."""

    gamma_kernel: Kernel
    lambda_kernel: Kernel
    label: str = ""

    def __post_init__(self):
        if self.gamma_kernel.grid != self.lambda_kernel.grid:
            raise ValueError("density and current kernels live on different grids")

    @property
    def grid(self) -> Grid:
        return self.gamma_kernel.grid

    @classmethod
    def gaussian(
        cls,
        grid: Grid,
        gamma: float,
        current_gamma: Optional[float] = None,
        label: Optional[str] = None,
    ) -> "ChannelModel":
        """Gaussian channel of width ``gamma``.

        By default the current kernel uses the same width as the density
        kernel (one device, one resolution); pass ``current_gamma`` to model
        a device that smears the two differently.
        """
        gk = build_gaussian_kernel(GaussianChannelSpec(grid, gamma))
        if current_gamma is None or current_gamma == gamma:
            lk = gk
        else:
            lk = build_gaussian_kernel(GaussianChannelSpec(grid, current_gamma))
        if label is None:
            label = f"gaussian(gamma={gamma!r})"
        return cls(gk, lk, label)


def apply_kernel(kernel: Kernel, f: GridFunction) -> GridFunction:
    """Quadrature convolution: out(x_i) = sum_j K[i, j] w_j f(x_j)."""
    if kernel.grid != f.grid:
        raise GridMismatchError(
            f"kernel grid [{kernel.grid.x_min}, {kernel.grid.x_max}] n={kernel.grid.n} "
            f"does not match function grid [{f.grid.x_min}, {f.grid.x_max}] n={f.grid.n}"
        )
    return GridFunction(f.grid, kernel.values @ (f.grid.trapezoid_weights * f.values))


def apply_channel(
    channel: ChannelModel, rho_in: GridFunction, j_in: GridFunction
) -> tuple[GridFunction, GridFunction]:
    """Predicted (rho_pd, j_pd) after the device acts on (rho_in, j_in).

    With a doubly normalized nonnegative Gamma the output density keeps unit
    integral and nonnegativity.
    """
    require_same_grid(rho_in, j_in)
    rho_pd = apply_kernel(channel.gamma_kernel, rho_in)
    j_pd = apply_kernel(channel.lambda_kernel, j_in)
    return rho_pd, j_pd


def reconstruct_predicted_state(
    rho_pd: GridFunction,
    j_pd: GridFunction,
    units: PhysicalUnits = NATURAL_UNITS,
) -> WaveFunction:
    """Rebuild the predicted wavefunction in polar form.

    Psi_pd = sqrt(rho_pd) exp(i phi) with the phase integrated from
    phi' = m j_pd / (hbar rho_pd) wherever the density is above a floor of
    1e-12 times its peak.  The phase gradient is taken as zero below the
    floor; if the channel put current there anyway (more than 1e-6 of the
    peak current), no single-valued wavefunction reproduces the pair and
    InconsistentChannelError is raised.  Gauge: phase = 0 at the leftmost
    above-floor point.
    """
    require_same_grid(rho_pd, j_pd)
    grid = rho_pd.grid
    rho = np.real(rho_pd.values)
    peak = float(np.max(rho))
    if peak <= 0.0:
        raise ZeroNormError("predicted density is nonpositive everywhere")
    if float(np.min(rho)) < -1e-12 * peak:
        raise ValueError("predicted density has significantly negative values")
    rho = np.clip(rho, 0.0, None)

    floor = _RHO_FLOOR_REL * peak
    above = rho >= floor
    j = np.real(j_pd.values)
    j_peak = float(np.max(np.abs(j)))
    if j_peak > 0.0:
        tail = float(np.max(np.abs(j[~above]), initial=0.0))
        if tail > _J_TAIL_REL * j_peak:
            raise InconsistentChannelError(
                f"current {tail:.3e} persists where the predicted density is "
                f"below its floor {floor:.3e}; no wavefunction carries this pair"
            )

    phase_grad = np.zeros(grid.n)
    phase_grad[above] = units.mass * j[above] / (units.hbar * rho[above])
    phase = cumulative_trapezoid(phase_grad, dx=grid.h, initial=0.0)
    phase -= phase[int(np.argmax(above))]

    psi = np.sqrt(rho) * np.exp(1j * phase)
    return WaveFunction.from_values(grid, psi, units)


def pd_descriptors(state_pd: WaveFunction, observable, include_higher: bool = False) -> DescriptorSet:
    """Predicted descriptors: the intrinsic ones evaluated on the predicted state."""
    return descriptor_set(state_pd, observable, include_higher=include_higher)


def oscillator_closed_forms(
    units: PhysicalUnits, gamma: float
) -> tuple[float, float, float, float]:
    """Closed-form oscillator energy descriptors for a Gaussian channel.

    Returns (mean_pd, dev_pd, mean_in, dev_in) for the ground state of the
    harmonic trap sent through a width-``gamma`` Gaussian channel.  With
    D = hbar + 2 m omega gamma^2:

        mean_in = hbar omega / 2                      dev_in = 0
        mean_pd = omega (hbar^2 + D^2) / (4 D)
        dev_pd  = sqrt(2) m omega^2 gamma^2 (hbar + m omega gamma^2) / D
    """
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    hbar, m, w = units.hbar, units.mass, units.omega
    mean_in = 0.5 * hbar * w
    dev_in = 0.0
    d = hbar + 2.0 * m * w * gamma**2
    mean_pd = w * (hbar**2 + d**2) / (4.0 * d)
    dev_pd = float(np.sqrt(2.0)) * m * w**2 * gamma**2 * (hbar + m * w * gamma**2) / d
    return mean_pd, dev_pd, mean_in, dev_in


def write_kernel_csv(kernel: Kernel, path) -> None:
    """Dump a kernel as CSV: header row of x' values, one row per x."""
    x = kernel.grid.points
    lines = ["x\\xp," + ",".join(repr(float(v)) for v in x)]
    for i in range(kernel.grid.n):
        row = ",".join(repr(float(v)) for v in kernel.values[i])
        lines.append(f"{float(x[i])!r},{row}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
