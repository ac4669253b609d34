"""Uniform 1D grids, sampled functions, quadrature and finite differences.

Everything else in the package lives on these grids: wavefunctions,
densities, currents and kernels are arrays of samples at the grid points,
integrals are composite quadrature sums, and derivatives are second-order
finite-difference stencils.  Grids and grid functions are immutable value
objects; operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .errors import GridMismatchError, ZeroNormError

_MIN_POINTS = 8  # below this the boundary stencils overlap


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` points on ``[x_min, x_max]``.

    Spacing is ``h = (x_max - x_min) / (n - 1)``; both endpoints are grid
    points.
    """

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(
                f"need x_min < x_max, got [{self.x_min}, {self.x_max}]"
            )
        if self.n < _MIN_POINTS:
            raise ValueError(f"need at least {_MIN_POINTS} points, got n={self.n}")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def points(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        # composite trapezoid: h * [1/2, 1, 1, ..., 1, 1/2]
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        w.flags.writeable = False
        return w


@dataclass(frozen=True)
class GridFunction:
    """Samples of a real- or complex-valued function at the points of a Grid.

    The sample array is copied on construction and frozen; real input is
    stored as float64, anything complex as complex128.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        dtype = np.complex128 if np.iscomplexobj(self.values) else np.float64
        values = np.array(self.values, dtype=dtype, copy=True).reshape(-1)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} samples, got {values.shape[0]}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(grid, np.asarray(fn(grid.points)))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)


def require_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(
            f"grids differ: [{f.grid.x_min}, {f.grid.x_max}] n={f.grid.n} vs "
            f"[{g.grid.x_min}, {g.grid.x_max}] n={g.grid.n}"
        )


def integrate(f: GridFunction, rule: str = "trapezoid"):
    """Integral of ``f`` over the grid.

    ``rule`` is "trapezoid" (default, exact for piecewise-linear data) or
    "simpson" (composite Simpson, higher order on smooth data).
    """
    if rule == "trapezoid":
        total = np.sum(f.grid.trapezoid_weights * f.values)
    elif rule == "simpson":
        total = simpson(f.values, dx=f.grid.h)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return complex(total) if np.iscomplexobj(f.values) else float(total)


def inner_product(f: GridFunction, g: GridFunction, rule: str = "trapezoid"):
    """Quadrature inner product <f, g> = integral of conj(f) * g."""
    require_same_grid(f, g)
    integrand = GridFunction(f.grid, np.conj(f.values) * g.values)
    return integrate(integrand, rule=rule)


def norm(f: GridFunction, rule: str = "trapezoid") -> float:
    """L2 quadrature norm of ``f``."""
    w = f.grid.trapezoid_weights if rule == "trapezoid" else None
    density = np.abs(f.values) ** 2
    if w is not None:
        total = float(np.sum(w * density))
    else:
        total = integrate(GridFunction(f.grid, density), rule=rule)
    return float(np.sqrt(max(total, 0.0)))


def normalize(f: GridFunction, rule: str = "trapezoid") -> GridFunction:
    """Rescale ``f`` to unit L2 norm.

    Raises ZeroNormError if the norm is zero, non-finite, or so small that
    the rescaled values would overflow.
    """
    n2 = norm(f, rule=rule)
    if not np.isfinite(n2) or n2 <= np.sqrt(np.finfo(np.float64).tiny):
        raise ZeroNormError(f"cannot normalize function with norm {n2!r}")
    return GridFunction(f.grid, f.values / n2)


def derivative(f: GridFunction, order: int = 1) -> GridFunction:
    """Finite-difference derivative of order 1 or 2, O(h^2) everywhere.

    Interior points use central stencils; the two boundary points use
    one-sided three/four-point stencils of the same order of accuracy.
    """
    v = f.values
    h = f.grid.h
    out = np.empty_like(v)
    if order == 1:
        out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
        out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    elif order == 2:
        h2 = h * h
        out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
        out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
        out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
    else:
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    return GridFunction(f.grid, out)
