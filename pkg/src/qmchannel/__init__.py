"""1D quantum states through measurement channels.

The package models what a finite-resolution device does to the statistics
of a 1D quantum state: intrinsic descriptors (mean, deviation, central
moments of an observable) are computed from the wavefunction, a kernel
channel blurs the probability density and current, the predicted
post-measurement state is rebuilt in polar form and re-described, simulated
sampling produces empirical quantifiers, and a confrontation step compares
experiment with either theory side.
"""

from .errors import (
    ConfigError,
    DomainTooSmallError,
    GridMismatchError,
    InconsistentChannelError,
    KernelNormalizationError,
    NonSymmetricOperatorError,
    QmChannelError,
    SpectralCaptureError,
    ZeroNormError,
)
from .grid import (
    Grid,
    GridFunction,
    derivative,
    inner_product,
    integrate,
    norm,
    normalize,
    require_same_grid,
)
from .state import (
    DescriptorSet,
    NATURAL_UNITS,
    Observable,
    PhysicalUnits,
    WaveFunction,
    central_moment,
    current,
    density,
    descriptor_set,
    hamiltonian_observable,
    harmonic_hamiltonian,
    in_deviation,
    in_mean,
    momentum_observable,
    oscillator_grid,
    oscillator_sigma,
    position_observable,
)
from .channel import (
    ChannelModel,
    GaussianChannelSpec,
    Kernel,
    apply_channel,
    apply_kernel,
    build_gaussian_kernel,
    identity_kernel,
    normalize_kernel,
    oscillator_closed_forms,
    pd_descriptors,
    reconstruct_predicted_state,
    write_kernel_csv,
)
from .eigensolver import (
    EigenSolution,
    PotentialSpec,
    residual_norm,
    solve_bound_states,
    write_eigensolution_csv,
)
from .sampling import (
    Comparison,
    ConfrontationReport,
    ConfrontationTolerances,
    DeviceNoise,
    EmpiricalDistribution,
    PositionTarget,
    SamplingPlan,
    SpectralTarget,
    confront,
    draw_samples,
    empirical_from_samples,
    exp_quantifiers,
    single_sampling_fallacy_demo,
    spectral_probabilities,
    write_empirical_csv,
    write_samples_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "GridFunction",
    "integrate",
    "inner_product",
    "norm",
    "normalize",
    "derivative",
    "require_same_grid",
    "PhysicalUnits",
    "NATURAL_UNITS",
    "WaveFunction",
    "Observable",
    "DescriptorSet",
    "position_observable",
    "momentum_observable",
    "hamiltonian_observable",
    "harmonic_hamiltonian",
    "density",
    "current",
    "in_mean",
    "in_deviation",
    "central_moment",
    "descriptor_set",
    "oscillator_sigma",
    "oscillator_grid",
    "Kernel",
    "GaussianChannelSpec",
    "ChannelModel",
    "normalize_kernel",
    "identity_kernel",
    "build_gaussian_kernel",
    "apply_kernel",
    "apply_channel",
    "reconstruct_predicted_state",
    "pd_descriptors",
    "oscillator_closed_forms",
    "write_kernel_csv",
    "PotentialSpec",
    "EigenSolution",
    "solve_bound_states",
    "residual_norm",
    "write_eigensolution_csv",
    "DeviceNoise",
    "PositionTarget",
    "SpectralTarget",
    "SamplingPlan",
    "EmpiricalDistribution",
    "empirical_from_samples",
    "spectral_probabilities",
    "draw_samples",
    "exp_quantifiers",
    "ConfrontationTolerances",
    "Comparison",
    "ConfrontationReport",
    "confront",
    "single_sampling_fallacy_demo",
    "write_samples_csv",
    "write_empirical_csv",
    "QmChannelError",
    "GridMismatchError",
    "ZeroNormError",
    "NonSymmetricOperatorError",
    "InconsistentChannelError",
    "DomainTooSmallError",
    "SpectralCaptureError",
    "KernelNormalizationError",
    "ConfigError",
]
