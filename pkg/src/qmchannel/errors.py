"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit
stable error JSON without string-matching exception messages.
"""


class QmChannelError(Exception):
    """Base class for all library errors."""

    code = "error"


class GridMismatchError(QmChannelError):
    """Two grid quantities that must live on the same grid do not."""

    code = "grid-mismatch"


class ZeroNormError(QmChannelError):
    """A function with (numerically) zero norm cannot be normalized."""

    code = "zero-norm"


class NonSymmetricOperatorError(QmChannelError):
    """An expectation value came out with a non-negligible imaginary part."""

    code = "non-symmetric-operator"


class InconsistentChannelError(QmChannelError):
    """Channel output carries current where the output density vanishes."""

    code = "inconsistent-channel-output"


class DomainTooSmallError(QmChannelError):
    """A computed bound state does not decay before hitting the grid edge."""

    code = "domain-too-small"


class SpectralCaptureError(QmChannelError):
    """The requested number of eigenstates misses too much of the state."""

    code = "k-max-too-small"


class KernelNormalizationError(QmChannelError):
    """Double normalization of a kernel failed to converge."""

    code = "kernel-normalization-failed"


class ConfigError(QmChannelError):
    """A config file or flag value could not be parsed or is out of range."""

    code = "config-error"
