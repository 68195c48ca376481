"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Vector/matrix sizes do not match the grid or each other."""


class DomainError(ValueError):
    """Evaluation point lies outside [0, 1]."""


class DegenerateBasisError(ValueError):
    """Raw basis system is (numerically) rank deficient."""


class DegeneratePhaseError(ValueError):
    """Phase function violates monotonicity or the slope floor."""


class NumericalError(RuntimeError):
    """Linear algebra failed beyond the configured jitter policy."""


class ConfigError(ValueError):
    """Invalid experiment configuration or input file."""
