"""Exception types raised by sqfastica."""


class ParameterError(ValueError):
    """A parameter lies outside its admissible domain."""


class QuadratureError(RuntimeError):
    """Numerical integration did not reach the requested accuracy."""


class DimensionError(ValueError):
    """Matrix or sample shapes are incompatible with the operation."""


class SingularCovarianceError(ValueError):
    """The sample covariance matrix is (numerically) singular."""


class DegenerateUpdateError(RuntimeError):
    """A fixed-point update collapsed to a zero or rank-deficient matrix."""


class IdentifiabilityError(ValueError):
    """Both components look Gaussian under the chosen G, so the ASV is undefined."""
