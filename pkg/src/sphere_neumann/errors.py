"""Exception hierarchy shared by all solvers."""


class SphereNeumannError(Exception):
    """Base class for every error raised by this package."""


class DegenerateMapError(SphereNeumannError):
    """The analytic map has (numerically) vanishing derivative."""


class ResolutionError(SphereNeumannError):
    """A quadrature or grid did not converge under refinement."""


class InversionError(SphereNeumannError):
    """The cumulative area function could not be inverted."""


class GridTooCoarseError(ResolutionError):
    """An eigenvalue moved too much under one grid refinement."""


class ProfileMismatchError(SphereNeumannError, ValueError):
    """Two profiles do not share grid and total area."""


class SignChangeError(SphereNeumannError):
    """A function expected to be strictly positive changes sign."""


class ConvergenceError(SphereNeumannError):
    """An iterative method hit its iteration cap."""


class DegreeError(SphereNeumannError):
    """The winding number of the barycenter field is not 1."""


class CapGapError(SphereNeumannError):
    """The computed cap eigenvalue ordering mu_11 < mu_02 was violated."""


class ConfigError(SphereNeumannError, ValueError):
    """A configuration document is malformed."""


class ProfileOrderError(SphereNeumannError, ValueError):
    """A monotonicity sweep was given profiles with ``G0 > G1`` somewhere."""
