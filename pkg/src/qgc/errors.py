"""Exception hierarchy shared across the package."""


class QgcError(Exception):
    """Base class for all package-specific errors."""


class AntipodalPoints(QgcError):
    """Log map / slerp requested for (nearly) antipodal sphere points."""


class InconsistentJet(QgcError):
    """Position/derivative data violates the sphere constraint identities."""


class GradientSingularity(QgcError):
    """Potential gradient evaluated too close to a center or its antipode."""


class StepCountOverflow(QgcError):
    """Integration would exceed the hard step budget."""


class ChartOverflow(QgcError):
    """A group increment left the retraction chart (rotation angle too large)."""


class NonliftableStep(QgcError):
    """No generator satisfies both the projection and momentum constraints."""


class HorizonInfeasible(QgcError):
    """Finite-horizon solve failed from both warm and cold starts."""


class ParseError(QgcError):
    """Malformed or unknown content in a scenario configuration file."""


class ValidationError(QgcError):
    """Structurally valid configuration with invariant-violating values."""
