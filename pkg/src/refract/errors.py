"""Exception hierarchy. Everything user-facing derives from RefractError so the
CLI can map domain failures to exit code 1 with a machine-readable payload."""


class RefractError(Exception):
    """Base class for all domain errors raised by this package."""


class ModelError(RefractError):
    """Invalid model specification or evaluation outside a mixture's domain."""


class PoleError(RefractError):
    """Characteristic exponent evaluated at one of its poles."""


class MultipleRootError(RefractError):
    """Two roots of one family closer than the simplicity tolerance."""


class CountMismatchError(RefractError):
    """Half-plane root counts disagree with the expected multiplicities."""


class EvaluationError(RefractError):
    """A numeric result left its admissible range by more than tolerance."""


class InversionError(RefractError):
    """Numerical Laplace inversion failed its cross-method agreement check."""


class McUnsupportedError(RefractError):
    """Model cannot be simulated (signed or complex mixture weights)."""


class PricingError(RefractError):
    """Pricing input outside its admissible domain (strip, integrability...)."""
