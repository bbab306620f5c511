"""Shared exception types."""


class TwinflipError(Exception):
    pass


class MalformedMatrix(TwinflipError):
    pass


class NonSphericalOrTooLarge(TwinflipError):
    pass


class MixedSystems(TwinflipError):
    pass


class NotTwisted(TwinflipError):
    pass


class BadChamber(TwinflipError):
    pass


class BadType(TwinflipError):
    pass


class NotSpherical(TwinflipError):
    pass


class NotOpposite(TwinflipError):
    pass


class MixedAmbient(TwinflipError):
    pass


class TooLarge(TwinflipError):
    pass


class DependentFrame(TwinflipError):
    pass


class ValidationFailed(TwinflipError):
    pass


class NoBypass(TwinflipError):
    pass


class NotDivisible(TwinflipError):
    pass


class NotFound(TwinflipError):
    pass


class MismatchBug(TwinflipError):
    """An equality that a verified theorem guarantees failed to hold."""


class HypothesisNotMet(TwinflipError):
    """Instance does not satisfy the hypotheses a check requires."""
