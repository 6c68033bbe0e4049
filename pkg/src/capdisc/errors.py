"""Exception hierarchy shared by all capdisc modules."""


class CapdiscError(ValueError):
    """Base class for every error raised by capdisc."""


class SingularMatrix(CapdiscError):
    pass


class RankError(CapdiscError):
    pass


class DomainError(CapdiscError):
    pass


class PoleError(DomainError):
    pass


class DegenerateCap(CapdiscError):
    pass


class InvalidConfig(CapdiscError):
    pass


class MissingConvexityData(CapdiscError):
    pass


class TooLarge(CapdiscError):
    pass


class TooFew(CapdiscError):
    pass
