"""Exception types.

Everything raised on purpose derives from ``UMDNormsError`` (itself a
``ValueError``).  ``NumericalError`` marks discretization problems such as
aliasing; the CLI maps those to exit code 3.
"""


class UMDNormsError(ValueError):
    pass


class DimensionError(UMDNormsError):
    pass


class InvalidSpaceError(UMDNormsError):
    pass


class NumericalError(UMDNormsError):
    pass


class AliasingError(NumericalError):
    pass


class InsufficientBandwidthError(NumericalError):
    pass
