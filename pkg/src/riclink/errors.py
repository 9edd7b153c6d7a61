"""Exception hierarchy shared by all riclink modules."""


class RiclinkError(Exception):
    """Base class for every error raised by riclink."""


class ConstellationSpecError(RiclinkError, ValueError):
    """Invalid modulation scheme or constellation size."""


class FramingError(RiclinkError, ValueError):
    """Bit stream length is not a multiple of bits per symbol."""


class DomainError(RiclinkError, ValueError):
    """Value outside the accepted domain (bad bit or symbol index)."""


class ParameterError(RiclinkError, ValueError):
    """Invalid channel or simulation parameter."""


class DegenerateChannelError(RiclinkError, ArithmeticError):
    """All branch gains are zero; the symbol cannot be detected."""


class UndefinedEstimateError(RiclinkError, ZeroDivisionError):
    """Error rate requested with zero trials."""


class UnsupportedModulationError(RiclinkError, NotImplementedError):
    """No semi-analytic formula exists for this modulation."""


class ConfigError(RiclinkError, ValueError):
    """Malformed or incomplete sweep configuration."""
