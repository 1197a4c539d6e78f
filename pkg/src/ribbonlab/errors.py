"""Exception types raised across ribbonlab."""


class RibbonlabError(Exception):
    """Base class for library errors."""


class UnsupportedTextureError(RibbonlabError, ValueError):
    pass


class DegenerateActivationError(RibbonlabError, ValueError):
    """The spontaneous strain lost positive definiteness or left the small-strain regime."""


class QuadratureError(RibbonlabError, ArithmeticError):
    """Quadrature at order n and 2n disagree beyond tolerance."""


class InternalConsistencyError(RibbonlabError, ArithmeticError):
    pass


class InvalidConfigurationError(RibbonlabError, ValueError):
    """A plate configuration is not an isometric immersion."""


class AnsatzDegenerateError(RibbonlabError, ArithmeticError):
    """det of the rescaled gradient is not positive at some quadrature node."""


class InvalidFrameError(RibbonlabError, ValueError):
    pass


class DomainSingularityError(RibbonlabError, ArithmeticError):
    pass


class ConfigError(RibbonlabError, ValueError):
    pass
