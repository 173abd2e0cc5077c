class RISModelError(Exception):
    """Base class for model errors."""


class SingularityError(RISModelError, ArithmeticError):
    """A parallel combination or sheet response hit a vanishing denominator."""


class CapacitanceRangeError(RISModelError, ValueError):
    pass


class GeometryError(RISModelError, ValueError):
    pass


class ConfigError(RISModelError, ValueError):
    pass


class GratingLobeWarning(UserWarning):
    pass


class SlabResonanceWarning(UserWarning):
    pass


class FarFieldWarning(UserWarning):
    pass
