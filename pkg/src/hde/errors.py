"""Exception hierarchy.

Everything raised deliberately by the package derives from :class:`HDEError`.
The CLI maps :class:`ConfigError` to exit status 2 and every other
:class:`HDEError` to exit status 1.
"""


class HDEError(Exception):
    """Base class for domain errors."""


class RegistryError(HDEError, LookupError):
    """Unknown model name, or a model that violates the diffusion floor."""


class RegimeError(HDEError, ValueError):
    """Sampling parameters outside the high-frequency / long-span regime."""


class SimulationBlowup(HDEError, FloatingPointError):
    def __init__(self, step: int, value: float):
        self.step = step
        self.value = value
        super().__init__(f"non-finite state {value!r} at fine step {step}")


class InsufficientDataError(HDEError):
    """Too few usable pairs to evaluate a contrast or estimate parameters."""


class UnsupportedModelError(HDEError):
    """Operation requires an invariant density the model does not provide."""


class QuadratureError(HDEError, ArithmeticError):
    pass


class SingularSigmaError(HDEError):
    pass


class ExperimentAborted(HDEError):
    pass


class ConfigError(HDEError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
