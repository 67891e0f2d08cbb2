"""Exception types raised across the package.

Configuration-type errors (bad scenario files, bad expressions) derive from
:class:`ConfigError`; numerical failures derive from :class:`NumericalError`.
The CLI maps the two families to distinct exit codes.
"""


class CfsteerError(Exception):
    pass


class ConfigError(CfsteerError):
    pass


class NumericalError(CfsteerError):
    pass


class ExprSyntaxError(ConfigError):
    def __init__(self, message, text=None, pos=None):
        self.text = text
        self.pos = pos
        if text is not None and pos is not None:
            message = f"{message} at column {pos + 1} in {text!r}"
        super().__init__(message)


class UnknownSymbolError(ExprSyntaxError):
    pass


class NotInClassError(ConfigError):
    """Expression leaves the mixed trigonometric polynomial class."""

    def __init__(self, message, text=None, pos=None):
        self.text = text
        self.pos = pos
        if text is not None and pos is not None:
            message = f"{message} at column {pos + 1} in {text!r}"
        super().__init__(message)


class DegreeTooHighError(ConfigError):
    pass


class MissingFieldError(ConfigError):
    pass


class InconsistentDimensionsError(ConfigError):
    pass


class UnsupportedTubeError(ConfigError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class SingularInnovationError(NumericalError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"{message} (step {step})")


class DegenerateEnsembleError(NumericalError):
    pass


class NotPSDError(NumericalError):
    pass
