"""Exception hierarchy shared across the package."""


class CapaccError(Exception):
    pass


class ValidationError(CapaccError, ValueError):
    pass


class StructuralError(CapaccError):
    """Network topology problem (disconnected islands, missing slack)."""


class InputError(CapaccError, ValueError):
    pass


class FitError(CapaccError):
    pass


class IngestionError(CapaccError):
    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class ModelBuildError(CapaccError):
    pass


class ExportError(CapaccError):
    pass


class SolverError(CapaccError):
    def __init__(self, message: str, status: str = "error", hint: str | None = None, window: int | None = None):
        super().__init__(message)
        self.status = status
        self.hint = hint
        self.window = window


class NonBracketableError(CapaccError):
    def __init__(self, message: str, low=None, high=None, variant: str | None = None):
        super().__init__(message)
        self.low = low
        self.high = high
        self.variant = variant
