"""Exception hierarchy shared across the pipeline."""


class AccidentEvalError(Exception):
    """Base class for all pipeline errors."""


class ScenarioError(AccidentEvalError):
    """Scenario directory or annotation is unusable."""


class SidecarError(AccidentEvalError):
    """Detection sidecar is malformed or violates an invariant."""


class ConfigError(AccidentEvalError):
    """Run or provider configuration is invalid or incomplete."""


class ProviderError(AccidentEvalError):
    """A provider request failed for good (auth, exhausted retries)."""

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class VerdictParseError(AccidentEvalError):
    """Model response could not be turned into a structured verdict."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class MetricError(AccidentEvalError):
    """Metric preconditions violated (empty reference, bad counts, ...)."""
