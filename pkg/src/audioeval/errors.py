"""Exception hierarchy for the evaluation engine."""


class EvalError(Exception):
    """Base class for all engine errors."""


class ConfigError(EvalError):
    """Invalid configuration document or metric parameters."""


class ManifestError(EvalError):
    """Invalid manifest: duplicate ids, malformed lines, missing references."""


class AudioReadError(EvalError):
    """Unreadable, corrupt, or unsupported audio file."""


class MetricInputError(EvalError):
    """Metric inputs violate the metric's preconditions."""


class MetricComputeError(EvalError):
    """Metric computation failed on otherwise valid inputs."""


class PluginProtocolError(EvalError):
    """External metric subprocess misbehaved (crash, bad reply, timeout)."""


class AggregateError(EvalError):
    """Score files cannot be consolidated into a report."""
