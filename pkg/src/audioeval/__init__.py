"""Configuration-driven objective evaluation for speech, audio, and music.

The package pairs candidate recordings with optional references, resamples
per metric, computes signal/spectral/reverberation/embedding-distribution
measures, and writes one JSONL record per utterance for later aggregation.
"""

from .audio_io import (
    AudioPair,
    Manifest,
    UtteranceRef,
    Waveform,
    load_waveform,
    pair,
    read_scp,
    resample,
    scan_directory,
    write_wav,
)
from .config import (
    EvalConfig,
    MetricSpec,
    ResolvedMetric,
    default_config,
    load_config,
    parse_config,
    serialize_config,
    validate,
)
from .errors import (
    AggregateError,
    AudioReadError,
    ConfigError,
    EvalError,
    ManifestError,
    MetricComputeError,
    MetricInputError,
    PluginProtocolError,
)
from .pipeline import (
    PluginSpec,
    ScoreRecord,
    ScoreSummary,
    encode_record,
    resolve_cache_dir,
    run_plugin,
    score,
)
from .report import AggregateReport, aggregate, aggregate_ratio_family, render

__version__ = "0.1.0"
