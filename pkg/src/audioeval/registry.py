"""Static registry of metric descriptors.

Each descriptor fixes a metric's category, required inputs, required sampling
rate, output fields with their value ranges and target directions, and the
default parameter tree.  The native registry is compiled in; external plugin
metrics are described at validation time from their config entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

from .errors import ConfigError

CATEGORIES = ("independent", "dependent", "nonmatch", "distributional")
INPUT_KINDS = ("candidate-only", "candidate+reference", "embedding-pair")

HIGHER = "higher-better"
LOWER = "lower-better"
NEUTRAL = "neutral"

INF = math.inf


@dataclass(frozen=True)
class FieldInfo:
    """One output field: name, closed/open value range, target direction."""

    name: str
    lo: float
    hi: float
    direction: str

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return (self.lo - slack) <= value <= (self.hi + slack)


@dataclass(frozen=True)
class ParamInfo:
    """Declared metric parameter: expected type and default value."""

    name: str
    kind: type
    default: Any
    required: bool = False


@dataclass(frozen=True)
class MetricDescriptor:
    name: str
    category: str
    inputs: str
    required_rate: int | None
    output_fields: tuple[FieldInfo, ...]
    params: tuple[ParamInfo, ...] = ()
    check: Callable[[dict[str, Any]], None] | None = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"bad category {self.category!r}")
        if self.inputs not in INPUT_KINDS:
            raise ValueError(f"bad input kind {self.inputs!r}")

    @property
    def needs_reference(self) -> bool:
        return self.inputs == "candidate+reference"

    def field_names(self) -> list[str]:
        return [f.name for f in self.output_fields]

    def defaults(self) -> dict[str, Any]:
        return {p.name: p.default for p in self.params if not p.required}

    def resolve_params(self, given: dict[str, Any]) -> dict[str, Any]:
        """Merge defaults, reject unknown keys, coerce and bound-check values."""
        declared = {p.name: p for p in self.params}
        unknown = sorted(set(given) - set(declared))
        if unknown:
            raise ConfigError(
                f"{self.name}: unknown parameter(s) {', '.join(unknown)}; "
                f"declared: {', '.join(sorted(declared)) or '(none)'}"
            )
        resolved = self.defaults()
        for key, value in given.items():
            resolved[key] = _coerce(self.name, declared[key], value)
        missing = [p.name for p in self.params if p.required and p.name not in resolved]
        if missing:
            raise ConfigError(f"{self.name}: missing required parameter(s) {', '.join(missing)}")
        if self.check is not None:
            self.check(resolved)
        return resolved


def _coerce(metric: str, info: ParamInfo, value: Any) -> Any:
    # ints widen to float; bool is not accepted where a number is expected
    if info.kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{metric}: parameter {info.name} must be a number")
        return float(value)
    if info.kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{metric}: parameter {info.name} must be an integer")
        return value
    if info.kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{metric}: parameter {info.name} must be true/false")
        return value
    if info.kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{metric}: parameter {info.name} must be a string")
        return value
    if info.kind is list:
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{metric}: parameter {info.name} must be a list of strings")
        return list(value)
    raise ConfigError(f"{metric}: unsupported parameter type for {info.name}")


def _check_mcd_params(p: dict[str, Any]) -> None:
    if p["f0min"] <= 0 or p["f0min"] >= p["f0max"]:
        raise ConfigError(f"mcd_f0: need 0 < f0min < f0max, got {p['f0min']}..{p['f0max']}")
    fftl = p["mcep_fftl"]
    if fftl < 16 or fftl & (fftl - 1):
        raise ConfigError(f"mcd_f0: mcep_fftl must be a power of two >= 16, got {fftl}")
    if not 0.0 <= p["seq_mismatch_tolerance"] < 1.0:
        raise ConfigError("mcd_f0: seq_mismatch_tolerance must lie in [0, 1)")
    if not -1.0 < p["mcep_alpha"] < 1.0:
        raise ConfigError("mcd_f0: mcep_alpha must lie in (-1, 1)")
    if p["mcep_shift"] <= 0:
        raise ConfigError("mcd_f0: mcep_shift must be positive")
    if not 1 <= p["mcep_dim"] <= fftl // 2:
        raise ConfigError("mcd_f0: mcep_dim must lie in [1, mcep_fftl/2]")


def _check_positive_filter(p: dict[str, Any]) -> None:
    if p["filter_len"] < 1:
        raise ConfigError(f"signal_metric: filter_len must be >= 1, got {p['filter_len']}")


def _check_neighbors(name: str) -> Callable[[dict[str, Any]], None]:
    def check(p: dict[str, Any]) -> None:
        if p["k"] < 1:
            raise ConfigError(f"{name}: k must be >= 1, got {p['k']}")

    return check


def _check_plugin(p: dict[str, Any]) -> None:
    if not p["command"].strip():
        raise ConfigError("plugin: command must be non-empty")
    if not p["fields"]:
        raise ConfigError("plugin: fields must declare at least one output field")
    if p["timeout"] <= 0:
        raise ConfigError("plugin: timeout must be positive")


_NATIVE: tuple[MetricDescriptor, ...] = (
    MetricDescriptor(
        name="mcd_f0",
        category="dependent",
        inputs="candidate+reference",
        required_rate=None,
        output_fields=(
            FieldInfo("mcd", 0.0, INF, LOWER),
            FieldInfo("f0_rmse", 0.0, INF, LOWER),
            FieldInfo("f0_corr", -1.0, 1.0, HIGHER),
        ),
        params=(
            ParamInfo("f0min", float, 40.0),
            ParamInfo("f0max", float, 800.0),
            ParamInfo("mcep_shift", float, 5.0),
            ParamInfo("mcep_fftl", int, 1024),
            ParamInfo("mcep_dim", int, 39),
            ParamInfo("mcep_alpha", float, 0.466),
            ParamInfo("seq_mismatch_tolerance", float, 0.1),
            ParamInfo("power_threshold", float, -20.0),
            ParamInfo("dtw", bool, False),
        ),
        check=_check_mcd_params,
    ),
    MetricDescriptor(
        name="signal_metric",
        category="dependent",
        inputs="candidate+reference",
        required_rate=None,
        output_fields=(
            FieldInfo("sdr", -INF, INF, HIGHER),
            FieldInfo("sir", -INF, INF, HIGHER),
            FieldInfo("sar", -INF, INF, HIGHER),
            FieldInfo("si_snr", -INF, INF, HIGHER),
            FieldInfo("ci_sdr", -INF, INF, HIGHER),
        ),
        params=(ParamInfo("filter_len", int, 512),),
        check=_check_positive_filter,
    ),
    MetricDescriptor(
        name="stoi",
        category="dependent",
        inputs="candidate+reference",
        required_rate=10000,
        output_fields=(FieldInfo("stoi", 0.0, 1.0, HIGHER),),
    ),
    MetricDescriptor(
        name="fwsegsnr",
        category="dependent",
        inputs="candidate+reference",
        required_rate=None,
        output_fields=(FieldInfo("fwsegsnr", -INF, INF, HIGHER),),
    ),
    MetricDescriptor(
        name="wss",
        category="dependent",
        inputs="candidate+reference",
        required_rate=None,
        output_fields=(FieldInfo("wss", 0.0, INF, LOWER),),
    ),
    MetricDescriptor(
        name="cd",
        category="dependent",
        inputs="candidate+reference",
        required_rate=None,
        output_fields=(FieldInfo("cd", 0.0, INF, LOWER),),
    ),
    # Direction mirrors the published metric table, which lists LLR as
    # higher-better even though it is a distortion; the raw value is emitted
    # unchanged.
    MetricDescriptor(
        name="llr",
        category="dependent",
        inputs="candidate+reference",
        required_rate=None,
        output_fields=(FieldInfo("llr", 0.0, INF, HIGHER),),
    ),
    MetricDescriptor(
        name="log_wmse",
        category="dependent",
        inputs="candidate+reference",
        required_rate=None,
        output_fields=(FieldInfo("log_wmse", -INF, INF, HIGHER),),
    ),
    MetricDescriptor(
        name="srmr",
        category="independent",
        inputs="candidate-only",
        required_rate=16000,
        output_fields=(FieldInfo("srmr", 0.0, INF, HIGHER),),
    ),
    MetricDescriptor(
        name="fad",
        category="distributional",
        inputs="embedding-pair",
        required_rate=None,
        output_fields=(FieldInfo("fad", 0.0, INF, LOWER),),
    ),
    MetricDescriptor(
        name="kld",
        category="distributional",
        inputs="embedding-pair",
        required_rate=None,
        output_fields=(FieldInfo("kld", 0.0, INF, LOWER),),
    ),
    MetricDescriptor(
        name="density",
        category="distributional",
        inputs="embedding-pair",
        required_rate=None,
        output_fields=(FieldInfo("density", 0.0, INF, HIGHER),),
        params=(ParamInfo("k", int, 5),),
        check=_check_neighbors("density"),
    ),
    MetricDescriptor(
        name="coverage",
        category="distributional",
        inputs="embedding-pair",
        required_rate=None,
        output_fields=(FieldInfo("coverage", 0.0, 1.0, HIGHER),),
        params=(ParamInfo("k", int, 5),),
        check=_check_neighbors("coverage"),
    ),
    MetricDescriptor(
        name="kid",
        category="distributional",
        inputs="embedding-pair",
        required_rate=None,
        output_fields=(FieldInfo("kid", 0.0, INF, LOWER),),
    ),
)

_BY_NAME = {d.name: d for d in _NATIVE}

PLUGIN_METRIC_NAME = "plugin"

_PLUGIN_PARAMS = (
    ParamInfo("command", str, None, required=True),
    ParamInfo("fields", list, None, required=True),
    ParamInfo("needs_reference", bool, False),
    ParamInfo("timeout", float, 300.0),
)


def native_names() -> list[str]:
    return [d.name for d in _NATIVE]


def get(name: str) -> MetricDescriptor:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ConfigError(
            f"unknown metric {name!r}; native metrics: {', '.join(native_names())}, "
            f"or {PLUGIN_METRIC_NAME!r} for an external command"
        ) from None


def plugin_descriptor(params: dict[str, Any]) -> tuple[MetricDescriptor, dict[str, Any]]:
    """Build a descriptor for one external plugin metric from its raw params."""
    proto = MetricDescriptor(
        name=PLUGIN_METRIC_NAME,
        category="independent",
        inputs="candidate-only",
        required_rate=None,
        output_fields=(),
        params=_PLUGIN_PARAMS,
        check=_check_plugin,
    )
    resolved = proto.resolve_params(params)
    fields = tuple(
        FieldInfo(name, -INF, INF, NEUTRAL) for name in resolved["fields"]
    )
    if len(set(resolved["fields"])) != len(resolved["fields"]):
        raise ConfigError("plugin: duplicate names in fields")
    needs_ref = resolved["needs_reference"]
    desc = MetricDescriptor(
        name=PLUGIN_METRIC_NAME,
        category="dependent" if needs_ref else "independent",
        inputs="candidate+reference" if needs_ref else "candidate-only",
        required_rate=None,
        output_fields=fields,
        params=_PLUGIN_PARAMS,
        check=_check_plugin,
    )
    return desc, resolved
