"""Evaluation configuration: parsing, validation, serialization.

A configuration document is a YAML sequence of mappings.  Every entry carries
a mandatory ``name`` key naming a registered metric; the remaining keys are
that metric's parameters.  Comments are permitted and ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import yaml

from . import registry
from .errors import ConfigError
from .registry import PLUGIN_METRIC_NAME, MetricDescriptor


@dataclass(frozen=True)
class MetricSpec:
    """One configured metric: registry name plus its raw parameter tree."""

    name: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class EvalConfig:
    """Ordered list of metric specs, as written in the source document."""

    metrics: tuple[MetricSpec, ...]

    def names(self) -> list[str]:
        return [m.name for m in self.metrics]


@dataclass(frozen=True)
class ResolvedMetric:
    """Validated spec: descriptor plus defaults-merged parameters."""

    descriptor: MetricDescriptor
    params: dict[str, Any]

    @property
    def name(self) -> str:
        return self.descriptor.name


def parse_config(text: str) -> EvalConfig:
    """Parse a configuration document into an :class:`EvalConfig`.

    The document's top level must be a sequence of mappings, each with a
    ``name`` key.  Order is preserved; duplicate metric names are rejected.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration document: {exc}") from exc
    if doc is None:
        raise ConfigError("empty configuration document")
    if not isinstance(doc, list):
        raise ConfigError("configuration top level must be a sequence of mappings")
    specs: list[MetricSpec] = []
    seen: set[str] = set()
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise ConfigError(f"entry {i + 1} is not a mapping")
        if "name" not in entry:
            raise ConfigError(f"entry {i + 1} lacks the mandatory 'name' key")
        name = entry["name"]
        if not isinstance(name, str) or not name:
            raise ConfigError(f"entry {i + 1}: 'name' must be a non-empty string")
        if name in seen:
            raise ConfigError(f"duplicate metric name {name!r}")
        seen.add(name)
        params = {k: v for k, v in entry.items() if k != "name"}
        specs.append(MetricSpec(name=name, params=params))
    return EvalConfig(tuple(specs))


def serialize_config(config: EvalConfig) -> str:
    """Render a config back to YAML text; parse(serialize(c)) == c."""
    doc = [{"name": m.name, **m.params} for m in config.metrics]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def load_config(path: str) -> EvalConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def validate(config: EvalConfig) -> list[ResolvedMetric]:
    """Resolve every spec against the registry and merge defaults.

    Raises :class:`ConfigError` on unknown metric names, unknown or ill-typed
    parameters, out-of-bounds values, output field collisions, and configs
    that mix embedding-set metrics with waveform metrics (the two consume
    different ``--pred``/``--gt`` inputs and cannot share a run).
    """
    resolved: list[ResolvedMetric] = []
    field_owner: dict[str, str] = {}
    for spec in config.metrics:
        if spec.name == PLUGIN_METRIC_NAME:
            desc, params = registry.plugin_descriptor(spec.params)
        else:
            desc = registry.get(spec.name)
            params = desc.resolve_params(spec.params)
        for fld in desc.output_fields:
            if fld.name in field_owner:
                raise ConfigError(
                    f"output field {fld.name!r} emitted by both "
                    f"{field_owner[fld.name]!r} and {spec.name!r}"
                )
            field_owner[fld.name] = spec.name
        resolved.append(ResolvedMetric(desc, params))
    kinds = {r.descriptor.inputs for r in resolved}
    if "embedding-pair" in kinds and kinds != {"embedding-pair"}:
        raise ConfigError(
            "embedding-set metrics cannot be mixed with waveform metrics in "
            "one configuration"
        )
    return resolved


def needs_reference(resolved: list[ResolvedMetric]) -> list[str]:
    """Names of configured metrics that require a matched reference."""
    return [r.name for r in resolved if r.descriptor.needs_reference]


def default_config() -> EvalConfig:
    """Built-in general configuration: every native waveform metric, defaults."""
    names = [
        "mcd_f0",
        "signal_metric",
        "stoi",
        "fwsegsnr",
        "wss",
        "cd",
        "llr",
        "log_wmse",
        "srmr",
    ]
    return EvalConfig(tuple(MetricSpec(n) for n in names))
