"""Per-utterance scoring loop, plugin protocol, and cache directory resolution.

One JSONL record is emitted per utterance, fields ordered by the config.  A
metric failing on one utterance nulls its fields and adds a note; only
manifest-level problems abort a run.  Set-level embedding metrics run once
and emit a single record keyed ``CORPUS``.
"""

from __future__ import annotations

import fcntl
import json
import math
import os
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, TextIO

from .audio_io import AudioPair, Manifest, Waveform, pair, resample
from .config import EvalConfig, ResolvedMetric, validate
from .errors import EvalError, ManifestError, PluginProtocolError
from .metrics import distributional as dist
from .metrics import spectral
from .metrics.signal import fwsegsnr, log_wmse, signal_metric
from .metrics.spectral import McdF0Params, mcd_f0, stoi
from .metrics.srmr import srmr
from .registry import PLUGIN_METRIC_NAME

CACHE_ENV_VAR = "AUDIOEVAL_CACHE_DIR"
CORPUS_KEY = "CORPUS"


@dataclass(eq=False)
class ScoreRecord:
    """One utterance's scores: field -> number or None, plus failure notes."""

    key: str
    values: dict[str, Any] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreSummary:
    utterances: int
    failures: int


@dataclass(frozen=True)
class PluginSpec:
    command: str
    fields: tuple[str, ...]
    needs_reference: bool = False
    timeout: float = 300.0


RecordSink = Callable[[ScoreRecord], None]


def encode_record(record: ScoreRecord) -> str:
    """Serialize a record to one JSON line, "key" first, config field order."""
    obj: dict[str, Any] = {"key": record.key}
    obj.update(record.values)
    if record.notes:
        obj["_notes"] = dict(record.notes)
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def jsonl_sink(fh: TextIO) -> RecordSink:
    def sink(record: ScoreRecord) -> None:
        fh.write(encode_record(record) + "\n")

    return sink


# --- native metric dispatch ---------------------------------------------------


def _run_mcd_f0(cand: Waveform, ref: Waveform | None, params: dict) -> dict:
    return mcd_f0(cand, ref, McdF0Params.from_dict(params))


def _run_signal_metric(cand: Waveform, ref: Waveform | None, params: dict) -> dict:
    return signal_metric(cand, ref, filter_len=params["filter_len"])


_WAVEFORM_RUNNERS: dict[str, Callable[[Waveform, Waveform | None, dict], dict]] = {
    "mcd_f0": _run_mcd_f0,
    "signal_metric": _run_signal_metric,
    "stoi": lambda c, r, p: {"stoi": stoi(c, r)},
    "fwsegsnr": lambda c, r, p: {"fwsegsnr": fwsegsnr(c, r)},
    "wss": lambda c, r, p: {"wss": spectral.wss(c, r)},
    "cd": lambda c, r, p: {"cd": spectral.cepstrum_distance(c, r)},
    "llr": lambda c, r, p: {"llr": spectral.llr(c, r)},
    "log_wmse": lambda c, r, p: {"log_wmse": log_wmse(c, r)},
    "srmr": lambda c, r, p: {"srmr": srmr(c)},
}

_EMBEDDING_RUNNERS: dict[str, Callable[[dist.EmbeddingSet, dist.EmbeddingSet, dict], dict]] = {
    "fad": lambda a, b, p: {"fad": dist.fad(a, b)},
    "kid": lambda a, b, p: {"kid": dist.kid(a, b)},
    "kld": lambda a, b, p: {"kld": dist.kld_gaussian(a, b)},
    "density": lambda a, b, p: {"density": dist.density(a, b, k=p["k"])},
    "coverage": lambda a, b, p: {"coverage": dist.coverage(a, b, k=p["k"])},
}


def _merge_fields(record: ScoreRecord, resolved: ResolvedMetric, result: dict) -> None:
    """Copy a metric's outputs into the record, encoding +inf as a flag."""
    for fld in resolved.descriptor.output_fields:
        value = result.get(fld.name)
        if value is None:
            record.values[fld.name] = None
            continue
        value = float(value)
        if value == math.inf:
            record.values[fld.name] = None
            record.values[f"{fld.name}_perfect"] = True
        elif math.isnan(value) or value == -math.inf:
            record.values[fld.name] = None
            record.notes[fld.name] = "non-finite result"
        else:
            record.values[fld.name] = value


def _fail_fields(record: ScoreRecord, resolved: ResolvedMetric, message: str) -> None:
    for fld in resolved.descriptor.output_fields:
        record.values[fld.name] = None
        record.notes[fld.name] = message


def _score_pair(resolved: list[ResolvedMetric], ap: AudioPair) -> ScoreRecord:
    record = ScoreRecord(key=ap.id)
    cache: dict[tuple[str, int], Waveform] = {}

    def at_rate(which: str, w: Waveform, rate: int) -> Waveform:
        key = (which, rate)
        if key not in cache:
            cache[key] = resample(w, rate)
        return cache[key]

    for rm in resolved:
        desc = rm.descriptor
        try:
            if desc.name == PLUGIN_METRIC_NAME:
                result = run_plugin(_plugin_spec(rm), ap)
            else:
                target = desc.required_rate or ap.candidate.rate
                cand = at_rate("cand", ap.candidate, target)
                ref = None
                if desc.needs_reference:
                    if ap.reference is None:
                        raise ManifestError(f"{desc.name} requires reference")
                    ref = at_rate("ref", ap.reference, target)
                result = _WAVEFORM_RUNNERS[desc.name](cand, ref, rm.params)
            _merge_fields(record, rm, result)
        except EvalError as exc:
            _fail_fields(record, rm, str(exc))
    return record


def _plugin_spec(rm: ResolvedMetric) -> PluginSpec:
    p = rm.params
    return PluginSpec(
        command=p["command"],
        fields=tuple(p["fields"]),
        needs_reference=p["needs_reference"],
        timeout=p["timeout"],
    )


def score(
    config: EvalConfig,
    pred: Manifest | str | Path,
    gt: Manifest | str | Path | None = None,
    sink: RecordSink | None = None,
) -> ScoreSummary:
    """Score every utterance of ``pred`` (against ``gt`` where required).

    For waveform metrics ``pred``/``gt`` are manifests; for embedding-set
    metrics they are embedding file paths and a single ``CORPUS`` record is
    emitted.  Per-utterance metric failures null the affected fields and the
    run continues; undecodable audio skips the utterance and is counted in
    the summary.
    """
    resolved = validate(config)
    sink = sink or (lambda record: None)
    if resolved and all(r.descriptor.inputs == "embedding-pair" for r in resolved):
        return _score_embedding_sets(resolved, pred, gt, sink)
    if not isinstance(pred, Manifest):
        raise ManifestError("waveform metrics need a candidate manifest")
    if gt is not None and not isinstance(gt, Manifest):
        raise ManifestError("reference input must be a manifest")

    required_by = [r.name for r in resolved if r.descriptor.needs_reference]
    if required_by and gt is None:
        raise ManifestError(f"{required_by[0]} requires reference (--gt)")

    failures = 0

    def count_failure(utt_id: str, exc: Exception) -> None:
        nonlocal failures
        failures += 1

    utterances = 0
    stream = pair(
        pred,
        gt,
        require_reference=bool(required_by),
        skip_errors=True,
        error_sink=count_failure,
    )
    for ap in stream:
        sink(_score_pair(resolved, ap))
        utterances += 1
    return ScoreSummary(utterances=utterances, failures=failures)


def _score_embedding_sets(
    resolved: list[ResolvedMetric],
    pred: str | Path,
    gt: str | Path | None,
    sink: RecordSink,
) -> ScoreSummary:
    if isinstance(pred, Manifest) or isinstance(gt, Manifest):
        raise ManifestError("embedding-set metrics take embedding file paths")
    if gt is None:
        raise ManifestError(f"{resolved[0].name} requires a reference embedding file (--gt)")
    pred_set = dist.load_embeddings(pred)
    gt_set = dist.load_embeddings(gt)
    record = ScoreRecord(key=CORPUS_KEY)
    for rm in resolved:
        try:
            result = _EMBEDDING_RUNNERS[rm.name](pred_set, gt_set, rm.params)
            _merge_fields(record, rm, result)
        except EvalError as exc:
            _fail_fields(record, rm, str(exc))
    sink(record)
    return ScoreSummary(utterances=1, failures=0)


# --- plugin protocol ------------------------------------------------------------


def run_plugin(spec: PluginSpec, ap: AudioPair) -> dict[str, float | None]:
    """Score one utterance through an external command.

    The engine writes one JSON request line ``{"key", "pred_path",
    "gt_path"?, "rate"}`` to the plugin's stdin and expects one JSON reply
    line ``{"key", "metrics": {...}}`` on stdout with exactly the declared
    fields.  Nonzero exit, malformed replies, key mismatches, and timeouts
    raise :class:`PluginProtocolError`.
    """
    if ap.candidate_uri is None:
        raise PluginProtocolError("plugin metrics need file-backed input")
    request: dict[str, Any] = {
        "key": ap.id,
        "pred_path": str(ap.candidate_uri),
        "rate": ap.candidate.rate,
    }
    if spec.needs_reference:
        if ap.reference_uri is None:
            raise PluginProtocolError("plugin requires reference")
        request["gt_path"] = str(ap.reference_uri)
    try:
        proc = subprocess.run(
            shlex.split(spec.command),
            input=json.dumps(request) + "\n",
            capture_output=True,
            text=True,
            timeout=spec.timeout,
        )
    except subprocess.TimeoutExpired:
        raise PluginProtocolError(f"timeout after {spec.timeout:g}s") from None
    except OSError as exc:
        raise PluginProtocolError(f"cannot launch plugin: {exc}") from exc
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-1:] or ["(no stderr)"]
        raise PluginProtocolError(f"plugin exited {proc.returncode}: {tail[0]}")
    lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
    if not lines:
        raise PluginProtocolError("plugin produced no reply")
    try:
        reply = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise PluginProtocolError(f"malformed reply: {exc}") from exc
    if not isinstance(reply, dict) or reply.get("key") != ap.id:
        raise PluginProtocolError(
            f"reply key mismatch: expected {ap.id!r}, got {reply.get('key')!r}"
        )
    metrics = reply.get("metrics")
    if not isinstance(metrics, dict):
        raise PluginProtocolError("reply lacks a 'metrics' mapping")
    if set(metrics) != set(spec.fields):
        raise PluginProtocolError(
            f"reply fields {sorted(metrics)} do not match declared {sorted(spec.fields)}"
        )
    out: dict[str, float | None] = {}
    for name, value in metrics.items():
        if value is None:
            out[name] = None
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            out[name] = float(value)
        else:
            raise PluginProtocolError(f"field {name!r} is not a number or null")
    return out


# --- cache directory ----------------------------------------------------------


def resolve_cache_dir() -> Path:
    """Resolve (and initialize once) the shared cache directory.

    The ``AUDIOEVAL_CACHE_DIR`` environment variable overrides the per-user
    default.  Concurrent resolvers coordinate through an advisory lock so the
    initialization marker is written exactly once.
    """
    override = os.environ.get(CACHE_ENV_VAR)
    if override:
        root = Path(override)
    else:
        base = os.environ.get("XDG_CACHE_HOME") or str(Path.home() / ".cache")
        root = Path(base) / "audioeval"
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise EvalError(f"cache directory {root} is not writable: {exc}") from exc
    marker = root / ".initialized"
    if not marker.exists():
        lock_path = root / ".lock"
        try:
            with open(lock_path, "a+") as lock:
                fcntl.flock(lock, fcntl.LOCK_EX)
                try:
                    if not marker.exists():
                        with open(marker, "a", encoding="utf-8") as fh:
                            fh.write(f"initialized pid={os.getpid()}\n")
                finally:
                    fcntl.flock(lock, fcntl.LOCK_UN)
        except OSError as exc:
            raise EvalError(f"cache directory {root} is not writable: {exc}") from exc
    return root
