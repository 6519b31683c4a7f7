"""Consolidate JSONL score files into a corpus report.

Fields are discovered dynamically; statistics cover finite values only, with
null and perfect-reconstruction counts reported separately.  The standard
deviation is the population form (divide by N), computed in two passes.
Count quadruples named ``<stem>_delete/_insert/_replace/_equal`` additionally
yield a corpus-level error rate per stem.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .errors import AggregateError

RATIO_SUFFIXES = ("delete", "insert", "replace", "equal")


@dataclass(frozen=True)
class FieldStats:
    count: int
    null_count: int
    perfect_count: int
    mean: float | None
    std: float | None
    median: float | None
    min: float | None
    max: float | None


@dataclass(eq=False)
class AggregateReport:
    records: int
    fields: dict[str, FieldStats] = field(default_factory=dict)
    ratios: dict[str, float | None] = field(default_factory=dict)


def _two_pass_stats(values: list[float]) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def iter_records(paths: Iterable[str | Path]) -> Iterable[dict[str, Any]]:
    seen_keys: set[str] = set()
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise AggregateError(f"{path}:{lineno}: unparsable line: {exc}") from exc
                if not isinstance(obj, dict) or "key" not in obj:
                    raise AggregateError(f"{path}:{lineno}: record lacks a 'key' field")
                key = obj["key"]
                if key in seen_keys:
                    raise AggregateError(f"{path}:{lineno}: duplicate utterance key {key!r}")
                seen_keys.add(key)
                yield obj


def aggregate(inputs: list[str | Path]) -> AggregateReport:
    """Merge one or more JSONL score files into an :class:`AggregateReport`."""
    finite: dict[str, list[float]] = {}
    nulls: dict[str, int] = {}
    perfects: dict[str, int] = {}
    ratio_sums: dict[str, dict[str, float]] = {}
    n_records = 0
    for obj in iter_records(inputs):
        n_records += 1
        for name, value in obj.items():
            if name in ("key", "_notes") or name.endswith("_perfect"):
                continue
            if value is None:
                nulls[name] = nulls.get(name, 0) + 1
                finite.setdefault(name, [])
                if obj.get(f"{name}_perfect") is True:
                    perfects[name] = perfects.get(name, 0) + 1
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                continue
            finite.setdefault(name, []).append(float(value))
        _accumulate_ratios(obj, ratio_sums)

    report = AggregateReport(records=n_records)
    for name in sorted(finite):
        values = finite[name]
        if values:
            mean, std = _two_pass_stats(values)
            stats = FieldStats(
                count=len(values),
                null_count=nulls.get(name, 0),
                perfect_count=perfects.get(name, 0),
                mean=mean,
                std=std,
                median=_median(values),
                min=min(values),
                max=max(values),
            )
        else:
            stats = FieldStats(
                count=0,
                null_count=nulls.get(name, 0),
                perfect_count=perfects.get(name, 0),
                mean=None,
                std=None,
                median=None,
                min=None,
                max=None,
            )
        report.fields[name] = stats
    for stem in sorted(ratio_sums):
        report.ratios[stem] = _ratio(ratio_sums[stem])
    return report


def _accumulate_ratios(obj: dict[str, Any], sums: dict[str, dict[str, float]]) -> None:
    stems: set[str] = set()
    for name in obj:
        for suffix in RATIO_SUFFIXES:
            tail = f"_{suffix}"
            if name.endswith(tail):
                stems.add(name[: -len(tail)])
    for stem in stems:
        values = {}
        complete = True
        for suffix in RATIO_SUFFIXES:
            value = obj.get(f"{stem}_{suffix}")
            if value is None or isinstance(value, bool) or not isinstance(value, (int, float)):
                complete = False
                break
            if value < 0:
                raise AggregateError(f"negative count in field {stem}_{suffix}")
            values[suffix] = float(value)
        if not complete:
            continue
        acc = sums.setdefault(stem, {s: 0.0 for s in RATIO_SUFFIXES})
        for suffix in RATIO_SUFFIXES:
            acc[suffix] += values[suffix]


def _ratio(acc: dict[str, float]) -> float | None:
    numer = acc["delete"] + acc["insert"] + acc["replace"]
    denom = acc["delete"] + acc["replace"] + acc["equal"]
    if denom == 0.0:
        return None
    return numer / denom


def aggregate_ratio_family(
    records: Iterable[dict[str, Any]], stem: str
) -> float | None:
    """Corpus error rate from per-record count quadruples under ``stem``."""
    acc = {s: 0.0 for s in RATIO_SUFFIXES}
    for obj in records:
        for suffix in RATIO_SUFFIXES:
            value = obj.get(f"{stem}_{suffix}")
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise AggregateError(f"field {stem}_{suffix} is not a count")
            if value < 0:
                raise AggregateError(f"negative count in field {stem}_{suffix}")
            acc[suffix] += float(value)
    return _ratio(acc)


# --- rendering -----------------------------------------------------------------


_COLUMNS = ("field", "count", "null", "perfect", "mean", "std", "median", "min", "max")


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def render(report: AggregateReport, format: str = "table") -> str:
    """Render a report as an aligned text table or a sorted JSON object."""
    if format == "json":
        payload = {
            "records": report.records,
            "fields": {
                name: {
                    "count": s.count,
                    "null_count": s.null_count,
                    "perfect_count": s.perfect_count,
                    "mean": s.mean,
                    "std": s.std,
                    "median": s.median,
                    "min": s.min,
                    "max": s.max,
                }
                for name, s in report.fields.items()
            },
            "ratios": dict(report.ratios),
        }
        return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)
    if format != "table":
        raise AggregateError(f"unknown report format {format!r}")

    rows = [list(_COLUMNS)]
    for name, s in report.fields.items():
        rows.append(
            [
                name,
                str(s.count),
                str(s.null_count),
                str(s.perfect_count),
                _fmt(s.mean),
                _fmt(s.std),
                _fmt(s.median),
                _fmt(s.min),
                _fmt(s.max),
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(_COLUMNS))]
    lines = [
        f"# {report.records} records; statistics over finite values; std is population (/N)"
    ]
    for r, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    for stem, rate in report.ratios.items():
        lines.append(f"{stem}_rate  {_fmt(rate)}")
    return "\n".join(lines) + "\n"
