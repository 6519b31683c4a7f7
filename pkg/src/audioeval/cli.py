"""Command-line entry points: score, aggregate, launch.

Sharding splits the candidate manifest into contiguous blocks so per-rank
JSONL files concatenate (in rank order) to exactly the single-shard output.
The launch subcommand emits a batch-array shell script; nothing is ever
submitted to a scheduler by the tool itself.
"""

from __future__ import annotations

import argparse
import glob as globmod
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path

from . import config as config_mod
from . import report as report_mod
from .audio_io import Manifest, read_scp, scan_directory, single_file_manifest
from .errors import EvalError
from .pipeline import jsonl_sink, score

EXIT_OK = 0
EXIT_RUN_ERROR = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class ShardPlan:
    nshard: int
    rank: int
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


def plan_shards(manifest_len: int, nshard: int) -> list[ShardPlan]:
    """Contiguous balanced partition; shard sizes differ by at most one."""
    if nshard < 1:
        raise ValueError(f"nshard must be >= 1, got {nshard}")
    base, extra = divmod(manifest_len, nshard)
    plans = []
    start = 0
    for rank in range(nshard):
        size = base + (1 if rank < extra else 0)
        plans.append(ShardPlan(nshard=nshard, rank=rank, start=start, stop=start + size))
        start += size
    return plans


def emit_launch_script(
    config_path: str | None,
    pred: str,
    gt: str | None,
    output_stem: str,
    nshard: int,
    io: str | None = None,
) -> str:
    """Shell text for a batch-array run: one score invocation per rank, then a
    merge plus aggregate step performed by whichever rank finishes last."""
    if nshard < 1:
        raise ValueError(f"nshard must be >= 1, got {nshard}")
    score_args = []
    if config_path:
        score_args += ["--score_config", shlex.quote(config_path)]
    score_args += ["--pred", shlex.quote(pred)]
    if gt:
        score_args += ["--gt", shlex.quote(gt)]
    if io:
        score_args += ["--io", io]
    base_cmd = '"$PY" -m audioeval score ' + " ".join(score_args)
    out = shlex.quote(output_stem)
    lines = [
        "#!/bin/sh",
        "# Generated shard launcher. Submit as a batch array job, or run each",
        "# rank locally with ARRAY_INDEX=<rank> sh <script>.",
        f"#SBATCH --array=0-{nshard - 1}",
        "#SBATCH --job-name=audioeval",
        "set -eu",
        "",
        'RANK="${ARRAY_INDEX:-${SLURM_ARRAY_TASK_ID:-0}}"',
        'PY="${AUDIOEVAL_PYTHON:-python3}"',
        "",
    ]
    if nshard == 1:
        lines += [
            f"{base_cmd} --output_file {out} --nshard 1 --rank 0",
            f'"$PY" -m audioeval aggregate --input {out}',
            "",
        ]
        return "\n".join(lines)
    lines += ['case "$RANK" in']
    for rank in range(nshard):
        lines.append(
            f"    {rank}) {base_cmd} --output_file {out} "
            f"--nshard {nshard} --rank {rank} ;;"
        )
    lines += [
        '    *) echo "rank $RANK out of range" >&2; exit 2 ;;',
        "esac",
        "",
    ]
    rank_files = " ".join(f"{output_stem}.rank{r}" for r in range(nshard))
    lines += [
        "# merge and aggregate once every rank file exists",
        "ALL_DONE=1",
        f"for f in {rank_files}; do",
        '    [ -f "$f" ] || ALL_DONE=0',
        "done",
        'if [ "$ALL_DONE" -eq 1 ]; then',
        f"    cat {rank_files} > {out}",
        f'    "$PY" -m audioeval aggregate --input {out}',
        "fi",
        "",
    ]
    return "\n".join(lines)


def _build_manifest(path_arg: str, io_mode: str) -> Manifest:
    path = Path(path_arg)
    if io_mode == "dir":
        return scan_directory(path)
    if io_mode == "soundfile":
        return single_file_manifest(path)
    if io_mode == "kaldi":
        return read_scp(path)
    raise EvalError(f"unknown io mode {io_mode!r}")


def _default_io_mode(path_arg: str) -> str:
    return "dir" if Path(path_arg).is_dir() else "kaldi"


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audioeval",
        description="Objective evaluation of speech, audio, and music signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score a corpus and write JSONL records")
    p_score.add_argument(
        "--score_config",
        default=None,
        help="metric configuration (YAML); built-in general config when omitted",
    )
    p_score.add_argument("--pred", required=True, help="candidate list/dir/file, or embedding file")
    p_score.add_argument("--gt", default=None, help="reference list/dir/file, or embedding file")
    p_score.add_argument("--output_file", required=True, help="JSONL output path")
    p_score.add_argument(
        "--io",
        choices=("soundfile", "dir", "kaldi"),
        default=None,
        help="manifest interface; default: dir for directories, kaldi otherwise",
    )
    p_score.add_argument("--nshard", type=int, default=1, help="total shard count")
    p_score.add_argument("--rank", type=int, default=0, help="0-based shard index")

    p_agg = sub.add_parser("aggregate", help="consolidate JSONL score files")
    p_agg.add_argument(
        "--input", nargs="+", required=True, help="JSONL paths or globs"
    )
    p_agg.add_argument("--format", choices=("table", "json"), default="table")
    p_agg.add_argument("--output", default=None, help="write report here instead of stdout")

    p_launch = sub.add_parser(
        "launch",
        help="emit a batch-array launcher script",
        description=(
            "Emit a POSIX shell script that runs one score invocation per shard "
            "under a batch-array scheduler and merges + aggregates the rank "
            "outputs. The rank is substituted from ARRAY_INDEX (or "
            "SLURM_ARRAY_TASK_ID); nothing is submitted by this tool."
        ),
    )
    p_launch.add_argument("--score_config", default=None)
    p_launch.add_argument("--pred", required=True)
    p_launch.add_argument("--gt", default=None)
    p_launch.add_argument("--output_file", required=True)
    p_launch.add_argument("--nshard", type=int, default=1)
    p_launch.add_argument("--io", choices=("soundfile", "dir", "kaldi"), default=None)
    p_launch.add_argument("--output", default=None, help="write script here instead of stdout")
    return parser


def cmd_score(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.nshard < 1 or not 0 <= args.rank < args.nshard:
        print(
            f"audioeval score: rank {args.rank} out of range for nshard {args.nshard}",
            file=sys.stderr,
        )
        print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    try:
        if args.score_config:
            cfg = config_mod.load_config(args.score_config)
        else:
            cfg = config_mod.default_config()
        resolved = config_mod.validate(cfg)

        out_path = args.output_file + (f".rank{args.rank}" if args.nshard > 1 else "")
        embedding_mode = bool(resolved) and all(
            r.descriptor.inputs == "embedding-pair" for r in resolved
        )
        with open(out_path, "w", encoding="utf-8") as fh:
            sink = jsonl_sink(fh)
            if embedding_mode:
                # Set-level metrics run once; ranks past 0 write empty shards.
                if args.rank == 0:
                    summary = score(cfg, args.pred, args.gt, sink)
                else:
                    summary = None
            else:
                io_mode = args.io or _default_io_mode(args.pred)
                pred = _build_manifest(args.pred, io_mode)
                gt = None
                if args.gt:
                    gt_mode = args.io or _default_io_mode(args.gt)
                    gt = _build_manifest(args.gt, gt_mode)
                plan = plan_shards(len(pred), args.nshard)[args.rank]
                summary = score(cfg, pred.slice(plan.start, plan.stop), gt, sink)
        if summary is not None and summary.failures:
            print(
                f"audioeval score: {summary.failures} utterance(s) skipped "
                f"(undecodable audio), {summary.utterances} scored",
                file=sys.stderr,
            )
        return EXIT_OK
    except (EvalError, OSError) as exc:
        print(f"audioeval score: error: {exc}", file=sys.stderr)
        return EXIT_RUN_ERROR


def cmd_aggregate(args: argparse.Namespace) -> int:
    try:
        paths: list[str] = []
        for pattern in args.input:
            matches = sorted(globmod.glob(pattern))
            paths.extend(matches if matches else ([pattern] if Path(pattern).exists() else []))
        if not paths:
            print("audioeval aggregate: error: no matching input files", file=sys.stderr)
            return EXIT_RUN_ERROR
        rep = report_mod.aggregate(paths)
        text = report_mod.render(rep, format=args.format)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return EXIT_OK
    except (EvalError, OSError) as exc:
        print(f"audioeval aggregate: error: {exc}", file=sys.stderr)
        return EXIT_RUN_ERROR


def cmd_launch(args: argparse.Namespace) -> int:
    try:
        text = emit_launch_script(
            config_path=args.score_config,
            pred=args.pred,
            gt=args.gt,
            output_stem=args.output_file,
            nshard=args.nshard,
            io=args.io,
        )
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except (EvalError, OSError, ValueError) as exc:
        print(f"audioeval launch: error: {exc}", file=sys.stderr)
        return EXIT_RUN_ERROR


def main(argv: list[str] | None = None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "score":
        return cmd_score(args, parser)
    if args.command == "aggregate":
        return cmd_aggregate(args)
    if args.command == "launch":
        return cmd_launch(args)
    parser.print_usage(sys.stderr)
    return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
