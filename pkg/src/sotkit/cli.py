"""Command-line pipelines over the library modules.

Subcommands read files (or stdin via ``-``), write machine output
(JSON/JSONL) to ``--out`` or stdout, and keep human summaries on stderr
behind ``--verbose``. Outputs are byte-deterministic for fixed inputs,
flags and seeds, independent of ``--workers``: units are distributed to
workers and merged back in input order.

Exit codes: 0 success, 1 validation/parse/runtime errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import functools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence, TypeVar

from .adapter import AdapterConfig, adapter_param_count, format_param_count
from .clean import CleanPolicy, filter_segments
from .errors import ParseError, SotkitError
from .formats import (
    DEFAULT_TOKEN_CONFIG,
    ManifestEntry,
    parse_ctm,
    parse_token_stream,
    parse_word_jsonl,
    write_manifest,
    write_word_jsonl,
)
from .metrics import aggregate, evaluate_pair
from .serialize import ChunkPolicy, ObjectiveMode, chunk_session, serialize
from .simulate import SimSpec, generate_session
from .types import EvalReport, Session

T = TypeVar("T")
U = TypeVar("U")


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _with_file_context(path: str, fn: Callable[[], T]) -> T:
    try:
        return fn()
    except SotkitError as exc:
        raise SotkitError(f"{path}: {exc}") from None


def _load_sessions(path: str) -> list[Session]:
    """Load sessions from word JSONL or CTM, sniffing by content."""
    text = _read_text(path)
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith(";;"):
            continue
        if stripped.startswith("{"):
            return _with_file_context(path, lambda: parse_word_jsonl(text))
        return _with_file_context(path, lambda: parse_ctm(text))
    return []


def _pmap(fn: Callable[[T], U], items: Sequence[T], workers: int) -> list[U]:
    """Map preserving input order; a process pool when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _verbose(args: argparse.Namespace, message: str) -> None:
    if args.verbose:
        print(message, file=sys.stderr)


def _serialize_unit(
    session: Session, mode: ObjectiveMode, max_speakers: int
) -> ManifestEntry:
    transcript = serialize(session.words, mode, max_speakers)
    duration = session.duration if session.duration is not None else session.span
    return ManifestEntry(f"{session.session_id}.wav", duration, transcript)


def cmd_serialize(args: argparse.Namespace) -> int:
    sessions = _load_sessions(args.input)
    mode = ObjectiveMode(args.mode)
    if args.chunk:
        policy = ChunkPolicy(args.min_dur, args.max_dur)
        sessions = [c for s in sessions for c in chunk_session(s, policy)]
    fn = functools.partial(_serialize_unit, mode=mode, max_speakers=args.max_speakers)
    entries = _pmap(fn, sessions, args.workers)
    _write_text(args.out, write_manifest(entries, DEFAULT_TOKEN_CONFIG))
    _verbose(args, f"serialized {len(entries)} unit(s) in {args.mode} mode")
    return 0


def _pair_hypotheses(
    sessions: list[Session], hyp_paths: list[str]
) -> list[tuple[Session, str]]:
    """Pair each session with its hypothesis file.

    One session and one file pair directly; otherwise file stems must
    match session ids exactly.
    """
    if len(sessions) == 1 and len(hyp_paths) == 1:
        return [(sessions[0], hyp_paths[0])]
    by_stem = {Path(p).stem: p for p in hyp_paths}
    if len(by_stem) != len(hyp_paths):
        raise SotkitError("duplicate hypothesis file stems")
    pairs = []
    for s in sessions:
        if s.session_id not in by_stem:
            raise SotkitError(f"no hypothesis file for session {s.session_id!r}")
        pairs.append((s, by_stem.pop(s.session_id)))
    if by_stem:
        extra = ", ".join(sorted(by_stem))
        raise SotkitError(f"hypothesis files match no session: {extra}")
    return pairs


def _evaluate_unit(pair: tuple[Session, str]) -> tuple[str, EvalReport]:
    session, hyp_path = pair
    text = _read_text(hyp_path)
    stream = _with_file_context(
        hyp_path, lambda: parse_token_stream(text, DEFAULT_TOKEN_CONFIG)
    )
    return session.session_id, evaluate_pair(session.words, stream)


def cmd_evaluate(args: argparse.Namespace) -> int:
    sessions = _load_sessions(args.ref)
    if not sessions:
        raise SotkitError(f"no sessions in reference {args.ref!r}")
    pairs = _pair_hypotheses(sessions, args.hyp)
    results = _pmap(_evaluate_unit, pairs, args.workers)
    pooled = aggregate([report for _, report in results])
    payload = pooled.to_dict()
    if args.per_unit:
        payload["units"] = [
            {"id": unit_id, **report.to_dict()} for unit_id, report in results
        ]
    _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    _verbose(
        args,
        f"WER {100 * pooled.wer:.2f}%  cpWER {100 * pooled.cpwer:.2f}%  "
        f"delta_cp {100 * pooled.delta_cp:.2f}%  over {len(results)} unit(s)",
    )
    return 0


def _parse_transcriber_spec(spec: str) -> tuple[str, str]:
    name, sep, path = spec.partition("=")
    if not sep or not name or not path:
        raise SotkitError(f"--hyp expects NAME=FILE, got {spec!r}")
    return name, path


def _load_transcriber_file(path: str) -> dict[str, list[str]]:
    """Read ``<segment-id> <word> ...`` lines into an id -> words mapping."""
    hyps: dict[str, list[str]] = {}
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) < 1:
            raise ParseError("empty hypothesis line", lineno)
        hyps[fields[0]] = fields[1:]
    return hyps


def cmd_clean(args: argparse.Namespace) -> int:
    sessions = _load_sessions(args.ref)
    segments = [(s.session_id, [w.word for w in s.words]) for s in sessions]
    hypotheses = {}
    for spec in args.hyp:
        name, path = _parse_transcriber_spec(spec)
        hypotheses[name] = _load_transcriber_file(path)
    policy = CleanPolicy(args.threshold, require_all_transcribers=not args.any)
    result = filter_segments(segments, hypotheses, policy)
    lines = [json.dumps(v.to_dict(), sort_keys=False) for v in result.verdicts]
    _write_text(args.out, "".join(line + "\n" for line in lines))
    _verbose(args, f"kept {len(result.kept_ids)} of {len(result.verdicts)} segment(s)")
    return 0


def cmd_chunk(args: argparse.Namespace) -> int:
    sessions = _load_sessions(args.input)
    policy = ChunkPolicy(args.min_dur, args.max_dur)
    chunks = [c for s in sessions for c in chunk_session(s, policy)]
    _write_text(args.out, write_word_jsonl(chunks))
    _verbose(args, f"chunked {len(sessions)} session(s) into {len(chunks)} chunk(s)")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    sessions = []
    for k in range(args.sessions):
        spec = SimSpec(
            num_speakers=args.speakers,
            num_words=args.words,
            mean_word_duration=args.mean_dur,
            turn_change_prob=args.turn_change,
            overlap_prob=args.overlap,
            vocabulary_size=args.vocab,
            seed=args.seed + k,
        )
        sessions.append(generate_session(spec))
    _write_text(args.out, write_word_jsonl(sessions))
    _verbose(args, f"simulated {len(sessions)} session(s)")
    return 0


def cmd_adapter_count(args: argparse.Namespace) -> int:
    cfg = AdapterConfig(
        model_dim=args.model_dim,
        bottleneck_dim=args.bottleneck,
        num_layers=args.layers,
    )
    print(format_param_count(adapter_param_count(cfg)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sotkit",
        description="Speaker-token serialization and multi-speaker WER evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--verbose", action="store_true",
                        help="human summary on stderr")
    common.add_argument("--workers", type=int, default=1,
                        help="worker processes for independent units")

    p = sub.add_parser("serialize", parents=[common],
                       help="words -> speaker-token training manifest")
    p.add_argument("--mode", choices=["segment", "word"], required=True)
    p.add_argument("--in", dest="input", required=True,
                   help="word JSONL or CTM input")
    p.add_argument("--max-speakers", type=int, default=32)
    p.add_argument("--chunk", action="store_true",
                   help="chunk sessions before serializing")
    p.add_argument("--min-dur", type=float, default=10.0)
    p.add_argument("--max-dur", type=float, default=20.0)
    p.set_defaults(func=cmd_serialize)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score hypothesis token streams against references")
    p.add_argument("--ref", required=True, help="word JSONL or CTM reference")
    p.add_argument("--hyp", nargs="+", required=True,
                   help="token-stream file(s); stems must match session ids "
                        "unless there is exactly one of each")
    p.add_argument("--mode", choices=["segment", "word"], default="segment",
                   help="objective the hypotheses were produced with "
                        "(informational; scoring is mode-independent)")
    p.add_argument("--per-unit", action="store_true",
                   help="include per-session reports in the output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("clean", parents=[common],
                       help="drop segments whose WER exceeds a threshold")
    p.add_argument("--ref", required=True, help="word JSONL reference")
    p.add_argument("--hyp", nargs="+", required=True, metavar="NAME=FILE",
                   help="transcriber hypothesis files with '<id> <words...>' lines")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--any", action="store_true",
                   help="drop when any transcriber exceeds the threshold "
                        "(default: all must exceed)")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("chunk", parents=[common],
                       help="split sessions into duration-bounded chunks")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--min-dur", type=float, default=10.0)
    p.add_argument("--max-dur", type=float, default=20.0)
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("simulate", parents=[common],
                       help="generate synthetic word JSONL conversations")
    p.add_argument("--speakers", type=int, default=2)
    p.add_argument("--words", type=int, default=100)
    p.add_argument("--overlap", type=float, default=0.2)
    p.add_argument("--turn-change", type=float, default=0.3)
    p.add_argument("--mean-dur", type=float, default=0.3)
    p.add_argument("--vocab", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sessions", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("adapter-count",
                       help="trainable-parameter count of an adapter stack")
    p.add_argument("--model-dim", type=int, default=1024)
    p.add_argument("--bottleneck", type=int, required=True)
    p.add_argument("--layers", type=int, default=48)
    p.set_defaults(func=cmd_adapter_count)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SotkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
