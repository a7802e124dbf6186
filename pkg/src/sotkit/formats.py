"""Text formats: CTM words, RTTM segments, word JSONL, token streams, manifests.

All parsers are total: any text input yields either a parsed value or a
:class:`~sotkit.errors.ParseError` carrying the offending line number.
Times are kept at full precision on ingestion; writers round them to
two decimal places.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import ParseError
from .types import (
    SerializedTranscript,
    Session,
    SpeakerToken,
    TimedWord,
    Token,
    WordToken,
    transcript_flags,
    validate_session,
)

_SLOT = "{n}"


@dataclass(frozen=True)
class TokenStreamConfig:
    """Surface form of speaker tokens in serialized text.

    ``speaker_token_pattern`` must contain the integer slot ``{n}`` exactly
    once; the default renders index 3 as ``<|spk3|>``. ``max_speaker_index``
    bounds the indices accepted by strict parsing (31 means a budget of 32
    distinct speaker tokens).
    """

    speaker_token_pattern: str = "<|spk{n}|>"
    max_speaker_index: int = 31

    def __post_init__(self) -> None:
        if self.speaker_token_pattern.count(_SLOT) != 1:
            raise ValueError(
                f"speaker_token_pattern must contain {_SLOT!r} exactly once"
            )
        if self.max_speaker_index < 0:
            raise ValueError("max_speaker_index must be >= 0")
        probe = [self.render(i) for i in (0, 1, 12)]
        if len(set(probe)) != len(probe) or any(" " in t or not t for t in probe):
            raise ValueError("rendered speaker tokens must be distinct, non-empty "
                             "and whitespace-free")

    def render(self, index: int) -> str:
        return self.speaker_token_pattern.replace(_SLOT, str(index))

    @property
    def _regex(self) -> re.Pattern[str]:
        prefix, suffix = self.speaker_token_pattern.split(_SLOT)
        return re.compile(re.escape(prefix) + r"(\d+)" + re.escape(suffix))

    def parse_token(self, token: str) -> int | None:
        """Speaker index if ``token`` matches the pattern, else None."""
        m = self._regex.fullmatch(token)
        return int(m.group(1)) if m else None


DEFAULT_TOKEN_CONFIG = TokenStreamConfig()


class RttmSegment(NamedTuple):
    """One diarization segment from an RTTM SPEAKER line."""

    session_id: str
    speaker: str
    start: float
    duration: float


def _lines(text: str) -> Iterable[tuple[int, str]]:
    for i, line in enumerate(text.splitlines(), start=1):
        yield i, line.strip()


def _number(raw: object, what: str, line: int) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
        raise ParseError(f"non-numeric {what}: {raw!r}", line)
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ParseError(f"non-numeric {what}: {raw!r}", line) from None


def _sessions_from_words(grouped: dict[str, list[TimedWord]]) -> list[Session]:
    return [validate_session(Session(sid, tuple(ws))) for sid, ws in grouped.items()]


_WORD_JSONL_KEYS = ("session", "speaker", "start", "duration", "word")


def parse_word_jsonl(text: str) -> list[Session]:
    """Parse word-per-line JSONL into canonicalized sessions.

    Each non-empty line is a JSON object with keys session, speaker,
    start, duration, word. Words are grouped by session id in order of
    first appearance.
    """
    grouped: dict[str, list[TimedWord]] = {}
    for lineno, line in _lines(text):
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON ({exc.msg})", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        for key in _WORD_JSONL_KEYS:
            if key not in obj:
                raise ParseError(f"missing key: {key}", lineno)
        word = obj["word"]
        if not isinstance(word, str):
            raise ParseError(f"word must be a string: {word!r}", lineno)
        grouped.setdefault(str(obj["session"]), []).append(
            TimedWord(
                word=word,
                speaker=str(obj["speaker"]),
                start=_number(obj["start"], "start", lineno),
                duration=_number(obj["duration"], "duration", lineno),
            )
        )
    return _sessions_from_words(grouped)


def parse_ctm(text: str) -> list[Session]:
    """Parse NIST CTM word lines into canonicalized sessions.

    Fields are ``file channel start duration word [confidence]``; the
    channel doubles as the speaker label. ``;;`` lines are comments.
    """
    grouped: dict[str, list[TimedWord]] = {}
    for lineno, line in _lines(text):
        if not line or line.startswith(";;"):
            continue
        fields = line.split()
        if len(fields) < 5:
            raise ParseError(
                f"expected at least 5 fields, got {len(fields)}", lineno
            )
        file_id, channel, start, duration, word = fields[:5]
        grouped.setdefault(file_id, []).append(
            TimedWord(
                word=word,
                speaker=channel,
                start=_number(start, "start", lineno),
                duration=_number(duration, "duration", lineno),
            )
        )
    return _sessions_from_words(grouped)


def parse_rttm(text: str) -> list[RttmSegment]:
    """Extract SPEAKER segments from RTTM text; all other line types are ignored."""
    segments = []
    for lineno, line in _lines(text):
        if not line or not line.split(None, 1)[0] == "SPEAKER":
            continue
        fields = line.split()
        if len(fields) < 8:
            raise ParseError(
                f"SPEAKER line has {len(fields)} fields, expected at least 8", lineno
            )
        segments.append(
            RttmSegment(
                session_id=fields[1],
                speaker=fields[7],
                start=_number(fields[3], "tbeg", lineno),
                duration=_number(fields[4], "tdur", lineno),
            )
        )
    return segments


def parse_token_stream(
    text: str,
    cfg: TokenStreamConfig = DEFAULT_TOKEN_CONFIG,
    strict: bool = False,
) -> SerializedTranscript:
    """Parse whitespace-separated tokens into a transcript.

    Tokens matching the speaker pattern become speaker tokens, everything
    else a word. Hypothesis streams are routinely malformed, so invariant
    violations are recorded as flags instead of raised; only an
    out-of-range speaker index under ``strict=True`` is an error.
    """
    tokens: list[Token] = []
    extra_flags: list[str] = []
    for raw in text.split():
        index = cfg.parse_token(raw)
        if index is None:
            tokens.append(WordToken(raw))
            continue
        if index > cfg.max_speaker_index:
            if strict:
                raise ParseError(
                    f"speaker index {index} exceeds max {cfg.max_speaker_index}"
                )
            flag = f"speaker index {index} exceeds max {cfg.max_speaker_index}"
            if flag not in extra_flags:
                extra_flags.append(flag)
        tokens.append(SpeakerToken(index))
    flags = transcript_flags(tokens) + tuple(extra_flags)
    return SerializedTranscript(tuple(tokens), flags)


def render_token_stream(
    transcript: SerializedTranscript,
    cfg: TokenStreamConfig = DEFAULT_TOKEN_CONFIG,
) -> str:
    """Render a transcript as single-space-separated text."""
    parts = []
    for tok in transcript.tokens:
        if isinstance(tok, SpeakerToken):
            parts.append(cfg.render(tok.index))
        else:
            parts.append(tok.text)
    return " ".join(parts)


class ManifestEntry(NamedTuple):
    """One training-manifest record."""

    audio_path: str
    duration: float
    transcript: SerializedTranscript


def write_manifest(
    entries: Sequence[ManifestEntry | tuple[str, float, SerializedTranscript]],
    cfg: TokenStreamConfig = DEFAULT_TOKEN_CONFIG,
) -> str:
    """Emit training-manifest JSONL: audio_filepath, duration, text per line.

    Output is byte-stable for identical input. Durations are rounded to
    two decimals.
    """
    lines = []
    for audio_path, duration, transcript in entries:
        record = {
            "audio_filepath": audio_path,
            "duration": round(duration, 2),
            "text": render_token_stream(transcript, cfg),
        }
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def write_word_jsonl(sessions: Iterable[Session]) -> str:
    """Emit sessions as word-per-line JSONL, times rounded to two decimals."""
    lines = []
    for session in sessions:
        for w in session.words:
            record = {
                "session": session.session_id,
                "speaker": w.speaker,
                "start": round(w.start, 2),
                "duration": round(w.duration, 2),
                "word": w.word,
            }
            lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


__all__ = [
    "TokenStreamConfig",
    "DEFAULT_TOKEN_CONFIG",
    "RttmSegment",
    "ManifestEntry",
    "parse_word_jsonl",
    "parse_ctm",
    "parse_rttm",
    "parse_token_stream",
    "render_token_stream",
    "write_manifest",
    "write_word_jsonl",
]
