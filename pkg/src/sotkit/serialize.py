"""Turn timed words into speaker-token streams and back.

Serialization orders words by start time, relabels speakers first-in
first-out (first speaker becomes index 0), and emits either one speaker
token per speaker change (segment-level) or one per word (word-level).
Overlapping speech is handled purely by word start time, which renders
overlap as a frequently changing speaker region.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import ValidationError
from .types import (
    SerializedTranscript,
    Session,
    SpeakerAttributedText,
    SpeakerToken,
    TimedWord,
    WordToken,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_SPEAKERS = 32


class ObjectiveMode(Enum):
    """Where speaker tokens are inserted in the serialized objective."""

    SEGMENT_LEVEL = "segment"
    WORD_LEVEL = "word"


@dataclass(frozen=True)
class ChunkPolicy:
    """Target duration window for session chunks, in seconds."""

    min_duration: float = 10.0
    max_duration: float = 20.0

    def __post_init__(self) -> None:
        if not (0 < self.min_duration <= self.max_duration):
            raise ValidationError(
                "chunk policy requires 0 < min_duration <= max_duration"
            )


def fifo_relabel(
    words: Sequence[TimedWord],
    max_speakers: int = DEFAULT_MAX_SPEAKERS,
) -> tuple[tuple[TimedWord, ...], dict[str, int]]:
    """Relabel speakers by order of first appearance: 0, 1, 2, ...

    Expects words already in start-time order. Returns the same words with
    speaker labels replaced by the stringified FIFO index, plus the mapping
    from original label to index.
    """
    mapping: dict[str, int] = {}
    out = []
    for w in words:
        if w.speaker not in mapping:
            mapping[w.speaker] = len(mapping)
            if len(mapping) > max_speakers:
                raise ValidationError(
                    f"distinct speaker count exceeds cap {max_speakers}"
                )
        out.append(TimedWord(w.word, str(mapping[w.speaker]), w.start, w.duration))
    return tuple(out), mapping


def serialize(
    words: Sequence[TimedWord],
    mode: ObjectiveMode,
    max_speakers: int = DEFAULT_MAX_SPEAKERS,
) -> SerializedTranscript:
    """Serialize timed words into a speaker-token stream.

    Words are stably sorted by start time and FIFO-relabeled, so the output
    always starts with speaker token 0. SEGMENT_LEVEL inserts a token only
    where the speaker changes between consecutive words; WORD_LEVEL inserts
    one before every word.
    """
    ordered = sorted(words, key=lambda w: w.start)
    relabeled, _ = fifo_relabel(ordered, max_speakers)
    tokens: list[SpeakerToken | WordToken] = []
    previous = None
    for w in relabeled:
        index = int(w.speaker)
        if mode is ObjectiveMode.WORD_LEVEL or index != previous:
            tokens.append(SpeakerToken(index))
        tokens.append(WordToken(w.word))
        previous = index
    return SerializedTranscript(tuple(tokens))


def chunk_session(session: Session, policy: ChunkPolicy = ChunkPolicy()) -> list[Session]:
    """Split a session into chunks of at most ``policy.max_duration`` seconds.

    Greedy left-to-right packing over consecutive words: a chunk is closed
    before the first word whose end would stretch the chunk span (first
    included word start to latest included word end) past the maximum.
    Words are atomic, so a single word longer than the maximum becomes its
    own over-length chunk and is logged. No words are ever dropped: the
    chunks concatenate back to the session exactly, and only the session
    tail is expected to fall short of ``policy.min_duration``.

    Multi-chunk output rebases word start times to each chunk's first word
    and suffixes chunk ids; a session that fits in one chunk is returned
    as is. FIFO relabeling is not applied here; it happens per chunk at
    serialization time.
    """
    words = session.words
    if not words:
        return []

    groups: list[list[TimedWord]] = []
    current: list[TimedWord] = []
    origin = 0.0
    max_end = 0.0
    for w in words:
        if not current:
            current = [w]
            origin, max_end = w.start, w.end
            continue
        candidate_end = max(max_end, w.end)
        if candidate_end - origin <= policy.max_duration:
            current.append(w)
            max_end = candidate_end
        else:
            groups.append(current)
            current = [w]
            origin, max_end = w.start, w.end
    groups.append(current)

    if len(groups) == 1:
        if session.span > policy.max_duration:
            logger.warning(
                "session %s: single word spans %.2fs, over the %.2fs chunk maximum",
                session.session_id, session.span, policy.max_duration,
            )
        return [session]

    chunks = []
    for i, group in enumerate(groups):
        origin = group[0].start
        rebased = tuple(
            TimedWord(w.word, w.speaker, w.start - origin, w.duration) for w in group
        )
        span = max(w.end for w in rebased)
        chunk = Session(f"{session.session_id}-{i:04d}", rebased, span)
        if span > policy.max_duration:
            logger.warning(
                "session %s chunk %d: single word spans %.2fs, over the %.2fs chunk maximum",
                session.session_id, i, span, policy.max_duration,
            )
        chunks.append(chunk)
    return chunks


def deserialize(
    transcript: SerializedTranscript, strict: bool = False
) -> SpeakerAttributedText:
    """Invert a token stream into per-speaker word sequences.

    Each word is attributed to the most recent speaker token; keys are the
    stringified speaker indices. Words before any speaker token go to
    speaker 0 (or raise under ``strict=True``). Speakers that end up with
    no words are absent from the result.
    """
    per: dict[str, list[str]] = {}
    current: int | None = None
    for tok in transcript.tokens:
        if isinstance(tok, SpeakerToken):
            current = tok.index
        else:
            if current is None:
                if strict:
                    raise ValidationError("unattributed words")
                current = 0
            per.setdefault(str(current), []).append(tok.text)
    return SpeakerAttributedText({k: tuple(v) for k, v in per.items()})
