"""Core domain types: timed words, sessions, token streams, and eval reports.

Everything here is immutable after construction and safe to share across
workers. Validation is centralized in :func:`validate_session`; the raw
dataclasses store whatever they are given.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import ValidationError

# Words that look like the default speaker token surface form are rejected
# at validation time: they would be re-tokenized on any render/parse cycle.
_DEFAULT_SPEAKER_TOKEN_RE = re.compile(r"<\|spk\d+\|>")


@dataclass(frozen=True, slots=True)
class TimedWord:
    """One word with its speaker label and timing.

    Attributes:
        word: The text token. No internal whitespace.
        speaker: Opaque speaker label.
        start: Start time in seconds, >= 0.
        duration: Duration in seconds, >= 0.
    """

    word: str
    speaker: str
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True, slots=True)
class Session:
    """A recording session: an ordered list of timed words.

    Construct via :func:`validate_session` to get the canonical word order
    (sorted by start time, ties kept in input order).
    """

    session_id: str
    words: tuple[TimedWord, ...]
    duration: float | None = None

    @property
    def speakers(self) -> tuple[str, ...]:
        """Distinct speaker labels in order of first appearance."""
        return tuple(dict.fromkeys(w.speaker for w in self.words))

    @property
    def speaker_count(self) -> int:
        return len(self.speakers)

    @property
    def span(self) -> float:
        """Start of the first word to the latest word end, 0 if empty."""
        if not self.words:
            return 0.0
        origin = self.words[0].start
        return max(w.end for w in self.words) - origin


def _check_word(word: TimedWord, index: int, session_id: str) -> None:
    where = f"session {session_id!r}, word {index}"
    if not word.word:
        raise ValidationError(f"{where}: empty word text")
    if any(ch.isspace() for ch in word.word):
        raise ValidationError(f"{where}: word {word.word!r} contains whitespace")
    if _DEFAULT_SPEAKER_TOKEN_RE.fullmatch(word.word):
        raise ValidationError(f"{where}: word {word.word!r} is a speaker token")
    if not (math.isfinite(word.start) and math.isfinite(word.duration)):
        raise ValidationError(f"{where}: non-finite start or duration")
    if word.start < 0:
        raise ValidationError(f"{where}: negative start {word.start}")
    if word.duration < 0:
        raise ValidationError(f"{where}: negative duration {word.duration}")


def validate_session(session: Session) -> Session:
    """Validate every word and return the session in canonical word order.

    Canonical order is a stable sort on start time, so words with equal
    starts keep their input order. Idempotent.
    """
    for i, w in enumerate(session.words):
        _check_word(w, i, session.session_id)
    words = tuple(sorted(session.words, key=lambda w: w.start))
    if session.duration is not None:
        if not math.isfinite(session.duration) or session.duration < 0:
            raise ValidationError(
                f"session {session.session_id!r}: invalid duration {session.duration}"
            )
        max_end = max((w.end for w in words), default=0.0)
        if session.duration < max_end:
            raise ValidationError(
                f"session {session.session_id!r}: duration {session.duration} "
                f"is shorter than the last word end {max_end}"
            )
    return Session(session.session_id, words, session.duration)


@dataclass(frozen=True, slots=True)
class SpeakerToken:
    """Marks that subsequent words belong to speaker ``index``."""

    index: int


@dataclass(frozen=True, slots=True)
class WordToken:
    """A plain word in a token stream."""

    text: str


Token = Union[SpeakerToken, WordToken]

FLAG_MISSING_LEADING = "missing leading speaker token"
FLAG_FIFO_ORDER = "speaker indices out of FIFO order"
FLAG_REPEATED_SPEAKER = "repeated speaker token"


def transcript_flags(tokens: Sequence[Token]) -> tuple[str, ...]:
    """Report which well-formedness invariants a token stream violates.

    Checks, in order: the stream starts with speaker 0; first appearances
    of speaker indices are 0, 1, 2, ...; no two adjacent speaker tokens
    carry the same index. Returns one flag per violated invariant.
    """
    flags = []
    if tokens and not (isinstance(tokens[0], SpeakerToken) and tokens[0].index == 0):
        flags.append(FLAG_MISSING_LEADING)
    first_seen: list[int] = []
    repeated = False
    prev: Token | None = None
    for tok in tokens:
        if isinstance(tok, SpeakerToken):
            if tok.index not in first_seen:
                first_seen.append(tok.index)
            if isinstance(prev, SpeakerToken) and prev.index == tok.index:
                repeated = True
        prev = tok
    if first_seen != list(range(len(first_seen))):
        flags.append(FLAG_FIFO_ORDER)
    if repeated:
        flags.append(FLAG_REPEATED_SPEAKER)
    return tuple(flags)


@dataclass(frozen=True)
class SerializedTranscript:
    """A token stream mixing speaker tokens and words.

    ``flags`` records invariant violations observed when the stream was
    built or parsed; it is informational and excluded from equality, so
    round-trip comparisons act on the tokens alone.
    """

    tokens: tuple[Token, ...]
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        """Word texts in stream order, speaker tokens stripped."""
        return tuple(t.text for t in self.tokens if isinstance(t, WordToken))

    @property
    def speaker_indices(self) -> tuple[int, ...]:
        """Distinct speaker indices in order of first appearance."""
        seen: dict[int, None] = {}
        for t in self.tokens:
            if isinstance(t, SpeakerToken):
                seen.setdefault(t.index, None)
        return tuple(seen)

    def is_well_formed(self) -> bool:
        return not transcript_flags(self.tokens)


@dataclass(frozen=True)
class SpeakerAttributedText:
    """Per-speaker concatenated word sequences, the form scored by cpWER.

    Speakers with no words are absent from the mapping.
    """

    per_speaker: Mapping[str, tuple[str, ...]]

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Sequence[str]]) -> "SpeakerAttributedText":
        """Normalize a plain mapping: tuple-ify word lists, drop empty ones."""
        return cls({k: tuple(v) for k, v in mapping.items() if len(v) > 0})

    @property
    def word_count(self) -> int:
        return sum(len(v) for v in self.per_speaker.values())

    def __getitem__(self, speaker: str) -> tuple[str, ...]:
        return self.per_speaker[speaker]

    def __contains__(self, speaker: str) -> bool:
        return speaker in self.per_speaker

    def __len__(self) -> int:
        return len(self.per_speaker)


UNMATCHED = "unmatched"


@dataclass(frozen=True)
class EvalReport:
    """WER, cpWER and their difference for one unit or a whole corpus.

    ``cpwer`` and ``delta_cp`` are derived in ``__post_init__`` from the
    stored error counts and ``wer``, so the arithmetic identities
    ``cpwer == (S + D + I) / ref_word_count`` and
    ``delta_cp == cpwer - wer`` hold bit-exactly.

    ``assignment`` maps each hypothesis speaker to its reference speaker
    under the cpWER-optimal pairing, or to ``"unmatched"``.
    """

    wer: float
    substitutions: int
    deletions: int
    insertions: int
    ref_word_count: int
    assignment: Mapping[str, str]
    cpwer: float = field(init=False)
    delta_cp: float = field(init=False)

    def __post_init__(self) -> None:
        if self.ref_word_count <= 0:
            raise ValidationError("ref_word_count must be positive")
        for name in ("substitutions", "deletions", "insertions"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        edits = self.substitutions + self.deletions + self.insertions
        object.__setattr__(self, "cpwer", edits / self.ref_word_count)
        object.__setattr__(self, "delta_cp", self.cpwer - self.wer)

    @property
    def total_edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def to_dict(self) -> dict:
        """JSON-ready dict with the report's exact field names."""
        return {
            "wer": self.wer,
            "cpwer": self.cpwer,
            "delta_cp": self.delta_cp,
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "ref_word_count": self.ref_word_count,
            "assignment": {k: self.assignment[k] for k in sorted(self.assignment)},
        }


def group_words_by_speaker(words: Iterable[TimedWord]) -> SpeakerAttributedText:
    """Collect each speaker's words in the order given."""
    per: dict[str, list[str]] = {}
    for w in words:
        per.setdefault(w.speaker, []).append(w.word)
    return SpeakerAttributedText({k: tuple(v) for k, v in per.items()})
