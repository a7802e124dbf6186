"""WER-threshold corpus filtering.

A segment is scored against every transcriber's hypothesis and dropped
when its WER strictly exceeds the threshold: under every transcriber by
default, or under any one of them with ``require_all_transcribers=False``.
A WER exactly at the threshold keeps the segment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ValidationError
from .metrics import wer


@dataclass(frozen=True)
class CleanPolicy:
    """Filtering policy: WER threshold and transcriber combination rule."""

    wer_threshold: float = 0.80
    require_all_transcribers: bool = True

    def __post_init__(self) -> None:
        if self.wer_threshold < 0:
            raise ValidationError("wer_threshold must be >= 0")


@dataclass(frozen=True)
class SegmentVerdict:
    """Keep/drop decision for one segment with its per-transcriber WERs."""

    segment_id: str
    kept: bool
    wers: Mapping[str, float]

    def to_dict(self) -> dict:
        return {
            "id": self.segment_id,
            "kept": self.kept,
            "wers": {k: self.wers[k] for k in sorted(self.wers)},
        }


@dataclass(frozen=True)
class CleanResult:
    """Verdicts for every segment, in input order."""

    verdicts: tuple[SegmentVerdict, ...]

    @property
    def kept_ids(self) -> tuple[str, ...]:
        return tuple(v.segment_id for v in self.verdicts if v.kept)

    @property
    def dropped(self) -> tuple[SegmentVerdict, ...]:
        return tuple(v for v in self.verdicts if not v.kept)


def filter_segments(
    segments: Sequence[tuple[str, Sequence[str]]],
    hypotheses: Mapping[str, Mapping[str, Sequence[str]]],
    policy: CleanPolicy = CleanPolicy(),
) -> CleanResult:
    """Filter (id, reference words) segments by per-transcriber WER.

    ``hypotheses`` maps transcriber name -> segment id -> hypothesis words.
    With ``require_all_transcribers`` every transcriber must cover every
    segment, and a segment is dropped only when all of them exceed the
    threshold; otherwise one exceeding transcriber suffices and segments
    missing from a transcriber are judged on the transcribers that have
    them. Without any transcribers nothing is dropped.
    """
    verdicts = []
    for segment_id, ref_words in segments:
        wers: dict[str, float] = {}
        for name in sorted(hypotheses):
            hyp_map = hypotheses[name]
            if segment_id not in hyp_map:
                if policy.require_all_transcribers:
                    raise ValidationError(
                        f"transcriber {name!r} has no hypothesis for segment "
                        f"{segment_id!r}"
                    )
                continue
            wers[name] = wer(ref_words, hyp_map[segment_id])
        exceeding = [w > policy.wer_threshold for w in wers.values()]
        if not exceeding:
            kept = True
        elif policy.require_all_transcribers:
            kept = not all(exceeding)
        else:
            kept = not any(exceeding)
        verdicts.append(SegmentVerdict(segment_id, kept, wers))
    return CleanResult(tuple(verdicts))
