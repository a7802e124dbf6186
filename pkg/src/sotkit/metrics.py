"""WER, cpWER and their difference, with optimal speaker assignment.

cpWER concatenates each speaker's words, scores every pairing of
hypothesis speakers against reference speakers, and keeps the cheapest
one-to-one assignment. Because total edits decompose into independent
per-pair alignments, the minimum over speaker permutations equals the
solution of a linear sum assignment over the pairwise edit-distance
matrix; both an exhaustive-permutation path (small speaker counts) and an
assignment-solver path are provided and must agree.

The word alignment is unit-cost Levenshtein. Rows are computed with
vectorized numpy (the insertion dependency is folded in with a prefix
minimum), and the error breakdown is recovered by a checkpointed
traceback so memory stays bounded on long transcripts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import MetricError, ValidationError
from .serialize import DEFAULT_MAX_SPEAKERS, deserialize, fifo_relabel
from .types import (
    UNMATCHED,
    EvalReport,
    SerializedTranscript,
    SpeakerAttributedText,
    TimedWord,
    group_words_by_speaker,
)

# Cap on cells rebuilt per traceback block (~16 MB of int32).
_BLOCK_CELLS = 4_000_000

# Hypothesis speakers beyond this many real speakers per side are matched
# with the assignment solver instead of exhaustive permutations.
_EXHAUSTIVE_LIMIT = 6


@dataclass(frozen=True)
class AlignmentCounts:
    """Error breakdown of a minimal-edit word alignment."""

    substitutions: int
    deletions: int
    insertions: int
    hits: int
    ref_len: int

    def __post_init__(self) -> None:
        if self.hits + self.substitutions + self.deletions != self.ref_len:
            raise ValidationError("hits + substitutions + deletions != ref_len")

    @property
    def total_edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass(frozen=True)
class CpAssignment:
    """cpWER-optimal pairing of reference and hypothesis speakers.

    ``pairs`` holds one (ref_speaker, hyp_speaker) entry per matched pair;
    a ``None`` side is the empty pseudo-speaker used to pad unequal
    speaker counts.
    """

    pairs: tuple[tuple[str | None, str | None], ...]
    total_edits: int

    def as_hyp_mapping(self) -> dict[str, str]:
        """Map each hypothesis speaker to its reference speaker or "unmatched"."""
        return {
            h: (r if r is not None else UNMATCHED)
            for r, h in self.pairs
            if h is not None
        }


def _intern(*word_lists: Sequence[str]) -> list[np.ndarray]:
    """Map words to integer ids shared across all the given lists."""
    ids: dict[str, int] = {}
    out = []
    for words in word_lists:
        arr = np.empty(len(words), dtype=np.int32)
        for i, w in enumerate(words):
            arr[i] = ids.setdefault(w, len(ids))
        out.append(arr)
    return out


def _next_row(
    prev: np.ndarray, i: int, hyp_ids: np.ndarray, ref_id: int, steps: np.ndarray
) -> np.ndarray:
    """One Levenshtein DP row; insertions folded in via a prefix minimum."""
    row = np.empty_like(prev)
    row[0] = i
    np.minimum(prev[:-1] + (hyp_ids != ref_id), prev[1:] + 1, out=row[1:])
    row -= steps
    np.minimum.accumulate(row, out=row)
    row += steps
    return row


def _distance_ids(ref_ids: np.ndarray, hyp_ids: np.ndarray) -> int:
    if len(ref_ids) == 0:
        return len(hyp_ids)
    if len(hyp_ids) == 0:
        return len(ref_ids)
    if len(ref_ids) < len(hyp_ids):
        ref_ids, hyp_ids = hyp_ids, ref_ids  # fewer python-level row steps
    steps = np.arange(len(hyp_ids) + 1, dtype=np.int32)
    prev = steps.copy()
    for i, rid in enumerate(ref_ids, start=1):
        prev = _next_row(prev, i, hyp_ids, int(rid), steps)
    return int(prev[-1])


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance between two word sequences."""
    ref_ids, hyp_ids = _intern(ref, hyp)
    return _distance_ids(ref_ids, hyp_ids)


def word_align(ref: Sequence[str], hyp: Sequence[str]) -> AlignmentCounts:
    """Minimal-edit alignment with a deterministic error breakdown.

    Ties are broken by preferring substitution over deletion over
    insertion (matches are always taken when optimal).
    """
    ref_ids, hyp_ids = _intern(ref, hyp)
    m, n = len(ref_ids), len(hyp_ids)
    if m == 0:
        return AlignmentCounts(0, 0, n, 0, 0)
    if n == 0:
        return AlignmentCounts(0, m, 0, 0, m)

    steps = np.arange(n + 1, dtype=np.int32)
    block = max(1, min(m, _BLOCK_CELLS // (n + 1)))
    checkpoints = {0: steps.copy()}
    prev = steps.copy()
    for i in range(1, m + 1):
        prev = _next_row(prev, i, hyp_ids, int(ref_ids[i - 1]), steps)
        if i % block == 0:
            checkpoints[i] = prev

    subs = dels = ins = hits = 0
    i, j = m, n
    while i > 0:
        base = ((i - 1) // block) * block
        table = np.empty((i - base + 1, n + 1), dtype=np.int32)
        table[0] = checkpoints[base]
        for k in range(1, i - base + 1):
            table[k] = _next_row(
                table[k - 1], base + k, hyp_ids, int(ref_ids[base + k - 1]), steps
            )
        while i > base:
            li = i - base
            cost = table[li, j]
            if j > 0 and ref_ids[i - 1] == hyp_ids[j - 1] and cost == table[li - 1, j - 1]:
                hits += 1
                i -= 1
                j -= 1
            elif j > 0 and cost == table[li - 1, j - 1] + 1:
                subs += 1
                i -= 1
                j -= 1
            elif cost == table[li - 1, j] + 1:
                dels += 1
                i -= 1
            else:
                ins += 1
                j -= 1
    ins += j
    return AlignmentCounts(subs, dels, ins, hits, m)


def wer(ref: Sequence[str], hyp: Sequence[str]) -> float:
    """Word error rate: minimal edits over reference length. May exceed 1."""
    if len(ref) == 0:
        raise MetricError("undefined WER: empty reference")
    return edit_distance(ref, hyp) / len(ref)


def _per_speaker(
    text: SpeakerAttributedText | Mapping[str, Sequence[str]],
) -> dict[str, tuple[str, ...]]:
    mapping = text.per_speaker if isinstance(text, SpeakerAttributedText) else text
    return {k: tuple(v) for k, v in mapping.items() if len(v) > 0}


def _min_assignment_exhaustive(cost: np.ndarray) -> tuple[int, tuple[int, ...]]:
    n = cost.shape[0]
    best_total = int(cost.trace())
    best_perm: tuple[int, ...] = tuple(range(n))
    for perm in itertools.permutations(range(n)):
        total = int(sum(cost[i, perm[i]] for i in range(n)))
        if total < best_total:
            best_total, best_perm = total, perm
    return best_total, best_perm


def _min_assignment_solver(cost: np.ndarray) -> tuple[int, tuple[int, ...]]:
    row_ind, col_ind = linear_sum_assignment(cost)
    perm = [0] * cost.shape[0]
    for r, c in zip(row_ind, col_ind):
        perm[r] = int(c)
    return int(cost[row_ind, col_ind].sum()), tuple(perm)


def cpwer(
    ref: SpeakerAttributedText | Mapping[str, Sequence[str]],
    hyp: SpeakerAttributedText | Mapping[str, Sequence[str]],
    solver: str = "auto",
) -> tuple[float, CpAssignment]:
    """Concatenated minimum-permutation WER.

    Pads the side with fewer speakers with empty pseudo-speakers, computes
    the pairwise edit-distance matrix, and minimizes total edits over
    one-to-one speaker assignments. ``solver`` is "auto" (exhaustive
    permutations up to 6 real speakers per side, assignment solver above),
    "exhaustive", or "assignment"; the two paths agree wherever both apply.

    Returns the cpWER fraction and the chosen assignment.
    """
    if solver not in ("auto", "exhaustive", "assignment"):
        raise ValueError(f"unknown solver {solver!r}")
    ref_map = _per_speaker(ref)
    hyp_map = _per_speaker(hyp)
    ref_total = sum(len(v) for v in ref_map.values())
    if ref_total == 0:
        raise MetricError("undefined cpWER: reference has no words")

    ref_labels = sorted(ref_map)
    hyp_labels = sorted(hyp_map)
    n = max(len(ref_labels), len(hyp_labels))
    arrays = _intern(*(ref_map[k] for k in ref_labels), *(hyp_map[k] for k in hyp_labels))
    ref_arrays = arrays[: len(ref_labels)]
    hyp_arrays = arrays[len(ref_labels):]
    empty = np.empty(0, dtype=np.int32)

    cost = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        ra = ref_arrays[i] if i < len(ref_arrays) else empty
        for j in range(n):
            ha = hyp_arrays[j] if j < len(hyp_arrays) else empty
            cost[i, j] = _distance_ids(ra, ha)

    if solver == "exhaustive" or (solver == "auto" and n <= _EXHAUSTIVE_LIMIT):
        total, perm = _min_assignment_exhaustive(cost)
    else:
        total, perm = _min_assignment_solver(cost)

    pairs = []
    for i in range(n):
        r = ref_labels[i] if i < len(ref_labels) else None
        h = hyp_labels[perm[i]] if perm[i] < len(hyp_labels) else None
        if r is None and h is None:
            continue
        pairs.append((r, h))
    pairs.sort(key=lambda p: (p[0] is None, p[0] or "", p[1] is None, p[1] or ""))
    return total / ref_total, CpAssignment(tuple(pairs), total)


def evaluate_pair(
    ref_words: Sequence[TimedWord],
    hyp_stream: SerializedTranscript,
    max_speakers: int = DEFAULT_MAX_SPEAKERS,
) -> EvalReport:
    """Score one hypothesis stream against timed reference words.

    WER compares the speaker-token-stripped hypothesis against the
    reference words in start-time order. cpWER compares the deserialized
    hypothesis against the FIFO-relabeled reference, so both sides use
    first-appearance speaker indices. The stored error counts are those of
    the cpWER-optimal assignment.
    """
    ordered = sorted(ref_words, key=lambda w: w.start)
    if not ordered:
        raise MetricError("undefined WER: empty reference")
    relabeled, _ = fifo_relabel(ordered, max_speakers)
    ref_texts = [w.word for w in ordered]
    hyp_texts = list(hyp_stream.words)

    wer_value = wer(ref_texts, hyp_texts)
    ref_sat = group_words_by_speaker(relabeled)
    hyp_sat = deserialize(hyp_stream)
    _, assignment = cpwer(ref_sat, hyp_sat)

    subs = dels = ins = 0
    for r, h in assignment.pairs:
        counts = word_align(
            ref_sat[r] if r is not None else (),
            hyp_sat[h] if h is not None else (),
        )
        subs += counts.substitutions
        dels += counts.deletions
        ins += counts.insertions

    return EvalReport(
        wer=wer_value,
        substitutions=subs,
        deletions=dels,
        insertions=ins,
        ref_word_count=len(ref_texts),
        assignment=assignment.as_hyp_mapping(),
    )


def aggregate(reports: Sequence[EvalReport]) -> EvalReport:
    """Pool unit reports into a corpus report: total edits over total words.

    WER and cpWER are pooled independently and delta_cp is recomputed from
    the pooled values. Per-unit speaker assignments do not survive pooling.
    """
    if not reports:
        raise MetricError("cannot aggregate an empty report list")
    total_ref = sum(r.ref_word_count for r in reports)
    # WER edit counts are recovered exactly: each wer was stored as edits/N.
    wer_edits = sum(round(r.wer * r.ref_word_count) for r in reports)
    return EvalReport(
        wer=wer_edits / total_ref,
        substitutions=sum(r.substitutions for r in reports),
        deletions=sum(r.deletions for r in reports),
        insertions=sum(r.insertions for r in reports),
        ref_word_count=total_ref,
        assignment={},
    )
