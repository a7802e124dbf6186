"""Deterministic synthetic conversations for tests and desk experiments.

A Markov turn-taking process assigns speakers word by word; with the
configured probability a word starts before the previous word ends,
producing bounded overlap (never more than the previous word's duration,
so start-time order stays meaningful). All times are quantized to
centiseconds, which makes word-JSONL round trips lossless. The same spec
always yields the same session, on any platform.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .types import SerializedTranscript, Session, SpeakerToken, TimedWord, Token, \
    WordToken, transcript_flags, validate_session


@dataclass(frozen=True)
class SimSpec:
    """Knobs of the synthetic conversation generator."""

    num_speakers: int = 2
    num_words: int = 100
    mean_word_duration: float = 0.3
    turn_change_prob: float = 0.3
    overlap_prob: float = 0.2
    vocabulary_size: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_speakers < 1:
            raise ValueError("num_speakers must be >= 1")
        if self.num_words < 0:
            raise ValueError("num_words must be >= 0")
        if self.mean_word_duration <= 0:
            raise ValueError("mean_word_duration must be > 0")
        for name in ("turn_change_prob", "overlap_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.vocabulary_size < 1:
            raise ValueError("vocabulary_size must be >= 1")


def generate_session(spec: SimSpec) -> Session:
    """Generate one validated session; identical specs give identical output.

    Timing is computed in integer centiseconds, so whether two words
    overlap is exact and unaffected by float rounding.
    """
    rng = random.Random(spec.seed)
    words = []
    speaker = rng.randrange(spec.num_speakers)
    start_cs = dur_cs = 0
    for i in range(spec.num_words):
        if i > 0 and spec.num_speakers > 1 and rng.random() < spec.turn_change_prob:
            step = 1 + rng.randrange(spec.num_speakers - 1)
            speaker = (speaker + step) % spec.num_speakers
        if i == 0:
            start_cs = round(rng.random() * 50)
        elif rng.random() < spec.overlap_prob:
            # Back up at most the previous word's duration and at least
            # one centisecond, so the overlap is strict but word starts
            # stay non-decreasing.
            back_cs = min(dur_cs, max(1, round(rng.random() * dur_cs)))
            start_cs = start_cs + dur_cs - back_cs
        else:
            start_cs = start_cs + dur_cs + round(rng.random() * 20)
        dur_cs = max(1, round(100 * spec.mean_word_duration * (0.5 + rng.random())))
        text = f"w{rng.randrange(spec.vocabulary_size)}"
        words.append(TimedWord(text, f"spk{speaker}", start_cs / 100, dur_cs / 100))
    return validate_session(Session(f"sim-{spec.seed}", tuple(words)))


def corrupt_hypothesis(
    transcript: SerializedTranscript,
    word_err_rate: float,
    spk_err_rate: float,
    seed: int,
) -> SerializedTranscript:
    """Inject controlled errors into a token stream.

    Each word is independently hit with probability ``word_err_rate`` and
    then substituted, deleted, or an extra word inserted after it (equal
    thirds). Each speaker token is independently flipped to a random other
    index present in the stream with probability ``spk_err_rate``.
    Deterministic per seed; zero rates return an identical stream.
    """
    for name, rate in (("word_err_rate", word_err_rate), ("spk_err_rate", spk_err_rate)):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    rng = random.Random(seed)
    vocab = list(dict.fromkeys(transcript.words)) or ["w0"]
    indices = list(transcript.speaker_indices)

    tokens: list[Token] = []
    for tok in transcript.tokens:
        if isinstance(tok, SpeakerToken):
            if len(indices) > 1 and rng.random() < spk_err_rate:
                others = [i for i in indices if i != tok.index]
                tokens.append(SpeakerToken(others[rng.randrange(len(others))]))
            else:
                tokens.append(tok)
            continue
        if rng.random() < word_err_rate:
            op = rng.random()
            if op < 1 / 3:  # substitute
                tokens.append(WordToken(vocab[rng.randrange(len(vocab))]))
            elif op < 2 / 3:  # delete
                pass
            else:  # insert after
                tokens.append(tok)
                tokens.append(WordToken(vocab[rng.randrange(len(vocab))]))
        else:
            tokens.append(tok)
    return SerializedTranscript(tuple(tokens), transcript_flags(tokens))
