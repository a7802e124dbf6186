"""sotkit: speaker-token serialization and multi-speaker WER evaluation.

The pipeline in one breath: parse word-timestamped transcripts (CTM or
word JSONL), chunk sessions into duration-bounded windows, serialize them
into speaker-token streams (segment- or word-level objectives) for
training manifests, and score hypothesis streams with WER, cpWER under
the optimal speaker assignment, and their difference.
"""

from .adapter import (
    Activation,
    AdapterConfig,
    AdapterParams,
    adapter_backward,
    adapter_forward,
    adapter_init,
    adapter_param_count,
)
from .clean import CleanPolicy, CleanResult, SegmentVerdict, filter_segments
from .errors import MetricError, ParseError, SotkitError, ValidationError
from .formats import (
    DEFAULT_TOKEN_CONFIG,
    ManifestEntry,
    RttmSegment,
    TokenStreamConfig,
    parse_ctm,
    parse_rttm,
    parse_token_stream,
    parse_word_jsonl,
    render_token_stream,
    write_manifest,
    write_word_jsonl,
)
from .metrics import (
    AlignmentCounts,
    CpAssignment,
    aggregate,
    cpwer,
    edit_distance,
    evaluate_pair,
    wer,
    word_align,
)
from .serialize import (
    ChunkPolicy,
    ObjectiveMode,
    chunk_session,
    deserialize,
    fifo_relabel,
    serialize,
)
from .simulate import SimSpec, corrupt_hypothesis, generate_session
from .types import (
    EvalReport,
    SerializedTranscript,
    Session,
    SpeakerAttributedText,
    SpeakerToken,
    TimedWord,
    WordToken,
    group_words_by_speaker,
    transcript_flags,
    validate_session,
)

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "AdapterConfig",
    "AdapterParams",
    "AlignmentCounts",
    "ChunkPolicy",
    "CleanPolicy",
    "CleanResult",
    "CpAssignment",
    "DEFAULT_TOKEN_CONFIG",
    "EvalReport",
    "ManifestEntry",
    "MetricError",
    "ObjectiveMode",
    "ParseError",
    "RttmSegment",
    "SegmentVerdict",
    "SerializedTranscript",
    "Session",
    "SimSpec",
    "SotkitError",
    "SpeakerAttributedText",
    "SpeakerToken",
    "TimedWord",
    "TokenStreamConfig",
    "ValidationError",
    "WordToken",
    "adapter_backward",
    "adapter_forward",
    "adapter_init",
    "adapter_param_count",
    "aggregate",
    "chunk_session",
    "corrupt_hypothesis",
    "cpwer",
    "deserialize",
    "edit_distance",
    "evaluate_pair",
    "fifo_relabel",
    "filter_segments",
    "generate_session",
    "group_words_by_speaker",
    "parse_ctm",
    "parse_rttm",
    "parse_token_stream",
    "parse_word_jsonl",
    "render_token_stream",
    "serialize",
    "transcript_flags",
    "validate_session",
    "wer",
    "word_align",
    "write_manifest",
    "write_word_jsonl",
]
