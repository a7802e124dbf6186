"""Format parsing and writing, round trips, and parser totality."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sotkit import (
    ManifestEntry,
    ParseError,
    SerializedTranscript,
    SotkitError,
    SpeakerToken,
    TimedWord,
    TokenStreamConfig,
    ValidationError,
    WordToken,
    parse_ctm,
    parse_rttm,
    parse_token_stream,
    parse_word_jsonl,
    render_token_stream,
    write_manifest,
    write_word_jsonl,
)
from sotkit.formats import DEFAULT_TOKEN_CONFIG
from sotkit.types import Session


class TestTokenStreamConfig:
    def test_default_rendering(self):
        assert DEFAULT_TOKEN_CONFIG.render(0) == "<|spk0|>"
        assert DEFAULT_TOKEN_CONFIG.render(31) == "<|spk31|>"

    def test_parse_token(self):
        assert DEFAULT_TOKEN_CONFIG.parse_token("<|spk7|>") == 7
        assert DEFAULT_TOKEN_CONFIG.parse_token("hello") is None
        assert DEFAULT_TOKEN_CONFIG.parse_token("<|spk|>") is None

    def test_custom_pattern(self):
        cfg = TokenStreamConfig("[S{n}]", max_speaker_index=3)
        assert cfg.render(2) == "[S2]"
        assert cfg.parse_token("[S2]") == 2

    def test_pattern_without_slot_rejected(self):
        with pytest.raises(ValueError):
            TokenStreamConfig("<|spk|>")

    def test_pattern_with_whitespace_rejected(self):
        with pytest.raises(ValueError):
            TokenStreamConfig("spk {n}")


class TestParseWordJsonl:
    def test_minimal_record(self):
        sessions = parse_word_jsonl(
            '{"session":"s1","speaker":"A","start":0.0,"duration":0.4,"word":"hi"}\n'
        )
        assert len(sessions) == 1
        assert sessions[0].session_id == "s1"
        assert sessions[0].words == (TimedWord("hi", "A", 0.0, 0.4),)

    def test_two_sessions(self):
        text = (
            '{"session":"s1","speaker":"A","start":0.0,"duration":0.4,"word":"hi"}\n'
            '{"session":"s2","speaker":"B","start":1.0,"duration":0.4,"word":"yo"}\n'
        )
        sessions = parse_word_jsonl(text)
        assert [s.session_id for s in sessions] == ["s1", "s2"]

    def test_missing_key_named(self):
        with pytest.raises(ParseError, match="missing key: speaker"):
            parse_word_jsonl('{"session":"s1"}')

    def test_malformed_json_has_line_number(self):
        text = '{"session":"s1","speaker":"A","start":0,"duration":1,"word":"a"}\nnope\n'
        with pytest.raises(ParseError, match="line 2"):
            parse_word_jsonl(text)

    def test_blank_lines_skipped(self):
        text = '\n{"session":"s1","speaker":"A","start":0,"duration":1,"word":"a"}\n\n'
        assert len(parse_word_jsonl(text)) == 1

    def test_words_grouped_and_sorted(self):
        text = (
            '{"session":"s1","speaker":"A","start":2.0,"duration":0.4,"word":"b"}\n'
            '{"session":"s1","speaker":"B","start":1.0,"duration":0.4,"word":"a"}\n'
        )
        (session,) = parse_word_jsonl(text)
        assert [w.word for w in session.words] == ["a", "b"]

    def test_non_numeric_start_rejected(self):
        with pytest.raises(ParseError, match="start"):
            parse_word_jsonl(
                '{"session":"s1","speaker":"A","start":"x","duration":1,"word":"a"}'
            )


class TestParseCtm:
    def test_minimal_record(self):
        (session,) = parse_ctm("s1 A 0.00 0.40 hello\n")
        assert session.session_id == "s1"
        assert session.words == (TimedWord("hello", "A", 0.0, 0.4),)

    def test_confidence_ignored(self):
        assert parse_ctm("s1 A 0.00 0.40 hello 0.98\n") == parse_ctm("s1 A 0.00 0.40 hello\n")

    def test_too_few_fields_has_line_number(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_ctm("s1 A 0.00 hello\n")

    def test_comments_and_blanks_skipped(self):
        text = ";; a comment\n\ns1 A 0.00 0.40 hello\n"
        assert len(parse_ctm(text)) == 1

    def test_channel_is_speaker_label(self):
        (session,) = parse_ctm("s1 1 0.0 0.4 one\ns1 2 0.5 0.4 two\n")
        assert session.speakers == ("1", "2")

    def test_non_numeric_time_rejected(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_ctm("s1 A x 0.40 hello\n")

    def test_crlf_accepted(self):
        assert parse_ctm("s1 A 0.0 0.4 hi\r\ns1 A 0.5 0.4 yo\r\n")[0].words[1].word == "yo"

    def test_matches_word_jsonl_of_same_content(self):
        ctm = parse_ctm("s1 A 0.00 0.40 hello\ns1 B 0.60 0.30 hi\n")
        jsonl = parse_word_jsonl(
            '{"session":"s1","speaker":"A","start":0.0,"duration":0.4,"word":"hello"}\n'
            '{"session":"s1","speaker":"B","start":0.6,"duration":0.3,"word":"hi"}\n'
        )
        assert ctm == jsonl


class TestParseRttm:
    LINE = "SPEAKER s1 1 0.50 2.00 <NA> <NA> spkA <NA> <NA>\n"

    def test_minimal_record(self):
        (seg,) = parse_rttm(self.LINE)
        assert (seg.session_id, seg.speaker, seg.start, seg.duration) == (
            "s1", "spkA", 0.5, 2.0,
        )

    def test_non_speaker_lines_ignored(self):
        text = "SPKR-INFO s1 1 <NA> <NA> <NA> unknown spkA <NA> <NA>\n" + self.LINE
        assert len(parse_rttm(text)) == 1

    def test_non_numeric_time_rejected(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_rttm("SPEAKER s1 1 x 2.0 <NA> <NA> spkA <NA> <NA>\n")

    def test_truncated_speaker_line_rejected(self):
        with pytest.raises(ParseError):
            parse_rttm("SPEAKER s1 1 0.5\n")


class TestParseTokenStream:
    def test_speaker_and_word_tokens(self):
        t = parse_token_stream("<|spk0|> hello <|spk1|> hi")
        assert t.tokens == (
            SpeakerToken(0), WordToken("hello"), SpeakerToken(1), WordToken("hi"),
        )
        assert t.flags == ()

    def test_bare_word_flags_missing_leading_token(self):
        t = parse_token_stream("hello")
        assert t.tokens == (WordToken("hello"),)
        assert "missing leading speaker token" in t.flags

    def test_repeated_speaker_token_flagged(self):
        t = parse_token_stream("<|spk0|> <|spk0|> hi")
        assert t.tokens == (SpeakerToken(0), SpeakerToken(0), WordToken("hi"))
        assert "repeated speaker token" in t.flags

    def test_out_of_range_index_lenient(self):
        cfg = TokenStreamConfig(max_speaker_index=1)
        t = parse_token_stream("<|spk0|> a <|spk9|> b", cfg)
        assert SpeakerToken(9) in t.tokens
        assert any("exceeds max 1" in f for f in t.flags)

    def test_out_of_range_index_strict(self):
        cfg = TokenStreamConfig(max_speaker_index=1)
        with pytest.raises(ParseError, match="exceeds max 1"):
            parse_token_stream("<|spk9|> a", cfg, strict=True)

    def test_empty_text(self):
        assert parse_token_stream("").tokens == ()


class TestRoundTrip:
    @settings(max_examples=150)
    @given(
        st.lists(
            st.one_of(
                st.integers(min_value=0, max_value=31).map(SpeakerToken),
                st.text(
                    alphabet=st.characters(
                        blacklist_categories=("Zs", "Zl", "Zp", "Cc", "Cs")
                    ),
                    min_size=1,
                    max_size=8,
                ).map(WordToken),
            ),
            max_size=30,
        )
    )
    def test_parse_inverts_render(self, tokens):
        # Words that collide with the speaker-token surface form cannot
        # survive a text round trip; the generator avoids them.
        tokens = [
            t for t in tokens
            if isinstance(t, SpeakerToken)
            or DEFAULT_TOKEN_CONFIG.parse_token(t.text) is None
        ]
        original = SerializedTranscript(tuple(tokens))
        rendered = render_token_stream(original)
        assert parse_token_stream(rendered) == original

    def test_spec_example_round_trip(self):
        t = SerializedTranscript((SpeakerToken(0), WordToken("hi")))
        assert parse_token_stream(render_token_stream(t)) == t


class TestWriteManifest:
    def test_empty(self):
        assert write_manifest([]) == ""

    def test_single_entry_rendering(self):
        t = SerializedTranscript((SpeakerToken(0), WordToken("hi")))
        line = write_manifest([ManifestEntry("a.wav", 1.234, t)]).strip()
        assert '"text":"<|spk0|> hi"' in line
        record = json.loads(line)
        assert record == {"audio_filepath": "a.wav", "duration": 1.23, "text": "<|spk0|> hi"}

    def test_byte_stable(self):
        t = SerializedTranscript((SpeakerToken(0), WordToken("hi")))
        entries = [ManifestEntry("a.wav", 10.0, t), ManifestEntry("b.wav", 5.5, t)]
        assert write_manifest(entries) == write_manifest(entries)

    def test_round_trip_through_text_field(self):
        t = SerializedTranscript(
            (SpeakerToken(0), WordToken("hi"), SpeakerToken(1), WordToken("yo"))
        )
        record = json.loads(write_manifest([ManifestEntry("a.wav", 1.0, t)]))
        assert parse_token_stream(record["text"]) == t


class TestWriteWordJsonl:
    def test_round_trip(self):
        text = (
            '{"session":"s1","speaker":"A","start":0.25,"duration":0.4,"word":"hi"}\n'
            '{"session":"s1","speaker":"B","start":0.5,"duration":0.3,"word":"yo"}\n'
        )
        sessions = parse_word_jsonl(text)
        assert parse_word_jsonl(write_word_jsonl(sessions)) == sessions

    def test_times_rounded_to_centiseconds(self):
        session = Session("s", (TimedWord("a", "A", 0.123456, 0.98765),))
        record = json.loads(write_word_jsonl([session]))
        assert record["start"] == 0.12
        assert record["duration"] == 0.99


class TestParserTotality:
    @settings(max_examples=120)
    @given(st.text(max_size=200))
    def test_parsers_never_crash(self, text):
        for parser in (parse_word_jsonl, parse_ctm, parse_rttm):
            try:
                parser(text)
            except SotkitError:
                pass
        parse_token_stream(text)  # lenient mode never raises

    def test_random_binaryish_text(self):
        rng = random.Random(0)
        for _ in range(200):
            text = "".join(chr(rng.randrange(1, 0x300)) for _ in range(rng.randrange(80)))
            for parser in (parse_word_jsonl, parse_ctm, parse_rttm):
                try:
                    parser(text)
                except SotkitError:
                    pass

    def test_negative_start_is_a_validation_error(self):
        with pytest.raises(ValidationError, match="negative start"):
            parse_ctm("s1 A -1.0 0.4 hello\n")
