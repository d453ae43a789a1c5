"""MusicXML parsing, lexicon lookup, and annotation ingestion."""

import io

import pytest

from opera_frontend.errors import (
    FormatError,
    MalformedDocument,
    OverlapError,
    UnknownSyllable,
    UnsupportedFeature,
)
from opera_frontend.score_io import (
    PhonemeLexicon,
    PhoneInterval,
    default_lexicon,
    load_annotation,
    parse_musicxml,
    syllable_to_phonemes,
)


def score_xml(measures: str, partwise: bool = True) -> str:
    if partwise:
        return f'<score-partwise version="3.1"><part-list><score-part id="P1"/></part-list><part id="P1">{measures}</part></score-partwise>'
    return f'<score-timewise version="3.1">{measures}</score-timewise>'


def note_xml(step="C", octave=4, duration=4, lyric=None, rest=False, ties=(), chord=False):
    parts = []
    if chord:
        parts.append("<chord/>")
    if rest:
        parts.append("<rest/>")
    else:
        parts.append(f"<pitch><step>{step}</step><octave>{octave}</octave></pitch>")
    parts.append(f"<duration>{duration}</duration>")
    for t in ties:
        parts.append(f'<tie type="{t}"/>')
    if lyric:
        parts.append(f"<lyric><text>{lyric}</text></lyric>")
    return f"<note>{''.join(parts)}</note>"


ATTRS_60 = '<attributes><divisions>4</divisions></attributes><direction><sound tempo="60"/></direction>'


def test_single_quarter_note_at_60_bpm():
    xml = score_xml(f"<measure>{ATTRS_60}{note_xml('C', 4, 4)}</measure>")
    score = parse_musicxml(xml)
    assert len(score.notes) == 1
    note = score.notes[0]
    assert note.midi_pitch == 60
    assert note.duration_s == pytest.approx(1.0)
    assert note.duration_frames == 100
    assert score.tempo_bpm == 60


def test_tied_half_notes_merge():
    attrs = '<attributes><divisions>4</divisions></attributes><direction><sound tempo="120"/></direction>'
    xml = score_xml(
        f"<measure>{attrs}{note_xml('E', 4, 8, ties=('start',))}</measure>"
        f"<measure>{note_xml('E', 4, 8, ties=('stop',))}</measure>"
    )
    score = parse_musicxml(xml)
    assert len(score.notes) == 1
    assert score.notes[0].midi_pitch == 64
    assert score.notes[0].duration_s == pytest.approx(2.0)
    assert score.notes[0].duration_frames == 200


def test_three_way_tie_chain():
    xml = score_xml(
        f"<measure>{ATTRS_60}"
        + note_xml("G", 4, 4, ties=("start",))
        + note_xml("G", 4, 4, ties=("stop", "start"))
        + note_xml("G", 4, 4, ties=("stop",))
        + "</measure>"
    )
    score = parse_musicxml(xml)
    assert len(score.notes) == 1
    assert score.notes[0].duration_s == pytest.approx(3.0)


def test_truncated_xml_is_malformed():
    with pytest.raises(MalformedDocument):
        parse_musicxml("<score-partwise><part id='P1'><measure>")


def test_non_musicxml_root_rejected():
    with pytest.raises(MalformedDocument):
        parse_musicxml("<html><body/></html>")


def test_rest_has_pitch_zero():
    xml = score_xml(f"<measure>{ATTRS_60}{note_xml(rest=True, duration=2)}{note_xml('A', 4, 4)}</measure>")
    score = parse_musicxml(xml)
    assert [n.midi_pitch for n in score.notes] == [0, 69]
    assert score.notes[0].duration_s == pytest.approx(0.5)


def test_tempo_change_mid_score():
    xml = score_xml(
        f"<measure>{ATTRS_60}{note_xml('C', 4, 4)}"
        f'<direction><sound tempo="120"/></direction>{note_xml("D", 4, 4)}</measure>'
    )
    score = parse_musicxml(xml)
    assert score.notes[0].duration_s == pytest.approx(1.0)
    assert score.notes[1].duration_s == pytest.approx(0.5)
    assert score.tempo_bpm == 60  # initial tempo reported


def test_missing_tempo_defaults_to_60(caplog):
    xml = score_xml(f"<measure><attributes><divisions>1</divisions></attributes>{note_xml('C', 4, 1)}</measure>")
    with caplog.at_level("WARNING"):
        score = parse_musicxml(xml)
    assert score.tempo_bpm == 60
    assert score.notes[0].duration_s == pytest.approx(1.0)
    assert any("tempo" in r.message for r in caplog.records)


def test_out_of_range_pitch_clamped(caplog):
    with caplog.at_level("WARNING"):
        score = parse_musicxml(score_xml(f"<measure>{ATTRS_60}{note_xml('C', 8, 4)}</measure>"))
    assert score.notes[0].midi_pitch == 85
    assert any("clamping" in r.message for r in caplog.records)


def test_chord_rejected():
    xml = score_xml(f"<measure>{ATTRS_60}{note_xml('C', 4, 4)}{note_xml('E', 4, 4, chord=True)}</measure>")
    with pytest.raises(UnsupportedFeature):
        parse_musicxml(xml)


def test_multiple_parts_rejected():
    xml = (
        '<score-partwise><part id="P1"><measure>'
        + ATTRS_60
        + note_xml("C", 4, 4)
        + '</measure></part><part id="P2"><measure>'
        + note_xml("E", 4, 4)
        + "</measure></part></score-partwise>"
    )
    with pytest.raises(UnsupportedFeature):
        parse_musicxml(xml)


def test_multiple_voices_rejected():
    xml = score_xml(
        f"<measure>{ATTRS_60}"
        "<note><pitch><step>C</step><octave>4</octave></pitch><duration>4</duration><voice>1</voice></note>"
        "<note><pitch><step>E</step><octave>4</octave></pitch><duration>4</duration><voice>2</voice></note>"
        "</measure>"
    )
    with pytest.raises(UnsupportedFeature):
        parse_musicxml(xml)


def test_backup_rejected():
    xml = score_xml(
        f"<measure>{ATTRS_60}{note_xml('C', 4, 4)}<backup><duration>4</duration></backup>{note_xml('E', 3, 4)}</measure>"
    )
    with pytest.raises(UnsupportedFeature):
        parse_musicxml(xml)


def test_forward_becomes_rest():
    xml = score_xml(
        f"<measure>{ATTRS_60}{note_xml('C', 4, 4)}<forward><duration>2</duration></forward>{note_xml('E', 4, 4)}</measure>"
    )
    score = parse_musicxml(xml)
    assert [n.midi_pitch for n in score.notes] == [60, 0, 64]
    assert score.notes[1].duration_s == pytest.approx(0.5)


def test_timewise_document():
    xml = score_xml(
        f'<measure number="1"><part id="P1">{ATTRS_60}{note_xml("C", 4, 4, lyric="wo")}</part></measure>',
        partwise=False,
    )
    score = parse_musicxml(xml)
    assert score.notes[0].midi_pitch == 60
    assert score.notes[0].syllable == "wo"


def test_parse_is_deterministic():
    xml = score_xml(
        f"<measure>{ATTRS_60}{note_xml('C', 4, 4, lyric='ming')}{note_xml('G', 4, 6)}{note_xml(rest=True, duration=2)}</measure>"
    )
    assert parse_musicxml(xml) == parse_musicxml(xml)


def test_roundtrip_total_duration():
    # 4 + 6 + 2 + 8 divisions at 90 bpm, divisions=4
    attrs = '<attributes><divisions>4</divisions></attributes><direction><sound tempo="90"/></direction>'
    xml = score_xml(
        f"<measure>{attrs}{note_xml('C', 4, 4)}{note_xml('D', 4, 6)}{note_xml(rest=True, duration=2)}{note_xml('E', 4, 8)}</measure>"
    )
    score = parse_musicxml(xml)
    expected = 20 * 60.0 / (90 * 4)
    assert score.total_seconds == pytest.approx(expected, abs=1e-9)
    assert all(n.duration_frames == round(n.duration_s * 100) for n in score.notes)


# --------------------------------------------------------------------------
# Lexicon
# --------------------------------------------------------------------------

def test_default_lexicon_inventory_size():
    lex = default_lexicon()
    assert len(lex.phoneme_inventory) == 51


def test_long_melisma_syllable():
    lex = default_lexicon()
    assert syllable_to_phonemes("liang", lex) == ["l", "j", "E", "a", "a", "N"]


def test_single_phoneme_entry():
    lex = default_lexicon()
    assert syllable_to_phonemes("a", lex) == ["a"]


def test_unknown_syllable_raises():
    lex = default_lexicon()
    with pytest.raises(UnknownSyllable) as exc:
        syllable_to_phonemes("xyzzy", lex)
    assert "xyzzy" in str(exc.value)


def test_every_entry_within_inventory():
    lex = default_lexicon()
    for phones in lex.entries.values():
        assert set(phones) <= lex.phoneme_inventory


def test_lexicon_rejects_symbols_outside_inventory():
    with pytest.raises(FormatError):
        PhonemeLexicon(entries={"la": ("l", "zz")}, phoneme_inventory=frozenset({"l", "a"}))


# --------------------------------------------------------------------------
# Annotations
# --------------------------------------------------------------------------

def test_annotation_parses_in_order():
    csv_text = "phoneme,start_s,end_s\na,0.0,0.5\nN,0.5,1.2\n"
    phrase = load_annotation(io.StringIO(csv_text), phrase_id="p1")
    assert phrase.phones == (PhoneInterval("a", 0.0, 0.5), PhoneInterval("N", 0.5, 1.2))


def test_annotation_overlap_rejected():
    csv_text = "phoneme,start_s,end_s\na,0.0,0.5\nN,0.4,1.2\n"
    with pytest.raises(OverlapError):
        load_annotation(io.StringIO(csv_text))


def test_annotation_empty_after_header():
    phrase = load_annotation(io.StringIO("phoneme,start_s,end_s\n"))
    assert phrase.phones == ()


def test_annotation_bad_header():
    with pytest.raises(FormatError):
        load_annotation(io.StringIO("phone,begin,end\na,0,1\n"))


def test_annotation_bad_row():
    with pytest.raises(FormatError):
        load_annotation(io.StringIO("phoneme,start_s,end_s\na,zero,1\n"))


def test_annotation_accepts_bytes():
    phrase = load_annotation(io.BytesIO(b"phoneme,start_s,end_s\nl,0.00,0.08\n"))
    assert phrase.phones[0].phoneme == "l"
