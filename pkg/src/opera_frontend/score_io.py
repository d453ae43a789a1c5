"""Score and annotation input: MusicXML parsing, syllable lexicon, phone CSVs.

Scores are reduced to a flat monophonic note list on the 10 ms frame grid.
Tied note groups merge into one event, rests keep pitch 0, and lyric
syllables expand to phoneme strings through an exact-match lexicon.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, NamedTuple
from xml.etree import ElementTree

from .errors import (
    FormatError,
    MalformedDocument,
    OverlapError,
    UnknownSyllable,
    UnsupportedFeature,
)

logger = logging.getLogger(__name__)

FRAMES_PER_SECOND = 100
MIDI_MIN = 35
MIDI_MAX = 85
DEFAULT_TEMPO_BPM = 60.0

_STEP_TO_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NoteEvent:
    midi_pitch: int  # 0 = rest
    duration_s: float
    duration_frames: int
    syllable: str | None
    note_index: int

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError(f"note duration must be positive, got {self.duration_s}")
        if self.duration_frames < 1:
            raise ValueError("note duration below one frame")
        if self.midi_pitch != 0 and not MIDI_MIN <= self.midi_pitch <= MIDI_MAX:
            raise ValueError(f"pitch {self.midi_pitch} outside [{MIDI_MIN}, {MIDI_MAX}]")

    @property
    def is_rest(self) -> bool:
        return self.midi_pitch == 0


@dataclass(frozen=True)
class Score:
    notes: tuple[NoteEvent, ...]
    tempo_bpm: float
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))
        if not self.notes:
            raise ValueError("score has no notes")
        for i, note in enumerate(self.notes):
            if note.note_index != i:
                raise ValueError("note_index must increase from 0")

    @property
    def total_seconds(self) -> float:
        return sum(n.duration_s for n in self.notes)


@dataclass(frozen=True)
class PhonemeLexicon:
    entries: dict[str, tuple[str, ...]]
    phoneme_inventory: frozenset[str]

    def __post_init__(self):
        for syllable, phones in self.entries.items():
            leftovers = set(phones) - self.phoneme_inventory
            if leftovers:
                raise FormatError(
                    f"lexicon entry {syllable!r} uses symbols outside the inventory: {sorted(leftovers)}"
                )


class PhoneInterval(NamedTuple):
    phoneme: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class AnnotatedPhrase:
    phrase_id: str
    audio_path: str
    phones: tuple[PhoneInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "phones", tuple(self.phones))
        prev_end = None
        for ph in self.phones:
            if ph.end_s <= ph.start_s:
                raise ValueError(f"empty interval for {ph.phoneme!r} at {ph.start_s}")
            if prev_end is not None and ph.start_s < prev_end - 1e-9:
                raise OverlapError(
                    f"interval for {ph.phoneme!r} starts at {ph.start_s} before previous end {prev_end}"
                )
            prev_end = ph.end_s


# --------------------------------------------------------------------------
# MusicXML
# --------------------------------------------------------------------------

def _pitch_to_midi(pitch_el: ElementTree.Element) -> int:
    step = pitch_el.findtext("step")
    octave = pitch_el.findtext("octave")
    if step is None or octave is None or step.upper() not in _STEP_TO_SEMITONE:
        raise MalformedDocument(f"bad pitch element (step={step!r}, octave={octave!r})")
    alter = pitch_el.findtext("alter") or "0"
    try:
        return (int(octave) + 1) * 12 + _STEP_TO_SEMITONE[step.upper()] + int(round(float(alter)))
    except ValueError as exc:
        raise MalformedDocument(f"bad pitch element: {exc}") from exc


def _clamp_pitch(midi: int) -> int:
    if midi < MIDI_MIN:
        logger.warning("pitch %d below MIDI %d; clamping", midi, MIDI_MIN)
        return MIDI_MIN
    if midi > MIDI_MAX:
        logger.warning("pitch %d above MIDI %d; clamping", midi, MIDI_MAX)
        return MIDI_MAX
    return midi


def _measure_stream(root: ElementTree.Element) -> Iterable[ElementTree.Element]:
    """Measures of the single allowed part, for both document orders."""
    if root.tag == "score-partwise":
        parts = root.findall("part")
        if not parts:
            raise MalformedDocument("no <part> in score")
        if len(parts) > 1:
            raise UnsupportedFeature("multiple parts; only monophonic scores are supported")
        return parts[0].findall("measure")
    if root.tag == "score-timewise":
        measures = root.findall("measure")
        out = []
        for measure in measures:
            parts = measure.findall("part")
            if not parts:
                raise MalformedDocument("timewise measure without <part>")
            if len(parts) > 1:
                raise UnsupportedFeature("multiple parts; only monophonic scores are supported")
            out.append(parts[0])
        return out
    raise MalformedDocument(f"root element {root.tag!r} is not a MusicXML score")


def parse_musicxml(document: bytes | str | IO[bytes]) -> Score:
    """Parse an uncompressed MusicXML document into a monophonic Score.

    Durations are converted to seconds with the running tempo (default 60 bpm
    when the score names none) and to 10 ms frames.  Tied groups merge; rests
    come through with pitch 0; chords and multi-voice writing are rejected.
    """
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, str):
        document = document.encode("utf-8")
    try:
        root = ElementTree.fromstring(document)
    except ElementTree.ParseError as exc:
        raise MalformedDocument(f"not well-formed XML: {exc}") from exc

    measures = _measure_stream(root)
    source_id = (
        root.findtext("work/work-title") or root.findtext("movement-title") or ""
    ).strip()

    divisions = 1
    tempo: float | None = None
    first_tempo: float | None = None
    seen_voices: set[str] = set()

    notes: list[NoteEvent] = []
    pending: dict | None = None  # open tied group

    def flush_pending():
        nonlocal pending
        if pending is None:
            return
        _append_note(notes, pending["midi"], pending["duration_s"], pending["syllable"])
        pending = None

    def current_tempo() -> float:
        nonlocal tempo, first_tempo
        if tempo is None:
            logger.warning("score names no tempo; defaulting to %g bpm", DEFAULT_TEMPO_BPM)
            tempo = DEFAULT_TEMPO_BPM
        if first_tempo is None:
            first_tempo = tempo
        return tempo

    for measure in measures:
        for el in measure:
            if el.tag == "attributes":
                div_text = el.findtext("divisions")
                if div_text:
                    divisions = int(div_text)
            elif el.tag in ("direction", "sound"):
                sound = el if el.tag == "sound" else el.find("sound")
                if sound is not None and sound.get("tempo"):
                    tempo = float(sound.get("tempo"))
                elif el.tag == "direction":
                    per_minute = el.findtext("direction-type/metronome/per-minute")
                    if per_minute:
                        tempo = float(per_minute)
            elif el.tag == "backup":
                raise UnsupportedFeature(
                    "backup element implies overlapping material; monophonic only"
                )
            elif el.tag == "forward":
                duration_text = el.findtext("duration")
                if duration_text:
                    flush_pending()
                    gap_s = float(duration_text) * 60.0 / (current_tempo() * divisions)
                    _append_note(notes, 0, gap_s, None)
            elif el.tag == "note":
                if el.find("chord") is not None:
                    raise UnsupportedFeature("chords are not supported (monophonic only)")
                voice = el.findtext("voice")
                if voice is not None:
                    seen_voices.add(voice)
                    if len(seen_voices) > 1:
                        raise UnsupportedFeature("multiple voices; only monophonic scores are supported")
                duration_text = el.findtext("duration")
                if duration_text is None:
                    if el.find("grace") is not None:
                        logger.warning("skipping grace note without notated duration")
                        continue
                    raise MalformedDocument("note without <duration>")
                duration_divs = float(duration_text)
                duration_s = duration_divs * 60.0 / (current_tempo() * divisions)

                is_rest = el.find("rest") is not None
                if is_rest:
                    flush_pending()
                    _append_note(notes, 0, duration_s, None)
                    continue

                pitch_el = el.find("pitch")
                if pitch_el is None:
                    raise MalformedDocument("pitched note without <pitch>")
                midi = _clamp_pitch(_pitch_to_midi(pitch_el))
                syllable = el.findtext("lyric/text")
                syllable = syllable.strip() if syllable else None

                ties = {t.get("type") for t in el.findall("tie")}
                starts = "start" in ties
                stops = "stop" in ties

                if pending is not None and stops and pending["midi"] == midi:
                    pending["duration_s"] += duration_s
                    if not starts:
                        flush_pending()
                    continue
                flush_pending()
                if starts:
                    pending = {"midi": midi, "duration_s": duration_s, "syllable": syllable}
                else:
                    _append_note(notes, midi, duration_s, syllable)
    flush_pending()

    if not notes:
        raise MalformedDocument("score contains no notes")
    return Score(tuple(notes), tempo_bpm=first_tempo or DEFAULT_TEMPO_BPM, source_id=source_id)


def _append_note(notes: list[NoteEvent], midi: int, duration_s: float, syllable: str | None) -> None:
    frames = round(duration_s * FRAMES_PER_SECOND)
    if frames < 1:
        logger.warning("note shorter than one frame (%.4f s); flooring to 1 frame", duration_s)
        frames = 1
    notes.append(
        NoteEvent(
            midi_pitch=midi,
            duration_s=duration_s,
            duration_frames=frames,
            syllable=syllable,
            note_index=len(notes),
        )
    )


# --------------------------------------------------------------------------
# Lexicon
# --------------------------------------------------------------------------

def _read_lines(file: IO[str] | str) -> list[str]:
    if isinstance(file, str):
        with open(file, encoding="utf-8") as fh:
            raw = fh.read()
    else:
        raw = file.read()
    lines = []
    for line in raw.splitlines():
        line = line.rstrip()
        if not line or line.lstrip().startswith("#"):
            continue
        lines.append(line)
    return lines


def load_inventory(file: IO[str] | str) -> frozenset[str]:
    symbols = _read_lines(file)
    if len(set(symbols)) != len(symbols):
        raise FormatError("duplicate symbols in phoneme inventory")
    return frozenset(symbols)


def load_lexicon(entries_file: IO[str] | str, inventory: frozenset[str]) -> PhonemeLexicon:
    """Load `syllable<TAB>ph1 ph2 ...` entries against a fixed inventory."""
    entries: dict[str, tuple[str, ...]] = {}
    for line in _read_lines(entries_file):
        if "\t" not in line:
            raise FormatError(f"lexicon line without tab separator: {line!r}")
        syllable, phones = line.split("\t", 1)
        syllable = syllable.strip()
        phoneme_seq = tuple(phones.split())
        if not syllable or not phoneme_seq:
            raise FormatError(f"empty lexicon entry: {line!r}")
        entries[syllable] = phoneme_seq
    return PhonemeLexicon(entries=entries, phoneme_inventory=inventory)


def default_lexicon() -> PhonemeLexicon:
    """The bundled Mandarin stage-diction lexicon (51-symbol inventory)."""
    data = resources.files("opera_frontend").joinpath("data")
    inventory = load_inventory(io.StringIO(data.joinpath("phoneme_inventory.txt").read_text("utf-8")))
    return load_lexicon(
        io.StringIO(data.joinpath("lexicon_mandarin.txt").read_text("utf-8")), inventory
    )


def syllable_to_phonemes(syllable: str, lexicon: PhonemeLexicon) -> list[str]:
    """Exact-match lexicon lookup; the caller decides any fallback."""
    try:
        return list(lexicon.entries[syllable])
    except KeyError:
        raise UnknownSyllable(syllable) from None


def score_to_dict(score: Score, lexicon: PhonemeLexicon) -> dict:
    """Wire/file form of a score with syllables expanded to phonemes."""
    notes = []
    for note in score.notes:
        phonemes = syllable_to_phonemes(note.syllable, lexicon) if note.syllable else []
        notes.append(
            {
                "note_index": note.note_index,
                "midi_pitch": note.midi_pitch,
                "duration_s": note.duration_s,
                "duration_frames": note.duration_frames,
                "syllable": note.syllable,
                "phonemes": phonemes,
            }
        )
    return {"source_id": score.source_id, "tempo_bpm": score.tempo_bpm, "notes": notes}


# --------------------------------------------------------------------------
# Annotations
# --------------------------------------------------------------------------

def load_annotation(
    file: IO[str] | IO[bytes], phrase_id: str = "", audio_path: str = ""
) -> AnnotatedPhrase:
    """Parse a `phoneme,start_s,end_s` CSV into an annotated phrase."""
    raw = file.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    reader = csv.reader(io.StringIO(raw))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("annotation file is empty") from None
    if [h.strip() for h in header] != ["phoneme", "start_s", "end_s"]:
        raise FormatError(f"bad annotation header: {header!r}")

    phones: list[PhoneInterval] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
        symbol = row[0].strip()
        try:
            start_s, end_s = float(row[1]), float(row[2])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if not symbol:
            raise FormatError(f"line {lineno}: empty phoneme symbol")
        if end_s <= start_s:
            raise FormatError(f"line {lineno}: end {end_s} not after start {start_s}")
        phones.append(PhoneInterval(symbol, start_s, end_s))
    return AnnotatedPhrase(phrase_id=phrase_id, audio_path=audio_path, phones=tuple(phones))
