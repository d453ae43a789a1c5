"""Pitch track to pseudo score: a note-level HMM over a fine pitch grid.

States are one shared Silent state plus an Attack and a Stable state for
every grid pitch (a third of a semitone apart).  Attack tolerates wide
deviations (onset glides), Stable hugs the grid pitch, and moving between
pitches pays an interval-dependent transition cost, so vibrato stays inside
one note while real pitch changes split.  The decoded path is segmented into
notes and rendered as frame-wise integral MIDI with 0 marking unvoiced.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .errors import EmptyTrack, FormatError, OffGrid
from .hmm import viterbi_decode
from .pitch_tracker import PitchTrack, hz_to_midi

HOP_SECONDS = 0.010


# --------------------------------------------------------------------------
# Interval distribution (note-to-note transition prior)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalDistribution:
    """Probability mass over pitch intervals in semitones."""

    points: tuple[tuple[float, float], ...]  # (semitones, prob), sorted

    def __post_init__(self):
        pts = tuple(sorted(self.points))
        if not pts:
            raise ValueError("interval distribution needs at least one point")
        total = sum(p for _, p in pts)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"interval probabilities sum to {total}, expected 1")
        if any(p < 0 for _, p in pts):
            raise ValueError("negative interval probability")
        object.__setattr__(self, "points", pts)

    def weight(self, semitones: float) -> float:
        """Piecewise-linear interpolation inside the support, 0 outside."""
        xs = [s for s, _ in self.points]
        ps = [p for _, p in self.points]
        if semitones < xs[0] or semitones > xs[-1]:
            return 0.0
        hi = 0
        while xs[hi] < semitones:
            hi += 1
        if xs[hi] == semitones:
            return ps[hi]
        lo = hi - 1
        frac = (semitones - xs[lo]) / (xs[hi] - xs[lo])
        return ps[lo] + frac * (ps[hi] - ps[lo])


def gaussian_interval_distribution(
    sigma_semitones: float = 2.5, max_jump: float = 12.0, step: float = 1.0 / 3.0
) -> IntervalDistribution:
    """Discretized symmetric Gaussian over intervals, truncated at +-max_jump."""
    n = int(round(max_jump / step))
    xs = np.arange(-n, n + 1) * step
    w = np.exp(-0.5 * (xs / sigma_semitones) ** 2)
    w /= w.sum()
    # exact renormalization against float drift
    pts = [(float(x), float(p)) for x, p in zip(xs, w)]
    drift = 1.0 - sum(p for _, p in pts)
    mid = len(pts) // 2
    pts[mid] = (pts[mid][0], pts[mid][1] + drift)
    return IntervalDistribution(tuple(pts))


def load_transition_histogram(file: IO[str]) -> IntervalDistribution:
    """Read `{"intervals": [{"semitones": s, "prob": p}, ...]}`."""
    try:
        doc = json.load(file)
    except json.JSONDecodeError as exc:
        raise FormatError(f"transition histogram is not valid JSON: {exc}") from exc
    try:
        pts = tuple((float(e["semitones"]), float(e["prob"])) for e in doc["intervals"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad transition histogram: {exc}") from exc
    try:
        return IntervalDistribution(pts)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


# --------------------------------------------------------------------------
# Configuration and domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NoteHmmConfig:
    pitch_min_midi: int = 35
    pitch_max_midi: int = 85
    steps_per_semitone: int = 3
    transition_distribution: IntervalDistribution = field(
        default_factory=gaussian_interval_distribution
    )
    attack_sigma_semitones: float = 1.0
    stable_sigma_semitones: float = 0.25
    attack_self_prob: float = 0.9  # mean attack length 10 frames, capped in spirit at 15
    stable_self_prob: float = 0.98
    stable_to_silent_prob: float = 0.01
    silent_self_prob: float = 0.99
    silent_emission_voiced: float = 1e-4
    emission_floor: float = 1e-12

    @property
    def n_pitches(self) -> int:
        return (self.pitch_max_midi - self.pitch_min_midi) * self.steps_per_semitone + 1

    def grid_midi(self, index: int) -> float:
        return self.pitch_min_midi + index / self.steps_per_semitone

    def grid_index(self, midi: float) -> int:
        idx = (midi - self.pitch_min_midi) * self.steps_per_semitone
        if abs(idx - round(idx)) > 1e-6 or not 0 <= round(idx) < self.n_pitches:
            raise OffGrid(f"pitch {midi} is not on the transcription grid")
        return int(round(idx))


DEFAULT_NOTE_CONFIG = NoteHmmConfig()


@dataclass(frozen=True)
class TranscribedNote:
    midi_pitch: int
    start_frame: int
    end_frame: int  # exclusive

    def __post_init__(self):
        if self.end_frame <= self.start_frame:
            raise ValueError("note must span at least one frame")

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class PseudoScore:
    frame_pitch: np.ndarray  # int, 0 = unvoiced
    notes: tuple[TranscribedNote, ...]
    hop_s: float = HOP_SECONDS

    def __post_init__(self):
        fp = np.asarray(self.frame_pitch, dtype=int)
        object.__setattr__(self, "frame_pitch", fp)
        object.__setattr__(self, "notes", tuple(self.notes))
        covered = np.zeros(fp.size, dtype=int)
        for note in self.notes:
            covered[note.start_frame : note.end_frame] += 1
            if not np.all(fp[note.start_frame : note.end_frame] == note.midi_pitch):
                raise ValueError("frame pitch disagrees with covering note")
        if np.any(covered > 1):
            raise ValueError("notes overlap")
        if np.any((covered == 0) & (fp != 0)):
            raise ValueError("pitched frame not covered by any note")


# --------------------------------------------------------------------------
# Transitions
# --------------------------------------------------------------------------

def _interval_row(config: NoteHmmConfig, from_index: int) -> np.ndarray:
    """Unnormalized interval weights from one grid pitch to every other."""
    dist = config.transition_distribution
    step = 1.0 / config.steps_per_semitone
    offsets = (np.arange(config.n_pitches) - from_index) * step
    return np.array([dist.weight(float(o)) for o in offsets])


def note_transition_prob(
    from_pitch: float, to_pitch: float, config: NoteHmmConfig = DEFAULT_NOTE_CONFIG
) -> float:
    """Interval prior evaluated between two grid pitches, row-normalized."""
    i = config.grid_index(from_pitch)
    j = config.grid_index(to_pitch)
    row = _interval_row(config, i)
    total = row.sum()
    if total <= 0:
        raise ValueError(f"no reachable targets from pitch {from_pitch}")
    return float(row[j] / total)


def _note_lattice(
    midi: np.ndarray, voiced: np.ndarray, config: NoteHmmConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(log_init, log_trans, log_emit) over Silent + per-pitch Attack/Stable.

    State 0 is Silent; pitch i occupies states 1 + 2i (Attack) and 2 + 2i
    (Stable).  Unvoiced frames emit only from Silent.
    """
    n = config.n_pitches
    n_states = 2 * n + 1
    attack = 1 + 2 * np.arange(n)
    stable = 2 + 2 * np.arange(n)

    trans = np.zeros((n_states, n_states))
    trans[0, 0] = config.silent_self_prob
    trans[0, attack] = (1.0 - config.silent_self_prob) / n
    trans[attack, attack] = config.attack_self_prob
    trans[attack, stable] = 1.0 - config.attack_self_prob
    trans[stable, stable] = config.stable_self_prob
    trans[stable, 0] = config.stable_to_silent_prob
    change = 1.0 - config.stable_self_prob - config.stable_to_silent_prob
    for i in range(n):
        row = _interval_row(config, i)
        total = row.sum()
        if total > 0:
            trans[stable[i], attack] += change * row / total
        else:
            trans[stable[i], 0] += change

    grid = config.pitch_min_midi + np.arange(n) / config.steps_per_semitone
    emit = np.full((midi.size, n_states), config.emission_floor)
    log_norm_a = 1.0 / (config.attack_sigma_semitones * math.sqrt(2 * math.pi))
    log_norm_s = 1.0 / (config.stable_sigma_semitones * math.sqrt(2 * math.pi))
    for t in range(midi.size):
        if voiced[t]:
            dev = midi[t] - grid
            emit[t, attack] = np.maximum(
                log_norm_a * np.exp(-0.5 * (dev / config.attack_sigma_semitones) ** 2),
                config.emission_floor,
            )
            emit[t, stable] = np.maximum(
                log_norm_s * np.exp(-0.5 * (dev / config.stable_sigma_semitones) ** 2),
                config.emission_floor,
            )
            emit[t, 0] = config.silent_emission_voiced
        else:
            emit[t, :] = 0.0
            emit[t, 0] = 1.0

    init = np.full(n_states, 0.5 / (n_states - 1))
    init[0] = 0.5

    with np.errstate(divide="ignore"):
        return np.log(init), np.log(trans), np.log(emit)


# --------------------------------------------------------------------------
# Decoding
# --------------------------------------------------------------------------

def quantize_grid_pitch(grid_value: float) -> int:
    """Nearest integral MIDI; exact halves round up."""
    if not 35.0 - 1e-9 <= grid_value <= 85.0 + 1e-9:
        raise OffGrid(f"grid pitch {grid_value} outside [35, 85]")
    return int(math.floor(grid_value + 0.5))


def transcribe(track: PitchTrack, config: NoteHmmConfig = DEFAULT_NOTE_CONFIG) -> PseudoScore:
    """Decode a pitch track into notes and frame-wise integral MIDI."""
    if len(track) == 0:
        raise EmptyTrack("cannot transcribe an empty pitch track")
    midi = np.array([hz_to_midi(f) if f > 0 else 0.0 for f in track.f0_hz])
    voiced = np.asarray(track.voiced, dtype=bool)

    log_init, log_trans, log_emit = _note_lattice(midi, voiced, config)
    path, _ = viterbi_decode(log_init, log_trans, log_emit)

    pitch_index = np.where(path > 0, (path - 1) // 2, -1)
    notes: list[TranscribedNote] = []
    frame_pitch = np.zeros(len(track), dtype=int)
    start = None
    current = -1
    for t in range(len(path) + 1):
        idx = pitch_index[t] if t < len(path) else -1
        if idx != current:
            if current >= 0:
                pitch = quantize_grid_pitch(config.grid_midi(current))
                notes.append(TranscribedNote(pitch, start, t))
                frame_pitch[start:t] = pitch
            start = t
            current = idx
    return PseudoScore(frame_pitch=frame_pitch, notes=tuple(notes))


# --------------------------------------------------------------------------
# Note-level F-score
# --------------------------------------------------------------------------

def score_note_f(
    predicted: Sequence[TranscribedNote],
    reference: Sequence[TranscribedNote],
    onset_tol_frames: int = 5,
    pitch_tol: int = 0,
) -> tuple[float, float, float]:
    """(precision, recall, F) under greedy one-to-one onset matching."""
    ref_used = [False] * len(reference)
    ref_sorted = sorted(range(len(reference)), key=lambda i: reference[i].start_frame)
    matches = 0
    for pred in sorted(predicted, key=lambda nt: nt.start_frame):
        for i in ref_sorted:
            if ref_used[i]:
                continue
            ref = reference[i]
            if (
                abs(pred.start_frame - ref.start_frame) <= onset_tol_frames
                and abs(pred.midi_pitch - ref.midi_pitch) <= pitch_tol
            ):
                ref_used[i] = True
                matches += 1
                break
    precision = matches / len(predicted) if predicted else 0.0
    recall = matches / len(reference) if reference else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------

def write_pseudo_score_json(score: PseudoScore, file: IO[str]) -> None:
    doc = {
        "notes": [
            {"midi": n.midi_pitch, "start_frame": n.start_frame, "end_frame": n.end_frame}
            for n in score.notes
        ]
    }
    json.dump(doc, file, indent=2, sort_keys=True)
    file.write("\n")


def read_pseudo_score_json(file: IO[str]) -> tuple[TranscribedNote, ...]:
    try:
        doc = json.load(file)
        return tuple(
            TranscribedNote(int(n["midi"]), int(n["start_frame"]), int(n["end_frame"]))
            for n in doc["notes"]
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad pseudo-score JSON: {exc}") from exc


def write_frame_pitch_csv(score: PseudoScore, file: IO[str]) -> None:
    file.write("frame,midi_pitch\n")
    for i, p in enumerate(score.frame_pitch):
        file.write(f"{i},{int(p)}\n")
