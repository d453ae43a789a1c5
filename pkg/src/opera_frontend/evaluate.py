"""Benchmarks for the duration allocators and the note transcriber.

The duration benchmark samples ground-truth phoneme durations from known
per-phoneme Gaussians (stretched note-by-note to imitate the long-note
singing regime), hands each allocator only the distributions and the note
total, and reports mean absolute per-phoneme error in frames, split into
"all notes" and "notes < 2 s" like the headline comparison this mirrors.
Predictions and truths are both on the integer frame grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .duration_model import (
    DurationModelTable,
    NoteSpan,
    _floor_and_rescale,
    allocate_fitting_heuristic,
    allocate_lagrange,
    allocate_mean_fit,
    quantize_to_frames,
    single_gaussian,
)
from .errors import ConfigError, LengthMismatch
from .note_transcriber import (
    NoteHmmConfig,
    DEFAULT_NOTE_CONFIG,
    TranscribedNote,
    score_note_f,
    transcribe,
)
from .pitch_tracker import PitchTrack, midi_to_hz

SHORT_NOTE_FRAMES = 200  # strictly below 2 s at the 10 ms grid

METHODS = ("lagrange", "heuristic", "meanfit")


# --------------------------------------------------------------------------
# Error metric
# --------------------------------------------------------------------------

def duration_error(
    predicted: Sequence[float], truth: Sequence[float], note_frames: int
) -> tuple[list[float], bool]:
    """Per-phoneme |predicted - truth| and whether the note counts as short."""
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(truth)} truths")
    errors = [abs(float(p) - float(t)) for p, t in zip(predicted, truth)]
    return errors, note_frames < SHORT_NOTE_FRAMES


# --------------------------------------------------------------------------
# Synthetic corpus
# --------------------------------------------------------------------------

DEFAULT_PHONEME_STATS: dict[str, tuple[float, float]] = {
    # consonants: short, tight
    "l": (12.0, 4.0),
    "m": (12.0, 4.0),
    "t": (8.0, 3.0),
    "x": (13.0, 4.0),
    "s`": (15.0, 5.0),
    "ts": (14.0, 5.0),
    # glides
    "j": (10.0, 4.0),
    "w": (10.0, 4.0),
    # vowels: long, loose
    "a": (27.0, 11.0),
    "E": (24.0, 9.5),
    "o": (25.0, 10.0),
    "i": (23.0, 9.0),
    "u": (22.0, 8.5),
    "@": (18.0, 7.0),
    # nasal coda
    "N": (18.0, 7.0),
}

_CONSONANTS = ("l", "m", "t", "x", "s`", "ts")
_GLIDES = ("j", "w")
_VOWELS = ("a", "E", "o", "i", "u", "@")
_CODAS = ("N",)


@dataclass(frozen=True)
class BenchmarkConfig:
    phoneme_stats: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_PHONEME_STATS)
    )
    n_train_notes: int = 1500
    n_test_notes: int = 400
    min_phonemes: int = 2
    max_phonemes: int = 6
    stretch_sigma: float = 0.5  # log-normal note stretch; heavy tail past 2 s
    max_note_frames: int = 1200  # about 12 s
    note_length_mode: str = "sampled"  # or "sum_of_means"

    def __post_init__(self):
        if not self.phoneme_stats:
            raise ConfigError("phoneme_stats must not be empty")
        for ph, (mean, std) in self.phoneme_stats.items():
            if mean <= 0 or std < 0:
                raise ConfigError(f"bad stats for {ph!r}: mean={mean}, std={std}")
        if not 1 <= self.min_phonemes <= self.max_phonemes:
            raise ConfigError("need 1 <= min_phonemes <= max_phonemes")
        if self.note_length_mode not in ("sampled", "sum_of_means"):
            raise ConfigError(f"unknown note_length_mode {self.note_length_mode!r}")
        if self.stretch_sigma < 0:
            raise ConfigError("stretch_sigma must be >= 0")


def config_from_mapping(mapping: dict) -> BenchmarkConfig:
    """BenchmarkConfig from a plain dict (TOML section or request body)."""
    kwargs = dict(mapping)
    stats = kwargs.pop("phoneme_stats", None)
    if stats is not None:
        try:
            kwargs["phoneme_stats"] = {ph: (float(v[0]), float(v[1])) for ph, v in stats.items()}
        except (TypeError, IndexError, ValueError):
            raise ConfigError(
                "phoneme_stats entries must be [mean, std] pairs", key="phoneme_stats"
            ) from None
    try:
        return BenchmarkConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad benchmark config: {exc}") from None


def _sample_phoneme_sequence(rng: np.random.Generator, config: BenchmarkConfig) -> list[str]:
    """Consonant/glide onset followed by a melisma-style vowel chain."""
    available = set(config.phoneme_stats)
    m = int(rng.integers(config.min_phonemes, config.max_phonemes + 1))
    seq: list[str] = []
    onset = [p for p in _CONSONANTS if p in available]
    glides = [p for p in _GLIDES if p in available]
    vowels = [p for p in _VOWELS if p in available]
    codas = [p for p in _CODAS if p in available]
    if not vowels:
        vowels = sorted(available)
    if onset:
        seq.append(onset[rng.integers(len(onset))])
    if len(seq) < m - 1 and glides and rng.uniform() < 0.4:
        seq.append(glides[rng.integers(len(glides))])
    while len(seq) < m - 1 or len(seq) < 1:
        seq.append(vowels[rng.integers(len(vowels))])
    if codas and rng.uniform() < 0.5:
        seq.append(codas[rng.integers(len(codas))])
    else:
        seq.append(vowels[rng.integers(len(vowels))])
    return seq[:m] if len(seq) > m else seq


def _sample_note(rng: np.random.Generator, config: BenchmarkConfig):
    """One note: phonemes, per-phoneme true distributions, truth, total."""
    seq = _sample_phoneme_sequence(rng, config)
    mu = np.array([config.phoneme_stats[p][0] for p in seq])
    sd = np.array([config.phoneme_stats[p][1] for p in seq])
    stretch = float(np.exp(rng.normal(0.0, config.stretch_sigma)))
    stretch = min(stretch, config.max_note_frames / max(mu.sum(), 1.0))
    mu_s, sd_s = stretch * mu, stretch * sd
    truth = np.maximum(rng.normal(mu_s, sd_s), 1.0)
    if config.note_length_mode == "sampled":
        total = int(round(truth.sum()))
    else:
        total = int(round(mu_s.sum()))
    total = max(total, len(seq))
    truth_frames = quantize_to_frames(_floor_and_rescale(truth, total), total)
    span = NoteSpan(
        total,
        tuple(single_gaussian(p, float(m), float(s)) for p, m, s in zip(seq, mu_s, sd_s)),
    )
    return seq, span, truth_frames


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodErrors:
    mean_abs_error_frames_all: float
    mean_abs_error_frames_short: float

    def __post_init__(self):
        if self.mean_abs_error_frames_all < 0 or self.mean_abs_error_frames_short < 0:
            raise ValueError("mean errors cannot be negative")


@dataclass(frozen=True)
class NoteErrorRow:
    note_index: int
    n_phonemes: int
    total_frames: int
    short: bool
    mean_error_by_method: dict[str, float]


@dataclass(frozen=True)
class DurationEvalReport:
    methods: dict[str, MethodErrors]
    n_notes: int
    n_short_notes: int
    n_phonemes: int
    seed: int
    per_note: tuple[NoteErrorRow, ...] = ()

    def __post_init__(self):
        if self.n_short_notes > self.n_notes:
            raise ValueError("more short notes than notes")

    def to_dict(self) -> dict:
        return {
            "averaging": "per-phoneme",
            "seed": self.seed,
            "n_notes": self.n_notes,
            "n_short_notes": self.n_short_notes,
            "n_phonemes": self.n_phonemes,
            "methods": {
                name: {
                    "mean_abs_error_frames_all": me.mean_abs_error_frames_all,
                    "mean_abs_error_frames_short": me.mean_abs_error_frames_short,
                }
                for name, me in sorted(self.methods.items())
            },
        }


def render_report_text(report: DurationEvalReport) -> str:
    lines = [
        f"duration benchmark  seed={report.seed}  notes={report.n_notes}"
        f"  short={report.n_short_notes}  phonemes={report.n_phonemes}",
        "mean |error| per phoneme, frames (per-phoneme averaging)",
        f"{'method':<12}{'all':>10}{'notes < 2 s':>14}",
    ]
    for name in METHODS:
        me = report.methods[name]
        lines.append(
            f"{name:<12}{me.mean_abs_error_frames_all:>10.2f}"
            f"{me.mean_abs_error_frames_short:>14.2f}"
        )
    return "\n".join(lines) + "\n"


def write_report_json(report: DurationEvalReport, file: IO[str]) -> None:
    json.dump(report.to_dict(), file, indent=2, sort_keys=True)
    file.write("\n")


def write_per_note_csv(report: DurationEvalReport, file: IO[str]) -> None:
    """Per-note mean errors, one row per benchmark note."""
    file.write("note_index,n_phonemes,total_frames,short," + ",".join(METHODS) + "\n")
    for row in report.per_note:
        cells = [
            str(row.note_index),
            str(row.n_phonemes),
            str(row.total_frames),
            str(int(row.short)),
        ] + [f"{row.mean_error_by_method[m]:.4f}" for m in METHODS]
        file.write(",".join(cells) + "\n")


# --------------------------------------------------------------------------
# Duration benchmark
# --------------------------------------------------------------------------

def synth_duration_benchmark(
    seed: int, config: BenchmarkConfig | None = None
) -> DurationEvalReport:
    """Recoverability comparison of the three allocators on seeded data.

    A training pass estimates the per-phoneme mean table the mean-fit
    baseline is allowed to see; the test pass gives every allocator the true
    (stretched) distributions or that table, plus the exact note total.
    """
    config = config or BenchmarkConfig()
    rng = np.random.default_rng(seed)

    train: dict[str, list[float]] = {p: [] for p in config.phoneme_stats}
    for _ in range(config.n_train_notes):
        seq, _, truth_frames = _sample_note(rng, config)
        for p, d in zip(seq, truth_frames):
            train[p].append(float(d))
    table = DurationModelTable(k=1)
    for p in sorted(train):
        values = train[p]
        mean = float(np.mean(values)) if values else config.phoneme_stats[p][0]
        table.add(single_gaussian(p, mean, 0.0))

    errors: dict[str, list[float]] = {m: [] for m in METHODS}
    errors_short: dict[str, list[float]] = {m: [] for m in METHODS}
    per_note: list[NoteErrorRow] = []
    n_short = 0
    n_phonemes = 0
    for note_index in range(config.n_test_notes):
        seq, span, truth_frames = _sample_note(rng, config)
        n_phonemes += len(seq)
        primary = 1 if len(seq) >= 2 else 0
        outputs = {
            "lagrange": allocate_lagrange(span),
            "heuristic": allocate_fitting_heuristic(span, primary_index=primary),
            "meanfit": allocate_mean_fit(span, table, primary_index=primary),
        }
        short = None
        note_means: dict[str, float] = {}
        for name, result in outputs.items():
            assert sum(result.durations_frames) == span.total_frames
            errs, short = duration_error(
                result.durations_frames, truth_frames, span.total_frames
            )
            errors[name].extend(errs)
            note_means[name] = float(np.mean(errs))
            if short:
                errors_short[name].extend(errs)
        if short:
            n_short += 1
        per_note.append(
            NoteErrorRow(
                note_index=note_index,
                n_phonemes=len(seq),
                total_frames=span.total_frames,
                short=bool(short),
                mean_error_by_method=note_means,
            )
        )

    methods = {
        name: MethodErrors(
            mean_abs_error_frames_all=float(np.mean(errors[name])),
            mean_abs_error_frames_short=float(np.mean(errors_short[name]))
            if errors_short[name]
            else 0.0,
        )
        for name in METHODS
    }
    return DurationEvalReport(
        methods=methods,
        n_notes=config.n_test_notes,
        n_short_notes=n_short,
        n_phonemes=n_phonemes,
        seed=seed,
        per_note=tuple(per_note),
    )


# --------------------------------------------------------------------------
# Transcription benchmark
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhraseConfig:
    n_notes: int = 8
    midi_lo: int = 55
    midi_hi: int = 75
    min_note_frames: int = 35
    max_note_frames: int = 90
    min_gap_frames: int = 8
    max_gap_frames: int = 25
    glide_frames: int = 5  # 50 ms attack glide
    glide_spread_semitones: float = 2.0
    vibrato_depth_lo: float = 0.25
    vibrato_depth_hi: float = 0.5
    vibrato_rate_lo: float = 5.0
    vibrato_rate_hi: float = 7.0


def synth_phrase_track(
    seed: int, config: PhraseConfig | None = None
) -> tuple[PitchTrack, tuple[TranscribedNote, ...]]:
    """Seeded singing-like phrase: glided, vibrato-laden notes with gaps."""
    config = config or PhraseConfig()
    rng = np.random.default_rng(seed)
    midi: list[float] = []
    refs: list[TranscribedNote] = []
    for _ in range(config.n_notes):
        midi.extend([0.0] * int(rng.integers(config.min_gap_frames, config.max_gap_frames + 1)))
        pitch = int(rng.integers(config.midi_lo, config.midi_hi + 1))
        n_frames = int(rng.integers(config.min_note_frames, config.max_note_frames + 1))
        start = len(midi)
        glide_from = pitch + float(rng.uniform(-config.glide_spread_semitones, config.glide_spread_semitones))
        depth = float(rng.uniform(config.vibrato_depth_lo, config.vibrato_depth_hi))
        rate = float(rng.uniform(config.vibrato_rate_lo, config.vibrato_rate_hi))
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        for i in range(n_frames):
            if i < config.glide_frames:
                frac = (i + 1) / config.glide_frames
                value = glide_from + (pitch - glide_from) * frac
            else:
                value = pitch + depth * np.sin(2 * np.pi * rate * i * 0.010 + phase)
            midi.append(float(value))
        refs.append(TranscribedNote(pitch, start, start + n_frames))
    midi.extend([0.0] * int(rng.integers(config.min_gap_frames, config.max_gap_frames + 1)))
    f0 = np.array([midi_to_hz(m) if m > 0 else 0.0 for m in midi])
    return PitchTrack(f0, f0 > 0), tuple(refs)


def transcription_benchmark(
    seed: int,
    n_phrases: int = 5,
    phrase_config: PhraseConfig | None = None,
    hmm_config: NoteHmmConfig = DEFAULT_NOTE_CONFIG,
    onset_tol_frames: int = 5,
) -> dict:
    """Pooled note F-score of the transcriber over seeded phrases."""
    matches = n_pred = n_ref = 0
    per_phrase = []
    for k in range(n_phrases):
        track, refs = synth_phrase_track(seed + k, phrase_config)
        score = transcribe(track, hmm_config)
        p, r, f = score_note_f(score.notes, refs, onset_tol_frames=onset_tol_frames)
        per_phrase.append(f)
        matches += round(p * len(score.notes))
        n_pred += len(score.notes)
        n_ref += len(refs)
    precision = matches / n_pred if n_pred else 0.0
    recall = matches / n_ref if n_ref else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "precision": precision,
        "recall": recall,
        "f_score": f,
        "per_phrase_f": per_phrase,
        "n_phrases": n_phrases,
    }
