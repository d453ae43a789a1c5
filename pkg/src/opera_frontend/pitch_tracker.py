"""Frame-wise f0 estimation for monophonic singing.

Per 10 ms frame, the normalized lag-difference function (YIN) yields pitch
candidates: for every threshold of a weighted prior, the first local minimum
below it becomes a candidate whose salience accumulates the prior mass that
selected it.  A two-layer HMM (pitch bins x voicing) then decodes a smooth
track, and decoded bins are rendered back to the precise candidate
frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
from scipy.io import wavfile
from scipy.stats import beta as beta_dist

from .errors import (
    AudioFormatError,
    NonPositiveFrequency,
    WindowTooShort,
)
from .hmm import viterbi_decode

HOP_SECONDS = 0.010
SUPPORTED_RATES = (16000, 22050, 44100)
REFERENCE_FRAME_LENGTH = 2048  # at 44.1 kHz; scaled for other rates


# --------------------------------------------------------------------------
# Pitch arithmetic
# --------------------------------------------------------------------------

def hz_to_midi(f: float) -> float:
    if f <= 0:
        raise NonPositiveFrequency(f"frequency must be > 0 Hz, got {f}")
    return 69.0 + 12.0 * math.log2(f / 440.0)


def midi_to_hz(m: float) -> float:
    return 440.0 * 2.0 ** ((m - 69.0) / 12.0)


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise AudioFormatError(
                f"sample rate {self.sample_rate_hz} not in {SUPPORTED_RATES}"
            )
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise AudioFormatError("mono audio required")
        if samples.size and float(np.abs(samples).max()) > 1.0001:
            raise AudioFormatError("samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class PitchCandidateFrame:
    """Weighted f0 candidates of one frame plus its voicing probability."""

    candidates: tuple[tuple[float, float], ...]  # (f0_hz, salience)
    voiced_prob: float

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        total = sum(s for _, s in self.candidates)
        if total > 1.0 + 1e-6:
            raise ValueError(f"candidate saliences sum to {total} > 1")
        if not 0.0 <= self.voiced_prob <= 1.0 + 1e-9:
            raise ValueError(f"voiced_prob out of [0,1]: {self.voiced_prob}")


@dataclass(frozen=True)
class PitchTrack:
    f0_hz: np.ndarray
    voiced: np.ndarray
    hop_s: float = HOP_SECONDS

    def __post_init__(self):
        f0 = np.asarray(self.f0_hz, dtype=np.float64)
        vc = np.asarray(self.voiced, dtype=bool)
        if f0.shape != vc.shape:
            raise ValueError("f0 and voicing lengths differ")
        if np.any((f0 > 0) != vc):
            raise ValueError("voiced flags must match f0 > 0")
        object.__setattr__(self, "f0_hz", f0)
        object.__setattr__(self, "voiced", vc)

    def __len__(self) -> int:
        return int(self.f0_hz.size)


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdPrior:
    thresholds: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.thresholds) != len(self.weights):
            raise ValueError("thresholds and weights differ in length")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("prior weights must sum to 1")


def build_threshold_prior(
    n: int = 20,
    lo: float = 0.025,
    hi: float = 0.5,
    beta_a: float = 2.0,
    beta_mean: float = 0.15,
) -> ThresholdPrior:
    """Thresholds uniform over (lo, hi] weighted by a beta density."""
    ts = lo + (hi - lo) * (np.arange(1, n + 1) / n)
    beta_b = beta_a * (1.0 - beta_mean) / beta_mean
    w = beta_dist.pdf(ts, beta_a, beta_b)
    w = w / w.sum()
    return ThresholdPrior(tuple(float(t) for t in ts), tuple(float(x) for x in w))


@dataclass(frozen=True)
class PitchTrackerConfig:
    midi_min: int = 35
    midi_max: int = 85
    steps_per_semitone: int = 3
    prior: ThresholdPrior = field(default_factory=build_threshold_prior)
    switch_prob: float = 0.01
    transition_sigma_semitones: float = 0.8  # per 10 ms hop
    # floor keeps bins without candidate mass reachable, so a held pitch can
    # survive frames whose candidates are octave errors
    emission_floor: float = 1e-6

    @property
    def n_bins(self) -> int:
        return (self.midi_max - self.midi_min) * self.steps_per_semitone + 1

    @property
    def fmin_hz(self) -> float:
        return midi_to_hz(self.midi_min - 0.5)

    @property
    def fmax_hz(self) -> float:
        return midi_to_hz(self.midi_max + 0.5)

    def bin_to_midi(self, b: int) -> float:
        return self.midi_min + b / self.steps_per_semitone

    def midi_to_bin(self, m: float) -> int:
        return int(np.clip(round((m - self.midi_min) * self.steps_per_semitone), 0, self.n_bins - 1))


DEFAULT_CONFIG = PitchTrackerConfig()


# --------------------------------------------------------------------------
# YIN lag-difference analysis
# --------------------------------------------------------------------------

def _cmndf_batch(frames: np.ndarray, max_lag: int) -> np.ndarray:
    """Cumulative-mean-normalized difference for every row of `frames`."""
    n_frames, frame_len = frames.shape
    if frame_len < 2 * max_lag:
        raise WindowTooShort(
            f"frame of {frame_len} samples cannot host a {max_lag}-sample lag range"
        )
    window = frame_len - max_lag

    pad = 1 << int(frame_len + window - 1).bit_length()
    spec_all = np.fft.rfft(frames, pad, axis=1)
    spec_win = np.fft.rfft(frames[:, :window], pad, axis=1)
    corr = np.fft.irfft(spec_all * spec_win.conj(), pad, axis=1)[:, :max_lag]

    sq = np.concatenate(
        [np.zeros((n_frames, 1)), np.cumsum(frames**2, axis=1)], axis=1
    )
    energy_head = sq[:, window] - sq[:, 0]
    lags = np.arange(max_lag)
    energy_shift = sq[:, lags + window] - sq[:, lags]

    diff = energy_head[:, None] + energy_shift - 2.0 * corr
    diff = np.maximum(diff, 0.0)  # rounding can leave tiny negatives

    cum = np.cumsum(diff[:, 1:], axis=1)
    tau = np.arange(1, max_lag)
    out = np.ones_like(diff)
    np.divide(diff[:, 1:] * tau, cum, out=out[:, 1:], where=cum > 1e-300)
    return out


def yin_cmndf(frame: Sequence[float], max_lag: int | None = None) -> np.ndarray:
    """d'(tau) over lags [0, max_lag); d'(0) = 1 by definition."""
    x = np.asarray(frame, dtype=np.float64)
    if max_lag is None:
        max_lag = x.size // 2
    return _cmndf_batch(x[None, :], max_lag)[0]


def _parabolic_shift(values: np.ndarray, idx: int) -> float:
    """Sub-sample offset of the minimum around index idx (clamped to +-0.5)."""
    if idx <= 0 or idx >= values.size - 1:
        return 0.0
    a = values[idx - 1] + values[idx + 1] - 2.0 * values[idx]
    if a <= 0:
        return 0.0
    shift = 0.5 * (values[idx - 1] - values[idx + 1]) / a
    return float(np.clip(shift, -0.5, 0.5))


def extract_candidates(
    cmndf: np.ndarray,
    prior: ThresholdPrior,
    sample_rate_hz: int,
    min_lag: int,
    config: PitchTrackerConfig = DEFAULT_CONFIG,
) -> PitchCandidateFrame:
    """Threshold walk over the difference function.

    Each prior threshold selects the first local minimum below it; the
    candidate at that lag accumulates the threshold's weight.  Frames whose
    minima all sit above every threshold come out with voiced_prob 0.
    """
    d = np.asarray(cmndf, dtype=np.float64)
    interior = np.arange(max(min_lag, 1), d.size - 1)
    if interior.size == 0:
        return PitchCandidateFrame((), 0.0)
    is_min = (d[interior] < d[interior - 1]) & (d[interior] <= d[interior + 1])
    min_lags = interior[is_min]
    if min_lags.size == 0:
        return PitchCandidateFrame((), 0.0)

    heights = d[min_lags]
    thresholds = np.asarray(prior.thresholds)
    weights = np.asarray(prior.weights)
    below = heights[:, None] < thresholds[None, :]
    has_hit = below.any(axis=0)
    first_idx = np.argmax(below, axis=0)

    salience: dict[int, float] = {}
    for t in range(thresholds.size):
        if has_hit[t]:
            lag = int(min_lags[first_idx[t]])
            salience[lag] = salience.get(lag, 0.0) + float(weights[t])
    voiced_prob = float(weights[has_hit].sum())

    candidates = []
    for lag in sorted(salience):
        refined = lag + _parabolic_shift(d, lag)
        f0 = sample_rate_hz / refined
        if config.fmin_hz <= f0 <= config.fmax_hz:
            candidates.append((float(f0), salience[lag]))
    return PitchCandidateFrame(tuple(candidates), voiced_prob)


# --------------------------------------------------------------------------
# HMM smoothing
# --------------------------------------------------------------------------

def _pitch_lattice(
    frames: Sequence[PitchCandidateFrame], config: PitchTrackerConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(log_init, log_trans, log_emit) over pitch-bin x voicing states.

    States [0, n) are voiced bins, [n, 2n) their unvoiced mirrors (pitch
    memory persists through unvoiced stretches).
    """
    n = config.n_bins
    sigma_bins = config.transition_sigma_semitones * config.steps_per_semitone
    offsets = np.arange(n)
    local = np.exp(-0.5 * ((offsets[:, None] - offsets[None, :]) / sigma_bins) ** 2)
    # normalize by the untruncated mass and spread the edge deficit uniformly:
    # per-row renormalization would make edge bins cheap parking spots
    full_mass = np.exp(-0.5 * (np.arange(1 - n, n) / sigma_bins) ** 2).sum()
    local /= full_mass
    local += (1.0 - local.sum(axis=1, keepdims=True)) / n
    s = config.switch_prob
    trans = np.block([[(1 - s) * local, s * local], [s * local, (1 - s) * local]])

    emit = np.full((len(frames), 2 * n), config.emission_floor)
    for t, frame in enumerate(frames):
        for f0, sal in frame.candidates:
            b = config.midi_to_bin(hz_to_midi(f0))
            emit[t, b] += sal
        emit[t, n:] += (1.0 - frame.voiced_prob) / n

    init = np.full(2 * n, 1.0 / (2 * n))
    with np.errstate(divide="ignore"):
        return np.log(init), np.log(trans), np.log(emit)


def viterbi_pitch(
    frames: Sequence[PitchCandidateFrame], config: PitchTrackerConfig = DEFAULT_CONFIG
) -> PitchTrack:
    """Decode candidate frames into a voiced/unvoiced pitch track.

    Decoded voiced bins are rendered at the nearest candidate frequency of
    that frame (bin centers are only a fallback), keeping cent-level detail.
    """
    if len(frames) == 0:
        return PitchTrack(np.empty(0), np.empty(0, dtype=bool))
    log_init, log_trans, log_emit = _pitch_lattice(frames, config)
    path, _ = viterbi_decode(log_init, log_trans, log_emit)

    n = config.n_bins
    f0 = np.zeros(len(frames))
    voiced = path < n
    for t, state in enumerate(path):
        if not voiced[t]:
            continue
        bin_midi = config.bin_to_midi(int(state))
        best_f0, best_dist = 0.0, math.inf
        for cand_f0, _ in frames[t].candidates:
            dist = abs(hz_to_midi(cand_f0) - bin_midi)
            if dist < best_dist:
                best_f0, best_dist = cand_f0, dist
        if best_dist <= 1.0 / config.steps_per_semitone:
            f0[t] = best_f0
        else:
            f0[t] = midi_to_hz(bin_midi)
    return PitchTrack(f0, voiced)


# --------------------------------------------------------------------------
# End-to-end tracking
# --------------------------------------------------------------------------

def _frame_signal(audio: AudioBuffer, frame_len: int) -> np.ndarray:
    sr = audio.sample_rate_hz
    n_frames = (audio.samples.size * 100) // sr  # floor(duration / 10 ms)
    starts = np.round(np.arange(n_frames) * sr / 100.0).astype(int)
    needed = (int(starts[-1]) if n_frames else 0) + frame_len
    padded = np.pad(audio.samples, (0, max(0, needed - audio.samples.size)))
    return padded[starts[:, None] + np.arange(frame_len)[None, :]]


def track_pitch(
    audio: AudioBuffer, config: PitchTrackerConfig = DEFAULT_CONFIG
) -> PitchTrack:
    """10 ms-hop pitch track: difference function, thresholds, HMM decode."""
    sr = audio.sample_rate_hz
    frame_len = int(round(REFERENCE_FRAME_LENGTH * sr / 44100))
    max_lag = int(math.ceil(sr / config.fmin_hz))
    min_lag = max(1, int(sr / config.fmax_hz))
    if audio.samples.size * 100 < sr:  # shorter than one hop
        return PitchTrack(np.empty(0), np.empty(0, dtype=bool))

    frames = _frame_signal(audio, frame_len)
    cmndf = _cmndf_batch(frames, max_lag)
    candidate_frames = [
        extract_candidates(cmndf[i], config.prior, sr, min_lag, config)
        for i in range(cmndf.shape[0])
    ]
    return viterbi_pitch(candidate_frames, config)


# --------------------------------------------------------------------------
# I/O
# --------------------------------------------------------------------------

def load_wav(source: str | IO[bytes]) -> AudioBuffer:
    """Read a mono PCM-16 or float-32 WAV file (path or binary stream)."""
    try:
        rate, data = wavfile.read(source)
    except (ValueError, OSError) as exc:
        raise AudioFormatError(f"cannot read WAV input: {exc}") from exc
    if data.ndim != 1:
        raise AudioFormatError("stereo WAV not supported; supply mono audio")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = data.astype(np.float64)
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        raise AudioFormatError(f"unsupported WAV sample format: {data.dtype}")
    return AudioBuffer(samples=samples, sample_rate_hz=int(rate))


def write_pitch_csv(track: PitchTrack, file: IO[str]) -> None:
    file.write("frame,time_s,f0_hz,voiced\n")
    for i in range(len(track)):
        t = i * track.hop_s
        file.write(f"{i},{t:.3f},{track.f0_hz[i]:.4f},{int(track.voiced[i])}\n")
