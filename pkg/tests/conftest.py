"""Shared synthesis helpers and brute-force oracles."""

import numpy as np


def sine(freq_hz: float, duration_s: float, sr: int, amp: float = 0.5) -> np.ndarray:
    t = np.arange(int(duration_s * sr)) / sr
    return amp * np.sin(2 * np.pi * freq_hz * t)


def vibrato_tone(
    center_hz: float,
    duration_s: float,
    sr: int,
    depth_semitones: float,
    rate_hz: float,
    amp: float = 0.5,
):
    """Frequency-modulated tone; returns (samples, instantaneous f0)."""
    t = np.arange(int(duration_s * sr)) / sr
    f_inst = center_hz * 2.0 ** (depth_semitones * np.sin(2 * np.pi * rate_hz * t) / 12.0)
    phase = 2 * np.pi * np.cumsum(f_inst) / sr
    return amp * np.sin(phase), f_inst


def naive_cmndf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Direct-sum difference function; slow oracle for the FFT version."""
    x = np.asarray(x, dtype=np.float64)
    window = x.size - max_lag
    d = np.array([np.sum((x[:window] - x[tau : tau + window]) ** 2) for tau in range(max_lag)])
    out = np.ones(max_lag)
    cum = np.cumsum(d[1:])
    for tau in range(1, max_lag):
        out[tau] = d[tau] * tau / cum[tau - 1] if cum[tau - 1] > 0 else 1.0
    return out


def enumerate_best_path(log_init, log_trans, log_emit, max_paths: int = 3_000_000):
    """Exhaustive search over every state path (test oracle for Viterbi)."""
    n_frames, n_states = log_emit.shape
    total = n_states**n_frames
    if total > max_paths:
        raise ValueError(f"{total} paths is too many to enumerate")
    paths = np.array(np.unravel_index(np.arange(total), (n_states,) * n_frames)).T
    score = log_init[paths[:, 0]] + log_emit[0, paths[:, 0]]
    for t in range(1, n_frames):
        score = score + log_trans[paths[:, t - 1], paths[:, t]] + log_emit[t, paths[:, t]]
    best = int(np.argmax(score))
    return paths[best], float(score[best])
