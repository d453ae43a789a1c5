"""Log-space Viterbi decoding shared by the pitch and note decoders."""

from __future__ import annotations

import numpy as np


def viterbi_decode(
    log_init: np.ndarray, log_trans: np.ndarray, log_emit: np.ndarray
) -> tuple[np.ndarray, float]:
    """Most probable state path through a dense lattice.

    log_emit has shape (n_frames, n_states); log_trans[i, j] is the log
    probability of moving from state i to state j.  Returns the path and its
    joint log probability.  Ties resolve to the lowest state index.
    """
    n_frames, n_states = log_emit.shape
    if log_init.shape != (n_states,) or log_trans.shape != (n_states, n_states):
        raise ValueError("inconsistent lattice shapes")
    if n_frames == 0:
        return np.empty(0, dtype=int), 0.0

    delta = log_init + log_emit[0]
    back = np.empty((n_frames, n_states), dtype=np.int32)
    for t in range(1, n_frames):
        scores = delta[:, None] + log_trans
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(n_states)] + log_emit[t]

    path = np.empty(n_frames, dtype=int)
    path[-1] = int(np.argmax(delta))
    best = float(delta[path[-1]])
    for t in range(n_frames - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best


def path_log_prob(
    log_init: np.ndarray,
    log_trans: np.ndarray,
    log_emit: np.ndarray,
    path: np.ndarray,
) -> float:
    """Joint log probability of a given state path on the same lattice."""
    total = float(log_init[path[0]] + log_emit[0, path[0]])
    for t in range(1, len(path)):
        total += float(log_trans[path[t - 1], path[t]] + log_emit[t, path[t]])
    return total
