"""CTC objective and greedy decoding.

Log-space forward-backward over the blank-interleaved extended label
sequence, with the analytic gradient with respect to the unnormalized
logits. Blank is class 0 everywhere.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from scriptmix.vocab import BLANK_ID, Vocabulary

NEG_INF = -np.inf


def collapse(path: Sequence[int], blank: int = BLANK_ID) -> list[int]:
    """Collapse a frame-level path: drop repeats, then drop blanks."""
    out: list[int] = []
    prev: int | None = None
    for p in path:
        if p != prev:
            out.append(p)
        prev = p
    return [p for p in out if p != blank]


def greedy_decode(logits: np.ndarray, vocab: Vocabulary) -> str:
    """Best-path decoding: per-timestep argmax, collapse, decode.

    Argmax ties resolve to the lowest class ID.
    """
    logits = np.asarray(logits)
    if logits.ndim != 2:
        raise ValueError("logits must be a T x (V+1) matrix")
    ids = np.argmax(logits, axis=1)
    return vocab.decode(collapse(ids.tolist()))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def ctc_loss(
    logits: np.ndarray, target: Sequence[int], blank: int = BLANK_ID
) -> tuple[float, np.ndarray]:
    """Negative log-probability of ``target`` and its gradient w.r.t. logits.

    ``logits`` is T x (V+1) with blank at index 0; ``target`` contains class
    IDs in [1, V].  Requires the extended-label fit 2*len(target)+1 <= T.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[0] < 1 or logits.shape[1] < 2:
        raise ValueError("logits must be T x (V+1) with T >= 1 and V >= 1")
    if not np.isfinite(logits).all():
        raise ValueError("logits contain non-finite values")
    T, num_classes = logits.shape
    labels = list(target)
    for l in labels:
        if not 1 <= l < num_classes:
            raise ValueError(f"target id {l} outside [1, {num_classes - 1}]")
    S = 2 * len(labels) + 1
    if _min_frames(labels) > T:
        raise ValueError(
            f"target of length {len(labels)} needs at least {_min_frames(labels)} frames, got {T}"
        )

    log_y = _log_softmax(logits)
    ext = np.zeros(S, dtype=np.int64)
    ext[1::2] = labels
    # positions where a skip transition (s-2 -> s) is legal
    skip_ok = np.zeros(S, dtype=bool)
    if S > 2:
        skip_ok[2::2] = False  # blanks never receive skips
        for s in range(3, S, 2):
            skip_ok[s] = ext[s] != ext[s - 2]

    emit = log_y[:, ext]  # T x S

    alpha = np.full((T, S), NEG_INF)
    alpha[0, 0] = emit[0, 0]
    if S > 1:
        alpha[0, 1] = emit[0, 1]
    for t in range(1, T):
        prev = alpha[t - 1]
        acc = prev.copy()
        acc[1:] = np.logaddexp(acc[1:], prev[:-1])
        if S > 2:
            skipped = np.where(skip_ok[2:], prev[:-2], NEG_INF)
            acc[2:] = np.logaddexp(acc[2:], skipped)
        alpha[t] = acc + emit[t]

    if S > 1:
        log_z = np.logaddexp(alpha[T - 1, S - 1], alpha[T - 1, S - 2])
    else:
        log_z = alpha[T - 1, S - 1]

    beta = np.full((T, S), NEG_INF)
    beta[T - 1, S - 1] = 0.0
    if S > 1:
        beta[T - 1, S - 2] = 0.0
    for t in range(T - 2, -1, -1):
        nxt = beta[t + 1] + emit[t + 1]
        acc = nxt.copy()
        acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
        if S > 2:
            skipped = np.where(skip_ok[2:], nxt[2:], NEG_INF)
            acc[:-2] = np.logaddexp(acc[:-2], skipped)
        beta[t] = acc

    # state posteriors summed per class give the occupancy gamma
    with np.errstate(invalid="ignore"):
        post = np.exp(alpha + beta - log_z)  # T x S
    gamma = np.zeros((T, num_classes))
    for s in range(S):
        gamma[:, ext[s]] += post[:, s]

    grad = np.exp(log_y) - gamma
    return float(-log_z), grad


def _min_frames(labels: Sequence[int]) -> int:
    """Minimum number of frames able to emit ``labels``: repeats force a blank."""
    if not labels:
        return 1
    n = len(labels)
    repeats = sum(1 for a, b in zip(labels, labels[1:]) if a == b)
    return n + repeats
