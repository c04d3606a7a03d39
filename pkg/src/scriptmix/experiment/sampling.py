"""Subset sampling and batch composition.

The K-subset depends only on (rows, k, seed material): the same subset is
reused across single- and multi-script runs at a fixed (K, seed), which is
what makes the paradigm comparison controlled.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from scriptmix.errors import DataError
from scriptmix.experiment.config import substream


def sample_k_subset(rows: Sequence, k: int | str, *seed_parts) -> list:
    """Uniform sample of k rows without replacement, in original order.

    ``k == "full"`` (or k == len(rows)) returns the rows unchanged.
    """
    if k == "full" or k == len(rows):
        return list(rows)
    if not isinstance(k, int) or k < 1:
        raise DataError(f"invalid subset size {k!r}")
    if k > len(rows):
        raise DataError(f"subset size {k} exceeds available rows {len(rows)}")
    rng = substream("k-subset", *seed_parts)
    idx = rng.choice(len(rows), size=k, replace=False)
    idx.sort()
    return [rows[i] for i in idx]


class ProportionalSampler:
    """Draw batches from the shuffled union of target and auxiliary samples."""

    def __init__(self, n_target: int, n_aux: int, batch_size: int, rng: np.random.Generator):
        self.pool = np.arange(n_target + n_aux)
        self.batch_size = batch_size
        self.rng = rng
        self._queue: list[int] = []

    def next_batch(self) -> list[int]:
        while len(self._queue) < self.batch_size:
            perm = self.rng.permutation(self.pool)
            self._queue.extend(perm.tolist())
        batch, self._queue = self._queue[: self.batch_size], self._queue[self.batch_size :]
        return batch


class BalancedSampler:
    """Alternate target and auxiliary samples within each batch."""

    def __init__(self, n_target: int, n_aux: int, batch_size: int, rng: np.random.Generator):
        if n_aux == 0:
            raise DataError("balanced sampling needs auxiliary data")
        self.n_target = n_target
        self.n_aux = n_aux
        self.batch_size = batch_size
        self.rng = rng
        self._tq: list[int] = []
        self._aq: list[int] = []

    def _next(self, queue: list[int], n: int, offset: int) -> int:
        if not queue:
            queue.extend((self.rng.permutation(n) + offset).tolist())
        return queue.pop(0)

    def next_batch(self) -> list[int]:
        batch = []
        for slot in range(self.batch_size):
            if slot % 2 == 0:
                batch.append(self._next(self._tq, self.n_target, 0))
            else:
                batch.append(self._next(self._aq, self.n_aux, self.n_target))
        return batch


def make_sampler(mode: str, n_target: int, n_aux: int, batch_size: int, rng: np.random.Generator):
    if mode == "balanced" and n_aux > 0:
        return BalancedSampler(n_target, n_aux, batch_size, rng)
    return ProportionalSampler(n_target, n_aux, batch_size, rng)
