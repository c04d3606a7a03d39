"""Single optimization step for the CRNN: multi-task CTC loss plus AdamW."""

from __future__ import annotations

import numpy as np

from scriptmix.ctc import ctc_loss
from scriptmix.errors import DivergenceError
from scriptmix.nn.crnn import CrnnModel
from scriptmix.nn.optim import AdamW


def batch_ctc_loss(
    logits: np.ndarray, lengths: np.ndarray, targets: list[list[int]]
) -> tuple[float, np.ndarray]:
    """Mean CTC loss over a padded batch and the gradient of that mean.

    ``logits`` is (N, T, V+1); sample n is scored on its first ``lengths[n]``
    timesteps only.
    """
    n = logits.shape[0]
    grad = np.zeros_like(logits, dtype=np.float64)
    total = 0.0
    for b in range(n):
        t_n = int(lengths[b])
        loss, g = ctc_loss(logits[b, :t_n], targets[b])
        total += loss
        grad[b, :t_n] = g
    return total / n, grad / n


def train_step(
    model: CrnnModel,
    images: np.ndarray,
    widths: np.ndarray,
    targets: list[list[int]],
    optimizer: AdamW,
    lr: float,
) -> float:
    """Forward, multi-task loss, backward, AdamW update. Returns the loss.

    Loss per sample is ctc(main) + aux_weight * ctc(aux); the batch is
    reduced by mean. Raises DivergenceError on a non-finite loss.
    """
    lam = model.cfg.aux_loss_weight
    main, aux, lengths = model.forward(images, widths, train=True)
    loss_main, dmain = batch_ctc_loss(main, lengths, targets)
    loss = loss_main
    daux = None
    if aux is not None and lam > 0.0:
        loss_aux, daux = batch_ctc_loss(aux, lengths, targets)
        loss = loss_main + lam * loss_aux
        daux = (lam * daux).astype(model.dtype)
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite training loss: {loss}")
    optimizer.zero_grad()
    model.backward(dmain.astype(model.dtype), daux)
    optimizer.step(lr)
    return float(loss)
