"""Training runs and evaluation.

A run trains one model on the union of the (K-capped) target subset and
the full auxiliary training splits, tracks target validation CER, and
keeps the checkpoint with the lowest validation CER. Evaluation loads a
checkpoint, decodes greedily, and reports corpus CER plus per-sample
predictions.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from scriptmix.ctc import greedy_decode
from scriptmix.errors import DataError, DivergenceError
from scriptmix.experiment.config import ExperimentConfig, stable_int, substream
from scriptmix.experiment.data import CorpusData, LineDataset, build_union_vocab
from scriptmix.experiment.sampling import make_sampler, sample_k_subset
from scriptmix.metrics import corpus_cer, write_pairs_tsv
from scriptmix.nn.checkpoint import load_checkpoint, save_checkpoint
from scriptmix.nn.crnn import CrnnModel
from scriptmix.nn.optim import AdamW, MultiStepLr
from scriptmix.nn.train import train_step
from scriptmix.synthdata.pipeline import augment
from scriptmix.vocab import Vocabulary


@dataclass
class RunResult:
    out_dir: str
    checkpoint_path: str
    best_val_cer: float
    best_step: int
    final_loss: float
    metrics: dict


def _pad_batch(images: list[np.ndarray], dtype=np.float32) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad variable-width images with the background value (zero)."""
    heights = {img.shape[0] for img in images}
    if len(heights) != 1:
        raise DataError(f"mixed image heights in batch: {sorted(heights)}")
    h = heights.pop()
    widths = np.array([img.shape[1] for img in images], dtype=np.int64)
    w_max = int(widths.max())
    batch = np.zeros((len(images), 1, h, w_max), dtype=dtype)
    for i, img in enumerate(images):
        batch[i, 0, :, : img.shape[1]] = img
    return batch, widths


def evaluate_model(
    model: CrnnModel,
    dataset: LineDataset,
    vocab: Vocabulary,
    batch_size: int = 16,
) -> tuple[float, list[tuple[str, str, str]]]:
    """Eval-mode forward + greedy decode over a split, in manifest order."""
    if len(dataset) == 0:
        raise DataError("cannot evaluate an empty split")
    predictions: list[tuple[str, str, str]] = []
    for start in range(0, len(dataset), batch_size):
        idx = range(start, min(start + batch_size, len(dataset)))
        images = [dataset.image(i) for i in idx]
        batch, widths = _pad_batch(images, dtype=model.dtype)
        logits, _, lengths = model.forward(batch, widths, train=False)
        for row_pos, i in enumerate(idx):
            t_n = int(lengths[row_pos])
            decoded = greedy_decode(logits[row_pos, :t_n], vocab)
            predictions.append(
                (dataset.rows[i].sample_id, dataset.transcript(i), dataset.to_display(decoded))
            )
    cer = corpus_cer([(ref, hyp) for _, ref, hyp in predictions])
    return cer, predictions


def _write_subset_manifest(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(f"{r.path}\t{r.transcript}\t{r.script_id}\t{r.split}\n")


def run_training(
    cfg: ExperimentConfig,
    run_index: int,
    out_dir: str,
    deterministic: bool = False,
    log_every: int = 50,
) -> RunResult:
    """Execute one training run and write its artifacts into ``out_dir``.

    Artifacts: checkpoint.bin (lowest-validation-CER model), train_log.csv,
    train_subset.tsv, metrics.json.
    """
    os.makedirs(out_dir, exist_ok=True)
    run_seed = cfg.seed + run_index

    target = CorpusData(cfg.datasets[cfg.target], cfg.input_height, cfg.max_width)
    aux = [CorpusData(cfg.datasets[a], cfg.input_height, cfg.max_width) for a in cfg.auxiliaries]

    # the subset depends on (target, K, seed) only, never on J
    subset_rows = sample_k_subset(target.rows("train"), cfg.k, cfg.target, cfg.k, run_seed)
    _write_subset_manifest(os.path.join(out_dir, "train_subset.tsv"), subset_rows)

    vocab = build_union_vocab([target] + aux)
    crnn_cfg = cfg.crnn_config(vocab.size)
    model = CrnnModel(crnn_cfg, rng=substream("init", run_seed), dtype=np.float32)
    optimizer = AdamW(
        model.parameters(), lr=cfg.base_lr, weight_decay=cfg.weight_decay
    )
    schedule = MultiStepLr(cfg.base_lr, cfg.iteration_budget, cfg.lr_milestones, cfg.lr_gamma)

    train_target = target.view("train", subset_rows)
    train_aux = [a.view("train") for a in aux if len(a.rows("train"))]
    val_ds = target.view("val")

    pools: list[tuple[LineDataset, int]] = [(train_target, i) for i in range(len(train_target))]
    n_target = len(pools)
    for ds in train_aux:
        pools.extend((ds, i) for i in range(len(ds)))
    sampler = make_sampler(
        cfg.sampling_mode, n_target, len(pools) - n_target, cfg.batch_size, substream("batch", run_seed)
    )

    # pre-encode labels and validate the extended-label fit per sample
    encoded: list[list[int]] = []
    min_tn: list[int] = []
    for ds, i in pools:
        label = ds.label(i)
        ids = vocab.encode(label)
        encoded.append(ids)
        repeats = sum(1 for a, b in zip(ids, ids[1:]) if a == b)
        min_tn.append(len(ids) + repeats)
    for p, (ds, i) in enumerate(pools):
        width = ds.image(i).shape[1]
        t_n = int(model.width_after_trunk(width))
        if t_n < min_tn[p]:
            raise DataError(
                f"sample {ds.rows[i].sample_id}: transcript needs {min_tn[p]} frames "
                f"but the image yields only {t_n}"
            )

    log_path = os.path.join(out_dir, "train_log.csv")
    ckpt_path = os.path.join(out_dir, "checkpoint.bin")
    best_val = float("inf")
    best_step = 0
    best_state: dict[str, np.ndarray] | None = None
    loss = float("nan")
    t_start = time.time()
    aug_root = stable_int(run_seed) ^ stable_int("augment")

    with open(log_path, "w", encoding="utf-8") as log:
        log.write("step,lr,loss,val_cer\n")
        for step in range(1, cfg.iteration_budget + 1):
            batch_idx = sampler.next_batch()
            images = []
            targets = []
            for slot, p in enumerate(batch_idx):
                ds, i = pools[p]
                img = ds.image(i)
                if cfg.augment:
                    img = augment(img, seed=(aug_root + step * 1024 + slot) & ((1 << 63) - 1))
                images.append(img)
                targets.append(encoded[p])
            batch, widths = _pad_batch(images, dtype=model.dtype)
            lr = schedule.lr_at(step)
            try:
                loss = train_step(model, batch, widths, targets, optimizer, lr)
            except DivergenceError:
                _write_metrics(out_dir, cfg, run_index, run_seed, vocab, status="divergent",
                               best_val_cer=best_val, best_step=best_step, final_loss=float("nan"),
                               wall_s=time.time() - t_start)
                raise
            val_txt = ""
            if step % cfg.eval_every == 0 or step == cfg.iteration_budget:
                val_cer, _ = evaluate_model(model, val_ds, vocab, cfg.batch_size)
                val_txt = f"{val_cer:.6f}"
                if val_cer < best_val:
                    best_val = val_cer
                    best_step = step
                    best_state = {k: v.copy() for k, v in model.state_arrays().items()}
                    best_state.update({k: v.copy() for k, v in optimizer.state_arrays().items()})
            if val_txt or step % log_every == 0 or step == 1:
                log.write(f"{step},{lr:.8g},{loss:.6f},{val_txt}\n")

    assert best_state is not None  # eval always fires at the final step
    save_checkpoint(
        ckpt_path,
        crnn_cfg,
        vocab.chars,
        best_step,
        best_state,
        extra={
            "best_val_cer": best_val,
            "run_index": run_index,
            "run_seed": run_seed,
            "target": cfg.target,
            "auxiliaries": list(cfg.auxiliaries),
            "k": cfg.k,
            "iteration_budget": cfg.iteration_budget,
        },
    )
    metrics = _write_metrics(
        out_dir, cfg, run_index, run_seed, vocab, status="ok",
        best_val_cer=best_val, best_step=best_step, final_loss=loss,
        wall_s=time.time() - t_start,
    )
    return RunResult(
        out_dir=out_dir,
        checkpoint_path=ckpt_path,
        best_val_cer=best_val,
        best_step=best_step,
        final_loss=loss,
        metrics=metrics,
    )


def _write_metrics(out_dir, cfg, run_index, run_seed, vocab, status, best_val_cer, best_step,
                   final_loss, wall_s) -> dict:
    metrics = {
        "status": status,
        "config": cfg.to_dict(),
        "run_index": run_index,
        "run_seed": run_seed,
        "j": cfg.j,
        "k": cfg.k,
        "vocab_size": vocab.size,
        "best_val_cer": best_val_cer,
        "best_step": best_step,
        "final_loss": final_loss,
        "wall_seconds": round(wall_s, 3),
    }
    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return metrics


def load_model(checkpoint_path: str) -> tuple[CrnnModel, Vocabulary, dict]:
    ckpt = load_checkpoint(checkpoint_path)
    vocab = Vocabulary(ckpt.vocab_chars)
    model = CrnnModel(ckpt.config, rng=substream("load", 0), dtype=np.float32)
    model.load_state_arrays(ckpt.arrays)
    return model, vocab, ckpt.extra


def evaluate_checkpoint(
    checkpoint_path: str,
    manifest_path: str,
    split: str,
    batch_size: int = 16,
    out_dir: str | None = None,
    max_width: int = 1450,
) -> tuple[float, list[tuple[str, str, str]]]:
    """Evaluate a saved checkpoint on one split of a manifest.

    Writes predictions_{split}.tsv and eval_{split}.json when ``out_dir``
    is given. Fails with the missing characters named if the checkpoint
    vocabulary does not cover the split.
    """
    model, vocab, _ = load_model(checkpoint_path)
    corpus = CorpusData(manifest_path, model.cfg.input_height, max_width)
    dataset = corpus.view(split)
    missing = vocab.missing_chars(r.transcript for r in dataset.rows)
    if missing:
        raise DataError(f"checkpoint vocabulary is missing characters: {missing}")
    cer, predictions = evaluate_model(model, dataset, vocab, batch_size)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_pairs_tsv(os.path.join(out_dir, f"predictions_{split}.tsv"), predictions)
        with open(os.path.join(out_dir, f"eval_{split}.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {"cer": cer, "split": split, "manifest": manifest_path, "n_samples": len(predictions)},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
    return cer, predictions
