"""Aggregation of finished runs into a mean-and-std results table."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from scriptmix.errors import ConfigError, DataError


@dataclass(frozen=True)
class RunRecord:
    run_dir: str
    target: str
    auxiliaries: tuple[str, ...]
    j: int
    k: int | str
    run_index: int
    iteration_budget: int
    best_val_cer: float
    test_cer: float | None


def read_run(run_dir: str, split: str = "test") -> RunRecord:
    metrics_path = os.path.join(run_dir, "metrics.json")
    if not os.path.exists(metrics_path):
        raise DataError(f"no metrics.json in {run_dir}")
    with open(metrics_path, encoding="utf-8") as fh:
        m = json.load(fh)
    if m.get("status") != "ok":
        raise DataError(f"{run_dir}: run status is {m.get('status')!r}")
    eval_path = os.path.join(run_dir, f"eval_{split}.json")
    test_cer = None
    if os.path.exists(eval_path):
        with open(eval_path, encoding="utf-8") as fh:
            test_cer = json.load(fh)["cer"]
    cfg = m["config"]
    return RunRecord(
        run_dir=run_dir,
        target=cfg["target"],
        auxiliaries=tuple(cfg["auxiliaries"]),
        j=len(cfg["auxiliaries"]),
        k=cfg["k"],
        run_index=m["run_index"],
        iteration_budget=cfg["iteration_budget"],
        best_val_cer=m["best_val_cer"],
        test_cer=test_cer,
    )


def mean_std(values: list[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (ddof=1; zero for a single run)."""
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate_runs(run_dirs: list[str], split: str = "test") -> list[dict]:
    """Group run records by (target, setting, K) and average over runs.

    Verifies that the iteration budget is identical across paradigms being
    compared at the same (target, K).
    """
    records = [read_run(d, split) for d in run_dirs]
    missing = [r.run_dir for r in records if r.test_cer is None]
    if missing:
        raise DataError(f"runs without eval_{split}.json: {missing}")

    budgets: dict[tuple[str, object], set[int]] = {}
    for r in records:
        budgets.setdefault((r.target, r.k), set()).add(r.iteration_budget)
    for (target, k), bset in budgets.items():
        if len(bset) > 1:
            raise ConfigError(
                f"iteration budgets differ across paradigms for target={target} k={k}: {sorted(bset)}"
            )

    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.target, r.j, r.auxiliaries, str(r.k)), []).append(r)
    rows = []
    for (target, j, auxiliaries, k), recs in sorted(groups.items()):
        mean, std = mean_std([r.test_cer for r in recs])
        rows.append(
            {
                "target": target,
                "setting": f"J={j}",
                "auxiliaries": "+".join(auxiliaries) if auxiliaries else "-",
                "k": k,
                "runs": len(recs),
                "mean_cer": mean,
                "std_cer": std,
            }
        )
    return rows


def results_csv(rows: list[dict]) -> str:
    lines = ["target,setting,auxiliaries,k,runs,mean_cer,std_cer"]
    for r in rows:
        lines.append(
            f"{r['target']},{r['setting']},{r['auxiliaries']},{r['k']},{r['runs']},"
            f"{r['mean_cer']:.6f},{r['std_cer']:.6f}"
        )
    return "\n".join(lines) + "\n"
