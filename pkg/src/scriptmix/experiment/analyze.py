"""Character-level transfer analysis between two prediction sets.

Compares single- and multi-script predictions over the same test split:
per-character CER tables, the CER change per character, shared/unique
group means with Welch's t-test, and the frequency-binned transfer curve
(characters bucketed by their frequency in single-script training).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from scriptmix.corpus_stats import (
    OverlapPartition,
    WelchResult,
    binned_transfer_curve,
    overlap_partition,
    welch_t_test,
)
from scriptmix.errors import DataError
from scriptmix.experiment.svg import scatter_svg
from scriptmix.metrics import CharErrorTable, char_error_table, corpus_cer, delta_cer

ATTRIBUTION_NOTE = (
    "per-character errors: substitutions+deletions attributed to the reference "
    "character, insertions tallied globally; alignment ties broken "
    "match>substitute>delete>insert"
)


@dataclass
class CharRow:
    char: str
    group: str  # shared | unique | other
    test_count: int
    train_single: int
    train_multi: int
    cer_single: float
    cer_multi: float
    delta_pp: float


@dataclass
class TransferReport:
    target: str
    cer_single: float
    cer_multi: float
    rows: list[CharRow]
    shared_mean: float | None
    unique_mean: float | None
    welch: WelchResult | None
    curve: list[tuple[float, float]]
    partition: OverlapPartition
    single_table: CharErrorTable
    multi_table: CharErrorTable
    notes: list[str] = field(default_factory=list)

    @property
    def n_shared(self) -> int:
        return sum(1 for r in self.rows if r.group == "shared")

    @property
    def n_unique(self) -> int:
        return sum(1 for r in self.rows if r.group == "unique")

    def group_summary_csv(self) -> str:
        t = f"{self.welch.t:.6f}" if self.welch else ""
        p = f"{self.welch.p:.6g}" if self.welch else ""
        sm = f"{self.shared_mean:.6f}" if self.shared_mean is not None else ""
        um = f"{self.unique_mean:.6f}" if self.unique_mean is not None else ""
        return (
            "target,n_shared,n_unique,mean_delta_shared_pp,mean_delta_unique_pp,welch_t,welch_p,"
            "cer_single,cer_multi\n"
            f"{self.target},{self.n_shared},{self.n_unique},{sm},{um},{t},{p},"
            f"{self.cer_single:.6f},{self.cer_multi:.6f}\n"
        )

    def per_char_csv(self) -> str:
        lines = ["char,group,train_single,train_multi,test_count,cer_single,cer_multi,delta_pp"]
        for r in sorted(self.rows, key=lambda r: (r.delta_pp, r.char)):
            lines.append(
                f"{r.char},{r.group},{r.train_single},{r.train_multi},{r.test_count},"
                f"{r.cer_single:.6f},{r.cer_multi:.6f},{r.delta_pp:.4f}"
            )
        return "\n".join(lines) + "\n"

    def curve_csv(self) -> str:
        lines = ["log10_frequency_bin_center,mean_delta_pp"]
        for x, y in self.curve:
            lines.append(f"{x:.6f},{y:.6f}")
        return "\n".join(lines) + "\n"

    def scatter_svg(self) -> str:
        import math

        points = [
            (math.log10(r.train_single), r.delta_pp)
            for r in self.rows
            if r.group == "shared" and r.train_single >= 1
        ]
        return scatter_svg(
            points,
            self.curve,
            xlabel="log10 character frequency in single-script training",
            ylabel="CER change (pp), negative = improvement",
            title=f"Shared-character transfer on {self.target}",
        )

    def write(self, out_dir: str) -> None:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in (
            ("group_summary.csv", self.group_summary_csv()),
            ("per_char.csv", self.per_char_csv()),
            ("curve.csv", self.curve_csv()),
            ("transfer_scatter.svg", self.scatter_svg()),
        ):
            with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
                fh.write(text)
        if self.notes:
            with open(os.path.join(out_dir, "notes.txt"), "w", encoding="utf-8") as fh:
                fh.write("\n".join(self.notes) + "\n")


def analyze_transfer(
    single_preds: Sequence[tuple[str, str, str]],
    multi_preds: Sequence[tuple[str, str, str]],
    inventories: Mapping[str, set],
    target: str,
    train_counts_single: Mapping[str, int],
    train_counts_multi: Mapping[str, int] | None = None,
    bins: int = 4,
) -> TransferReport:
    """Build the transfer report from two (id, reference, hypothesis) sets.

    Both prediction sets must cover the identical test split; the grouping
    uses characters shared across all scripts vs. exclusive to the target.
    """
    if target not in inventories:
        raise DataError(f"target {target!r} not among inventories {sorted(inventories)}")
    if len(single_preds) != len(multi_preds):
        raise DataError("prediction sets have different sizes")
    for (ida, refa, _), (idb, refb, _) in zip(single_preds, multi_preds):
        if ida != idb or refa != refb:
            raise DataError(f"prediction sets disagree on sample {ida!r} vs {idb!r}")

    single_pairs = [(ref, hyp) for _, ref, hyp in single_preds]
    multi_pairs = [(ref, hyp) for _, ref, hyp in multi_preds]
    single_table = char_error_table(single_pairs)
    multi_table = char_error_table(multi_pairs)
    delta = delta_cer(single_table, multi_table)

    partition = overlap_partition(inventories, mode="all")
    target_unique = partition.unique_per_script[target]

    rows: list[CharRow] = []
    shared_deltas: list[float] = []
    unique_deltas: list[float] = []
    tm = train_counts_multi or {}
    for c in sorted(delta):
        if c in partition.shared:
            group = "shared"
            shared_deltas.append(delta[c])
        elif c in target_unique:
            group = "unique"
            unique_deltas.append(delta[c])
        else:
            group = "other"
        rows.append(
            CharRow(
                char=c,
                group=group,
                test_count=single_table.counts[c],
                train_single=int(train_counts_single.get(c, 0)),
                train_multi=int(tm.get(c, 0)),
                cer_single=single_table.cer(c),
                cer_multi=multi_table.cer(c),
                delta_pp=delta[c],
            )
        )

    shared_mean = sum(shared_deltas) / len(shared_deltas) if shared_deltas else None
    unique_mean = sum(unique_deltas) / len(unique_deltas) if unique_deltas else None
    notes = [ATTRIBUTION_NOTE, "welch p-value is two-sided"]
    welch: WelchResult | None = None
    if len(shared_deltas) >= 2 and len(unique_deltas) >= 2:
        try:
            welch = welch_t_test(shared_deltas, unique_deltas)
        except ValueError as e:
            notes.append(f"welch test skipped: {e}")
    else:
        notes.append("welch test skipped: needs >= 2 characters in each group")

    curve_delta = {
        c: delta[c]
        for c in delta
        if c in partition.shared and train_counts_single.get(c, 0) >= 1
    }
    curve = binned_transfer_curve(curve_delta, train_counts_single, bins) if curve_delta else []

    return TransferReport(
        target=target,
        cer_single=corpus_cer(single_pairs),
        cer_multi=corpus_cer(multi_pairs),
        rows=rows,
        shared_mean=shared_mean,
        unique_mean=unique_mean,
        welch=welch,
        curve=curve,
        partition=partition,
        single_table=single_table,
        multi_table=multi_table,
        notes=notes,
    )


def char_counts(transcripts: Sequence[str]) -> dict[str, int]:
    """Character occurrence counts over transcripts (spaces included)."""
    counts: dict[str, int] = {}
    for t in transcripts:
        for c in t:
            counts[c] = counts.get(c, 0) + 1
    return counts
