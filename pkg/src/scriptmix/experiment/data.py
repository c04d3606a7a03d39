"""Dataset access for training and evaluation.

Wraps manifests into split views with cached preprocessed images. RTL
handling is centralized here: training labels are reversed once at load,
and predictions are un-reversed once at evaluation, both through
``reverse_labels``.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from scriptmix.errors import DataError
from scriptmix.synthdata.corpus import ManifestRow, load_manifest, load_profile_meta
from scriptmix.synthdata.pipeline import preprocess, reverse_labels
from scriptmix.synthdata.render import read_pgm
from scriptmix.vocab import Vocabulary


class LineDataset:
    """One split of a corpus; images preprocessed lazily and cached."""

    def __init__(self, rows: list[ManifestRow], rtl: bool, height: int, max_width: int):
        self.rows = rows
        self.rtl = rtl
        self.height = height
        self.max_width = max_width
        self._images: list[np.ndarray | None] = [None] * len(rows)
        self.access_log: Counter[str] = Counter()

    def __len__(self) -> int:
        return len(self.rows)

    def image(self, i: int) -> np.ndarray:
        if self._images[i] is None:
            raw = read_pgm(self.rows[i].path)
            self._images[i] = preprocess(raw, height=self.height, max_width=self.max_width)
        self.access_log[self.rows[i].sample_id] += 1
        return self._images[i]

    def transcript(self, i: int) -> str:
        """Display-order transcript (as written in the manifest)."""
        return self.rows[i].transcript

    def label(self, i: int) -> str:
        """Training-direction transcript: reversed for RTL scripts."""
        return reverse_labels(self.rows[i].transcript, self.rtl)

    def to_display(self, decoded: str) -> str:
        """Map a decoded prediction back to display order."""
        return reverse_labels(decoded, self.rtl)


class CorpusData:
    """A manifest split into train/val/test views."""

    def __init__(self, manifest_path: str, height: int, max_width: int):
        self.manifest_path = manifest_path
        rows = load_manifest(manifest_path)
        meta = load_profile_meta(manifest_path)
        self.rtl = bool(meta["profile"]["rtl"]) if meta else False
        self.meta = meta
        self.height = height
        self.max_width = max_width
        self.rows_by_split: dict[str, list[ManifestRow]] = {"train": [], "val": [], "test": []}
        for r in rows:
            self.rows_by_split[r.split].append(r)

    def rows(self, split: str) -> list[ManifestRow]:
        return self.rows_by_split[split]

    def view(self, split: str, rows: list[ManifestRow] | None = None) -> LineDataset:
        use = self.rows_by_split[split] if rows is None else rows
        if not use:
            raise DataError(f"{self.manifest_path}: split {split!r} is empty")
        return LineDataset(use, self.rtl, self.height, self.max_width)

    def inventory(self) -> set[str]:
        """Character inventory: from the generator profile when available,
        otherwise from all transcripts (spaces excluded)."""
        if self.meta and "glyph_ids" in self.meta.get("profile", {}):
            from scriptmix.synthdata.profiles import glyph_char

            return {glyph_char(g) for g in self.meta["profile"]["glyph_ids"]}
        chars: set[str] = set()
        for rows in self.rows_by_split.values():
            for r in rows:
                chars.update(r.transcript)
        chars.discard(" ")
        return chars


def build_union_vocab(datasets: list[CorpusData]) -> Vocabulary:
    """Sorted union of transcript characters over all train/val splits.

    Character IDs depend only on the character set, never on dataset order.
    """
    if not datasets:
        raise DataError("build_union_vocab needs at least one dataset")
    chars: set[str] = set()
    for ds in datasets:
        for split in ("train", "val"):
            for r in ds.rows(split):
                chars.update(r.transcript)
    if not chars:
        raise DataError("empty character union across datasets")
    return Vocabulary(chars)
