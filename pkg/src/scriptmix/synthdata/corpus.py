"""Corpus generation: Zipf-sampled text lines, rendering, manifest output.

A corpus is a directory of PGM line images plus a UTF-8 manifest with one
line per sample: image-path TAB transcript TAB script-id TAB split. The
generator supports a duplication-injection probability (repeating earlier
lines within the same split) and a finite word lexicon to emulate
low-diversity corpora.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from scriptmix.errors import DataError
from scriptmix.synthdata.profiles import ScriptProfile, glyph_char
from scriptmix.synthdata.render import LineRenderer, write_pgm

SPLITS = ("train", "val", "test")


@dataclass
class TextLineSample:
    sample_id: str
    image: np.ndarray
    transcript: str
    script_id: str
    split: str
    style_seed: int
    path: str


@dataclass(frozen=True)
class ManifestRow:
    sample_id: str
    path: str
    transcript: str
    script_id: str
    split: str


def _sample_word(rng: np.random.Generator, glyph_ids, probs) -> str:
    length = int(rng.integers(2, 6))
    picks = rng.choice(len(glyph_ids), size=length, p=probs)
    return "".join(glyph_char(glyph_ids[i]) for i in picks)


def _split_boundaries(n: int, fractions) -> list[int]:
    cum = 0.0
    bounds = []
    for f in fractions[:-1]:
        cum += f
        bounds.append(int(round(cum * n)))
    return bounds


def generate_corpus(
    profile: ScriptProfile,
    n_lines: int,
    split_fractions: tuple[float, float, float],
    seed: int,
    out_dir: str,
    duplication: float = 0.0,
    lexicon_size: int | None = None,
    height: int = 48,
) -> list[TextLineSample]:
    """Generate, render, and write a corpus; deterministic under ``seed``."""
    if n_lines < 1:
        raise DataError("n_lines must be >= 1")
    if abs(sum(split_fractions) - 1.0) > 1e-9:
        raise DataError("split fractions must sum to 1")
    if not 0.0 <= duplication < 1.0:
        raise DataError("duplication must lie in [0, 1)")
    os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)

    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    glyph_ids, probs = profile.glyph_probs()
    lo, hi = profile.line_length_range

    lexicon: list[str] | None = None
    lex_probs: np.ndarray | None = None
    if lexicon_size:
        lexicon = [_sample_word(rng, glyph_ids, probs) for _ in range(lexicon_size)]
        lex_probs = (np.arange(lexicon_size) + 1.0) ** -1.0
        lex_probs /= lex_probs.sum()

    bounds = _split_boundaries(n_lines, split_fractions)

    def split_of(i: int) -> str:
        for b, name in zip(bounds, SPLITS):
            if i < b:
                return name
        return SPLITS[len(bounds)]

    renderer = LineRenderer(profile, height=height)
    history: dict[str, list[str]] = {s: [] for s in SPLITS}
    samples: list[TextLineSample] = []
    manifest_lines: list[str] = []
    for i in range(n_lines):
        split = split_of(i)
        past = history[split]
        if past and duplication > 0.0 and rng.random() < duplication:
            transcript = past[int(rng.integers(len(past)))]
        else:
            target = int(rng.integers(lo, hi + 1))
            words: list[str] = []
            count = 0
            while count < target:
                if lexicon is not None:
                    word = lexicon[int(rng.choice(len(lexicon), p=lex_probs))]
                else:
                    word = _sample_word(rng, glyph_ids, probs)
                words.append(word)
                count += len(word)
            transcript = " ".join(words)
        past.append(transcript)
        style_seed = int(rng.integers(0, 2**31 - 1))
        image = renderer.render(transcript, style_seed)
        sample_id = f"{profile.script_id}-{i:05d}"
        rel_path = os.path.join("images", f"{sample_id}.pgm")
        abs_path = os.path.join(out_dir, rel_path)
        write_pgm(abs_path, image)
        samples.append(
            TextLineSample(
                sample_id=sample_id,
                image=image,
                transcript=transcript,
                script_id=profile.script_id,
                split=split,
                style_seed=style_seed,
                path=abs_path,
            )
        )
        manifest_lines.append(f"{rel_path}\t{transcript}\t{profile.script_id}\t{split}")

    with open(os.path.join(out_dir, "manifest.tsv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest_lines) + "\n")
    meta = {
        "profile": profile.to_dict(),
        "n_lines": n_lines,
        "split_fractions": list(split_fractions),
        "seed": seed,
        "duplication": duplication,
        "lexicon_size": lexicon_size,
        "height": height,
    }
    with open(os.path.join(out_dir, "profile.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return samples


def load_manifest(manifest_path: str) -> list[ManifestRow]:
    """Read a manifest; image paths resolve relative to the manifest directory."""
    if not os.path.exists(manifest_path):
        raise DataError(f"manifest not found: {manifest_path}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    rows: list[ManifestRow] = []
    with open(manifest_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise DataError(f"{manifest_path}:{lineno}: expected 4 columns, got {len(cols)}")
            rel_path, transcript, script_id, split = cols
            if split not in SPLITS:
                raise DataError(f"{manifest_path}:{lineno}: unknown split {split!r}")
            sample_id = os.path.splitext(os.path.basename(rel_path))[0]
            rows.append(
                ManifestRow(
                    sample_id=sample_id,
                    path=os.path.join(base, rel_path),
                    transcript=transcript,
                    script_id=script_id,
                    split=split,
                )
            )
    if not rows:
        raise DataError(f"manifest is empty: {manifest_path}")
    return rows


def load_profile_meta(manifest_path: str) -> dict | None:
    """Generator metadata written next to the manifest, if present."""
    meta_path = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), "profile.json")
    if not os.path.exists(meta_path):
        return None
    with open(meta_path, encoding="utf-8") as fh:
        return json.load(fh)
