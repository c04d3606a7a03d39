"""Synthetic script definitions with controlled character overlap.

A script is a set of glyph IDs drawn from a shared glyph universe plus the
parameters governing how text lines are composed from it. Glyph IDs index
procedural stroke shapes; consecutive even/odd IDs share a base shape and
differ only by dot decoration, giving the scripts visually confusable
character pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

_ASCII_GLYPHS = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"


def glyph_char(glyph_id: int) -> str:
    """Transcript character for a glyph ID (stable, whitespace-free)."""
    if glyph_id < 0:
        raise ValueError("glyph id must be nonnegative")
    if glyph_id < len(_ASCII_GLYPHS):
        return _ASCII_GLYPHS[glyph_id]
    return chr(0x0100 + glyph_id - len(_ASCII_GLYPHS))


def char_glyph(char: str) -> int:
    idx = _ASCII_GLYPHS.find(char)
    if idx >= 0:
        return idx
    cp = ord(char) - 0x0100
    if cp < 0:
        raise ValueError(f"{char!r} is not a glyph character")
    return cp + len(_ASCII_GLYPHS)


@dataclass(frozen=True)
class ScriptProfile:
    """A synthetic language: glyph inventory, frequency law, line composition."""

    script_id: str
    glyph_ids: tuple[int, ...]
    zipf_exponent: float = 1.1
    line_length_range: tuple[int, int] = (6, 10)
    writer_styles: int = 8
    rtl: bool = True
    universe_seed: int = 0
    script_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "glyph_ids", tuple(sorted(set(self.glyph_ids))))
        object.__setattr__(self, "line_length_range", tuple(self.line_length_range))
        if not self.glyph_ids:
            raise ValueError("glyph inventory must be nonempty")
        if self.zipf_exponent <= 0:
            raise ValueError("zipf exponent must be positive")
        lo, hi = self.line_length_range
        if lo < 1 or hi < lo:
            raise ValueError("invalid line length range")
        if self.writer_styles < 1:
            raise ValueError("writer_styles must be >= 1")

    @property
    def chars(self) -> tuple[str, ...]:
        return tuple(glyph_char(g) for g in self.glyph_ids)

    def glyph_probs(self) -> tuple[tuple[int, ...], np.ndarray]:
        """Zipf frequency law over the inventory.

        Ranks are a seeded permutation, so shared glyphs occupy different
        frequency ranks in different scripts.
        """
        n = len(self.glyph_ids)
        rng = np.random.default_rng(np.random.SeedSequence([self.universe_seed, 31, self.script_seed]))
        ranks = rng.permutation(n)
        probs = (ranks + 1.0) ** (-self.zipf_exponent)
        probs /= probs.sum()
        return self.glyph_ids, probs

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScriptProfile":
        d = dict(d)
        d["glyph_ids"] = tuple(d["glyph_ids"])
        d["line_length_range"] = tuple(d["line_length_range"])
        return cls(**d)


def make_overlap_scripts(
    n_shared: int,
    uniques: Sequence[int],
    seed: int,
    names: Sequence[str] | None = None,
    **profile_kwargs,
) -> list[ScriptProfile]:
    """Build scripts over a common glyph universe with a given overlap structure.

    Script i's inventory is the shared block of ``n_shared`` glyphs plus its
    own block of ``uniques[i]`` exclusive glyphs. Keyword arguments are
    forwarded to every ScriptProfile.
    """
    if n_shared < 1:
        raise ValueError("n_shared must be >= 1")
    if not uniques:
        raise ValueError("need at least one script")
    if names is None:
        names = [f"script{i}" for i in range(len(uniques))]
    if len(names) != len(uniques):
        raise ValueError("names and uniques must have equal length")
    shared = tuple(range(n_shared))
    profiles = []
    next_id = n_shared
    for i, (name, n_unique) in enumerate(zip(names, uniques)):
        own = tuple(range(next_id, next_id + n_unique))
        next_id += n_unique
        profiles.append(
            ScriptProfile(
                script_id=name,
                glyph_ids=shared + own,
                universe_seed=seed,
                script_seed=i,
                **profile_kwargs,
            )
        )
    return profiles
