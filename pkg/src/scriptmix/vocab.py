"""Character vocabulary with a reserved blank class at index 0."""

from __future__ import annotations

from typing import Iterable, Sequence

BLANK_ID = 0


class Vocabulary:
    """Bijection between characters and integer class IDs.

    IDs run from 1 to ``size``; 0 is the blank used by the CTC objective.
    Construction sorts the characters so IDs are independent of input order.
    """

    def __init__(self, chars: Iterable[str]):
        uniq = sorted(set(chars))
        if not uniq:
            raise ValueError("vocabulary needs at least one character")
        for c in uniq:
            if len(c) != 1:
                raise ValueError(f"vocabulary entries must be single characters, got {c!r}")
        self.chars: tuple[str, ...] = tuple(uniq)
        self._to_id = {c: i + 1 for i, c in enumerate(self.chars)}

    @property
    def size(self) -> int:
        """Number of real character classes (excluding blank)."""
        return len(self.chars)

    @property
    def num_classes(self) -> int:
        """Model output width: characters plus the blank."""
        return len(self.chars) + 1

    def encode(self, text: str) -> list[int]:
        try:
            return [self._to_id[c] for c in text]
        except KeyError:
            missing = sorted({c for c in text if c not in self._to_id})
            raise KeyError(f"characters not in vocabulary: {missing}") from None

    def decode(self, ids: Sequence[int]) -> str:
        out = []
        for i in ids:
            if not 1 <= i <= len(self.chars):
                raise ValueError(f"class id {i} out of range [1, {len(self.chars)}]")
            out.append(self.chars[i - 1])
        return "".join(out)

    def covers(self, text: str) -> bool:
        return all(c in self._to_id for c in text)

    def missing_chars(self, texts: Iterable[str]) -> list[str]:
        return sorted({c for t in texts for c in t if c not in self._to_id})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.chars == other.chars

    def __repr__(self) -> str:
        return f"Vocabulary({len(self.chars)} chars)"
