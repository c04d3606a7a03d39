"""Edit-distance evaluation.

Corpus-level character error rate (CER), minimal-cost alignments with a
deterministic backtrace, and per-character error attribution feeding the
character-level transfer analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"


class EditOp(NamedTuple):
    """One alignment step.

    ``ref_pos``/``hyp_pos`` index the character consumed on each side.  A
    delete consumes no hypothesis character and an insert no reference
    character; the untouched index then marks the gap position.
    """

    kind: str
    ref_pos: int
    hyp_pos: int


@dataclass
class EditAlignment:
    """Minimal-cost alignment between a reference and a hypothesis."""

    ops: list[EditOp]
    distance: int

    def replay(self, reference: Sequence[str]) -> str:
        """Apply the ops to ``reference``; yields the aligned hypothesis."""
        out: list[str] = []
        for op in self.ops:
            if op.kind == MATCH:
                out.append(reference[op.ref_pos])
            elif op.kind in (SUBSTITUTE, INSERT):
                out.append(self._hyp[op.hyp_pos])
            # deletes emit nothing
        return "".join(out)

    _hyp: str = field(default="", repr=False)


def levenshtein(reference: Sequence[str], hypothesis: Sequence[str]) -> EditAlignment:
    """Unit-cost edit alignment of ``hypothesis`` against ``reference``.

    Ties during backtrace are broken match > substitute > delete > insert so
    the attribution of errors to characters is reproducible.
    """
    r, h = len(reference), len(hypothesis)
    # d[i][j] = distance between reference[:i] and hypothesis[:j]
    d = [[0] * (h + 1) for _ in range(r + 1)]
    for i in range(1, r + 1):
        d[i][0] = i
    for j in range(1, h + 1):
        d[0][j] = j
    for i in range(1, r + 1):
        ref_c = reference[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, h + 1):
            if ref_c == hypothesis[j - 1]:
                row[j] = prev[j - 1]
            else:
                row[j] = 1 + min(prev[j - 1], prev[j], row[j - 1])

    ops: list[EditOp] = []
    i, j = r, h
    while i > 0 or j > 0:
        cur = d[i][j]
        if i > 0 and j > 0 and reference[i - 1] == hypothesis[j - 1] and d[i - 1][j - 1] == cur:
            ops.append(EditOp(MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i - 1][j - 1] + 1 == cur:
            ops.append(EditOp(SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and d[i - 1][j] + 1 == cur:
            ops.append(EditOp(DELETE, i - 1, j))
            i -= 1
        else:
            ops.append(EditOp(INSERT, i, j - 1))
            j -= 1
    ops.reverse()
    hyp_str = hypothesis if isinstance(hypothesis, str) else "".join(hypothesis)
    return EditAlignment(ops=ops, distance=d[r][h], _hyp=hyp_str)


def corpus_cer(pairs: Sequence[tuple[str, str]]) -> float:
    """Micro-averaged CER: summed edit distance over summed reference length."""
    if not pairs:
        raise ValueError("corpus_cer needs at least one (reference, hypothesis) pair")
    total_len = sum(len(ref) for ref, _ in pairs)
    if total_len == 0:
        raise ValueError("corpus_cer needs a nonzero total reference length")
    total_dist = sum(levenshtein(ref, hyp).distance for ref, hyp in pairs)
    return total_dist / total_len


@dataclass
class CharErrorTable:
    """Per-character occurrence and error counts over a prediction set.

    Substitutions and deletions are attributed to the reference character they
    consume; insertions have no reference character and are tallied globally
    in ``insertions``.  This keeps ``cer(c) <= 1`` for every character.
    """

    counts: dict[str, int]
    errors: dict[str, int]
    insertions: int

    def cer(self, char: str) -> float:
        return self.errors.get(char, 0) / self.counts[char]

    def chars(self) -> list[str]:
        return sorted(self.counts)

    @property
    def total_errors(self) -> int:
        return sum(self.errors.values()) + self.insertions


def char_error_table(pairs: Sequence[tuple[str, str]]) -> CharErrorTable:
    """Accumulate per-character errors from minimal alignments of ``pairs``."""
    if not pairs:
        raise ValueError("char_error_table needs at least one pair")
    counts: dict[str, int] = {}
    errors: dict[str, int] = {}
    insertions = 0
    total_len = 0
    for ref, hyp in pairs:
        total_len += len(ref)
        for c in ref:
            counts[c] = counts.get(c, 0) + 1
        for op in levenshtein(ref, hyp).ops:
            if op.kind in (SUBSTITUTE, DELETE):
                c = ref[op.ref_pos]
                errors[c] = errors.get(c, 0) + 1
            elif op.kind == INSERT:
                insertions += 1
    if total_len == 0:
        raise ValueError("char_error_table needs a nonzero total reference length")
    return CharErrorTable(counts=counts, errors=errors, insertions=insertions)


def delta_cer(single: CharErrorTable, multi: CharErrorTable) -> dict[str, float]:
    """Per-character CER change in percentage points: 100*(multi - single).

    Only characters present in both tables are reported; a character missing
    from either reference set is omitted rather than treated as zero.
    """
    common = set(single.counts) & set(multi.counts)
    return {c: 100.0 * (multi.cer(c) - single.cer(c)) for c in sorted(common)}


def read_pairs_tsv(path: str) -> list[tuple[str, str, str]]:
    """Read (sample-id, reference, hypothesis) rows from a UTF-8 TSV file."""
    rows: list[tuple[str, str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cols)}")
            rows.append((cols[0], cols[1], cols[2]))
    return rows


def write_pairs_tsv(path: str, rows: Sequence[tuple[str, str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample_id, ref, hyp in rows:
            fh.write(f"{sample_id}\t{ref}\t{hyp}\n")
