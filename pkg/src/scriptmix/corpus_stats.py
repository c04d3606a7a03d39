"""Dataset-level diversity diagnostics and shared/unique character analysis.

Diversity statistics (line duplication, word-overlap Jaccard, type-token
ratio), the character-inventory overlap partition, Welch's t-test, and the
frequency-binned transfer curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence


@dataclass(frozen=True)
class DiversityStats:
    total_lines: int
    unique_lines: int
    duplication_ratio: float
    mean_max_jaccard: float
    total_words: int
    unique_words: int
    word_ttr: float
    flags: tuple[str, ...] = ()


def diversity_stats(lines: Sequence[str]) -> DiversityStats:
    """Line- and word-level diversity of a corpus of whitespace-tokenized lines.

    duplication_ratio = 1 - unique_lines/total_lines; mean_max_jaccard is the
    mean over lines of the maximum word-set Jaccard similarity against any
    other line; word_ttr = unique word types / total word tokens.
    """
    if not lines:
        raise ValueError("diversity_stats needs a nonempty corpus")
    total = len(lines)
    unique_lines = len(set(lines))
    duplication_ratio = 1.0 - unique_lines / total

    tokens_per_line = [line.split() for line in lines]
    total_words = sum(len(t) for t in tokens_per_line)
    unique_words = len({w for t in tokens_per_line for w in t})
    word_ttr = unique_words / total_words if total_words else 0.0

    flags: tuple[str, ...] = ()
    if total == 1:
        mean_max_jaccard = 0.0
        flags = ("single-line-corpus",)
    else:
        # collapse identical word sets; a set occurring twice has max Jaccard 1
        multiplicity: dict[frozenset[str], int] = {}
        for t in tokens_per_line:
            ws = frozenset(t)
            multiplicity[ws] = multiplicity.get(ws, 0) + 1
        distinct = list(multiplicity)
        best: dict[frozenset[str], float] = {}
        for i, a in enumerate(distinct):
            m = 1.0 if multiplicity[a] > 1 else 0.0
            if m < 1.0:
                for j, b in enumerate(distinct):
                    if i == j:
                        continue
                    union = len(a | b)
                    # empty word sets contribute 0 against everything
                    jac = len(a & b) / union if union else 0.0
                    if jac > m:
                        m = jac
                        if m == 1.0:
                            break
            best[a] = m
        mean_max_jaccard = sum(best[frozenset(t)] for t in tokens_per_line) / total

    return DiversityStats(
        total_lines=total,
        unique_lines=unique_lines,
        duplication_ratio=duplication_ratio,
        mean_max_jaccard=mean_max_jaccard,
        total_words=total_words,
        unique_words=unique_words,
        word_ttr=word_ttr,
        flags=flags,
    )


@dataclass(frozen=True)
class OverlapPartition:
    """Partition of a union character inventory into shared/partial/unique.

    In ``all`` mode ``shared`` holds characters present in every script and
    ``partial`` those in at least two but not all; in ``pairwise`` mode
    ``shared`` holds everything present in two or more scripts and ``partial``
    is empty.  ``shared | partial | all uniques`` always covers the union.
    """

    shared: frozenset[str]
    partial: frozenset[str]
    unique_per_script: dict[str, frozenset[str]]

    @property
    def union(self) -> frozenset[str]:
        out = self.shared | self.partial
        for s in self.unique_per_script.values():
            out |= s
        return out


def overlap_partition(
    inventories: Mapping[str, Iterable[str]], mode: str = "all"
) -> OverlapPartition:
    """Split script inventories into shared and script-exclusive characters."""
    if len(inventories) < 2:
        raise ValueError("overlap_partition needs at least two scripts")
    if mode not in ("all", "pairwise"):
        raise ValueError(f"unknown overlap mode {mode!r}")
    sets = {name: frozenset(inv) for name, inv in inventories.items()}
    membership: dict[str, int] = {}
    for inv in sets.values():
        for c in inv:
            membership[c] = membership.get(c, 0) + 1
    n = len(sets)
    threshold = n if mode == "all" else 2
    shared = frozenset(c for c, k in membership.items() if k >= threshold)
    unique = {
        name: frozenset(c for c in inv if membership[c] == 1) for name, inv in sets.items()
    }
    partial = frozenset(
        c for c, k in membership.items() if 2 <= k < threshold
    )
    return OverlapPartition(shared=shared, partial=partial, unique_per_script=unique)


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def welch_t_test(group_a: Sequence[float], group_b: Sequence[float]) -> WelchResult:
    """Welch's unequal-variance t-test with a two-sided p-value.

    Degrees of freedom follow Welch-Satterthwaite; the p-value goes through
    the regularized incomplete beta function.
    """
    na, nb = len(group_a), len(group_b)
    if na < 2 or nb < 2:
        raise ValueError("welch_t_test needs at least two observations per group")
    ma = sum(group_a) / na
    mb = sum(group_b) / nb
    va = sum((x - ma) ** 2 for x in group_a) / (na - 1)
    vb = sum((x - mb) ** 2 for x in group_b) / (nb - 1)
    if va == 0.0 and vb == 0.0:
        raise ValueError("welch_t_test needs nonzero variance in at least one group")
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    t = (ma - mb) / math.sqrt(se2)
    df = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    return WelchResult(t=t, df=df, p=student_t_two_sided_p(t, df))


def binned_transfer_curve(
    delta: Mapping[str, float],
    frequencies: Mapping[str, int],
    bins: int,
) -> list[tuple[float, float]]:
    """Mean CER change per log10-frequency bin.

    Characters are bucketed into ``bins`` equal-width bins over the log10 of
    their frequency; empty bins are omitted. Returns (bin center in log10
    units, mean delta) sorted by center.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not delta:
        return []
    logs: dict[str, float] = {}
    for c in delta:
        f = frequencies.get(c)
        if f is None or f < 1:
            raise ValueError(f"character {c!r} needs a frequency >= 1")
        logs[c] = math.log10(f)
    lo = min(logs.values())
    hi = max(logs.values())
    width = (hi - lo) / bins
    sums = [0.0] * bins
    counts = [0] * bins
    for c, v in logs.items():
        idx = 0 if width == 0.0 else min(int((v - lo) / width), bins - 1)
        sums[idx] += delta[c]
        counts[idx] += 1
    out = []
    for i in range(bins):
        if counts[i]:
            center = lo + (i + 0.5) * (width if width else 0.0)
            out.append((center, sums[i] / counts[i]))
    return out


def diversity_csv(stats_by_name: Mapping[str, DiversityStats]) -> str:
    """Render diversity rows in the style of the dataset-statistics table."""
    lines = ["name,total_lines,unique_lines,duplication_ratio,mean_max_jaccard,unique_words,word_ttr"]
    for name, s in stats_by_name.items():
        lines.append(
            f"{name},{s.total_lines},{s.unique_lines},{s.duplication_ratio:.6f},"
            f"{s.mean_max_jaccard:.6f},{s.unique_words},{s.word_ttr:.6f}"
        )
    return "\n".join(lines) + "\n"
