"""Diversity statistics, overlap partition, Welch's t-test, binned curves."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from scriptmix.corpus_stats import (
    binned_transfer_curve,
    diversity_stats,
    overlap_partition,
    regularized_incomplete_beta,
    student_t_two_sided_p,
    welch_t_test,
)


def t_pdf(x: float, df: float) -> float:
    coeff = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    return coeff * (1 + x * x / df) ** (-(df + 1) / 2)


def two_sided_p_quadrature(t: float, df: float) -> float:
    """Independent oracle: numerically integrate the t density tail."""
    tail, _ = quad(t_pdf, abs(t), np.inf, args=(df,))
    return 2 * tail


class TestDiversityStats:
    def test_duplication_ratio_law(self):
        # 663 distinct lines padded with repeats up to 1000 total
        lines = [f"w{i} w{i+1}" for i in range(663)]
        lines += [lines[i % 663] for i in range(337)]
        s = diversity_stats(lines)
        assert s.unique_lines == 663
        assert s.duplication_ratio == pytest.approx(1 - 663 / 1000)
        assert s.duplication_ratio == pytest.approx(0.337)

    def test_full_duplication(self):
        s = diversity_stats(["a b", "a b", "a b"])
        assert s.duplication_ratio == pytest.approx(2 / 3)
        assert s.mean_max_jaccard == pytest.approx(1.0)
        assert s.word_ttr == pytest.approx(2 / 6)

    def test_jaccard_direct(self):
        s = diversity_stats(["a b", "b c"])
        assert s.mean_max_jaccard == pytest.approx(1 / 3)

    def test_single_line_flagged(self):
        s = diversity_stats(["a b c"])
        assert s.mean_max_jaccard == 0.0
        assert "single-line-corpus" in s.flags

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            diversity_stats([])

    @given(st.lists(st.sampled_from(["a b", "b c", "c d e", "a", "e f"]), min_size=2, max_size=30))
    @settings(max_examples=80)
    def test_permutation_invariance(self, lines):
        rng = np.random.default_rng(0)
        shuffled = list(lines)
        rng.shuffle(shuffled)
        a = diversity_stats(lines)
        b = diversity_stats(shuffled)
        assert a.duplication_ratio == pytest.approx(b.duplication_ratio)
        assert a.mean_max_jaccard == pytest.approx(b.mean_max_jaccard)
        assert a.word_ttr == pytest.approx(b.word_ttr)

    @given(st.lists(st.sampled_from(["a b", "b c", "c d e", "x y"]), min_size=2, max_size=20),
           st.integers(min_value=0, max_value=19))
    @settings(max_examples=80)
    def test_adding_duplicate_never_decreases(self, lines, pick):
        base = diversity_stats(lines)
        extended = diversity_stats(lines + [lines[pick % len(lines)]])
        assert extended.duplication_ratio >= base.duplication_ratio - 1e-12
        assert extended.mean_max_jaccard >= base.mean_max_jaccard - 1e-12


class TestOverlapPartition:
    def test_identical_inventories(self):
        p = overlap_partition({"a": {"x", "y"}, "b": {"x", "y"}})
        assert p.shared == {"x", "y"}
        assert all(not u for u in p.unique_per_script.values())

    def test_disjoint(self):
        p = overlap_partition({"s1": {"a"}, "s2": {"b"}})
        assert p.shared == frozenset()
        assert p.unique_per_script["s1"] == {"a"}
        assert p.unique_per_script["s2"] == {"b"}

    def test_three_script_structure(self):
        shared = {chr(0x100 + i) for i in range(30)}
        inv = {
            "arabic-like": shared | {"!"},
            "urdu-like": shared | set("123456789"),
            "persian-like": set(shared),
        }
        p = overlap_partition(inv)
        assert len(p.shared) == 30
        assert len(p.unique_per_script["arabic-like"]) == 1
        assert len(p.unique_per_script["urdu-like"]) == 9
        assert len(p.unique_per_script["persian-like"]) == 0

    def test_needs_two_scripts(self):
        with pytest.raises(ValueError):
            overlap_partition({"only": {"a"}})

    @given(st.dictionaries(st.sampled_from("stuv"), st.sets(st.sampled_from("abcdefg")),
                           min_size=2, max_size=4))
    @settings(max_examples=100)
    def test_partition_covers_union(self, inventories):
        union = set().union(*inventories.values())
        for mode in ("all", "pairwise"):
            p = overlap_partition(inventories, mode=mode)
            parts = [p.shared, p.partial] + list(p.unique_per_script.values())
            for i, a in enumerate(parts):
                for b in parts[i + 1:]:
                    assert not (a & b) or a is b
            assert p.union == union
            if mode == "pairwise":
                assert p.partial == frozenset()


class TestWelch:
    def test_identical_groups(self):
        r = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.t == 0.0
        assert r.p == pytest.approx(1.0)

    def test_against_quadrature_oracle(self):
        r = welch_t_test([1, 2, 3, 4, 5], [2, 4, 6, 8, 10])
        # hand Welch: means 3 vs 6, vars 2.5 vs 10
        se2 = 2.5 / 5 + 10 / 5
        assert r.t == pytest.approx((3 - 6) / math.sqrt(se2))
        assert r.p == pytest.approx(two_sided_p_quadrature(r.t, r.df), abs=1e-6)

    def test_antisymmetry(self):
        a, b = [0.5, 1.5, 2.0, 4.0], [1.0, 1.0, 3.0]
        r1 = welch_t_test(a, b)
        r2 = welch_t_test(b, a)
        assert r1.t == pytest.approx(-r2.t)
        assert r1.p == pytest.approx(r2.p)

    def test_group_too_small(self):
        with pytest.raises(ValueError):
            welch_t_test([1.0], [1.0, 2.0])

    def test_both_variances_zero(self):
        with pytest.raises(ValueError):
            welch_t_test([2.0, 2.0], [3.0, 3.0])

    def test_significance_threshold_behavior(self):
        # group means like the shared/unique contrast: tight spreads are
        # significant, huge spreads are not
        rng = np.random.default_rng(4)
        shared = (rng.normal(-1.97, 1.0, 33)).tolist()
        unique = (rng.normal(2.02, 1.5, 7)).tolist()
        tight = welch_t_test(shared, unique)
        assert tight.p < 0.01
        noisy = welch_t_test((rng.normal(-1.97, 40.0, 33)).tolist(),
                             (rng.normal(2.02, 40.0, 7)).tolist())
        assert noisy.p > 0.05

    def test_random_pairs_against_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            na, nb = rng.integers(2, 12), rng.integers(2, 12)
            a = rng.normal(rng.uniform(-3, 3), rng.uniform(0.5, 3), na).tolist()
            b = rng.normal(rng.uniform(-3, 3), rng.uniform(0.5, 3), nb).tolist()
            r = welch_t_test(a, b)
            assert r.p == pytest.approx(two_sided_p_quadrature(r.t, r.df), abs=1e-6)

    def test_incomplete_beta_bounds(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0
        assert student_t_two_sided_p(0.0, 5.0) == pytest.approx(1.0)


class TestBinnedCurve:
    def test_single_character(self):
        curve = binned_transfer_curve({"a": -3.0}, {"a": 50}, bins=4)
        assert len(curve) == 1
        assert curve[0][1] == pytest.approx(-3.0)

    def test_two_characters_separate_bins(self):
        curve = binned_transfer_curve({"a": -5.0, "b": 1.0}, {"a": 10, "b": 1000}, bins=2)
        assert len(curve) == 2
        assert curve[0][1] == pytest.approx(-5.0)
        assert curve[1][1] == pytest.approx(1.0)

    def test_constant_field(self):
        delta = {c: -5.0 for c in "abcdefgh"}
        freqs = {c: 3 * (i + 1) ** 3 for i, c in enumerate("abcdefgh")}
        for _, mean in binned_transfer_curve(delta, freqs, bins=3):
            assert mean == pytest.approx(-5.0)

    def test_bad_bins(self):
        with pytest.raises(ValueError):
            binned_transfer_curve({"a": 1.0}, {"a": 2}, bins=0)

    def test_frequency_below_one_rejected(self):
        with pytest.raises(ValueError):
            binned_transfer_curve({"a": 1.0}, {"a": 0}, bins=2)
