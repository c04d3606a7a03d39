"""CTC loss against exhaustive path enumeration, plus decoding."""

import itertools
import math

import numpy as np
import pytest

from scriptmix.ctc import collapse, ctc_loss, greedy_decode
from scriptmix.vocab import Vocabulary


def softmax(logits):
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def collapse_reference(path, blank=0):
    """Independent collapse: drop consecutive repeats, then blanks."""
    out = []
    for i, p in enumerate(path):
        if i == 0 or p != path[i - 1]:
            out.append(p)
    return [p for p in out if p != blank]


def ctc_loss_oracle(logits, target):
    """Sum softmax path probabilities over every path collapsing to target."""
    y = softmax(np.asarray(logits, dtype=np.float64))
    t_len, n_classes = y.shape
    target = list(target)
    total = 0.0
    for path in itertools.product(range(n_classes), repeat=t_len):
        if collapse_reference(path) == target:
            p = 1.0
            for t, c in enumerate(path):
                p *= y[t, c]
            total += p
    return -math.log(total)


class TestCollapse:
    def test_blank_only(self):
        assert collapse([0]) == []

    def test_repeats_and_blanks(self):
        # [a, a, blank, a] -> "aa"
        assert collapse([1, 1, 0, 1]) == [1, 1]

    def test_leading_blank(self):
        assert collapse([0, 1, 1, 0, 2]) == [1, 2]

    def test_idempotent_when_reencoded(self):
        # a label sequence re-encoded as a path (blank between equal
        # neighbours) collapses back to itself
        rng = np.random.default_rng(0)
        for _ in range(100):
            path = rng.integers(0, 4, size=rng.integers(0, 10)).tolist()
            once = collapse(path)
            reencoded = []
            for i, p in enumerate(once):
                if i > 0 and p == once[i - 1]:
                    reencoded.append(0)
                reencoded.append(p)
            assert collapse(reencoded) == once


class TestGreedyDecode:
    def test_decode_encode_identity(self):
        vocab = Vocabulary("ab")
        a, b = vocab.encode("a")[0], vocab.encode("b")[0]
        logits = np.full((5, 3), -10.0)
        for t, c in enumerate([a, 0, b, 0, 0]):
            logits[t, c] = 10.0
        assert greedy_decode(logits, vocab) == "ab"

    def test_all_blank(self):
        vocab = Vocabulary("ab")
        logits = np.zeros((4, 3))
        logits[:, 0] = 5.0
        assert greedy_decode(logits, vocab) == ""

    def test_tie_breaks_to_lowest_id(self):
        vocab = Vocabulary("ab")
        logits = np.ones((1, 3))  # three-way tie -> blank (id 0)
        assert greedy_decode(logits, vocab) == ""

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            t_len = int(rng.integers(1, 6))
            v = int(rng.integers(1, 4))
            vocab = Vocabulary("abc"[:v])
            logits = rng.normal(size=(t_len, v + 1))
            path = [int(np.argmax(logits[t])) for t in range(t_len)]
            want = vocab.decode(collapse_reference(path))
            assert greedy_decode(logits, vocab) == want

    def test_never_contains_blank_or_foreign_chars(self):
        rng = np.random.default_rng(2)
        vocab = Vocabulary("xyz")
        for _ in range(50):
            logits = rng.normal(size=(rng.integers(1, 8), 4))
            out = greedy_decode(logits, vocab)
            assert set(out) <= set("xyz")


class TestCtcLoss:
    def test_single_timestep_hand_case(self):
        # uniform logits over {blank, a}: P(target "a") = 1/2
        logits = np.zeros((1, 2))
        loss, grad = ctc_loss(logits, [1])
        assert loss == pytest.approx(math.log(2.0))
        assert grad.shape == (1, 2)

    def test_two_timestep_paths(self):
        # paths collapsing to "a" with T=2: (a,a), (a,blank), (blank,a)
        rng = np.random.default_rng(3)
        logits = rng.normal(size=(2, 3))
        y = softmax(logits)
        p = y[0, 1] * y[1, 1] + y[0, 1] * y[1, 0] + y[0, 0] * y[1, 1]
        loss, _ = ctc_loss(logits, [1])
        assert loss == pytest.approx(-math.log(p), abs=1e-9)

    def test_against_enumeration_oracle(self):
        rng = np.random.default_rng(4)
        checked = 0
        while checked < 60:
            t_len = int(rng.integers(1, 7))
            v = int(rng.integers(1, 4))
            tgt_len = int(rng.integers(0, 4))
            target = rng.integers(1, v + 1, size=tgt_len).tolist()
            repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
            if (len(target) + repeats if target else 1) > t_len:
                continue
            logits = rng.normal(scale=2.0, size=(t_len, v + 1))
            loss, _ = ctc_loss(logits, target)
            assert loss == pytest.approx(ctc_loss_oracle(logits, target), abs=1e-9)
            assert 0.0 < math.exp(-loss) <= 1.0
            checked += 1

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            t_len = int(rng.integers(2, 7))
            v = int(rng.integers(1, 4))
            target = rng.integers(1, v + 1, size=rng.integers(1, 3)).tolist()
            repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
            if len(target) + repeats > t_len:
                continue
            logits = rng.normal(size=(t_len, v + 1))
            _, grad = ctc_loss(logits, target)
            h = 1e-6
            for _ in range(6):
                c = (int(rng.integers(t_len)), int(rng.integers(v + 1)))
                old = logits[c]
                logits[c] = old + h
                fp, _ = ctc_loss(logits, target)
                logits[c] = old - h
                fm, _ = ctc_loss(logits, target)
                logits[c] = old
                num = (fp - fm) / (2 * h)
                assert abs(grad[c] - num) / max(abs(grad[c]), abs(num), 1e-4) < 1e-5

    def test_shift_invariance(self):
        rng = np.random.default_rng(6)
        logits = rng.normal(size=(4, 3))
        loss, _ = ctc_loss(logits, [1, 2])
        shifted = logits.copy()
        shifted[2] += 7.5  # constant shift at one timestep
        loss2, _ = ctc_loss(shifted, [1, 2])
        assert loss2 == pytest.approx(loss, abs=1e-10)

    def test_target_too_long(self):
        with pytest.raises(ValueError):
            ctc_loss(np.zeros((2, 3)), [1, 1])  # repeat needs a separating blank
        with pytest.raises(ValueError):
            ctc_loss(np.zeros((1, 3)), [1, 2])

    def test_nan_rejected(self):
        bad = np.zeros((2, 3))
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            ctc_loss(bad, [1])

    def test_bad_target_ids(self):
        with pytest.raises(ValueError):
            ctc_loss(np.zeros((3, 3)), [0])
        with pytest.raises(ValueError):
            ctc_loss(np.zeros((3, 3)), [3])
