import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from grambook.errors import UncorruptibleError
from grambook.grammaticality import (
    CorruptionSetting,
    JudgmentItem,
    PresentedOrder,
    build_judgment_item,
    corrupt,
    item_seed,
    parse_answer,
    score_judgments,
    shuffle_words,
    swap_adjacent,
    swap_random,
)
from grambook.prompts import PromptSection, SectionKind

WORDS = st.lists(st.sampled_from(["mu", "kiem", "bal", "se", "nan", "os"]),
                 min_size=2, max_size=8)


class TestSwapAdjacent:
    @given(WORDS, st.integers())
    def test_is_adjacent_transposition(self, words, seed):
        rng = random.Random(seed)
        try:
            out = swap_adjacent(words, rng)
        except UncorruptibleError:
            assert all(a == b for a, b in zip(words, words[1:]))
            return
        diffs = [i for i, (a, b) in enumerate(zip(words, out)) if a != b]
        assert len(diffs) == 2 and diffs[1] == diffs[0] + 1
        i = diffs[0]
        assert out[i] == words[i + 1] and out[i + 1] == words[i]
        assert sorted(out) == sorted(words)

    def test_uniform_over_candidates(self):
        words = ["a", "b", "c", "d"]
        counts = Counter()
        for seed in range(3000):
            out = swap_adjacent(words, random.Random(seed))
            i = next(k for k, (x, y) in enumerate(zip(words, out)) if x != y)
            counts[i] += 1
        assert set(counts) == {0, 1, 2}
        for c in counts.values():
            assert 800 < c < 1200

    def test_all_identical_raises(self):
        with pytest.raises(UncorruptibleError):
            swap_adjacent(["a", "a", "a"], random.Random(0))

    def test_skips_equal_pair(self):
        out = swap_adjacent(["a", "a", "b"], random.Random(0))
        assert out != ["a", "a", "b"]


class TestSwapRandom:
    @given(WORDS, st.integers())
    def test_is_transposition_of_unequal_words(self, words, seed):
        rng = random.Random(seed)
        try:
            out = swap_random(words, rng)
        except UncorruptibleError:
            assert len(set(words)) == 1
            return
        diffs = [i for i, (a, b) in enumerate(zip(words, out)) if a != b]
        assert len(diffs) == 2
        i, j = diffs
        assert out[i] == words[j] and out[j] == words[i]
        assert sorted(out) == sorted(words)

    def test_all_identical_raises(self):
        with pytest.raises(UncorruptibleError):
            swap_random(["x", "x"], random.Random(0))


class TestShuffle:
    @given(WORDS, st.integers())
    def test_differing_permutation(self, words, seed):
        rng = random.Random(seed)
        try:
            out = shuffle_words(words, rng)
        except UncorruptibleError:
            assert len(set(words)) < 2
            return
        assert out != list(words)
        assert sorted(out) == sorted(words)

    def test_single_distinct_word_raises(self):
        with pytest.raises(UncorruptibleError):
            shuffle_words(["a", "a"], random.Random(0))


class TestItemSeed:
    def test_deterministic(self):
        assert item_seed(42, "s1") == item_seed(42, "s1")

    def test_varies_with_inputs(self):
        seeds = {item_seed(42, "s1"), item_seed(42, "s2"), item_seed(43, "s1")}
        assert len(seeds) == 3

    def test_range(self):
        assert 0 <= item_seed(0, "x") < 2 ** 64


class TestBuildJudgmentItem:
    SENTENCE = "mu kiem bal se nan"

    def test_deterministic(self):
        a = build_judgment_item(self.SENTENCE, CorruptionSetting.SWAP_ADJ, 7, "i1")
        b = build_judgment_item(self.SENTENCE, CorruptionSetting.SWAP_ADJ, 7, "i1")
        assert a == b

    def test_prompt_structure(self):
        item, prompt = build_judgment_item(
            self.SENTENCE, CorruptionSetting.SWAP_RAN, 3, "i2")
        lines = prompt.splitlines()
        assert "One of the following two Kalamang sentences" in lines[0]
        assert lines[1].startswith("A: ") and lines[2].startswith("B: ")
        assert "single letter A or B" in prompt
        assert prompt.endswith("Answer:")
        a_text, b_text = lines[1][3:], lines[2][3:]
        if item.presented_order is PresentedOrder.ORIGINAL_FIRST:
            assert (a_text, b_text) == (" ".join(item.original),
                                        " ".join(item.corrupted))
            assert item.correct_answer == "A"
        else:
            assert (a_text, b_text) == (" ".join(item.corrupted),
                                        " ".join(item.original))
            assert item.correct_answer == "B"

    def test_data_sections_prepended(self):
        sec = PromptSection(SectionKind.WORDLIST, "dictionary text\n")
        _, prompt = build_judgment_item(
            self.SENTENCE, CorruptionSetting.SWAP_ADJ, 1, "i3",
            data_sections=[sec])
        assert prompt.startswith("dictionary text\n")

    def test_presentation_order_balanced(self):
        a_count = 0
        for seed in range(2000):
            item, _ = build_judgment_item(
                self.SENTENCE, CorruptionSetting.SWAP_ADJ, seed, "x")
            if item.correct_answer == "A":
                a_count += 1
        # binomial(2000, 0.5): mean 1000, sd ~22.4; allow ~4.5 sd
        assert 900 < a_count < 1100

    def test_json_round_trip(self):
        item, _ = build_judgment_item(
            self.SENTENCE, CorruptionSetting.SHUFFLE, 11, "i4")
        assert JudgmentItem.from_json(item.to_json()) == item

    def test_uncorruptible_propagates(self):
        with pytest.raises(UncorruptibleError):
            build_judgment_item("ba ba", CorruptionSetting.SWAP_ADJ, 0, "i5")


class TestParseAnswer:
    @pytest.mark.parametrize("raw,want", [
        ("A", "A"), ("B", "B"), ("a", "A"), (" b\nbecause", "B"),
        ("A: mu kiem", "A"), ("", None), ("C", None), ("The answer is A", None),
    ])
    def test_cases(self, raw, want):
        assert parse_answer(raw) == want


class TestScoreJudgments:
    def _items(self, n, setting=CorruptionSetting.SWAP_RAN):
        return [build_judgment_item("mu kiem bal se nan os", setting,
                                    item_seed(5, f"s{i}"), f"s{i}")[0]
                for i in range(n)]

    def test_perfect_and_zero(self):
        items = self._items(20)
        right = [it.correct_answer for it in items]
        wrong = ["A" if a == "B" else "B" for a in right]
        assert score_judgments(items, right) == (1.0, 0)
        assert score_judgments(items, wrong) == (0.0, 0)

    def test_unparseable_counts_wrong(self):
        items = self._items(4)
        answers = [items[0].correct_answer, "??", "", items[3].correct_answer]
        acc, unparseable = score_judgments(items, answers)
        assert acc == 0.5 and unparseable == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            score_judgments(self._items(2), ["A"])

    def test_random_judge_near_chance(self):
        # Monte Carlo: a coin-flipping judge should land near 50% accuracy.
        items = self._items(10000)
        rng = random.Random(99)
        answers = [rng.choice("AB") for _ in items]
        acc, unparseable = score_judgments(items, answers)
        assert unparseable == 0
        # binomial sd ~0.5%; allow 4 sd
        assert 0.48 < acc < 0.52


class TestCorruptDispatch:
    def test_each_setting_changes_sentence(self):
        words = ["mu", "kiem", "bal", "se"]
        for setting in CorruptionSetting:
            out = corrupt(words, setting, random.Random(1))
            assert out != words and sorted(out) == sorted(words)
