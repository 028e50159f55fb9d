"""Translation and glossing metrics.

ChrF++ (character + word n-gram F-score) at sentence and corpus level,
and the four IGT metrics: morpheme accuracy, word accuracy, stem F1,
gram F1.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import SegmentedWord
from .errors import EmptyReferenceError, LengthMismatchError
from .glossing import GlossCategory, classify_piece

_EPS = 1e-16
_PUNCTUATION = set(string.punctuation)


@dataclass(frozen=True)
class ChrfParams:
    char_order: int = 6
    word_order: int = 2
    beta: float = 2.0
    epsilon: float = _EPS

    def __post_init__(self):
        if self.char_order < 1 or self.word_order < 0 or self.beta <= 0:
            raise ValueError("invalid ChrF parameters")


def _separate_punctuation(word: str) -> list[str]:
    # detach a single leading or trailing punctuation mark, as the standard
    # chrF++ scorer does
    if len(word) == 1:
        return [word]
    if word[-1] in _PUNCTUATION:
        return [word[:-1], word[-1]]
    if word[0] in _PUNCTUATION:
        return [word[0], word[1:]]
    return [word]


def chrf_word_tokens(text: str) -> list[str]:
    out: list[str] = []
    for word in text.strip().split():
        out.extend(_separate_punctuation(word))
    return out


def _ngram_counts(items: Sequence, order: int) -> Counter:
    return Counter(tuple(items[i:i + order]) for i in range(len(items) - order + 1))


@dataclass
class ChrfStatistics:
    """Per-order (hypothesis total, reference total, clipped matches)."""

    hyp: list[int]
    ref: list[int]
    match: list[int]

    @classmethod
    def zeros(cls, n_orders: int) -> "ChrfStatistics":
        return cls([0] * n_orders, [0] * n_orders, [0] * n_orders)

    def add(self, other: "ChrfStatistics") -> None:
        for i in range(len(self.hyp)):
            self.hyp[i] += other.hyp[i]
            self.ref[i] += other.ref[i]
            self.match[i] += other.match[i]


def sentence_statistics(hypothesis: str, reference: str,
                        params: ChrfParams) -> ChrfStatistics:
    """N-gram totals and clipped matches for one sentence pair."""
    stats = ChrfStatistics.zeros(params.char_order + params.word_order)
    hyp_chars = hypothesis.strip().replace(" ", "")
    ref_chars = reference.strip().replace(" ", "")
    hyp_words = chrf_word_tokens(hypothesis)
    ref_words = chrf_word_tokens(reference)

    for n in range(1, params.char_order + 1):
        h = _ngram_counts(hyp_chars, n)
        r = _ngram_counts(ref_chars, n)
        idx = n - 1
        stats.hyp[idx] = sum(h.values())
        stats.ref[idx] = sum(r.values())
        stats.match[idx] = sum((h & r).values())
    for n in range(1, params.word_order + 1):
        h = _ngram_counts(hyp_words, n)
        r = _ngram_counts(ref_words, n)
        idx = params.char_order + n - 1
        stats.hyp[idx] = sum(h.values())
        stats.ref[idx] = sum(r.values())
        stats.match[idx] = sum((h & r).values())
    return stats


def score_from_statistics(stats: ChrfStatistics, params: ChrfParams) -> float:
    """Average P and R over effective orders, then F-beta, scaled to 100.

    Orders with zero totals on both sides are skipped; a zero total on one
    side only contributes epsilon.
    """
    avg_prec = avg_rec = 0.0
    effective = 0
    for h, r, m in zip(stats.hyp, stats.ref, stats.match):
        if h == 0 and r == 0:
            continue
        effective += 1
        avg_prec += m / h if h > 0 else params.epsilon
        avg_rec += m / r if r > 0 else params.epsilon
    if effective == 0:
        return 0.0
    avg_prec /= effective
    avg_rec /= effective
    if avg_prec + avg_rec == 0:
        return 0.0
    b2 = params.beta ** 2
    denom = b2 * avg_prec + avg_rec
    if denom == 0:
        return 0.0
    return 100.0 * (1 + b2) * avg_prec * avg_rec / denom


def chrf_pp(hypothesis: str, reference: str,
            params: ChrfParams | None = None) -> float:
    """Sentence-level ChrF++ in [0, 100]."""
    params = params or ChrfParams()
    if not reference.strip():
        raise EmptyReferenceError("empty reference")
    return score_from_statistics(sentence_statistics(hypothesis, reference, params),
                                 params)


def corpus_chrf_pp(hypotheses: Sequence[str], references: Sequence[str],
                   params: ChrfParams | None = None) -> float:
    """Corpus-level ChrF++: n-gram statistics summed over all pairs first."""
    params = params or ChrfParams()
    if len(hypotheses) != len(references):
        raise LengthMismatchError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise LengthMismatchError("empty input")
    total = ChrfStatistics.zeros(params.char_order + params.word_order)
    for hyp, ref in zip(hypotheses, references):
        if not ref.strip():
            raise EmptyReferenceError("empty reference")
        total.add(sentence_statistics(hyp, ref, params))
    return score_from_statistics(total, params)


@dataclass
class IGTScore:
    morpheme_matches: int = 0
    morpheme_total: int = 0
    word_matches: int = 0
    word_total: int = 0
    stem_tp: int = 0
    stem_fp: int = 0
    stem_fn: int = 0
    gram_tp: int = 0
    gram_fp: int = 0
    gram_fn: int = 0

    def add(self, other: "IGTScore") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))


def _pieces_by_category(words: Sequence[str]) -> tuple[Counter, Counter]:
    stems: Counter = Counter()
    grams: Counter = Counter()
    for word in words:
        for morf in SegmentedWord.parse(word).morphemes:
            if classify_piece(morf) is GlossCategory.GRAM:
                grams[morf] += 1
            else:
                stems[morf] += 1
    return stems, grams


def score_igt(predicted_gloss_line: str, reference_gloss_line: str) -> IGTScore:
    """Positional alignment of gloss words and morphemes; padding on length
    mismatch counts as mismatch. Stem/gram counts are multiset tp/fp/fn."""
    pred_words = predicted_gloss_line.split()
    ref_words = reference_gloss_line.split()
    score = IGTScore()

    n_words = max(len(pred_words), len(ref_words))
    score.word_total = n_words
    for i in range(n_words):
        p = pred_words[i] if i < len(pred_words) else None
        r = ref_words[i] if i < len(ref_words) else None
        if p is not None and r is not None and p.strip() == r.strip():
            score.word_matches += 1
        p_morphs = SegmentedWord.parse(p).morphemes if p else ()
        r_morphs = SegmentedWord.parse(r).morphemes if r else ()
        n_morphs = max(len(p_morphs), len(r_morphs))
        score.morpheme_total += n_morphs
        for j in range(n_morphs):
            pm = p_morphs[j].strip() if j < len(p_morphs) else None
            rm = r_morphs[j].strip() if j < len(r_morphs) else None
            if pm is not None and pm == rm:
                score.morpheme_matches += 1

    pred_stems, pred_grams = _pieces_by_category(pred_words)
    ref_stems, ref_grams = _pieces_by_category(ref_words)
    score.stem_tp = sum((pred_stems & ref_stems).values())
    score.stem_fp = sum((pred_stems - ref_stems).values())
    score.stem_fn = sum((ref_stems - pred_stems).values())
    score.gram_tp = sum((pred_grams & ref_grams).values())
    score.gram_fp = sum((pred_grams - ref_grams).values())
    score.gram_fn = sum((ref_grams - pred_grams).values())
    return score


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 100.0 * 2 * tp / denom if denom else 0.0


def aggregate_igt(scores: Iterable[IGTScore]) -> tuple[float, float, float, float]:
    """Micro-averaged (morpheme acc, word acc, stem F1, gram F1) percentages."""
    total = IGTScore()
    count = 0
    for s in scores:
        total.add(s)
        count += 1
    if count == 0:
        raise ValueError("empty score list")
    morph = 100.0 * total.morpheme_matches / total.morpheme_total if total.morpheme_total else 0.0
    word = 100.0 * total.word_matches / total.word_total if total.word_total else 0.0
    return (
        morph,
        word,
        _f1(total.stem_tp, total.stem_fp, total.stem_fn),
        _f1(total.gram_tp, total.gram_fp, total.gram_fn),
    )
