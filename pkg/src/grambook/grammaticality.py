"""Corruption generation and scoring for two-alternative grammaticality
judgments.

Three corruption settings of increasing severity: swap one adjacent word
pair, swap two random words, shuffle all words. Items are deterministic
given (sentence, setting, seed).
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import UncorruptibleError
from .prompts import Prompt, PromptSection, SectionKind, lang_name


class CorruptionSetting(Enum):
    SWAP_ADJ = "swap_adj"
    SWAP_RAN = "swap_ran"
    SHUFFLE = "shuffle"


class PresentedOrder(Enum):
    ORIGINAL_FIRST = "original_first"
    CORRUPTED_FIRST = "corrupted_first"


@dataclass(frozen=True)
class JudgmentItem:
    id: str
    original: tuple[str, ...]
    corrupted: tuple[str, ...]
    setting: CorruptionSetting
    presented_order: PresentedOrder
    correct_answer: str  # "A" or "B"
    seed: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "setting": self.setting.value,
            "original": list(self.original),
            "corrupted": list(self.corrupted),
            "presented_order": self.presented_order.value,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "JudgmentItem":
        order = PresentedOrder(obj["presented_order"])
        return cls(
            id=obj["id"],
            original=tuple(obj["original"]),
            corrupted=tuple(obj["corrupted"]),
            setting=CorruptionSetting(obj["setting"]),
            presented_order=order,
            correct_answer="A" if order is PresentedOrder.ORIGINAL_FIRST else "B",
            seed=obj["seed"],
        )


def swap_adjacent(words: Sequence[str], rng: random.Random) -> list[str]:
    """Exchange one uniformly chosen unequal adjacent pair."""
    candidates = [i for i in range(len(words) - 1) if words[i] != words[i + 1]]
    if not candidates:
        raise UncorruptibleError("no unequal adjacent pair")
    i = rng.choice(candidates)
    out = list(words)
    out[i], out[i + 1] = out[i + 1], out[i]
    return out


def swap_random(words: Sequence[str], rng: random.Random) -> list[str]:
    """Exchange two uniformly chosen distinct, unequal positions."""
    candidates = [(i, j) for i in range(len(words)) for j in range(i + 1, len(words))
                  if words[i] != words[j]]
    if not candidates:
        raise UncorruptibleError("all words identical")
    i, j = rng.choice(candidates)
    out = list(words)
    out[i], out[j] = out[j], out[i]
    return out


def shuffle_words(words: Sequence[str], rng: random.Random,
                  max_draws: int = 100) -> list[str]:
    """Uniform permutation, re-drawn until it differs from the input."""
    if len(set(words)) < 2:
        raise UncorruptibleError("all words identical")
    for _ in range(max_draws):
        out = list(words)
        rng.shuffle(out)
        if out != list(words):
            return out
    raise UncorruptibleError(f"no differing permutation in {max_draws} draws")


_CORRUPTIONS = {
    CorruptionSetting.SWAP_ADJ: swap_adjacent,
    CorruptionSetting.SWAP_RAN: swap_random,
    CorruptionSetting.SHUFFLE: shuffle_words,
}


def corrupt(words: Sequence[str], setting: CorruptionSetting,
            rng: random.Random) -> list[str]:
    return _CORRUPTIONS[setting](words, rng)


def item_seed(global_seed: int, item_id: str) -> int:
    """Stable per-item seed derived from the global seed and item id."""
    digest = hashlib.sha256(f"{global_seed}:{item_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


_JUDGMENT_TEMPLATE = """\
One of the following two {language} sentences is an original sentence written by a speaker, and the other has been modified. Decide which sentence is the original, grammatically correct one.
A: {first}
B: {second}
Answer with the single letter A or B on the first line of your response, with no other text before it. You must choose one of the two, even if you are not sure; do not say that you cannot tell. Only explain your reasoning after giving your answer.
Answer:"""


def build_judgment_item(original_sentence: str, setting: CorruptionSetting,
                        seed: int, item_id: str = "",
                        language: str = "kgv",
                        data_sections: Sequence[PromptSection] = ()) -> tuple[JudgmentItem, str]:
    """Create a seeded corruption item and its two-alternative prompt text."""
    words = tuple(original_sentence.split())
    rng = random.Random(seed)
    corrupted = tuple(corrupt(words, setting, rng))
    original_first = rng.random() < 0.5
    order = (PresentedOrder.ORIGINAL_FIRST if original_first
             else PresentedOrder.CORRUPTED_FIRST)
    item = JudgmentItem(
        id=item_id,
        original=words,
        corrupted=corrupted,
        setting=setting,
        presented_order=order,
        correct_answer="A" if original_first else "B",
        seed=seed,
    )
    first = " ".join(words if original_first else corrupted)
    second = " ".join(corrupted if original_first else words)
    prompt = "".join(s.text for s in data_sections) + _JUDGMENT_TEMPLATE.format(
        language=lang_name(language), first=first, second=second
    )
    return item, prompt


def parse_answer(response: str) -> str | None:
    """First non-whitespace character of the trimmed response, if A/B."""
    stripped = response.strip()
    if not stripped:
        return None
    first = stripped[0].upper()
    return first if first in ("A", "B") else None


def score_judgments(items: Sequence[JudgmentItem],
                    model_answers: Sequence[str]) -> tuple[float, int]:
    """(accuracy, unparseable count); unparseable answers count as wrong."""
    if len(items) != len(model_answers):
        raise ValueError("one answer required per item")
    correct = 0
    unparseable = 0
    for item, answer in zip(items, model_answers):
        parsed = parse_answer(answer)
        if parsed is None:
            unparseable += 1
        elif parsed == item.correct_answer:
            correct += 1
    return (correct / len(items) if items else 0.0, unparseable)
