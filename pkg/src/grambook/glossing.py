"""Gloss-line support for IGT prediction.

Stem/gram classification of gloss pieces, the Top-Class most-frequent-gloss
baseline, and gloss-prediction prompt construction.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .corpus import IGTExample, SegmentedWord
from .prompts import Prompt, PromptSection, SectionKind, compose, lang_name


class GlossCategory(Enum):
    STEM = "stem"
    GRAM = "gram"


@dataclass(frozen=True)
class GlossPiece:
    text: str
    category: GlossCategory


# A gloss piece is a grammatical label iff every alphabetic character is
# uppercase and it contains only letters, digits, and periods: IAM, OBJ,
# 3SG, PL.NL. Everything else is a lexical stem.
_GRAM_RE = re.compile(r"^[A-Z0-9.]+$")


def classify_piece(text: str) -> GlossCategory:
    if _GRAM_RE.match(text) and any(c.isalpha() or c.isdigit() for c in text):
        return GlossCategory.GRAM
    return GlossCategory.STEM


def split_gloss_word(word: str) -> SegmentedWord:
    """Split a gloss word on "-" and "=" preserving separators."""
    if not word:
        raise ValueError("empty gloss word")
    return SegmentedWord.parse(word)


def gloss_pieces(word: str) -> list[GlossPiece]:
    seg = split_gloss_word(word)
    return [GlossPiece(m, classify_piece(m)) for m in seg.morphemes]


@dataclass(frozen=True)
class TopClassModel:
    """Per-morpheme most-frequent-gloss mapping, ties lexicographic."""

    table: dict[str, str]
    training_morphemes: int

    def to_tsv(self, path: str | Path, counts: dict[str, int] | None = None) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for morf in sorted(self.table):
                count = counts.get(morf, 0) if counts else 0
                fh.write(f"{morf}\t{self.table[morf]}\t{count}\n")

    @classmethod
    def from_tsv(cls, path: str | Path) -> "TopClassModel":
        table = {}
        total = 0
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                morf, gloss, count = line.rstrip("\n").split("\t")
                table[morf] = gloss
                total += int(count)
        return cls(table=table, training_morphemes=total)


def train_topclass(train: Sequence[IGTExample]) -> TopClassModel:
    """Reduce per-morpheme gloss frequencies to argmax, lexicographic ties."""
    if not train:
        raise ValueError("empty training set")
    counts: dict[str, Counter] = {}
    total = 0
    for ex in train:
        for t_word, g_word in zip(ex.transcription, ex.gloss):
            for morf, gloss in zip(t_word.morphemes, g_word.morphemes):
                counts.setdefault(morf.casefold(), Counter())[gloss] += 1
                total += 1
    table = {}
    for morf, counter in counts.items():
        # lexicographic tie-break: smallest gloss among max-count glosses
        top = max(counter.values())
        table[morf] = min(g for g, c in counter.items() if c == top)
    return TopClassModel(table=table, training_morphemes=total)


def predict_topclass(model: TopClassModel,
                     transcription: Sequence[SegmentedWord]) -> str:
    """Per-morpheme lookup; unknown morphemes fall back to their casefolded
    surface form. Separators are copied from the transcription."""
    words = []
    for word in transcription:
        glosses = tuple(model.table.get(m.casefold(), m.casefold())
                        for m in word.morphemes)
        words.append(SegmentedWord(glosses, word.separators).surface())
    return " ".join(words)


def split_train_dev(examples: Sequence[IGTExample], dev_fraction: float = 0.1,
                    seed: int = 0) -> tuple[list[IGTExample], list[IGTExample]]:
    """Split by sentences with a fixed seed; 90:10 by default."""
    import random

    order = list(examples)
    random.Random(seed).shuffle(order)
    n_dev = round(len(order) * dev_fraction)
    return order[n_dev:], order[:n_dev]


_GLOSS_INSTRUCTION = """\
The following {src} sentence has been segmented into morphemes. Write its interlinear gloss: one gloss word per sentence word, with gloss morphemes aligned one-to-one to the given segmentation and joined by the same separators. Use uppercase labels for grammatical morphemes and lowercase {tgt} translations for lexical stems.
Your gloss line must be on the first line of your response, with no other text before it. Only explain your reasoning after the gloss line. Now write the gloss.
{src}: {transcription}
{tgt} translation: {translation}
Interlinear gloss:"""


def build_gloss_prompt(example: IGTExample,
                       data_sections: Sequence[PromptSection] = ()) -> Prompt:
    """Gloss-prediction prompt: data sections, instruction, segmented input
    with its translation."""
    src = lang_name(example.source_lang)
    tgt = lang_name(example.target_lang)
    instruction = _GLOSS_INSTRUCTION.format(
        src=src, tgt=tgt,
        transcription=example.transcription_line(),
        translation=example.translation,
    )
    head, _, tail = instruction.rpartition(f"\n{src}: ")
    sections = tuple(data_sections) + (
        PromptSection(SectionKind.INSTRUCTION, head + "\n"),
        PromptSection(SectionKind.SOURCE_LINE, f"{src}: " + tail),
    )
    return Prompt(sections=sections, direction=(example.source_lang, example.target_lang),
                  setting_name="gloss")
