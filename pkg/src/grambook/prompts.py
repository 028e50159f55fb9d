"""Prompt construction for every experiment setting.

Each prompt keeps per-section provenance so token and coverage accounting
can exclude instruction boilerplate. Also houses the non-LLM
word-for-word (W4W) baseline.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .corpus import ParallelPair, TypFeature, WordlistEntry, UNKNOWN_CODE
from .errors import DuplicateInstructionError, EmptyPoolError, MissingGlossError
from .textproc import lcs_ratio, normalize_type, tokenize_words

LANGUAGE_NAMES = {
    "kgv": "Kalamang",
    "eng": "English",
    "npi": "Nepali",
    "gug": "Guarani",
}

# intro blurb for the zero-shot template, per language
LANGUAGE_BLURBS = {
    "kgv": "Kalamang is a language spoken on the Karas Islands in West Papua.",
    "npi": "Nepali is a language spoken mainly in Nepal.",
    "gug": "Guarani is a language spoken mainly in Paraguay.",
    "eng": "English is a language spoken worldwide.",
}


def lang_name(code: str) -> str:
    return LANGUAGE_NAMES.get(code, code)


class SectionKind(Enum):
    INSTRUCTION = "instruction"
    WORDLIST = "wordlist"
    PARALLEL = "parallel"
    PARALLEL_IGT = "parallel_igt"
    BOOK_ALL = "book_all"
    BOOK_PARA = "book_para"
    BOOK_NON_PARA = "book_non_para"
    TYPOLOGY = "typology"
    RETRIEVED = "retrieved"
    SOURCE_LINE = "source_line"


_NO_COVERAGE = {SectionKind.INSTRUCTION, SectionKind.SOURCE_LINE}


@dataclass(frozen=True)
class PromptSection:
    kind: SectionKind
    text: str

    @property
    def counts_for_coverage(self) -> bool:
        return self.kind not in _NO_COVERAGE


@dataclass(frozen=True)
class Prompt:
    sections: tuple[PromptSection, ...]
    direction: tuple[str, str]
    setting_name: str

    def __post_init__(self):
        kinds = [s.kind for s in self.sections]
        if kinds.count(SectionKind.INSTRUCTION) != 1:
            raise DuplicateInstructionError(
                f"expected exactly one instruction section, got "
                f"{kinds.count(SectionKind.INSTRUCTION)}"
            )
        if kinds.count(SectionKind.SOURCE_LINE) != 1:
            raise DuplicateInstructionError(
                f"expected exactly one source_line section, got "
                f"{kinds.count(SectionKind.SOURCE_LINE)}"
            )

    def text(self) -> str:
        return "".join(s.text for s in self.sections)

    def data_text(self) -> str:
        return "".join(s.text for s in self.sections if s.counts_for_coverage)

    def to_json(self, source_id: str | None = None) -> dict:
        obj = {
            "setting": self.setting_name,
            "direction": list(self.direction),
            "sections": [{"kind": s.kind.value, "text": s.text} for s in self.sections],
        }
        if source_id is not None:
            obj["source_id"] = source_id
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Prompt":
        return cls(
            sections=tuple(PromptSection(SectionKind(s["kind"]), s["text"])
                           for s in obj["sections"]),
            direction=tuple(obj["direction"]),
            setting_name=obj["setting"],
        )


_INSTRUCTION_TEMPLATE = """\
{blurb} Translate the following sentence from {src} to {tgt}: {source}
Now write the translation. If you are not sure what the translation should be, then give your best guess.
Do not say that you do not speak {src}. Do not say you do not have enough information, you must make a guess. If your translation is wrong, that is fine, but you have to provide a translation.
Your translation must be on the first line of your response, with no other text before the translation. Only explain your reasoning after providing the translation.
It is crucial that you only give the translation on the first line of your response, otherwise you will fail. Now write the translation:
"""


def _instruction_section(direction: tuple[str, str], source_sentence: str) -> PromptSection:
    src, tgt = direction
    blurb_lang = src if src != "eng" else tgt
    text = _INSTRUCTION_TEMPLATE.format(
        blurb=LANGUAGE_BLURBS.get(blurb_lang, f"{lang_name(blurb_lang)} is a language."),
        src=lang_name(src), tgt=lang_name(tgt), source=source_sentence,
    )
    return PromptSection(SectionKind.INSTRUCTION, text)


def _source_line_section(direction: tuple[str, str], source_sentence: str) -> PromptSection:
    src, tgt = direction
    return PromptSection(SectionKind.SOURCE_LINE,
                         f"{lang_name(src)}: {source_sentence} {lang_name(tgt)}:")


def build_zero_shot(direction: tuple[str, str], source_sentence: str) -> Prompt:
    """The baseline prompt: instruction plus source line, no data sections."""
    return compose("0-shot", [], direction, source_sentence)


def compose(setting_name: str, sections: Sequence[PromptSection],
            direction: tuple[str, str], source_sentence: str) -> Prompt:
    """Assemble data sections ahead of the instruction and source line."""
    for s in sections:
        if s.kind in (SectionKind.INSTRUCTION, SectionKind.SOURCE_LINE):
            raise DuplicateInstructionError(
                f"data sections may not include {s.kind.value}"
            )
    return Prompt(
        sections=tuple(sections) + (
            _instruction_section(direction, source_sentence),
            _source_line_section(direction, source_sentence),
        ),
        direction=tuple(direction),
        setting_name=setting_name,
    )


def build_wordlist_prompt(entries: Sequence[WordlistEntry],
                          direction: tuple[str, str] = ("kgv", "eng")) -> PromptSection:
    """One line per entry: "Kalamang: {head} = English: {trans}"."""
    if not entries:
        raise ValueError("empty wordlist")
    xlr, hr = _xlr_first(direction)
    lines = [f"To help with the translation, here is a {xlr}-{hr} word list:"]
    for e in entries:
        lines.append(f"{xlr}: {e.headword} = {hr}: {e.translation}")
    return PromptSection(SectionKind.WORDLIST, "\n".join(lines) + "\n")


def _xlr_first(direction: tuple[str, str]) -> tuple[str, str]:
    # data sections are framed XLR-first regardless of direction
    src, tgt = direction
    if src == "eng":
        src, tgt = tgt, src
    return lang_name(src), lang_name(tgt)


def build_parallel_prompt(pairs: Sequence[ParallelPair], with_gloss: bool = False,
                          direction: tuple[str, str] = ("kgv", "eng")) -> PromptSection:
    """Parallel example section, plain or with interlinear glosses."""
    if not pairs:
        raise ValueError("empty pair list")
    xlr, hr = _xlr_first(direction)
    lines = [f"To help with the translation, here are some example {xlr}-{hr} "
             "parallel sentences:"]
    for p in pairs:
        if with_gloss:
            if p.gloss is None:
                raise MissingGlossError(f"pair {p.id} has no gloss line")
            lines.append(f"{xlr}: {p.source} = Interlinear gloss: {p.gloss} = "
                         f"{hr} translation: {p.target}")
        else:
            lines.append(f"{xlr}: {p.source}")
            lines.append(f"{hr} translation: {p.target}")
    kind = SectionKind.PARALLEL_IGT if with_gloss else SectionKind.PARALLEL
    return PromptSection(kind, "\n".join(lines) + "\n")


_BOOK_KINDS = {
    "all": SectionKind.BOOK_ALL,
    "para": SectionKind.BOOK_PARA,
    "non_para": SectionKind.BOOK_NON_PARA,
}


def build_book_prompt(book_text: str, subset: str = "all",
                      direction: tuple[str, str] = ("kgv", "eng")) -> PromptSection:
    """Grammar book (or one of its subsets) as a prompt section."""
    xlr, hr = _xlr_first(direction)
    header = (f"To help with the translation, here is the full text of a "
              f"{xlr}-{hr} grammar book:\n---\n")
    return PromptSection(_BOOK_KINDS[subset], header + book_text)


@dataclass(frozen=True)
class RetrievedExample:
    pair: ParallelPair
    trigger_word: str
    score: float


def retrieve_star_shot(source_sentence: str, pool: Sequence[ParallelPair],
                       k: int = 5, pool_side: str = "source") -> list[RetrievedExample]:
    """Retrieve the top-k pool pairs per source word by LCS similarity.

    Each source word scores every pool pair by the maximum lcs_ratio against
    any word of the pair's same-language side; per-word top-k lists are
    concatenated in sentence order and deduplicated by pair id (first
    occurrence kept). Punctuation tokens trigger no retrieval.
    """
    if not pool:
        raise EmptyPoolError("retrieval pool is empty")
    if k < 1:
        raise ValueError("k must be >= 1")

    pool_words = []
    for pair in pool:
        side = pair.source if pool_side == "source" else pair.target
        words = [w for w in (normalize_type(t) for t in tokenize_words(side)) if w]
        pool_words.append(words)

    ordered: list[RetrievedExample] = []
    for token in tokenize_words(source_sentence):
        word = normalize_type(token)
        if word is None:
            continue
        scored = []
        for idx, (pair, words) in enumerate(zip(pool, pool_words)):
            best = max((lcs_ratio(word, pw) for pw in words), default=0.0)
            scored.append((-best, idx))  # ties broken by pool order
        scored.sort()
        for neg_score, idx in scored[:k]:
            ordered.append(RetrievedExample(pool[idx], word, -neg_score))

    seen: set[str] = set()
    result = []
    for r in ordered:
        if r.pair.id not in seen:
            seen.add(r.pair.id)
            result.append(r)
    return result


def build_star_shot_section(retrieved: Sequence[RetrievedExample],
                            direction: tuple[str, str] = ("kgv", "eng")) -> PromptSection:
    """Render retrieved examples with the per-word framing line."""
    xlr, hr = _xlr_first(direction)
    lines = []
    for r in retrieved:
        lines.append(
            f"To help with the translation, here is a translated sentence with "
            f"words similar to {r.trigger_word} in a list of translated "
            f"{xlr}-{hr} reference sentences:"
        )
        lines.append(f"{xlr}: {r.pair.source}")
        lines.append(f"{hr} translation: {r.pair.target}")
    return PromptSection(SectionKind.RETRIEVED, "\n".join(lines) + "\n")


_QUESTION_PREFIXES = re.compile(
    r"(?i)^(are there|is there a|is there|are|is|does the language have|"
    r"do|does|can)\s+"
)


def _feature_topic(question: str) -> str:
    topic = question.strip().rstrip("?").strip()
    topic = _QUESTION_PREFIXES.sub("", topic)
    return topic[:1].lower() + topic[1:] if topic else topic


def _code_meaning(label: str) -> str:
    return {"absent": "the feature is absent", "present": "the feature is present"}.get(
        label, f"the value is {label}"
    )


def build_typ_prompt(features: Sequence[TypFeature],
                     direction: tuple[str, str]) -> PromptSection:
    """Rule-based rendering of Grambank features for a language pair."""
    if not features:
        raise ValueError("empty feature list")
    l1, l2 = lang_name(direction[0]), lang_name(direction[1])
    out = [
        f"The following typological features describe the grammatical features "
        f"of {l1} and {l2} including word order, verbal tense, nominal case, "
        f"and other language universals. Each feature is assigned a value that "
        f"indicates the extent to which the language tends to exhibit that "
        f"feature.",
        "",
    ]
    for feat in features:
        topic = _feature_topic(feat.question)
        out.append(f"Feature ID: {feat.feature_id}")
        out.append(feat.question)
        for code_lang in direction:
            if code_lang not in feat.values:
                continue
            name = lang_name(code_lang)
            label, code = feat.values[code_lang]
            out.append(f"{name} Value: {label}, Code {code}")
            if code == UNKNOWN_CODE:
                out.append("")
                continue
            out.append(f"{name} is coded {code} for this feature, meaning "
                       f"{_code_meaning(label)}.")
            if code in ("0", "1"):
                verb = ("obligatorily encodes" if code == "1"
                        else "does not obligatorily encode")
                out.append(f"This feature indicates {name} {verb} the "
                           f"grammatical function of {topic}.")
            out.append("")
        out.append("---")
        out.append("")
        out.append("Below is a short summary of the grammatical feature, an "
                   "explanation of the process for assigning the feature's "
                   "code, and examples of the feature from other languages "
                   "including interlinear glossed text.")
        out.append("")
        out.append("---")
        out.append("")
        out.append(feat.question)
        if feat.summary:
            out.append("")
            out.append("Summary")
            out.append(feat.summary)
        if feat.procedure:
            out.append("")
            out.append("Procedure")
            out.append(feat.procedure)
        out.append("")
        out.append(f'This is the end of the summary for feature '
                   f'{feat.feature_id}: "{feat.question}".')
        out.append("---")
        out.append("")
    out.append(f"This is the end of the typological feature summary for {l1} "
               f"and {l2}.")
    return PromptSection(SectionKind.TYPOLOGY, "\n".join(out) + "\n")


def count_prompt_tokens(prompt: Prompt) -> int:
    """Token count over data sections only; instruction boilerplate excluded."""
    return len(tokenize_words(prompt.data_text()))


def w4w_translate_tokens(source_sentence: str, wordlist: Sequence[WordlistEntry],
                         threshold: float = 0.5) -> list[str]:
    """One translation unit per source token; see w4w_translate."""
    if not wordlist:
        raise ValueError("empty wordlist")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")

    exact: dict[str, str] = {}
    for e in wordlist:
        exact.setdefault(e.headword.casefold(), e.translation)

    out = []
    for token in tokenize_words(source_sentence):
        key = token.casefold()
        if key in exact:
            out.append(exact[key])
            continue
        best_ratio, best_translation = threshold, None
        for e in wordlist:
            ratio = lcs_ratio(key, e.headword.casefold())
            if ratio >= threshold and (best_translation is None or ratio > best_ratio):
                best_ratio, best_translation = ratio, e.translation
        out.append(best_translation if best_translation is not None else token)
    return out


def w4w_translate(source_sentence: str, wordlist: Sequence[WordlistEntry],
                  threshold: float = 0.5) -> str:
    """Word-for-word translation with exact-then-fuzzy dictionary lookup.

    Exact casefolded headword matches win; otherwise the entry maximizing
    lcs_ratio wins if it clears the threshold (ties by wordlist order);
    otherwise the token is copied through.
    """
    return " ".join(w4w_translate_tokens(source_sentence, wordlist, threshold))
