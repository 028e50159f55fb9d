"""Ingestion and validation of all source data.

Covers parallel pairs, wordlists, interlinear glossed text (IGT),
grammar-book text with parallel/non-parallel segmentation, and Grambank
feature tables.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    AlignmentError,
    EmptyLineError,
    FormatError,
    MalformedBlockError,
    MissingLanguageError,
)

logger = logging.getLogger(__name__)

SEPARATORS = ("-", "=")
_SEP_SPLIT = re.compile(r"([-=])")

UNKNOWN_CODE = "?"


@dataclass(frozen=True)
class SegmentedWord:
    """A surface word split into morphemes with their joining separators.

    ``separators`` has one entry per adjacent morpheme pair, so
    ``len(separators) == len(morphemes) - 1``.
    """

    morphemes: tuple[str, ...]
    separators: tuple[str, ...]

    def __post_init__(self):
        if len(self.separators) != len(self.morphemes) - 1:
            raise ValueError("separator count must be morpheme count - 1")
        if any(not m for m in self.morphemes):
            raise ValueError("empty morpheme")

    def surface(self) -> str:
        parts = [self.morphemes[0]]
        for sep, morph in zip(self.separators, self.morphemes[1:]):
            parts.append(sep)
            parts.append(morph)
        return "".join(parts)

    @classmethod
    def parse(cls, word: str) -> "SegmentedWord":
        pieces = _SEP_SPLIT.split(word)
        morphemes = tuple(pieces[0::2])
        separators = tuple(pieces[1::2])
        return cls(morphemes, separators)


@dataclass(frozen=True)
class IGTExample:
    """A transcription / gloss / translation triple with morpheme segmentation."""

    id: str
    transcription: tuple[SegmentedWord, ...]
    gloss: tuple[SegmentedWord, ...]
    translation: str
    source_lang: str = "kgv"
    target_lang: str = "eng"

    def __post_init__(self):
        if len(self.transcription) != len(self.gloss):
            raise AlignmentError(
                f"{self.id}: {len(self.transcription)} transcription words vs "
                f"{len(self.gloss)} gloss words"
            )

    def transcription_line(self) -> str:
        return " ".join(w.surface() for w in self.transcription)

    def gloss_line(self) -> str:
        return " ".join(w.surface() for w in self.gloss)


@dataclass(frozen=True)
class ParallelPair:
    id: str
    source: str
    target: str
    gloss: str | None = None

    def __post_init__(self):
        if not self.source.strip() or not self.target.strip():
            raise ValueError(f"{self.id}: empty source or target")


@dataclass(frozen=True)
class WordlistEntry:
    headword: str
    translation: str

    def __post_init__(self):
        if not self.headword:
            raise ValueError("empty headword")


class SegmentLabel(Enum):
    PARALLEL = "parallel"
    NON_PARALLEL = "non_parallel"


@dataclass(frozen=True)
class BookSegment:
    text: str
    label: SegmentLabel
    line_start: int
    line_end: int  # exclusive


@dataclass(frozen=True)
class BookDocument:
    language: str
    segments: tuple[BookSegment, ...]

    def full_text(self) -> str:
        return "".join(s.text for s in self.segments)


@dataclass(frozen=True)
class TypFeature:
    """One Grambank feature with per-language value codes and descriptive text."""

    feature_id: str
    question: str
    values: dict[str, tuple[str, str]]  # lang code -> (value label, code or "?")
    summary: str = ""
    procedure: str = ""


@dataclass(frozen=True)
class DatasetSplit:
    name: str  # train | dev | test
    examples: tuple = ()

    def __post_init__(self):
        ids = [e.id for e in self.examples]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate ids in split {self.name}")


_QUOTE_PAIRS = [("'", "'"), ('"', '"'), ("‘", "’"), ("“", "”"), ("`", "'")]


def strip_quotes(text: str) -> str:
    """Remove one layer of matching single/double/typographic quotes."""
    text = text.strip()
    for left, right in _QUOTE_PAIRS:
        if len(text) >= 2 and text.startswith(left) and text.endswith(right):
            return text[len(left):-len(right)]
    return text


def parse_igt_block(text: str, example_id: str = "", source_lang: str = "kgv",
                    target_lang: str = "eng") -> IGTExample:
    """Parse a three-line IGT block into an aligned example.

    Lines are transcription, gloss, translation. Words split into morphemes
    on "-" and "=" with the separators recorded; the translation keeps its
    text verbatim with one surrounding quote layer stripped.
    """
    lines = [ln for ln in text.strip("\n").split("\n")]
    if len(lines) != 3:
        raise EmptyLineError(f"expected 3 lines, got {len(lines)}")
    for i, ln in enumerate(lines):
        if not ln.strip():
            raise EmptyLineError(f"line {i + 1} is blank")
    trans_words = lines[0].split()
    gloss_words = lines[1].split()
    if len(trans_words) != len(gloss_words):
        raise AlignmentError(
            f"{len(trans_words)} transcription words vs {len(gloss_words)} gloss words"
        )
    return IGTExample(
        id=example_id,
        transcription=tuple(SegmentedWord.parse(w) for w in trans_words),
        gloss=tuple(SegmentedWord.parse(w) for w in gloss_words),
        translation=strip_quotes(lines[2]),
        source_lang=source_lang,
        target_lang=target_lang,
    )


@dataclass(frozen=True)
class BookFormatRules:
    """Per-book markup conventions for recognising parallel content.

    The three released books differ in formatting, so recognition is a rule
    table rather than hard-coded patterns.
    """

    # line that opens a numbered example block, e.g. "(17)" or "17."
    example_marker: str = r"^\s*\(\d+[a-z]?\)"
    # translation line of an example block (quoted free translation)
    translation_line: str = r"^\s*[`'\"‘“].*[`'\"’”]\s*$"
    # inline bilingual word/phrase pair, e.g. "kiem 'to run'"
    wordpair_line: str = r"^\s*\S+\s+[`'‘][^'’]+['’]\s*$"
    # whether a bare transcription/gloss/translation triple (no number
    # marker) counts as an example block
    allow_unnumbered_triples: bool = True

    def to_json(self) -> dict:
        return {
            "example_marker": self.example_marker,
            "translation_line": self.translation_line,
            "wordpair_line": self.wordpair_line,
            "allow_unnumbered_triples": self.allow_unnumbered_triples,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BookFormatRules":
        return cls(**obj)


def _is_aligned_pair(a: str, b: str) -> bool:
    return bool(a.split()) and len(a.split()) == len(b.split())


def segment_book(book_text: str, rules: BookFormatRules | None = None,
                 language: str = "kgv") -> BookDocument:
    """Split a grammar book into parallel and non-parallel segments.

    Example blocks (numbered or bare transcription/gloss/translation triples)
    and inline word-pair lines are labelled parallel; everything else is
    prose. Blocks whose gloss alignment fails are logged and fall back to
    non-parallel rather than aborting the book.
    """
    rules = rules or BookFormatRules()
    marker_re = re.compile(rules.example_marker)
    translation_re = re.compile(rules.translation_line)
    wordpair_re = re.compile(rules.wordpair_line)

    lines = book_text.splitlines(keepends=True)
    labels: list[SegmentLabel] = [SegmentLabel.NON_PARALLEL] * len(lines)

    def text_at(i: int) -> str:
        return lines[i].rstrip("\n") if i < len(lines) else ""

    i = 0
    while i < len(lines):
        line = text_at(i)
        if not line.strip():
            i += 1
            continue
        # candidate example block: [marker,] transcription, gloss, translation
        marker = marker_re.match(line)
        t_line = g_line = tr_line = None
        if marker:
            rest = line[marker.end():].strip()
            if rest:  # marker prefixes the transcription line
                t_line, g_line, tr_line = rest, text_at(i + 1), text_at(i + 2)
                end = i + 3
            else:  # marker on its own line
                t_line, g_line, tr_line = text_at(i + 1), text_at(i + 2), text_at(i + 3)
                end = i + 4
        elif rules.allow_unnumbered_triples:
            t_line, g_line, tr_line = line, text_at(i + 1), text_at(i + 2)
            end = i + 3
        if (t_line and t_line.strip() and g_line and g_line.strip()
                and tr_line is not None and translation_re.match(tr_line)):
            end = min(end, len(lines))
            if _is_aligned_pair(t_line, g_line):
                for j in range(i, end):
                    labels[j] = SegmentLabel.PARALLEL
            else:
                err = MalformedBlockError(
                    f"gloss alignment failed at lines {i + 1}-{end}", i, end
                )
                logger.warning("%s; block kept as non_parallel", err)
            i = end
            continue
        if wordpair_re.match(line):
            labels[i] = SegmentLabel.PARALLEL
        i += 1

    # merge consecutive same-label lines into segments
    segments: list[BookSegment] = []
    idx = 0
    while idx < len(lines):
        label = labels[idx]
        j = idx
        while j < len(lines) and labels[j] == label:
            j += 1
        segments.append(BookSegment("".join(lines[idx:j]), label, idx, j))
        idx = j
    return BookDocument(language=language, segments=tuple(segments))


class Subset(Enum):
    ALL = "all"
    PARA = "para"
    NON_PARA = "non_para"


_SUBSET_LABEL = {
    Subset.PARA: SegmentLabel.PARALLEL,
    Subset.NON_PARA: SegmentLabel.NON_PARALLEL,
}


def project_subset(doc: BookDocument, which: Subset | str) -> str:
    """Concatenate matching segments in original order; ``all`` is the full book."""
    which = Subset(which) if isinstance(which, str) else which
    if which is Subset.ALL:
        return doc.full_text()
    wanted = _SUBSET_LABEL[which]
    return "".join(s.text for s in doc.segments if s.label is wanted)


def book_stats(text: str) -> tuple[int, int]:
    """(non-empty line count, whitespace-split token count)."""
    lines = sum(1 for ln in text.split("\n") if ln.strip())
    tokens = len(text.split())
    return lines, tokens


def load_wordlist(path: str | Path) -> list[WordlistEntry]:
    """Load a two-column tab-separated wordlist; homographs are kept."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise FormatError(
                    f"expected 2 tab-separated columns, got {len(cols)}", lineno
                )
            entries.append(WordlistEntry(cols[0].strip(), cols[1].strip()))
    return entries


def load_parallel(path: str | Path) -> list[ParallelPair]:
    """Load parallel pairs from JSON-lines: {"id","source","target","gloss"?}."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            pairs.append(ParallelPair(obj["id"], obj["source"], obj["target"],
                                      obj.get("gloss")))
    return pairs


def load_igt(path: str | Path, source_lang: str = "kgv",
             target_lang: str = "eng") -> list[IGTExample]:
    """Load IGT examples from JSON-lines with raw segmented lines."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            block = "\n".join([obj["transcription"], obj["gloss"], obj["translation"]])
            examples.append(parse_igt_block(block, example_id=obj["id"],
                                            source_lang=source_lang,
                                            target_lang=target_lang))
    return examples


def serialize_igt(example: IGTExample) -> dict:
    return {
        "id": example.id,
        "transcription": example.transcription_line(),
        "gloss": example.gloss_line(),
        "translation": example.translation,
    }


# Grambank release layout: a directory with values.csv (Language_ID ×
# Parameter_ID × Value), parameters.csv (feature questions), and optionally
# codes.csv (per-feature value labels).

_DEFAULT_CODE_LABELS = {"0": "absent", "1": "present", "2": "both"}


def load_grambank(path: str | Path, language_codes: Sequence[str]) -> list[TypFeature]:
    """Load Grambank features for the requested languages.

    Returns one feature per id with a value for at least one requested
    language; unknown values ("?") are kept explicitly.
    """
    path = Path(path)
    params: dict[str, dict] = {}
    with open(path / "parameters.csv", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            params[row["ID"]] = row

    code_labels: dict[tuple[str, str], str] = {}
    codes_csv = path / "codes.csv"
    if codes_csv.exists():
        with open(codes_csv, encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                code_labels[(row["Parameter_ID"], row["Name"])] = row.get(
                    "Description", row["Name"]
                )

    seen_langs: set[str] = set()
    by_feature: dict[str, dict[str, tuple[str, str]]] = {}
    with open(path / "values.csv", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            lang = row["Language_ID"]
            if lang not in language_codes:
                continue
            seen_langs.add(lang)
            code = row["Value"].strip() or UNKNOWN_CODE
            if code == UNKNOWN_CODE:
                label = "unknown"
            else:
                label = code_labels.get((row["Parameter_ID"], code),
                                        _DEFAULT_CODE_LABELS.get(code, code))
            by_feature.setdefault(row["Parameter_ID"], {})[lang] = (label, code)

    missing = [lc for lc in language_codes if lc not in seen_langs]
    if missing:
        raise MissingLanguageError(f"no Grambank rows for: {', '.join(missing)}")

    features = []
    for fid in sorted(by_feature):
        row = params.get(fid, {})
        desc = row.get("Description", "")
        summary, procedure = _split_description(desc)
        features.append(TypFeature(
            feature_id=fid,
            question=row.get("Name", fid),
            values=by_feature[fid],
            summary=summary,
            procedure=procedure,
        ))
    return features


def _split_description(desc: str) -> tuple[str, str]:
    # Grambank descriptions carry a Summary followed by a numbered Procedure.
    m = re.search(r"(?mi)^\s*#*\s*Procedure:?\s*$", desc)
    if m:
        summary = desc[:m.start()].strip()
        procedure = desc[m.end():].strip()
        summary = re.sub(r"(?mi)^\s*#*\s*Summary:?\s*$", "", summary).strip()
        return summary, procedure
    return desc.strip(), ""
