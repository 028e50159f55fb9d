"""Tokenization, vocabulary-type extraction, and LCS similarity.

Shared by example retrieval, word-for-word translation, and the
coverage analysis.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]
    origin: str = ""

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


# Treebank-style tokenization: detach punctuation, split standard English
# contractions. A compact re-implementation of the Penn Treebank rules.
_RULES: list[tuple[re.Pattern, str]] = [
    (re.compile(r"^\""), r"`` "),
    (re.compile(r"(``)"), r" \1 "),
    (re.compile(r'([ (\[{<])("|\'{2})'), r"\1 \2 "),
    (re.compile(r"\.\.\."), r" ... "),
    (re.compile(r"([,;:@#$%&])"), r" \1 "),
    # sentence-final period (keeps abbreviation dots attached)
    (re.compile(r"([^\.])(\.)([\]\)}>\"']*)\s*$"), r"\1 \2\3 "),
    (re.compile(r"([?!])"), r" \1 "),
    (re.compile(r"([\]\[\(\)\{\}<>])"), r" \1 "),
    (re.compile(r"--"), r" -- "),
    (re.compile(r'"'), r" '' "),
    (re.compile(r"(\S)('')"), r"\1 \2 "),
    (re.compile(r"([^' ])('[sS]|'[mM]|'[dD]|') "), r"\1 \2 "),
    (re.compile(r"([^' ])('ll|'LL|'re|'RE|'ve|'VE|n't|N'T) "), r"\1 \2 "),
]

_CONTRACTIONS = [
    re.compile(r"(?i)\b(can)(not)\b"),
    re.compile(r"(?i)\b(gon)(na)\b"),
    re.compile(r"(?i)\b(got)(ta)\b"),
    re.compile(r"(?i)\b(lem)(me)\b"),
    re.compile(r"(?i)\b(wan)(na)\b"),
]


def tokenize_words(text: str) -> TokenStream:
    """Treebank-style word tokenization; deterministic and idempotent on
    its own space-joined output."""
    s = " " + text + " "
    for pattern, repl in _RULES:
        s = pattern.sub(repl, s)
    for pattern in _CONTRACTIONS:
        s = pattern.sub(r"\1 \2", s)
    return TokenStream(tuple(s.split()), origin=text)


_PUNCT = set(string.punctuation) | {"‘", "’", "“", "”", "–", "—", "…"}


def normalize_type(token: str) -> str | None:
    """Casefold and strip leading/trailing punctuation; None for
    pure-punctuation tokens."""
    stripped = token.strip("".join(_PUNCT))
    if not stripped:
        return None
    return stripped.casefold()


def lcs_len(a: str, b: str) -> int:
    """Length of the longest common subsequence of characters."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        curr = [0]
        for j, cb in enumerate(b):
            curr.append(prev[j] + 1 if ca == cb else max(prev[j + 1], curr[j]))
        prev = curr
    return prev[-1]


def lcs_ratio(a: str, b: str) -> float:
    """2*lcs / (|a|+|b|), in [0, 1]; 0 when both strings are empty."""
    total = len(a) + len(b)
    if total == 0:
        return 0.0
    return 2.0 * lcs_len(a, b) / total


def extract_types(texts: Iterable[str]) -> set[str]:
    """Union of normalized word types over all texts."""
    types: set[str] = set()
    for text in texts:
        for token in tokenize_words(text):
            norm = normalize_type(token)
            if norm is not None:
                types.add(norm)
    return types
