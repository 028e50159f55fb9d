"""Grammar-book ablation toolkit for extremely low-resource languages.

Corpus and IGT parsing, prompt construction for every experiment setting,
non-LLM baselines, grammaticality corruptions, ChrF++ and glossing
metrics, and coverage/significance analysis.
"""

from .corpus import (
    BookDocument,
    BookFormatRules,
    BookSegment,
    IGTExample,
    ParallelPair,
    SegmentedWord,
    Subset,
    TypFeature,
    WordlistEntry,
    book_stats,
    load_grambank,
    load_igt,
    load_parallel,
    load_wordlist,
    parse_igt_block,
    project_subset,
    segment_book,
)
from .metrics import ChrfParams, IGTScore, aggregate_igt, chrf_pp, corpus_chrf_pp, score_igt
from .prompts import (
    Prompt,
    PromptSection,
    SectionKind,
    build_parallel_prompt,
    build_typ_prompt,
    build_wordlist_prompt,
    build_zero_shot,
    compose,
    count_prompt_tokens,
    retrieve_star_shot,
    w4w_translate,
)
from .textproc import extract_types, lcs_len, lcs_ratio, normalize_type, tokenize_words

__version__ = "0.1.0"
