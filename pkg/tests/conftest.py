import json

import pytest

from grambook.corpus import ParallelPair, WordlistEntry, parse_igt_block

KALAMANG_BLOCK = (
    "bal se sor=at na ma se nan=i koyet\n"
    "dog IAM fish=OBJ consume 3SG IAM consume=PLNL finish\n"
    "'The dog ate the fish, after he ate.'"
)


@pytest.fixture
def igt_example():
    return parse_igt_block(KALAMANG_BLOCK, example_id="kal-1")


@pytest.fixture
def small_pool():
    rows = [
        ("p1", "mu kiem", "They run."),
        ("p2", "bal se sorat koraru", "The dog has bitten the fish."),
        ("p3", "ma kaleuna ning", "He has a kidney-disease."),
        ("p4", "os kamburkadok me kahen", "The beach at Kambur is long."),
        ("p5", "an kiem", "I run."),
        ("p6", "mu sorat nan", "They eat the fish."),
        ("p7", "kon tama taraunkin", "Which one is grandfather's?"),
        ("p8", "wa me kariak", "This is blood."),
        ("p9", "ma reitkon kamatet", "He sent one hundred."),
        ("p10", "in arep neko", "We are in the bay."),
    ]
    return [ParallelPair(i, s, t) for i, s, t in rows]


@pytest.fixture
def small_wordlist():
    rows = [
        ("a'a", "yes"),
        ("bal", "dog"),
        ("kiem", "to run"),
        ("sor", "fish"),
        ("mu", "they"),
        ("kahen", "long"),
    ]
    return [WordlistEntry(h, t) for h, t in rows]


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


@pytest.fixture
def parallel_test_file(tmp_path):
    path = tmp_path / "test.jsonl"
    write_jsonl(path, [
        {"id": "t1", "source": "Mu kiem.", "target": "They run."},
        {"id": "t2", "source": "Ma kaleuna ning.", "target": "He has a kidney-disease."},
        {"id": "t3", "source": "Os Kamburkadok me kahen.", "target": "The beach at Kambur is long."},
    ])
    return path
