import json
from pathlib import Path

import pytest

from grambook.cli import main
from grambook.errors import ConfigError
from grambook.llm_client import EndpointProfile, LLMClient
from grambook.metrics import corpus_chrf_pp
from grambook.runner import ExperimentConfig, SettingBuilder, run_experiment
from tests.conftest import write_jsonl

PROFILE = EndpointProfile(name="mock", base_url="https://example.invalid/v1")

BOOK = (
    "A grammar of Kalamang\n"
    "\n"
    "Clause chaining is common.\n"
    "\n"
    "(1)\n"
    "mu kiem\n"
    "3PL run\n"
    "'They run.'\n"
    "\n"
    "More prose about morphology.\n"
)

TEST_ROWS = [
    {"id": "t1", "source": "mu kiem", "target": "They run."},
    {"id": "t2", "source": "bal se kiem", "target": "The dog runs."},
    {"id": "t3", "source": "os me kahen", "target": "The beach is long."},
]

POOL_ROWS = [
    {"id": "p1", "source": "an kiem", "target": "I run."},
    {"id": "p2", "source": "bal sorat nan", "target": "The dog eats fish."},
    {"id": "p3", "source": "os me tubir", "target": "The beach is short."},
]

IGT_ROWS = [
    {"id": "g1", "transcription": "bal se kiem", "gloss": "dog IAM run",
     "translation": "The dog runs."},
    {"id": "g2", "transcription": "mu se kiem", "gloss": "3PL IAM run",
     "translation": "They run."},
    {"id": "g3", "transcription": "sor=at nan", "gloss": "fish=OBJ eat",
     "translation": "Eat the fish."},
]


@pytest.fixture
def data_dir(tmp_path):
    d = tmp_path / "data"
    d.mkdir()
    (d / "book.txt").write_text(BOOK, encoding="utf-8")
    (d / "wordlist.tsv").write_text(
        "bal\tdog\nkiem\tto run\nmu\tthey\nos\tbeach\nkahen\tlong\n",
        encoding="utf-8")
    write_jsonl(d / "test.jsonl", TEST_ROWS)
    write_jsonl(d / "pool.jsonl", POOL_ROWS)
    write_jsonl(d / "igt.jsonl", IGT_ROWS)
    write_jsonl(d / "igt_test.jsonl", IGT_ROWS[:2])
    return d


def echo_reference_transport(rows):
    """Answer each prompt with the reference translation of its source line."""
    by_source = {r["source"]: r["target"] for r in rows}

    def transport(request):
        tail = request.prompt.rstrip()
        assert tail.endswith("English:")
        source = tail.rsplit("Kalamang: ", 1)[1][: -len(" English:")]
        return by_source[source] + "\nSome reasoning."

    return transport


def make_config(data_dir, out_dir, **overrides):
    cfg = {
        "task": "translate",
        "direction": ["kgv", "eng"],
        "setting": "wordlist",
        "data": {"wordlist": str(data_dir / "wordlist.tsv"),
                 "test": str(data_dir / "test.jsonl")},
        "out_dir": str(out_dir),
    }
    cfg.update(overrides)
    return ExperimentConfig.from_json(cfg)


class TestExperimentConfig:
    def test_unknown_key_fails_fast(self, data_dir, tmp_path):
        with pytest.raises(ConfigError, match="unknown config keys"):
            make_config(data_dir, tmp_path / "out", tempature=0.7)

    def test_unknown_data_key(self, data_dir, tmp_path):
        with pytest.raises(ConfigError, match="unknown data keys"):
            make_config(data_dir, tmp_path / "out",
                        data={"test": str(data_dir / "test.jsonl"),
                              "bok": str(data_dir / "book.txt")})

    def test_unknown_setting_component(self, data_dir, tmp_path):
        with pytest.raises(ConfigError, match="component"):
            make_config(data_dir, tmp_path / "out", setting="wordlist+frobnicate")

    def test_missing_data_path(self, data_dir, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            make_config(data_dir, tmp_path / "out",
                        data={"test": str(data_dir / "nope.jsonl")})

    def test_judge_needs_corruption(self, data_dir, tmp_path):
        with pytest.raises(ConfigError, match="corruption"):
            make_config(data_dir, tmp_path / "out", task="judge", setting="0-shot",
                        data={"test": str(data_dir / "test.jsonl")})

    def test_components_split(self, data_dir, tmp_path):
        cfg = make_config(
            data_dir, tmp_path / "out", setting="book_all+wordlist",
            data={"book": str(data_dir / "book.txt"),
                  "wordlist": str(data_dir / "wordlist.tsv"),
                  "test": str(data_dir / "test.jsonl")})
        assert cfg.components() == ["book_all", "wordlist"]
        assert make_config(data_dir, tmp_path / "o2").components() == ["wordlist"]

    def test_round_trip(self, data_dir, tmp_path):
        cfg = make_config(data_dir, tmp_path / "out")
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg


class TestSettingBuilder:
    def test_typ_sections_come_first(self, data_dir, tmp_path):
        # wordlist-only: single static section
        cfg = make_config(data_dir, tmp_path / "out")
        sections = SettingBuilder(cfg).static_sections()
        assert len(sections) == 1 and "word list" in sections[0].text

    def test_star_shot_sections_vary_by_sentence(self, data_dir, tmp_path):
        cfg = make_config(
            data_dir, tmp_path / "out", setting="5*-shot",
            data={"parallel": str(data_dir / "pool.jsonl"),
                  "test": str(data_dir / "test.jsonl")})
        builder = SettingBuilder(cfg)
        a = builder.sections_for("mu kiem")
        b = builder.sections_for("os me kahen")
        assert a != b
        assert "words similar to" in a[0].text

    def test_missing_needed_data(self, data_dir, tmp_path):
        cfg = make_config(
            data_dir, tmp_path / "out", setting="para_book",
            data={"parallel": str(data_dir / "pool.jsonl"),
                  "test": str(data_dir / "test.jsonl")})
        cfg.data.pop("parallel")
        with pytest.raises(ConfigError, match="needs data.parallel"):
            SettingBuilder(cfg)


class TestRunTranslate:
    def _run(self, data_dir, tmp_path, **overrides):
        out = tmp_path / "out"
        cfg = make_config(data_dir, out, **overrides)
        client = LLMClient(PROFILE, tmp_path / "cache",
                           transport=echo_reference_transport(TEST_ROWS))
        run_experiment(cfg, client)
        return out

    def test_outputs_written(self, data_dir, tmp_path):
        out = self._run(data_dir, tmp_path)
        assert (out / "config.json").exists()
        records = [json.loads(l) for l in
                   (out / "results.jsonl").read_text().splitlines()]
        assert [r["id"] for r in records] == ["t1", "t2", "t3"]
        assert all(r["status"] == "ok" for r in records)
        # echo transport answers with the reference, so every score is 100
        assert all(r["scores"]["chrf_pp"] == pytest.approx(100.0)
                   for r in records)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["chrf_pp"] == pytest.approx(100.0)
        assert summary["statuses"] == {"ok": 3, "infeasible": 0, "error": 0}
        assert not summary["infeasible"]
        assert summary["coverage"]["prompt_tokens"] > 0

    def test_trimming_drops_reasoning(self, data_dir, tmp_path):
        out = self._run(data_dir, tmp_path)
        record = json.loads((out / "results.jsonl").read_text().splitlines()[0])
        assert "\n" in record["raw"]
        assert record["trimmed"] == "They run."

    def test_w4w_runs_locally(self, data_dir, tmp_path):
        out = tmp_path / "out"
        cfg = make_config(data_dir, out, setting="w4w")
        run_experiment(cfg, client=None)  # no client: must not hit the network
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n"] == 3 and summary["statuses"]["ok"] == 3
        assert 0 < summary["chrf_pp"] < 100

    def test_limit(self, data_dir, tmp_path):
        out = self._run(data_dir, tmp_path, limit=2)
        records = (out / "results.jsonl").read_text().splitlines()
        assert len(records) == 2

    def test_context_limit_marks_infeasible(self, data_dir, tmp_path):
        out = self._run(data_dir, tmp_path, context_limit_tokens=1)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["statuses"]["infeasible"] == 3
        assert summary["infeasible"] is True
        assert "chrf_pp" not in summary

    def test_resume_skips_completed(self, data_dir, tmp_path):
        out = tmp_path / "out"
        cfg = make_config(data_dir, out)
        client = LLMClient(PROFILE, tmp_path / "cache1",
                           transport=echo_reference_transport(TEST_ROWS))
        run_experiment(cfg, client)

        def exploding(request):
            raise AssertionError("resume must not re-query completed items")

        cold = LLMClient(PROFILE, tmp_path / "cache2", transport=exploding)
        run_experiment(cfg, cold, resume=True)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["statuses"]["ok"] == 3

    def test_fresh_run_truncates_results(self, data_dir, tmp_path):
        out = tmp_path / "out"
        cfg = make_config(data_dir, out)
        client = LLMClient(PROFILE, tmp_path / "cache",
                           transport=echo_reference_transport(TEST_ROWS))
        run_experiment(cfg, client)
        run_experiment(cfg, client)
        lines = (out / "results.jsonl").read_text().splitlines()
        assert len(lines) == 3


class TestRunGloss:
    def test_topclass_local(self, data_dir, tmp_path):
        out = tmp_path / "out"
        cfg = ExperimentConfig.from_json({
            "task": "gloss", "direction": ["kgv", "eng"],
            "setting": "top-class",
            "data": {"parallel_igt": str(data_dir / "igt.jsonl"),
                     "test": str(data_dir / "igt_test.jsonl")},
            "out_dir": str(out),
        })
        run_experiment(cfg, client=None)
        summary = json.loads((out / "summary.json").read_text())
        # training data is conflict-free and covers the test morphemes
        assert summary["igt"]["morph_acc"] == pytest.approx(100.0)
        assert summary["igt"]["word_acc"] == pytest.approx(100.0)

    def test_llm_gloss_scored(self, data_dir, tmp_path):
        out = tmp_path / "out"
        cfg = ExperimentConfig.from_json({
            "task": "gloss", "direction": ["kgv", "eng"], "setting": "0-shot",
            "data": {"test": str(data_dir / "igt_test.jsonl")},
            "out_dir": str(out),
        })
        by_src = {r["transcription"]: r["gloss"] for r in IGT_ROWS}

        def transport(request):
            line = next(l for l in request.prompt.splitlines()
                        if l.startswith("Kalamang: "))
            return by_src[line[len("Kalamang: "):]]

        client = LLMClient(PROFILE, tmp_path / "cache", transport=transport)
        run_experiment(cfg, client)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["igt"]["morph_acc"] == pytest.approx(100.0)
        assert summary["igt"]["gram_f1"] == pytest.approx(100.0)


class TestRunJudge:
    def _config(self, data_dir, out):
        return ExperimentConfig.from_json({
            "task": "judge", "direction": ["kgv", "eng"], "setting": "0-shot",
            "corruption": "swap_adj", "seed": 11,
            "data": {"test": str(data_dir / "test.jsonl")},
            "out_dir": str(out),
        })

    def test_always_a_judge_scores_by_presentation(self, data_dir, tmp_path):
        out = tmp_path / "out"
        cfg = self._config(data_dir, out)
        client = LLMClient(PROFILE, tmp_path / "cache", transport=lambda r: "A")
        run_experiment(cfg, client)
        records = [json.loads(l) for l in
                   (out / "results.jsonl").read_text().splitlines()]
        assert all(r["status"] == "ok" for r in records)
        for r in records:
            item = r["scores"]["item"]
            want = item["presented_order"] == "original_first"
            assert r["scores"]["correct"] == want
        summary = json.loads((out / "summary.json").read_text())
        expected = sum(1 for r in records if r["scores"]["correct"]) / len(records)
        assert summary["accuracy"] == pytest.approx(expected)

    def test_deterministic_items_across_runs(self, data_dir, tmp_path):
        client = LLMClient(PROFILE, tmp_path / "cache", transport=lambda r: "B")
        outs = []
        for name in ("o1", "o2"):
            out = tmp_path / name
            run_experiment(self._config(data_dir, out), client)
            outs.append([json.loads(l)["scores"]["item"] for l in
                         (out / "results.jsonl").read_text().splitlines()])
        assert outs[0] == outs[1]


class TestCli:
    def test_split_book(self, data_dir, tmp_path, capsys):
        out = tmp_path / "split"
        assert main(["split-book", str(data_dir / "book.txt"),
                     "--out", str(out)]) == 0
        stats = json.loads((out / "stats.json").read_text())
        all_text = (out / "book_all.txt").read_text()
        para = (out / "book_para.txt").read_text()
        non_para = (out / "book_non_para.txt").read_text()
        assert all_text == BOOK
        assert "(1)" in para and "'They run.'" in para
        assert "Clause chaining is common." in non_para
        assert stats["all"]["tokens"] == (stats["para"]["tokens"]
                                          + stats["non_para"]["tokens"])
        assert stats["all"]["lines"] == (stats["para"]["lines"]
                                         + stats["non_para"]["lines"])

    def test_run_w4w(self, data_dir, tmp_path, capsys):
        out = tmp_path / "out"
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "task": "translate", "direction": ["kgv", "eng"], "setting": "w4w",
            "data": {"wordlist": str(data_dir / "wordlist.tsv"),
                     "test": str(data_dir / "test.jsonl")},
            "out_dir": str(out),
        }))
        assert main(["run", "--config", str(config_path)]) == 0
        assert "results written to" in capsys.readouterr().out
        assert (out / "summary.json").exists()

    def test_run_bad_config_exits_nonzero(self, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"task": "fly", "direction": ["a", "b"],
                                           "setting": "0-shot", "data": {},
                                           "out_dir": str(tmp_path)}))
        assert main(["run", "--config", str(config_path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_build_prompt(self, data_dir, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "task": "translate", "direction": ["kgv", "eng"],
            "setting": "wordlist",
            "data": {"wordlist": str(data_dir / "wordlist.tsv"),
                     "test": str(data_dir / "test.jsonl")},
            "out_dir": str(tmp_path / "out"),
        }))
        assert main(["build-prompt", "--config", str(config_path),
                     "--source", "mu kiem"]) == 0
        dumped = json.loads(capsys.readouterr().out)
        kinds = [s["kind"] for s in dumped["sections"]]
        assert kinds == ["wordlist", "instruction", "source_line"]

    def test_corrupt_deterministic(self, data_dir, tmp_path, capsys):
        items = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            assert main(["corrupt", "--test", str(data_dir / "test.jsonl"),
                         "--setting", "swap_ran", "--seed", "7",
                         "--out", str(out)]) == 0
            items.append(out.read_text())
        assert items[0] == items[1]
        rows = [json.loads(l) for l in items[0].splitlines()]
        assert len(rows) == 3
        for row in rows:
            assert sorted(row["original"]) == sorted(row["corrupted"])
            assert row["original"] != row["corrupted"]

    def test_gloss_train(self, data_dir, tmp_path, capsys):
        out = tmp_path / "model.tsv"
        assert main(["gloss-train", "--igt", str(data_dir / "igt.jsonl"),
                     "--out", str(out)]) == 0
        rows = dict(line.split("\t")[:2] for line in out.read_text().splitlines())
        assert rows["se"] == "IAM" and rows["kiem"] == "run"

    def test_report_grid_and_published_points(self, data_dir, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = make_config(data_dir, out)
        client = LLMClient(PROFILE, tmp_path / "cache",
                           transport=echo_reference_transport(TEST_ROWS))
        run_experiment(cfg, client)
        csv_path = tmp_path / "grid.csv"
        assert main(["report", str(out), "--csv", str(csv_path),
                     "--published-points"]) == 0
        text = capsys.readouterr().out
        assert "wordlist" in text and "100.0" in text
        assert "Coverage (%)" in text
        assert "F(1,15) = 79.3" in text
        assert "F(1,15) = 98.1" in text
        assert csv_path.exists()
        header = csv_path.read_text().splitlines()[0]
        assert header.startswith("Setting,")

    def test_report_flags_inconsistent_summary(self, data_dir, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = make_config(data_dir, out)
        client = LLMClient(PROFILE, tmp_path / "cache",
                           transport=echo_reference_transport(TEST_ROWS))
        run_experiment(cfg, client)
        summary_path = out / "summary.json"
        summary = json.loads(summary_path.read_text())
        summary["chrf_pp"] = 12.3  # tampered
        summary_path.write_text(json.dumps(summary))
        assert main(["report", str(out)]) == 1
        assert "does not match" in capsys.readouterr().err

    def test_report_infeasible_shown_as_dashes(self, data_dir, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = make_config(data_dir, out, context_limit_tokens=1)
        client = LLMClient(PROFILE, tmp_path / "cache",
                           transport=echo_reference_transport(TEST_ROWS))
        run_experiment(cfg, client)
        assert main(["report", str(out)]) == 0
        table_line = next(l for l in capsys.readouterr().out.splitlines()
                          if l.startswith("wordlist"))
        assert "--" in table_line
