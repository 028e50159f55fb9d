"""Config-driven experiment execution with resumable JSON-lines results."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import analysis, corpus, glossing, grammaticality, metrics, prompts
from .errors import ConfigError, ContextLengthError, GrambookError
from .llm_client import CompletionRequest, EndpointProfile, LLMClient, trim_response

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# prompt-building components a setting name may combine with "+"
KNOWN_COMPONENTS = {
    "0-shot", "w4w", "top-class", "wordlist", "5*-shot", "10*-shot",
    "para_book", "para_book_igt", "para_train", "book_all", "book_para",
    "book_non_para", "typ",
}

LOCAL_COMPONENTS = {"w4w", "top-class"}

_CONFIG_KEYS = {
    "schema_version", "task", "direction", "setting", "data", "model",
    "endpoint", "retrieval_k", "seed", "out_dir", "limit",
    "max_output_tokens", "temperature", "context_limit_tokens",
    "w4w_threshold", "corruption",
}
_DATA_KEYS = {"book", "book_rules", "parallel", "parallel_igt", "parallel_train",
              "wordlist", "grambank", "test"}


@dataclass
class ExperimentConfig:
    task: str  # translate | judge | gloss
    direction: tuple[str, str]
    setting: str
    data: dict[str, str]
    out_dir: str
    model: str = "mock"
    endpoint: dict = field(default_factory=dict)
    retrieval_k: int | None = None
    seed: int = 0
    limit: int | None = None
    max_output_tokens: int = 1024
    temperature: float = 0.0
    context_limit_tokens: int | None = None
    w4w_threshold: float = 0.5
    corruption: str | None = None  # judge task: swap_adj | swap_ran | shuffle

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        unknown = set(obj) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if obj.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {obj['schema_version']}")
        data = obj.get("data", {})
        unknown_data = set(data) - _DATA_KEYS
        if unknown_data:
            raise ConfigError(f"unknown data keys: {sorted(unknown_data)}")
        cfg = cls(
            task=obj["task"],
            direction=tuple(obj["direction"]),
            setting=obj["setting"],
            data=dict(data),
            out_dir=obj["out_dir"],
            model=obj.get("model", "mock"),
            endpoint=obj.get("endpoint", {}),
            retrieval_k=obj.get("retrieval_k"),
            seed=obj.get("seed", 0),
            limit=obj.get("limit"),
            max_output_tokens=obj.get("max_output_tokens", 1024),
            temperature=obj.get("temperature", 0.0),
            context_limit_tokens=obj.get("context_limit_tokens"),
            w4w_threshold=obj.get("w4w_threshold", 0.5),
            corruption=obj.get("corruption"),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.task not in ("translate", "judge", "gloss"):
            raise ConfigError(f"unknown task {self.task!r}")
        for component in self.components():
            if component not in KNOWN_COMPONENTS:
                raise ConfigError(f"unknown setting component {component!r}")
        if self.task == "judge" and self.corruption is None:
            raise ConfigError("judge task requires a corruption setting")
        for key, path in self.data.items():
            if not Path(path).exists():
                raise ConfigError(f"data path {key}={path} does not exist")
        if "test" not in self.data:
            raise ConfigError("data.test is required")

    def components(self) -> list[str]:
        if self.setting in ("0-shot",):
            return []
        return [c for c in self.setting.split("+") if c != "0-shot"]

    def to_json(self) -> dict:
        obj = dataclasses.asdict(self)
        obj["direction"] = list(self.direction)
        obj["schema_version"] = SCHEMA_VERSION
        return obj


@dataclass
class ResultRecord:
    id: str
    prompt_digest: str
    raw: str
    trimmed: str
    scores: dict
    status: str  # ok | infeasible | error
    error: str = ""

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


class SettingBuilder:
    """Loads the data a setting needs and builds its prompt sections."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.components = config.components()
        self.direction = config.direction
        self._static_sections: list[prompts.PromptSection] | None = None
        self.wordlist: list[corpus.WordlistEntry] = []
        self.pool: list[corpus.ParallelPair] = []
        self._load()

    def _need(self, key: str) -> str:
        if key not in self.config.data:
            raise ConfigError(f"setting {self.config.setting!r} needs data.{key}")
        return self.config.data[key]

    def _load(self) -> None:
        cfg = self.config
        comps = set(self.components)
        if comps & {"wordlist", "w4w"}:
            self.wordlist = corpus.load_wordlist(self._need("wordlist"))
        if comps & {"para_book", "5*-shot", "10*-shot"}:
            self.pool = corpus.load_parallel(self._need("parallel"))
        if "para_book_igt" in comps:
            self.igt_pool = corpus.load_parallel(self._need("parallel_igt"))
        if "para_train" in comps:
            self.train_pool = corpus.load_parallel(self._need("parallel_train"))
        if comps & {"book_all", "book_para", "book_non_para"}:
            rules = None
            if "book_rules" in cfg.data:
                with open(cfg.data["book_rules"], encoding="utf-8") as fh:
                    rules = corpus.BookFormatRules.from_json(json.load(fh))
            text = Path(self._need("book")).read_text(encoding="utf-8")
            self.book = corpus.segment_book(text, rules, language=self._xlr())
        if "typ" in comps:
            self.features = corpus.load_grambank(self._need("grambank"),
                                                 list(self.direction))

    def _xlr(self) -> str:
        src, tgt = self.direction
        return tgt if src == "eng" else src

    def static_sections(self) -> list[prompts.PromptSection]:
        """Sections that do not depend on the source sentence, in the
        canonical order: typology first, then data blocks."""
        if self._static_sections is not None:
            return self._static_sections
        sections: list[prompts.PromptSection] = []
        comps = self.components
        if "typ" in comps:
            sections.append(prompts.build_typ_prompt(self.features, self.direction))
        for comp in comps:
            if comp == "book_all":
                sections.append(prompts.build_book_prompt(
                    corpus.project_subset(self.book, "all"), "all", self.direction))
            elif comp == "book_para":
                sections.append(prompts.build_book_prompt(
                    corpus.project_subset(self.book, "para"), "para", self.direction))
            elif comp == "book_non_para":
                sections.append(prompts.build_book_prompt(
                    corpus.project_subset(self.book, "non_para"), "non_para",
                    self.direction))
            elif comp == "wordlist":
                sections.append(prompts.build_wordlist_prompt(self.wordlist,
                                                              self.direction))
            elif comp == "para_book":
                sections.append(prompts.build_parallel_prompt(
                    self.pool, False, self.direction))
            elif comp == "para_book_igt":
                sections.append(prompts.build_parallel_prompt(
                    self.igt_pool, True, self.direction))
            elif comp == "para_train":
                sections.append(prompts.build_parallel_prompt(
                    self.train_pool, False, self.direction))
        self._static_sections = sections
        return sections

    def sections_for(self, source_sentence: str) -> list[prompts.PromptSection]:
        sections = list(self.static_sections())
        for comp in self.components:
            if comp in ("5*-shot", "10*-shot"):
                k = self.config.retrieval_k or (5 if comp == "5*-shot" else 10)
                side = "source" if self.direction[0] != "eng" else "target"
                retrieved = prompts.retrieve_star_shot(source_sentence, self.pool,
                                                       k, pool_side=side)
                sections.append(prompts.build_star_shot_section(retrieved,
                                                                self.direction))
        return sections


def _load_existing(path: Path) -> dict[tuple[str, str], dict]:
    existing = {}
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if obj.get("status") == "ok":
                    existing[(obj["id"], obj["prompt_digest"])] = obj
    return existing


def _local_digest(payload: str) -> str:
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def run_experiment(config: ExperimentConfig, client: LLMClient | None = None,
                   resume: bool = False) -> Path:
    """Run all test examples for one setting; never aborts on a single
    example. Returns the output directory."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_json(), fh, indent=2)

    results_path = out / "results.jsonl"
    existing = _load_existing(results_path) if resume else {}
    if not resume and results_path.exists():
        results_path.unlink()

    if config.task == "gloss":
        records = _run_gloss(config, client, existing, results_path)
    elif config.task == "judge":
        records = _run_judge(config, client, existing, results_path)
    else:
        records = _run_translate(config, client, existing, results_path)

    summary = _summarize(config, records)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    return out


def _append(path: Path, record: ResultRecord) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


def _complete_prompt(config: ExperimentConfig, client: LLMClient,
                     prompt: prompts.Prompt, example_id: str,
                     results_path: Path,
                     existing: dict) -> ResultRecord:
    text = prompt.text()
    request = CompletionRequest(
        model_name=config.model, prompt=text,
        temperature=config.temperature,
        max_output_tokens=config.max_output_tokens,
    )
    digest = request.digest()
    prior = existing.get((example_id, digest))
    if prior is not None:
        return ResultRecord(**{k: prior[k] for k in (
            "id", "prompt_digest", "raw", "trimmed", "scores", "status", "error")})
    if (config.context_limit_tokens is not None
            and prompts.count_prompt_tokens(prompt) > config.context_limit_tokens):
        record = ResultRecord(example_id, digest, "", "", {}, "infeasible",
                              "prompt exceeds configured context limit")
    else:
        try:
            raw = client.complete(request)
            record = ResultRecord(example_id, digest, raw, trim_response(raw),
                                  {}, "ok")
        except ContextLengthError as exc:
            record = ResultRecord(example_id, digest, "", "", {}, "infeasible",
                                  str(exc))
        except GrambookError as exc:
            record = ResultRecord(example_id, digest, "", "", {}, "error", str(exc))
    return record


def _run_translate(config, client, existing, results_path) -> list[ResultRecord]:
    pairs = corpus.load_parallel(config.data["test"])
    if config.limit:
        pairs = pairs[:config.limit]
    records = []
    if config.setting == "w4w":
        wordlist = corpus.load_wordlist(config.data["wordlist"])
        for pair in pairs:
            output = prompts.w4w_translate(pair.source, wordlist,
                                           config.w4w_threshold)
            record = ResultRecord(
                pair.id, _local_digest(f"w4w:{config.w4w_threshold}:{pair.source}"),
                output, output,
                {"chrf_pp": metrics.chrf_pp(output, pair.target)}, "ok")
            records.append(record)
            _append(results_path, record)
        return records

    builder = SettingBuilder(config)
    for pair in pairs:
        prompt = prompts.compose(config.setting, builder.sections_for(pair.source),
                                 config.direction, pair.source)
        record = _complete_prompt(config, client, prompt, pair.id,
                                  results_path, existing)
        if record.status == "ok" and not record.scores:
            record.scores = {"chrf_pp": metrics.chrf_pp(record.trimmed, pair.target)}
        records.append(record)
        _append(results_path, record)
    return records


def _run_gloss(config, client, existing, results_path) -> list[ResultRecord]:
    examples = corpus.load_igt(config.data["test"],
                               source_lang=config.direction[0],
                               target_lang=config.direction[1])
    if config.limit:
        examples = examples[:config.limit]
    records = []
    if config.setting == "top-class":
        train = corpus.load_igt(config.data["parallel_igt"])
        model = glossing.train_topclass(train)
        for ex in examples:
            predicted = glossing.predict_topclass(model, ex.transcription)
            score = metrics.score_igt(predicted, ex.gloss_line())
            record = ResultRecord(
                ex.id, _local_digest(f"top-class:{ex.transcription_line()}"),
                predicted, predicted, {"igt": dataclasses.asdict(score)}, "ok")
            records.append(record)
            _append(results_path, record)
        return records

    builder = SettingBuilder(config)
    for ex in examples:
        sections = builder.sections_for(ex.transcription_line())
        prompt = glossing.build_gloss_prompt(ex, sections)
        record = _complete_prompt(config, client, prompt, ex.id,
                                  results_path, existing)
        if record.status == "ok" and not record.scores:
            score = metrics.score_igt(record.trimmed, ex.gloss_line())
            record.scores = {"igt": dataclasses.asdict(score)}
        records.append(record)
        _append(results_path, record)
    return records


def _run_judge(config, client, existing, results_path) -> list[ResultRecord]:
    pairs = corpus.load_parallel(config.data["test"])
    if config.limit:
        pairs = pairs[:config.limit]
    setting = grammaticality.CorruptionSetting(config.corruption)
    builder = SettingBuilder(config)
    records = []
    for pair in pairs:
        seed = grammaticality.item_seed(config.seed, pair.id)
        try:
            item, prompt_text = grammaticality.build_judgment_item(
                pair.source, setting, seed, item_id=pair.id,
                language=builder._xlr(),
                data_sections=builder.sections_for(pair.source),
            )
        except GrambookError as exc:
            record = ResultRecord(pair.id, _local_digest(pair.source), "", "",
                                  {}, "error", f"uncorruptible: {exc}")
            records.append(record)
            _append(results_path, record)
            continue
        request = CompletionRequest(
            model_name=config.model, prompt=prompt_text,
            temperature=config.temperature,
            max_output_tokens=config.max_output_tokens,
        )
        digest = request.digest()
        prior = existing.get((pair.id, digest))
        if prior is not None:
            record = ResultRecord(**{k: prior[k] for k in (
                "id", "prompt_digest", "raw", "trimmed", "scores", "status",
                "error")})
        else:
            try:
                raw = client.complete(request)
                answer = grammaticality.parse_answer(trim_response(raw))
                record = ResultRecord(pair.id, digest, raw, trim_response(raw), {
                    "answer": answer,
                    "correct": answer == item.correct_answer,
                    "item": item.to_json(),
                }, "ok")
            except ContextLengthError as exc:
                record = ResultRecord(pair.id, digest, "", "", {}, "infeasible",
                                      str(exc))
            except GrambookError as exc:
                record = ResultRecord(pair.id, digest, "", "", {}, "error",
                                      str(exc))
        records.append(record)
        _append(results_path, record)
    return records


def _summarize(config: ExperimentConfig, records: list[ResultRecord]) -> dict:
    statuses = {"ok": 0, "infeasible": 0, "error": 0}
    for r in records:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    summary = {
        "task": config.task,
        "setting": config.setting,
        "direction": list(config.direction),
        "model": config.model,
        "n": len(records),
        "statuses": statuses,
        "infeasible": statuses["infeasible"] == len(records) and records != [],
    }
    ok = [r for r in records if r.status == "ok"]
    if config.task == "translate" and ok:
        all_pairs = corpus.load_parallel(config.data["test"])
        pairs = {p.id: p for p in all_pairs}
        hyps = [r.trimmed for r in ok]
        refs = [pairs[r.id].target for r in ok]
        summary["chrf_pp"] = metrics.corpus_chrf_pp(hyps, refs)
        if config.setting not in LOCAL_COMPONENTS:
            try:
                builder = SettingBuilder(config)
                probe = prompts.compose(config.setting, builder.static_sections(),
                                        config.direction, all_pairs[0].source)
                report = analysis.coverage(probe, [p.target for p in all_pairs])
                summary["coverage"] = report.to_json()
            except GrambookError:
                pass
    elif config.task == "gloss" and ok:
        scores = [metrics.IGTScore(**r.scores["igt"]) for r in ok]
        morph, word, stem, gram = metrics.aggregate_igt(scores)
        summary["igt"] = {"morph_acc": morph, "word_acc": word,
                          "stem_f1": stem, "gram_f1": gram}
    elif config.task == "judge" and ok:
        correct = sum(1 for r in ok if r.scores.get("correct"))
        summary["accuracy"] = correct / len(ok)
    if config.setting not in LOCAL_COMPONENTS and ok:
        summary["mean_data_tokens"] = _mean_data_tokens(config)
    return summary


def _mean_data_tokens(config: ExperimentConfig) -> float | None:
    try:
        builder = SettingBuilder(config)
        static = builder.static_sections()
    except GrambookError:
        return None
    static_tokens = sum(
        len(prompts.tokenize_words(s.text)) for s in static
    )
    return float(static_tokens)
