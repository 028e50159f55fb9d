"""Command-line experiment runner and report generator."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import analysis, corpus, glossing, grammaticality, metrics, prompts
from .errors import GrambookError, MissingSummaryError
from .llm_client import EndpointProfile, LLMClient
from .runner import ExperimentConfig, run_experiment


def cmd_split_book(args) -> int:
    rules = None
    if args.rules:
        with open(args.rules, encoding="utf-8") as fh:
            rules = corpus.BookFormatRules.from_json(json.load(fh))
    text = Path(args.book).read_text(encoding="utf-8")
    doc = corpus.segment_book(text, rules, language=args.language)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stats = {}
    for subset, name in (("all", "book_all.txt"), ("para", "book_para.txt"),
                         ("non_para", "book_non_para.txt")):
        projected = corpus.project_subset(doc, subset)
        (out / name).write_text(projected, encoding="utf-8")
        lines, tokens = corpus.book_stats(projected)
        stats[subset] = {"lines": lines, "tokens": tokens}
    with open(out / "stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2)
    print(json.dumps(stats, indent=2))
    return 0


def cmd_build_prompt(args) -> int:
    config = _load_config(args)
    from .runner import SettingBuilder

    builder = SettingBuilder(config)
    prompt = prompts.compose(config.setting, builder.sections_for(args.source),
                             config.direction, args.source)
    json.dump(prompt.to_json(), sys.stdout, indent=2, ensure_ascii=False)
    print()
    return 0


def _load_config(args) -> ExperimentConfig:
    with open(args.config, encoding="utf-8") as fh:
        obj = json.load(fh)
    if getattr(args, "out", None):
        obj["out_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        obj["seed"] = args.seed
    if getattr(args, "limit", None):
        obj["limit"] = args.limit
    return ExperimentConfig.from_json(obj)


def cmd_run(args) -> int:
    config = _load_config(args)
    client = None
    if config.setting not in ("w4w", "top-class"):
        profile = EndpointProfile(
            name=config.endpoint.get("name", "default"),
            base_url=config.endpoint.get("base_url", ""),
            api_key_env=config.endpoint.get("api_key_env", "GRAMBOOK_API_KEY"),
        )
        cache_dir = config.endpoint.get("cache_dir",
                                        str(Path(config.out_dir) / "cache"))
        client = LLMClient(profile, cache_dir)
    out = run_experiment(config, client, resume=args.resume)
    print(f"results written to {out}")
    return 0


def cmd_corrupt(args) -> int:
    pairs = corpus.load_parallel(args.test)
    if args.limit:
        pairs = pairs[:args.limit]
    setting = grammaticality.CorruptionSetting(args.setting)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = skipped = 0
    with open(out, "w", encoding="utf-8") as fh:
        for pair in pairs:
            seed = grammaticality.item_seed(args.seed, pair.id)
            try:
                item, _ = grammaticality.build_judgment_item(
                    pair.source, setting, seed, item_id=pair.id)
            except GrambookError:
                skipped += 1
                continue
            fh.write(json.dumps(item.to_json(), ensure_ascii=False) + "\n")
            written += 1
    print(f"{written} items written, {skipped} uncorruptible skipped")
    return 0


def cmd_gloss_train(args) -> int:
    examples = corpus.load_igt(args.igt)
    model = glossing.train_topclass(examples)
    counts: dict[str, int] = {}
    for ex in examples:
        for word in ex.transcription:
            for morf in word.morphemes:
                key = morf.casefold()
                counts[key] = counts.get(key, 0) + 1
    model.to_tsv(args.out, counts)
    print(f"{len(model.table)} morphemes written to {args.out}")
    return 0


def cmd_report(args) -> int:
    summaries = []
    for results_dir in args.results_dirs:
        path = Path(results_dir) / "summary.json"
        if not path.exists():
            continue
        with open(path, encoding="utf-8") as fh:
            summary = json.load(fh)
        summary["_dir"] = str(results_dir)
        _check_consistency(Path(results_dir), summary)
        summaries.append(summary)
    if not summaries:
        raise MissingSummaryError("no summary.json found in the given directories")

    directions = sorted({tuple(s["direction"]) for s in summaries})
    settings = []
    for s in summaries:
        if s["setting"] not in settings:
            settings.append(s["setting"])

    grid: dict[tuple[str, tuple[str, str]], str] = {}
    for s in summaries:
        key = (s["setting"], tuple(s["direction"]))
        if s.get("infeasible"):
            grid[key] = "--"
        elif "chrf_pp" in s:
            grid[key] = f"{s['chrf_pp']:.1f}"
        elif "accuracy" in s:
            grid[key] = f"{100 * s['accuracy']:.1f}"
        elif "igt" in s:
            grid[key] = f"{s['igt']['morph_acc']:.1f}"
        else:
            grid[key] = "--"

    header = ["Setting"] + ["-".join(d) for d in directions] + ["Tokens"]
    rows = [header]
    for setting in settings:
        tokens = next((str(int(s["mean_data_tokens"]))
                       for s in summaries
                       if s["setting"] == setting and "mean_data_tokens" in s), "")
        rows.append([setting] + [grid.get((setting, d), "") for d in directions]
                    + [tokens])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row))
             for row in rows]
    table = "\n".join(lines)

    coverage_reports = [analysis.CoverageReport(
        setting=s["setting"], direction=tuple(s["direction"]),
        oov_count=s["coverage"]["oov"], coverage_pct=s["coverage"]["coverage_pct"],
        prompt_tokens=s["coverage"]["prompt_tokens"],
    ) for s in summaries if "coverage" in s]

    out_parts = [table]
    if coverage_reports:
        out_parts += ["", analysis.coverage_table(coverage_reports)]
    out_parts += ["", _regression_section(summaries, args.published_points)]
    text = "\n".join(out_parts)
    print(text)

    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            for row in rows:
                writer.writerow(row)
    return 0


def _check_consistency(results_dir: Path, summary: dict) -> None:
    """summary corpus score must equal metrics recomputed from records."""
    if "chrf_pp" not in summary:
        return
    results_path = results_dir / "results.jsonl"
    config_path = results_dir / "config.json"
    if not results_path.exists() or not config_path.exists():
        return
    with open(config_path, encoding="utf-8") as fh:
        config = json.load(fh)
    pairs = {p.id: p for p in corpus.load_parallel(config["data"]["test"])}
    hyps, refs = [], []
    with open(results_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj["status"] == "ok":
                hyps.append(obj["trimmed"])
                refs.append(pairs[obj["id"]].target)
    if hyps:
        recomputed = metrics.corpus_chrf_pp(hyps, refs)
        if abs(recomputed - summary["chrf_pp"]) > 1e-6:
            raise MissingSummaryError(
                f"{results_dir}: summary chrf_pp {summary['chrf_pp']} does not "
                f"match recomputed {recomputed}"
            )


def _regression_section(summaries: list[dict], use_published_points: bool) -> str:
    lines = ["Regression: ChrF++ vs test-set type coverage"]
    if use_published_points:
        points = analysis.load_published_points()
        for direction, rows in points["coverage_chrf"].items():
            fit = analysis.ols_fit([r["coverage"] for r in rows],
                                   [r["chrf"] for r in rows])
            lines.append(
                f"  {direction}: F(1,{fit.n - 2}) = {fit.f_stat:.1f}, "
                f"R^2 = {fit.r_squared:.2f}, r = {fit.pearson_r:.2f}, "
                f"p = {fit.f_p_value:.1e}"
            )
        for direction, rows in points["tokens_chrf"].items():
            fit = analysis.token_regression([(r["tokens"], r["chrf"]) for r in rows])
            lines.append(
                f"  tokens {direction}: F(1,{fit.n - 2}) = {fit.f_stat:.2f}, "
                f"R^2 = {fit.r_squared:.2f}, p = {fit.f_p_value:.3g}"
            )
        return "\n".join(lines)

    by_direction: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for s in summaries:
        if "coverage" in s and "chrf_pp" in s:
            by_direction.setdefault(tuple(s["direction"]), []).append(
                (s["coverage"]["coverage_pct"], s["chrf_pp"]))
    fitted = False
    for direction, pts in sorted(by_direction.items()):
        if len(pts) < 3:
            continue
        try:
            fit = analysis.ols_fit([p[0] for p in pts], [p[1] for p in pts])
        except GrambookError:
            continue
        fitted = True
        lines.append(
            f"  {'-'.join(direction)}: F(1,{fit.n - 2}) = {fit.f_stat:.1f}, "
            f"R^2 = {fit.r_squared:.2f}, r = {fit.pearson_r:.2f}, "
            f"p = {fit.f_p_value:.1e}"
        )
    if not fitted:
        lines.append("  (need >= 3 summaries with coverage per direction)")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grambook")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split-book", help="split a grammar book into subsets")
    p.add_argument("book")
    p.add_argument("--rules", help="JSON file of per-book format rules")
    p.add_argument("--out", required=True)
    p.add_argument("--language", default="kgv")
    p.set_defaults(func=cmd_split_book)

    p = sub.add_parser("build-prompt", help="debug-dump one composed prompt")
    p.add_argument("--config", required=True)
    p.add_argument("--source", required=True)
    p.set_defaults(func=cmd_build_prompt)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--limit", type=int, metavar="N",
                   help="run only the first N test examples")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("corrupt", help="generate grammaticality judgment items")
    p.add_argument("--test", required=True, help="parallel JSONL test set")
    p.add_argument("--setting", required=True,
                   choices=[s.value for s in grammaticality.CorruptionSetting])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("gloss-train", help="train the Top-Class gloss baseline")
    p.add_argument("--igt", required=True, help="IGT JSONL training data")
    p.add_argument("--out", required=True, help="TSV model snapshot")
    p.set_defaults(func=cmd_gloss_train)

    p = sub.add_parser("report", help="tabulate run results")
    p.add_argument("results_dirs", nargs="+")
    p.add_argument("--csv")
    p.add_argument("--published-points", action="store_true",
                   help="run the regressions on the published fixture points")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GrambookError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
