"""Command line entry point: ``temporal-qa {run,synth,score,table}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from temporal_qa.bench import (
    ConfigError,
    RunConfig,
    bypass_backend,
    generate_synthetic,
    load_dataset,
    run_pipeline,
    write_dataset,
)
from temporal_qa.core import AnswerSet
from temporal_qa.gateway import (
    DEFAULT_MAX_TOKENS,
    AuthError,
    FixtureBackend,
    LiveBackend,
    LiveConfig,
    ReplayBackend,
    ReplayMiss,
)
from temporal_qa.metrics import ItemResult, aggregate_report, score
from temporal_qa.prompts import Method
from temporal_qa.report import emit_report, load_report, plot_reports, render_table, render_tsv

EXIT_OK, EXIT_CONFIG, EXIT_FIXTURE = 0, 1, 2

logger = logging.getLogger("temporal_qa")


def _backend(args):
    if args.backend == "replay":
        if not args.store:
            raise ConfigError("--store is required for the replay backend")
        if not Path(args.store).is_dir():
            raise ConfigError(f"replay store {args.store} does not exist")
        return ReplayBackend(args.store), args.model, args.max_tokens
    if args.backend == "fixture":
        if not args.fixtures:
            raise ConfigError("--fixtures is required for the fixture backend")
        return FixtureBackend.from_file(args.fixtures), args.model, args.max_tokens
    if not args.config:
        raise ConfigError("--config is required for the live backend")
    cfg = LiveConfig.load(args.config)
    if args.store:
        cfg.cache_dir = args.store
    return LiveBackend.from_config(cfg), args.model or cfg.model, args.max_tokens or cfg.max_tokens


def cmd_run(args) -> int:
    backend, model, max_tokens = _backend(args)
    if not model:
        raise ConfigError("--model is required")
    cfg = RunConfig(
        method=Method(args.method),
        dataset=Path(args.dataset),
        backend=backend,
        model_id=model,
        n=args.sample,
        seed=args.seed,
        out_dir=None,
        max_tokens=max_tokens or DEFAULT_MAX_TOKENS,
    )
    report = run_pipeline(cfg)
    if args.out:
        emit_report(report, args.out, figure=not args.no_figure)
    sys.stdout.write(render_table([report]))
    if report.failures:
        logger.warning("%d item(s) failed; see failures.json", len(report.failures))
    return EXIT_OK


def cmd_synth(args) -> int:
    corpus = generate_synthetic(args.count, args.seed)
    write_dataset([item for item, _ in corpus], args.out)
    if args.fixtures:
        backend = bypass_backend(corpus, args.model, args.max_tokens or DEFAULT_MAX_TOKENS)
        entries = [{"key": k, "completion": v} for k, v in backend.completions.items()]
        Path(args.fixtures).write_text(json.dumps(entries, indent=1, ensure_ascii=False) + "\n", "utf-8")
    print(f"wrote {len(corpus)} items to {args.out}")
    return EXIT_OK


def _read_predictions(path: Path) -> dict[str, AnswerSet]:
    preds = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            if "id" not in row:
                raise ConfigError(f"{path}:{lineno}: missing 'id'")
            answers = row.get("answers", row.get("prediction"))
            if isinstance(answers, str):
                answers = [a for a in answers.split(",")]
            if not isinstance(answers, list):
                raise ConfigError(f"{path}:{lineno}: missing 'answers'")
            preds[row["id"]] = AnswerSet(tuple(a.strip() for a in answers if a.strip()))
    return preds


def cmd_score(args) -> int:
    gold = load_dataset(args.gold)
    preds = _read_predictions(Path(args.pred))
    rows = []
    for item in gold:
        pred = preds.get(item.id, AnswerSet())
        rows.append(ItemResult(item.id, score(pred, item.gold), pred, item.group))
    missing = [{"id": it.id, "stage": "score", "error": "no prediction"}
               for it in gold if it.id not in preds]
    report = aggregate_report(rows, args.label, "+".join(dict.fromkeys(i.split for i in gold)), missing)
    if args.out:
        emit_report(report, args.out, figure=not args.no_figure)
    sys.stdout.write(render_table([report]))
    return EXIT_OK


def cmd_table(args) -> int:
    reports = [load_report(p) for p in args.reports]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.md").write_text(render_table(reports), "utf-8")
    (out / "table.tsv").write_text(render_tsv(reports), "utf-8")
    if not args.no_figure:
        plot_reports(reports, out / "scores.png")
    sys.stdout.write(render_table(reports))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="temporal-qa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate one method over a dataset")
    run.add_argument("--dataset", required=True)
    run.add_argument("--method", required=True, choices=[m.value for m in Method])
    run.add_argument("--backend", required=True, choices=["live", "replay", "fixture"])
    run.add_argument("--model", default="")
    run.add_argument("--sample", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--store", default=None, help="replay store / live cache directory")
    run.add_argument("--fixtures", default=None, help="fixture JSON file")
    run.add_argument("--config", default=None, help="live endpoint config JSON")
    run.add_argument("--max-tokens", type=int, default=None)
    run.add_argument("--no-figure", action="store_true")
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser("synth", help="write an oracle-labelled synthetic dataset")
    synth.add_argument("--count", type=int, required=True)
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--fixtures", default=None,
                       help="also write bypass fixtures holding the true extraction blocks")
    synth.add_argument("--model", default="bypass")
    synth.add_argument("--max-tokens", type=int, default=None)
    synth.set_defaults(func=cmd_synth)

    sc = sub.add_parser("score", help="score a predictions file against a dataset")
    sc.add_argument("--pred", required=True)
    sc.add_argument("--gold", required=True)
    sc.add_argument("--label", default="predictions")
    sc.add_argument("--out", default=None)
    sc.add_argument("--no-figure", action="store_true")
    sc.set_defaults(func=cmd_score)

    tb = sub.add_parser("table", help="combine report.json files into one table and figure")
    tb.add_argument("reports", nargs="+")
    tb.add_argument("--out", required=True)
    tb.add_argument("--no-figure", action="store_true")
    tb.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ReplayMiss as exc:
        logger.error("%s", exc)
        return EXIT_FIXTURE
    except (ConfigError, FileNotFoundError, AuthError, json.JSONDecodeError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
