"""Command-line entry point: stats, embed, evaluate, grade, report.

Exit codes: 0 success, 2 usage/validation/parse errors, 3 provider or
service failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import Dataset, dataset_stats, parse_dataset
from .embedding import EmbeddingCache, EmbeddingProvider, provider_from_spec, tokenize
from .errors import AllTokensOOV, GradebenchError, ProviderFailure, ZeroVector
from .evaluation import (
    SplitSpec,
    fit_regressor,
    render_report_text,
    report_to_dict,
    report_to_json,
    run_experiment,
)
from .features import (
    ScoreNormalization,
    answer_identity,
    build_features,
    cosine_similarity,
    desired_identity,
    read_feature_dump,
    sowe,
    write_feature_dump,
)
from .regression import REGRESSOR_KINDS, model_from_dict, model_to_dict, predict

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PROVIDER = 3

HISTOGRAM_EDGES = [i * 0.5 for i in range(12)]


def _read_dataset(path: str, normalize_exam_grades: bool) -> Dataset:
    with open(path, "rb") as fh:
        return parse_dataset(fh, normalize_exam_grades=normalize_exam_grades)


def _cache_for(cache_dir: str | None) -> EmbeddingCache | None:
    if cache_dir is None:
        return None
    return EmbeddingCache(Path(cache_dir) / "embeddings.bin")


def _merge(args: argparse.Namespace, key: str, default=None):
    """Explicit flag > config-file value > default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    config = getattr(args, "_config", {})
    return config.get(key, default)


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args.dataset, args.normalize_exam_grades)
    stats = dataset_stats(dataset)
    print(f"questions:    {stats.n_questions}")
    print(f"answers:      {stats.n_answers}")
    print(f"mean grade:   {stats.mean_grade:.4f}")
    print(f"median grade: {stats.median_grade:.4f}")
    print("grade histogram (bin width 0.5):")
    for i, count in enumerate(stats.grade_histogram):
        lo = HISTOGRAM_EDGES[i]
        label = f"[{lo:.1f}, {lo:.1f}]" if i == len(stats.grade_histogram) - 1 else f"[{lo:.1f}, {HISTOGRAM_EDGES[i + 1]:.1f})"
        print(f"  {label:<12} {count}")
    return EXIT_OK


def _embed_one(provider: EmbeddingProvider, text: str):
    """Sentence vector for one text, or (None, reason) when unembeddable."""
    tokens = tokenize(text)
    if not tokens:
        return None, "no tokens"
    try:
        return sowe(provider.embed_tokens(tokens)), None
    except AllTokensOOV:
        return None, "all tokens out of vocabulary"


def cmd_embed(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args.dataset, args.normalize_exam_grades)
    provider = provider_from_spec(args.provider)
    cache = _cache_for(args.cache)
    if cache is None:
        print("error: embed requires --cache DIR", file=sys.stderr)
        return EXIT_USAGE

    hits = 0
    computed = 0
    failures: list[tuple[str, str]] = []

    texts = [(desired_identity(q.question_id), q.desired_answer_text) for q in dataset.questions]
    texts += [
        (answer_identity(a.question_id, a.student_id), a.answer_text) for a in dataset.answers
    ]
    for identity, text in texts:
        if cache.get(provider.name, identity) is not None:
            hits += 1
            continue
        try:
            pooled, reason = _embed_one(provider, text)
        except ProviderFailure as exc:
            failures.append((identity, str(exc)))
            continue
        if pooled is None:
            failures.append((identity, reason or "unembeddable"))
            continue
        cache.put(provider.name, identity, pooled.values)
        computed += 1

    cache.save()
    print(f"cache: {cache.path}")
    print(f"hits: {hits}  computed: {computed}  failed: {len(failures)}")
    for identity, reason in failures:
        print(f"failed {identity}: {reason}", file=sys.stderr)
    return EXIT_PROVIDER if failures else EXIT_OK


def _regressor_list(raw: str) -> list[str]:
    kinds = [k.strip() for k in raw.split(",") if k.strip()]
    for kind in kinds:
        if kind not in REGRESSOR_KINDS:
            raise ValueError(f"unknown regressor {kind!r}; expected one of {REGRESSOR_KINDS}")
    if not kinds:
        raise ValueError("no regressors requested")
    return kinds


def cmd_evaluate(args: argparse.Namespace) -> int:
    regressors = _regressor_list(_merge(args, "regressors", "isotonic,linear,ridge"))
    spec = SplitSpec(
        train_fraction=float(_merge(args, "train_frac", 0.7)),
        iterations=int(_merge(args, "iterations", 1000)),
        seed=int(_merge(args, "seed", 0)),
    )
    ridge_lambda = float(_merge(args, "ridge_lambda", 1.0))
    dataset_path = _merge(args, "dataset")
    provider_spec = _merge(args, "provider")
    features_path = _merge(args, "features")
    cache_dir = _merge(args, "cache")

    oov_count = None
    if features_path is not None:
        with open(features_path, "r", encoding="utf-8") as fh:
            rows = read_feature_dump(fh)
        provider_name = f"features:{features_path}"
    else:
        if dataset_path is None or provider_spec is None:
            print("error: evaluate needs --features, or --dataset and --provider", file=sys.stderr)
            return EXIT_USAGE
        dataset = _read_dataset(dataset_path, args.normalize_exam_grades)
        provider = provider_from_spec(provider_spec)
        cache = _cache_for(cache_dir)
        rows = build_features(dataset, provider, cache=cache)
        if cache is not None:
            cache.save()
        provider_name = provider.name
        oov_count = provider.oov_count

    dump_path = _merge(args, "dump_features")
    if dump_path is not None:
        with open(dump_path, "w", encoding="utf-8") as fh:
            write_feature_dump(rows, fh)

    config_echo = {
        "dataset": dataset_path,
        "provider": provider_spec,
        "features": features_path,
        "cache": cache_dir,
        "regressors": regressors,
        "normalize_exam_grades": bool(args.normalize_exam_grades),
        "oov_count": oov_count,
        "version": __version__,
    }
    report = run_experiment(
        rows,
        regressors,
        spec,
        ridge_lambda=ridge_lambda,
        provider_name=provider_name,
        config=config_echo,
    )

    out_path = _merge(args, "out")
    if out_path is not None:
        Path(out_path).write_text(report_to_json(report), encoding="utf-8")
        print(f"report written to {out_path}")
    print(render_report_text(report_to_dict(report)), end="")

    model_out = _merge(args, "model_out")
    if model_out is not None:
        norm = ScoreNormalization.from_scores([r.similarity_raw for r in rows])
        xs = [norm.apply(r.similarity_raw) for r in rows]
        ys = [r.target_grade for r in rows]
        models = {
            kind: model_to_dict(fit_regressor(kind, xs, ys, ridge_lambda))
            for kind in regressors
        }
        dump = {
            "provider": provider_name,
            "seed": spec.seed,
            "normalization": {"lo": norm.lo, "hi": norm.hi},
            "models": models,
        }
        Path(model_out).write_text(json.dumps(dump, indent=2, sort_keys=True) + "\n", "utf-8")
        print(f"models written to {model_out}")
    return EXIT_OK


def cmd_grade(args: argparse.Namespace) -> int:
    with open(args.model, "r", encoding="utf-8") as fh:
        dump = json.load(fh)
    kind = args.regressor
    if kind not in dump.get("models", {}):
        print(f"error: model dump has no {kind!r} model", file=sys.stderr)
        return EXIT_USAGE
    model = model_from_dict(dump["models"][kind])
    norm = ScoreNormalization(lo=dump["normalization"]["lo"], hi=dump["normalization"]["hi"])

    dataset = _read_dataset(args.dataset, args.normalize_exam_grades)
    question = dataset.question_by_id(args.question_id)
    provider = provider_from_spec(args.provider)

    desired, reason = _embed_one(provider, question.desired_answer_text)
    if desired is None:
        print(f"error: reference answer unembeddable: {reason}", file=sys.stderr)
        return EXIT_USAGE
    answer_text = " ".join(args.answer)
    pooled, _ = _embed_one(provider, answer_text)
    flag = None
    if pooled is None:
        similarity = 0.0
        flag = "empty_answer"
    else:
        try:
            similarity = cosine_similarity(pooled.values, desired.values)
        except ZeroVector:
            similarity = 0.0
            flag = "zero_vector"

    x = norm.apply(similarity)
    grade = predict(model, x)
    print(f"question: {args.question_id}")
    print(f"similarity_raw: {similarity!r}")
    print(f"similarity_norm: {x!r}")
    if flag:
        print(f"flag: {flag}")
    print(f"grade: {grade:.4f} ({kind})")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    print(render_report_text(doc), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradebench",
        description="Grade short answers from one similarity feature and benchmark the regressors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_provider: bool = True) -> None:
        p.add_argument("--dataset", help="answers TSV path")
        p.add_argument("--normalize-exam-grades", action="store_true",
                       help="rescale 0-10 grades to 0-5 at ingest")
        if with_provider:
            p.add_argument("--provider",
                           help="static:PATH | test:SEED | remote:URL,MODEL")
            p.add_argument("--cache", help="directory for the vector cache")
        p.add_argument("--config", help="JSON file with defaults for these flags")

    p_stats = sub.add_parser("stats", help="parse a dataset and print its statistics")
    p_stats.add_argument("--dataset", required=True)
    p_stats.add_argument("--normalize-exam-grades", action="store_true")
    p_stats.set_defaults(func=cmd_stats)

    p_embed = sub.add_parser("embed", help="populate the sentence-vector cache")
    common(p_embed)
    p_embed.set_defaults(func=cmd_embed)

    p_eval = sub.add_parser("evaluate", help="run the repeated-split benchmark")
    common(p_eval)
    p_eval.add_argument("--features", help="reuse a feature dump instead of embedding")
    p_eval.add_argument("--regressors", help="comma list from: isotonic,linear,ridge")
    p_eval.add_argument("--ridge-lambda", type=float, dest="ridge_lambda")
    p_eval.add_argument("--train-frac", type=float, dest="train_frac")
    p_eval.add_argument("--iterations", type=int)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--out", help="write the JSON report here")
    p_eval.add_argument("--dump-features", dest="dump_features",
                        help="write the audit feature TSV here")
    p_eval.add_argument("--model-out", dest="model_out",
                        help="write models fitted on all rows here (for grade)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_grade = sub.add_parser("grade", help="predict a grade for one answer")
    common(p_grade)
    p_grade.add_argument("--model", required=True, help="model dump from evaluate --model-out")
    p_grade.add_argument("--regressor", default="isotonic", choices=REGRESSOR_KINDS)
    p_grade.add_argument("question_id")
    p_grade.add_argument("answer", nargs="+", help="the answer text")
    p_grade.set_defaults(func=cmd_grade)

    p_report = sub.add_parser("report", help="render a JSON report as a text table")
    p_report.add_argument("report")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)

    config_path = getattr(args, "config", None)
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                args._config = json.load(fh)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read config {config_path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        args._config = {}

    try:
        return args.func(args)
    except ProviderFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (GradebenchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
