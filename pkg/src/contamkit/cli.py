"""Command-line interface.

Exit codes: 0 success, 2 usage errors, 3 validation/protocol errors,
4 I/O errors. Every command writes a manifest.json next to its outputs
recording arguments, seeds, input digests, and timestamps. A config file
of key=value lines can stand in for flags via @path.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus import TokenizerConfig, dataset_verdict
from .errors import ToolkitError, ValidationError
from .evaluation import PplStats, auc, cross_domain_matrix, roc_trapezoid_area, summary_table
from .ingest import PRNG_ALGORITHM, load_corpus
from .ingest import load_logprob_records, records_by_id
from .metrics import PERTURBATION_KINDS, PerturbationKind, parse_metric_name, perturb
from .ngram import NgramLanguageModel
from .portrait import BloomPortrait
from .scenarios import load_scenario, run_scenario
from .scoring import compute_scores, read_scores, write_scores
from .ingest import write_corpus

log = logging.getLogger("contamkit")


class UsageError(ToolkitError):
    """Bad flag combinations or values detectable before any work runs."""


# -- manifest -------------------------------------------------------------------


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    command: str,
    args: argparse.Namespace,
    inputs: list[str],
    outputs: list[str],
    seeds: dict | None,
    started_at: str,
) -> None:
    """Write manifest.json into the directory holding the first output."""
    first = Path(outputs[0])
    out_dir = first if first.is_dir() else first.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    arguments = {
        k: v for k, v in vars(args).items() if k not in ("func", "command") and v is not None
    }
    manifest = {
        "tool": "contamkit",
        "version": __version__,
        "command": command,
        "arguments": arguments,
        "seeds": seeds or {},
        "prng": PRNG_ALGORITHM,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "outputs": [str(p) for p in outputs],
        "started_at": started_at,
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _tokenizer(args: argparse.Namespace) -> TokenizerConfig:
    return TokenizerConfig(lowercase=bool(getattr(args, "lowercase", False)))


# -- commands --------------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> int:
    started = _now()
    corpus = load_corpus(args.corpus, config=_tokenizer(args), strict=not args.lenient)
    log.info("training order-%d model on %d instances", args.order, len(corpus))
    model = NgramLanguageModel(
        order=args.order,
        alpha=args.alpha,
        exposure_multiplier=args.exposure_multiplier,
        k_record=args.k_record,
    ).fit(corpus)
    model.save(args.out)
    log.info("saved model with |vocab|=%d to %s", model.vocab_size_, args.out)
    _write_manifest("train", args, [args.corpus], [args.out], None, started)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    started = _now()
    if (args.model is None) == (args.records is None):
        raise UsageError("supply exactly one of --model or --records")
    try:
        metric_ids = [parse_metric_name(m) for m in args.metrics.split(",")]
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    corpus = load_corpus(args.corpus, config=_tokenizer(args), strict=not args.lenient)
    inputs = [args.corpus]
    if args.model is not None:
        model = NgramLanguageModel.load(args.model)
        inputs.append(args.model)
        vectors = compute_scores(metric_ids, corpus, model=model, ppl_skip=args.ppl_skip)
    else:
        records = records_by_id(load_logprob_records(args.records, strict=not args.lenient))
        inputs.append(args.records)
        vectors = compute_scores(metric_ids, corpus, records=records, ppl_skip=args.ppl_skip)
    write_scores(vectors, args.out)
    log.info("wrote %d metric(s) x %d instance(s) to %s", len(vectors), len(corpus), args.out)
    _write_manifest("score", args, inputs, [args.out], None, started)
    return 0


_AUC_JSON = "auc.json"
_AUC_CSV = "auc.csv"


def _auc_payload(vectors) -> list[dict]:
    from .evaluation import score_value_stats

    payload = []
    for sv in vectors:
        result = auc(sv)
        payload.append(
            {
                "metric": sv.metric.display_name(),
                "auc": result.auc,
                "n_seen": result.n_seen,
                "n_unseen": result.n_unseen,
                "value_stats": score_value_stats(sv),
                "roc_points": [[x, y] for x, y in result.roc_points],
                "roc_area": roc_trapezoid_area(result.roc_points),
            }
        )
    payload.sort(key=lambda row: row["metric"])
    return payload


def cmd_auc(args: argparse.Namespace) -> int:
    started = _now()
    vectors = read_scores(args.scores)
    payload = _auc_payload(vectors)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / _AUC_JSON, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / _AUC_CSV, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "auc", "n_seen", "n_unseen"])
        for row in payload:
            writer.writerow([row["metric"], f"{row['auc']:.6f}", row["n_seen"], row["n_unseen"]])
    for row in payload:
        log.info("AUC %-18s %.4f", row["metric"], row["auc"])
    _write_manifest(
        "auc", args, [args.scores], [str(out_dir / _AUC_JSON), str(out_dir / _AUC_CSV)], None, started
    )
    return 0


def _scores_by_domain(scores_dir: str) -> dict[str, list]:
    paths = sorted(Path(scores_dir).glob("*.jsonl"))
    if not paths:
        raise ValidationError(f"no *.jsonl score files found in {scores_dir}")
    return {p.stem: read_scores(str(p)) for p in paths}


def cmd_cross_domain(args: argparse.Namespace) -> int:
    started = _now()
    try:
        metric = parse_metric_name(args.metric)
        ppl_metric = parse_metric_name(args.ppl_metric) if args.ppl_metric else None
    except ValidationError as exc:
        raise UsageError(str(exc)) from exc
    per_domain = _scores_by_domain(args.scores_dir)
    chosen = {}
    ppl_means = {} if ppl_metric else None
    for domain, vectors in per_domain.items():
        match = [v for v in vectors if v.metric == metric]
        if not match:
            raise ValidationError(
                f"domain {domain!r} has no scores for metric {metric.display_name()!r}"
            )
        chosen[domain] = match[0]
        if ppl_metric:
            ppl_match = [v for v in vectors if v.metric == ppl_metric]
            if not ppl_match:
                raise ValidationError(
                    f"domain {domain!r} has no scores for ordering metric "
                    f"{ppl_metric.display_name()!r}"
                )
            from .corpus import ContaminationLabel

            ppl_means[domain] = float(
                ppl_match[0].values(ContaminationLabel.SEEN).mean()
            )
    matrix = cross_domain_matrix(chosen, ppl_means=ppl_means)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    heatmap = out_dir / "heatmap.json"
    matrix_csv = out_dir / "matrix.csv"
    with open(heatmap, "w", encoding="utf-8") as fh:
        json.dump(matrix.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(matrix_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seen\\unseen"] + list(matrix.domains))
        for domain, row in zip(matrix.domains, matrix.values):
            writer.writerow([domain] + [f"{v:.6f}" for v in row])
    inputs = sorted(str(p) for p in Path(args.scores_dir).glob("*.jsonl"))
    _write_manifest(
        "cross-domain", args, inputs, [str(heatmap), str(matrix_csv)], None, started
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    started = _now()
    per_domain = _scores_by_domain(args.scores_dir)
    aucs: dict[str, dict[str, float]] = {}
    ppl_stats: dict[str, PplStats] = {}
    for domain, vectors in per_domain.items():
        best_ppl = None
        for sv in vectors:
            name = sv.metric.display_name()
            aucs.setdefault(name, {})[domain] = auc(sv).auc
            if sv.metric.family == "ppl" and (
                best_ppl is None or sv.metric.param > best_ppl.metric.param
            ):
                best_ppl = sv
        if best_ppl is not None:
            from .evaluation import score_value_stats

            ppl_stats[domain] = PplStats(**score_value_stats(best_ppl))
    table = summary_table(aucs, ppl_stats=ppl_stats or None)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    txt_path = out_dir / "summary.txt"
    csv_path = out_dir / "summary.csv"
    json_path = out_dir / "summary.json"
    txt = table.to_text()
    txt_path.write_text(txt, encoding="utf-8")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(table.to_csv_rows())
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({"auc": aucs}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(txt)
    inputs = sorted(str(p) for p in Path(args.scores_dir).glob("*.jsonl"))
    _write_manifest(
        "report", args, inputs, [str(txt_path), str(csv_path), str(json_path)], None, started
    )
    return 0


def cmd_index_build(args: argparse.Namespace) -> int:
    started = _now()
    corpus = load_corpus(args.corpus, config=_tokenizer(args), strict=not args.lenient)
    portrait = BloomPortrait(
        w=args.w, target_fpr=args.target_fpr, tau_hit=args.tau_hit, seed=args.seed
    ).fit(corpus)
    portrait.save(args.out)
    log.info(
        "indexed %d distinct %d-grams into %d bits (%d probes) at %s",
        portrait.n_inserted_, args.w, portrait.m_, portrait.h_, args.out,
    )
    _write_manifest(
        "index-build", args, [args.corpus], [args.out], {"seed": args.seed}, started
    )
    return 0


def cmd_index_query(args: argparse.Namespace) -> int:
    started = _now()
    portrait = BloomPortrait.load(args.index)
    if args.tau_hit is not None:
        portrait.tau_hit = args.tau_hit
    corpus = load_corpus(args.corpus, config=_tokenizer(args), strict=not args.lenient)
    hits = [portrait.query(inst) for inst in corpus]
    with open(args.out, "w", encoding="utf-8") as fh:
        for hit in hits:
            fh.write(
                json.dumps(
                    {
                        "instance_id": hit.instance_id,
                        "hit_fraction": hit.hit_fraction,
                        "label": hit.label.value,
                    }
                )
            )
            fh.write("\n")
    verdict = dataset_verdict([h.label for h in hits])
    sys.stdout.write(
        f"verdict: {verdict.verdict.value} ({verdict.n_seen}/{verdict.n_total} seen)\n"
    )
    _write_manifest("index-query", args, [args.index, args.corpus], [args.out], None, started)
    return 0


def cmd_perturb(args: argparse.Namespace) -> int:
    started = _now()
    corpus = load_corpus(args.corpus, config=_tokenizer(args), strict=not args.lenient)
    kind = PerturbationKind(kind=args.kind, rate=args.rate, seed=args.seed)
    tok = _tokenizer(args)
    perturbed = [perturb(inst, kind, tokenizer=tok) for inst in corpus]
    write_corpus(perturbed, args.out)
    log.info("perturbed %d instances with %s to %s", len(perturbed), args.kind, args.out)
    _write_manifest("perturb", args, [args.corpus], [args.out], {"seed": args.seed}, started)
    return 0


def cmd_scenario(args: argparse.Namespace) -> int:
    started = _now()
    config = load_scenario(args.config)
    log.info("running scenario %s (%d rep(s))", config.name, config.n_reps)
    report = run_scenario(config)
    text = report.to_text()
    sys.stdout.write(text)
    outputs = []
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path = out_dir / "report.json"
        txt_path = out_dir / "report.txt"
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        txt_path.write_text(text, encoding="utf-8")
        outputs = [str(json_path), str(txt_path)]
        _write_manifest(
            "scenario", args, [args.config], outputs, {"seed": config.seed}, started
        )
    if not report.passed:
        failing = [r for r in report.assertion_results if not r.passed]
        for r in failing:
            log.error(
                "assertion failed: %s observed %.4f outside [%g, %g]",
                r.assertion.describe(), r.observed, *r.assertion.band,
            )
        return 3
    return 0


# -- parser ----------------------------------------------------------------------


def _config_line_to_args(line: str) -> list[str]:
    line = line.split("#", 1)[0].strip()
    if not line:
        return []
    if "=" in line:
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if value.lower() in ("true", ""):
            return [f"--{key}"]
        return [f"--{key}", value]
    return [f"--{line}"]


class _Parser(argparse.ArgumentParser):
    def convert_arg_line_to_args(self, arg_line: str) -> list[str]:
        return _config_line_to_args(arg_line)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lowercase", action="store_true", help="lowercase text before tokenizing")
    p.add_argument(
        "--lenient",
        action="store_true",
        help="skip malformed input lines instead of failing",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="contamkit",
        description="Dataset contamination and membership detection toolkit",
        fromfile_prefix_chars="@",
        epilog="Flags may come from a config file of key=value lines via @path.",
    )
    parser.add_argument("--version", action="version", version=f"contamkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("train", help="fit the n-gram model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--exposure-multiplier", type=int, default=1)
    p.add_argument("--k-record", type=int, default=25)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a labelled corpus under chosen metrics")
    p.add_argument("--model", help="model file (mutually exclusive with --records)")
    p.add_argument("--records", help="precomputed logprob records JSONL")
    p.add_argument("--corpus", required=True)
    p.add_argument(
        "--metrics",
        required=True,
        help='comma-separated, e.g. "PPL_50,Min 5% token,Mem 5,Entropy 25"',
    )
    p.add_argument("--out", required=True, help="score JSONL to write")
    p.add_argument("--ppl-skip", type=int, default=0, help="skip this many leading tokens for PPL")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("auc", help="compute AUC and ROC from a score file")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_auc)

    p = sub.add_parser("cross-domain", help="seen/unseen AUC matrix across domains")
    p.add_argument("--scores-dir", required=True, help="directory of <domain>.jsonl score files")
    p.add_argument("--metric", required=True)
    p.add_argument("--ppl-metric", help="metric whose seen means order the axes")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_cross_domain)

    p = sub.add_parser("report", help="summary table of AUCs per metric and domain")
    p.add_argument("--scores-dir", required=True, help="directory of <domain>.jsonl score files")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("index", help="build or query a w-gram membership sketch")
    index_sub = p.add_subparsers(dest="index_command", required=True)
    pb = index_sub.add_parser("build", help="index a corpus's w-grams")
    pb.add_argument("--corpus", required=True)
    pb.add_argument("--out", required=True, help="portrait file to write")
    pb.add_argument("--w", type=int, default=8)
    pb.add_argument("--target-fpr", type=float, default=0.001)
    pb.add_argument("--tau-hit", type=float, default=0.5)
    pb.add_argument("--seed", type=int, default=0)
    _add_common(pb)
    pb.set_defaults(func=cmd_index_build)
    pq = index_sub.add_parser("query", help="query instances against a sketch")
    pq.add_argument("--index", required=True)
    pq.add_argument("--corpus", required=True)
    pq.add_argument("--out", required=True, help="hit JSONL to write")
    pq.add_argument("--tau-hit", type=float, default=None, help="override stored threshold")
    _add_common(pq)
    pq.set_defaults(func=cmd_index_query)

    p = sub.add_parser("perturb", help="write a perturbed twin corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", required=True, choices=PERTURBATION_KINDS)
    p.add_argument("--rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("scenario", help="run a synthetic experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="directory for report.json/report.txt")
    p.set_defaults(func=cmd_scenario)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("CONTAMKIT_LOG", "info").lower()
    level = {
        "debug": logging.DEBUG,
        "info": logging.INFO,
        "warning": logging.WARNING,
        "quiet": logging.CRITICAL,
    }.get(level_name, logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
