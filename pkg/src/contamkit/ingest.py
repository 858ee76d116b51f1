"""File ingestion and the seen/unseen sampling protocol.

All line formats are JSONL, optionally gzip-compressed (by .gz suffix).
Instance records require the keys id, domain, split, text; unknown keys
are ignored so files from richer pipelines load unchanged.
"""
from __future__ import annotations

import gzip
import json
import warnings
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .corpus import (
    Corpus,
    DEFAULT_TOKENIZER,
    Instance,
    Split,
    TokenizerConfig,
    tokenize,
)
from .errors import ParseError, ProtocolError, ValidationError
from .ngram import LogProbRecord, validate_record

PRNG_ALGORITHM = "numpy-pcg64"  # np.random.default_rng; documented for cross-checks


def _open_read(path: str) -> IO[str]:
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def _open_write(path: str) -> IO[str]:
    if str(path).endswith(".gz"):
        return gzip.open(path, "wt", encoding="utf-8")
    return open(path, "w", encoding="utf-8")


_SPLIT_VALUES = {s.value for s in Split}


def _parse_instance_line(obj: object, line_no: int, config: TokenizerConfig) -> Instance:
    if not isinstance(obj, dict):
        raise ParseError("instance record must be a JSON object", line_no)
    for key in ("id", "domain", "split", "text"):
        if key not in obj:
            raise ParseError(f"missing required field {key!r}", line_no)
        if not isinstance(obj[key], str):
            raise ParseError(f"field {key!r} must be a string", line_no)
    if obj["split"] not in _SPLIT_VALUES:
        raise ParseError(
            f"split must be one of {sorted(_SPLIT_VALUES)}, got {obj['split']!r}",
            line_no,
        )
    if not obj["id"]:
        raise ParseError("field 'id' must be non-empty", line_no)
    return Instance(
        id=obj["id"],
        domain=obj["domain"],
        split=Split(obj["split"]),
        text=obj["text"],
        tokens=tokenize(obj["text"], config),
    )


def read_instances(
    path: str,
    config: TokenizerConfig = DEFAULT_TOKENIZER,
    strict: bool = True,
) -> tuple[list[Instance], list[tuple[int, str]]]:
    """Parse instance JSONL, returning instances plus (line, reason) skips.

    strict raises on the first malformed line; lenient mode skips and
    reports, so loaded count always equals line count minus skips. Blank
    lines are ignored in both modes.
    """
    instances: list[Instance] = []
    skipped: list[tuple[int, str]] = []
    with _open_read(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
                instances.append(_parse_instance_line(obj, line_no, config))
            except ParseError as exc:
                if strict:
                    raise
                skipped.append((line_no, str(exc)))
    return instances, skipped


def load_corpus(
    path: str,
    config: TokenizerConfig = DEFAULT_TOKENIZER,
    strict: bool = True,
) -> Corpus:
    """Load a corpus file; duplicate ids are rejected in either mode."""
    instances, _ = read_instances(path, config=config, strict=strict)
    if not instances:
        warnings.warn(f"{path} produced an empty corpus", stacklevel=2)
    return Corpus(instances=tuple(instances))


def write_corpus(corpus: Corpus | Iterable[Instance], path: str) -> None:
    """Write instance JSONL with exactly the keys id, domain, split, text."""
    with _open_write(path) as fh:
        for inst in corpus:
            fh.write(
                json.dumps(
                    {
                        "id": inst.id,
                        "domain": inst.domain,
                        "split": inst.split.value,
                        "text": inst.text,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


# -- sampling protocol ---------------------------------------------------------


@dataclass(frozen=True)
class SplitPlan:
    """Target sizes and seed for drawing the seen/unseen evaluation halves."""

    n_seen: int = 1000
    n_unseen: int = 1000
    min_split: int = 100
    seed: int = 0
    fallback_to_validation: bool = True

    def __post_init__(self):
        if self.n_seen < 1 or self.n_unseen < 1:
            raise ValidationError("n_seen and n_unseen must be >= 1")
        if self.min_split < 1:
            raise ValidationError("min_split must be >= 1")


@dataclass(frozen=True)
class SampleResult:
    """The two sampled halves plus metadata describing how they were drawn."""

    seen: Corpus
    unseen: Corpus
    meta: dict


def sample_splits(corpus: Corpus, plan: SplitPlan) -> SampleResult:
    """Draw seen instances from train and unseen from test (validation fallback).

    When a pool is smaller than the requested half, the whole pool is
    used; a pool below min_split aborts with a protocol error. Draws are
    uniform without replacement from a seeded generator, seen half first.
    """
    train_pool = corpus.with_split(Split.TRAIN)
    test_pool = corpus.with_split(Split.TEST)
    unseen_source = Split.TEST.value
    fallback_used = False
    if not test_pool and plan.fallback_to_validation:
        test_pool = corpus.with_split(Split.VALIDATION)
        unseen_source = Split.VALIDATION.value
        fallback_used = True
    if len(train_pool) < plan.min_split:
        raise ProtocolError(
            f"train pool has {len(train_pool)} instances; protocol requires "
            f"at least {plan.min_split}"
        )
    if len(test_pool) < plan.min_split:
        raise ProtocolError(
            f"unseen pool ({unseen_source}) has {len(test_pool)} instances; "
            f"protocol requires at least {plan.min_split}"
        )
    rng = np.random.default_rng(plan.seed)
    n_seen = min(plan.n_seen, len(train_pool))
    n_unseen = min(plan.n_unseen, len(test_pool))
    seen_idx = rng.permutation(len(train_pool))[:n_seen]
    unseen_idx = rng.permutation(len(test_pool))[:n_unseen]
    seen = Corpus(instances=tuple(train_pool[i] for i in seen_idx))
    unseen = Corpus(instances=tuple(test_pool[i] for i in unseen_idx))
    meta = {
        "prng": PRNG_ALGORITHM,
        "seed": plan.seed,
        "train_pool": len(train_pool),
        "unseen_pool": len(test_pool),
        "unseen_source": unseen_source,
        "fallback_to_validation_used": fallback_used,
        "n_seen": n_seen,
        "n_unseen": n_unseen,
    }
    return SampleResult(seen=seen, unseen=unseen, meta=meta)


# -- logprob records -------------------------------------------------------------


def _parse_record_line(obj: object, line_no: int) -> LogProbRecord:
    if not isinstance(obj, dict):
        raise ParseError("logprob record must be a JSON object", line_no)
    for key, kind in (("instance_id", str), ("tokens", list), ("logprobs", list)):
        if key not in obj:
            raise ParseError(f"missing required field {key!r}", line_no)
        if not isinstance(obj[key], kind):
            raise ParseError(f"field {key!r} has the wrong type", line_no)
    tokens = obj["tokens"]
    logprobs = obj["logprobs"]
    if not all(isinstance(t, str) for t in tokens):
        raise ParseError("tokens must all be strings", line_no)
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in logprobs):
        raise ParseError("logprobs must all be numbers", line_no)
    topk = None
    if obj.get("topk") is not None:
        raw_topk = obj["topk"]
        if not isinstance(raw_topk, list):
            raise ParseError("topk must be a list of per-position lists", line_no)
        positions = []
        for entries in raw_topk:
            if not isinstance(entries, list):
                raise ParseError("each topk position must be a list", line_no)
            parsed = []
            for e in entries:
                if (
                    not isinstance(e, dict)
                    or not isinstance(e.get("t"), str)
                    or not isinstance(e.get("lp"), (int, float))
                    or isinstance(e.get("lp"), bool)
                ):
                    raise ParseError(
                        'topk entries must be objects with string "t" and numeric "lp"',
                        line_no,
                    )
                parsed.append((e["t"], float(e["lp"])))
            positions.append(tuple(parsed))
        topk = tuple(positions)
    truncated = obj.get("truncated", False)
    if not isinstance(truncated, bool):
        raise ParseError('field "truncated" must be a boolean', line_no)
    record = LogProbRecord(
        instance_id=obj["instance_id"],
        tokens=tuple(tokens),
        token_logprobs=tuple(float(x) for x in logprobs),
        topk=topk,
        truncated=truncated,
    )
    try:
        validate_record(record)
    except ValidationError as exc:
        raise ParseError(str(exc), line_no) from exc
    return record


def read_logprob_records(
    path: str, strict: bool = True
) -> tuple[list[LogProbRecord], list[tuple[int, str]]]:
    """Parse record JSONL with full invariant validation per record."""
    records: list[LogProbRecord] = []
    skipped: list[tuple[int, str]] = []
    with _open_read(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
                records.append(_parse_record_line(obj, line_no))
            except ParseError as exc:
                if strict:
                    raise
                skipped.append((line_no, str(exc)))
    return records, skipped


def load_logprob_records(path: str, strict: bool = True) -> list[LogProbRecord]:
    records, _ = read_logprob_records(path, strict=strict)
    return records


def write_logprob_records(records: Iterable[LogProbRecord], path: str) -> None:
    """Write record JSONL; reading it back yields equal records."""
    with _open_write(path) as fh:
        for rec in records:
            obj: dict = {
                "instance_id": rec.instance_id,
                "tokens": list(rec.tokens),
                "logprobs": list(rec.token_logprobs),
            }
            if rec.topk is not None:
                obj["topk"] = [
                    [{"t": t, "lp": lp} for t, lp in entries] for entries in rec.topk
                ]
            if rec.truncated:
                obj["truncated"] = True
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


def records_by_id(records: Iterable[LogProbRecord]) -> dict[str, LogProbRecord]:
    """Index records by instance id, rejecting duplicates."""
    out: dict[str, LogProbRecord] = {}
    for rec in records:
        if rec.instance_id in out:
            raise ValidationError(f"duplicate record for instance {rec.instance_id!r}")
        out[rec.instance_id] = rec
    return out
