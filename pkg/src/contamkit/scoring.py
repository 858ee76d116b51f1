"""Batch scoring: corpus + model (or pre-computed records) -> score vectors.

Membership labels are derived from each instance's split: train means
seen, validation or test mean unseen. Scores serialize to JSONL with one
line per (metric, instance), ordered deterministically.
"""
from __future__ import annotations

import json
from typing import IO, Iterable, Mapping, Sequence

from .corpus import ContaminationLabel, Corpus, Instance, Split
from .errors import CapabilityError, ParseError, ValidationError
from .ingest import _open_read, _open_write, records_by_id
from .metrics import (
    MetricId,
    ScoreEntry,
    ScoreVector,
    entropy_k,
    mem_k,
    min_p_token,
    parse_metric_name,
    ppl_k,
    zlib_ratio,
)
from .ngram import LogProbRecord, NgramLanguageModel

# metric families computable from (record, instance text) pairs alone
RECORD_METRIC_FAMILIES = ("ppl", "min_p_token", "mem", "entropy", "zlib_ratio")


def label_for_split(split: Split) -> ContaminationLabel:
    """Map an instance's split to its membership label."""
    if split == Split.TRAIN:
        return ContaminationLabel.SEEN
    if split in (Split.VALIDATION, Split.TEST):
        return ContaminationLabel.UNSEEN
    raise ValidationError(
        "cannot derive a seen/unseen label from split 'unknown'; "
        "set split to train, validation, or test"
    )


def compute_scores(
    metrics: Sequence[MetricId],
    corpus: Corpus,
    model: NgramLanguageModel | None = None,
    records: Mapping[str, LogProbRecord] | Iterable[LogProbRecord] | None = None,
    ppl_skip: int = 0,
) -> list[ScoreVector]:
    """Score every corpus instance under every metric.

    Exactly one of model/records supplies the log-probabilities. Records
    must cover every instance by id; extra records are ignored.
    """
    if (model is None) == (records is None):
        raise ValidationError("supply exactly one of model or records")
    for mid in metrics:
        if mid.family not in RECORD_METRIC_FAMILIES:
            raise CapabilityError(
                f"metric {mid.display_name()!r} needs inputs beyond a single "
                "record set (reference model, perturbed twin, or generation); "
                "compute it through its dedicated function"
            )
    if len(corpus) == 0:
        raise ValidationError("cannot score an empty corpus")

    if records is not None:
        by_id = records if isinstance(records, Mapping) else records_by_id(records)
        missing = [inst.id for inst in corpus if inst.id not in by_id]
        if missing:
            raise ValidationError(
                f"{len(missing)} instance(s) have no record; first missing: {missing[0]!r}"
            )
    else:
        need_topk = any(m.family in ("mem", "entropy") for m in metrics)
        by_id = {
            inst.id: model.sequence_logprobs(inst, include_topk=need_topk)
            for inst in corpus
        }

    labels = {inst.id: label_for_split(inst.split) for inst in corpus}
    vectors: list[ScoreVector] = []
    for mid in metrics:
        entries = []
        for inst in corpus:
            rec = by_id[inst.id]
            flags: tuple[str, ...] = ()
            if mid.family == "ppl":
                score = ppl_k(rec, int(mid.param), skip=ppl_skip)
                value = score.value
                if score.truncated:
                    flags = ("truncated",)
            elif mid.family == "min_p_token":
                value = min_p_token(rec, mid.param)
            elif mid.family == "mem":
                value = mem_k(rec, int(mid.param))
            elif mid.family == "entropy":
                value = entropy_k(rec, int(mid.param))
            else:  # zlib_ratio
                value = zlib_ratio(rec, inst.text)
            if rec.truncated and "truncated" not in flags:
                flags = flags + ("truncated",)
            entries.append(
                ScoreEntry(
                    instance_id=inst.id,
                    label=labels[inst.id],
                    value=float(value),
                    flags=flags,
                )
            )
        vectors.append(ScoreVector(metric=mid, entries=tuple(entries)))
    return vectors


def write_scores(vectors: Iterable[ScoreVector], path: str) -> None:
    """One JSONL line per (metric, instance), sorted by metric then instance id."""
    rows = []
    for sv in vectors:
        name = sv.metric.display_name()
        for e in sv.entries:
            rows.append(
                (
                    name,
                    e.instance_id,
                    {
                        "instance_id": e.instance_id,
                        "label": e.label.value,
                        "metric": name,
                        "parameter": sv.metric.param,
                        "value": e.value,
                        "flags": list(e.flags),
                    },
                )
            )
    rows.sort(key=lambda r: (r[0], r[1]))
    with _open_write(path) as fh:
        for _, _, obj in rows:
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


def read_scores(path: str) -> list[ScoreVector]:
    """Read score JSONL back into one ScoreVector per metric."""
    grouped: dict[str, list[ScoreEntry]] = {}
    with _open_read(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
            try:
                name = obj["metric"]
                entry = ScoreEntry(
                    instance_id=obj["instance_id"],
                    label=ContaminationLabel(obj["label"]),
                    value=float(obj["value"]),
                    flags=tuple(obj.get("flags", ())),
                )
            except (KeyError, TypeError) as exc:
                raise ParseError(f"malformed score line: {exc}", line_no) from exc
            except ValueError as exc:
                raise ParseError(str(exc), line_no) from exc
            grouped.setdefault(name, []).append(entry)
    return [
        ScoreVector(metric=parse_metric_name(name), entries=tuple(entries))
        for name, entries in grouped.items()
    ]
