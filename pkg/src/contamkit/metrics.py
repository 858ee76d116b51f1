"""Detection metrics over log-probability records, plus text perturbations.

Every metric has a fixed orientation: which direction of its score argues
the instance was part of training. Orientation is data, not convention,
so downstream AUC can re-orient scores uniformly.
"""
from __future__ import annotations

import math
import re
import zlib
from dataclasses import dataclass, replace
from enum import Enum
from hashlib import blake2b
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import (
    ContaminationLabel,
    ContextKeyPair,
    Corpus,
    HOLE_TOKEN,
    Instance,
    TokenizerConfig,
    DEFAULT_TOKENIZER,
    tokenize,
)
from .errors import (
    AlignmentError,
    CapabilityError,
    EmptyInputError,
    NotApplicableError,
    ValidationError,
)
from .ngram import LogProbRecord, NgramLanguageModel, SamplingStrategy
from .similarity import SimilarityConfig, similarity_tokens

ZLIB_LEVEL = 6  # fixed so byte lengths are reproducible across runs


class Orientation(str, Enum):
    HIGHER_MEANS_SEEN = "higher_means_seen"
    LOWER_MEANS_SEEN = "lower_means_seen"


METRIC_FAMILIES = (
    "ppl",
    "min_p_token",
    "mem",
    "entropy",
    "ref_lm_ratio",
    "zlib_ratio",
    "perturb_delta",
    "keyinfo",
    "metadata_probe",
)

ORIENTATIONS: dict[str, Orientation] = {
    "ppl": Orientation.LOWER_MEANS_SEEN,
    "min_p_token": Orientation.HIGHER_MEANS_SEEN,
    "mem": Orientation.HIGHER_MEANS_SEEN,
    "entropy": Orientation.LOWER_MEANS_SEEN,
    "ref_lm_ratio": Orientation.HIGHER_MEANS_SEEN,
    "zlib_ratio": Orientation.HIGHER_MEANS_SEEN,
    "perturb_delta": Orientation.HIGHER_MEANS_SEEN,
    "keyinfo": Orientation.HIGHER_MEANS_SEEN,
    "metadata_probe": Orientation.HIGHER_MEANS_SEEN,
}


@dataclass(frozen=True)
class MetricId:
    """A metric family plus its numeric parameter, if the family takes one."""

    family: str
    param: float | None = None

    def __post_init__(self):
        if self.family not in METRIC_FAMILIES:
            raise ValidationError(
                f"unknown metric family {self.family!r}; expected one of {METRIC_FAMILIES}"
            )
        if self.family in ("ppl", "min_p_token", "mem", "entropy") and self.param is None:
            raise ValidationError(f"metric family {self.family!r} requires a parameter")

    @property
    def orientation(self) -> Orientation:
        return ORIENTATIONS[self.family]

    def display_name(self) -> str:
        if self.family == "ppl":
            return f"PPL_{self.param:g}"
        if self.family == "min_p_token":
            return f"Min {self.param:g}% token"
        if self.family == "mem":
            return f"Mem {self.param:g}"
        if self.family == "entropy":
            return f"Entropy {self.param:g}"
        return {
            "ref_lm_ratio": "Ref LM ratio",
            "zlib_ratio": "Zlib ratio",
            "perturb_delta": "Perturb delta",
            "keyinfo": "Key info",
            "metadata_probe": "Metadata probe",
        }[self.family]


_METRIC_PATTERNS: tuple[tuple[re.Pattern, str], ...] = (
    (re.compile(r"^PPL_(\d+)$"), "ppl"),
    (re.compile(r"^Min (\d+(?:\.\d+)?)% token$"), "min_p_token"),
    (re.compile(r"^Mem (\d+)$"), "mem"),
    (re.compile(r"^Entropy (\d+)$"), "entropy"),
)

_PLAIN_NAMES: dict[str, str] = {
    "Ref LM ratio": "ref_lm_ratio",
    "Zlib ratio": "zlib_ratio",
    "Perturb delta": "perturb_delta",
    "Key info": "keyinfo",
    "Metadata probe": "metadata_probe",
}

VALID_METRIC_FORMS = (
    "PPL_<k>",
    "Min <p>% token",
    "Mem <k>",
    "Entropy <k>",
    "Ref LM ratio",
    "Zlib ratio",
    "Perturb delta",
    "Key info",
    "Metadata probe",
)


def parse_metric_name(name: str) -> MetricId:
    """Turn a report-style metric name ("PPL_50", "Min 5% token") into a MetricId."""
    name = name.strip()
    for pattern, family in _METRIC_PATTERNS:
        m = pattern.match(name)
        if m:
            return MetricId(family=family, param=float(m.group(1)))
    if name in _PLAIN_NAMES:
        return MetricId(family=_PLAIN_NAMES[name])
    raise ValidationError(
        f"unknown metric {name!r}; valid forms: {', '.join(VALID_METRIC_FORMS)}"
    )


# -- score containers -------------------------------------------------------


@dataclass(frozen=True)
class ScoreEntry:
    instance_id: str
    label: ContaminationLabel
    value: float
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValidationError(
                f"score for {self.instance_id!r} must be finite, got {self.value!r}"
            )


@dataclass(frozen=True)
class ScoreVector:
    """All instances' scores under one metric, with their membership labels."""

    metric: MetricId
    entries: tuple[ScoreEntry, ...]

    @property
    def orientation(self) -> Orientation:
        return self.metric.orientation

    def values(self, label: ContaminationLabel | None = None) -> np.ndarray:
        if label is None:
            return np.array([e.value for e in self.entries], dtype=np.float64)
        return np.array(
            [e.value for e in self.entries if e.label == label], dtype=np.float64
        )


# -- record-based metrics ----------------------------------------------------


class PplScore(NamedTuple):
    value: float
    truncated: bool


def _require_nonempty(record: LogProbRecord) -> None:
    if len(record.token_logprobs) == 0:
        raise EmptyInputError(f"record {record.instance_id!r} has no scored tokens")


def ppl_k(record: LogProbRecord, k: int, skip: int = 0) -> PplScore:
    """Perplexity over the first min(k, remaining) tokens after skipping skip.

    Lower values argue the instance was seen. truncated is set when fewer
    than k tokens were available to score.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if skip < 0:
        raise ValidationError(f"skip must be >= 0, got {skip}")
    _require_nonempty(record)
    window = record.token_logprobs[skip : skip + k]
    if not window:
        raise EmptyInputError(
            f"record {record.instance_id!r}: no tokens left after skipping {skip}"
        )
    truncated = len(window) < k
    return PplScore(value=math.exp(-sum(window) / len(window)), truncated=truncated)


def min_p_token(record: LogProbRecord, p: float) -> float:
    """Mean log-probability of the p% least likely tokens (at least one).

    Higher values argue seen: even the instance's worst tokens are not
    surprising to the model.
    """
    if not 0.0 < p <= 100.0:
        raise ValidationError(f"p must be in (0, 100], got {p}")
    _require_nonempty(record)
    n = len(record.token_logprobs)
    m = max(1, math.ceil((p * n) / 100.0))
    if m == n:
        # full window: keep original summation order so the p=100 case
        # is bit-identical to the plain mean logprob
        return sum(record.token_logprobs) / n
    worst = sorted(record.token_logprobs)[:m]
    return sum(worst) / m


def _require_topk(record: LogProbRecord, k: int) -> int:
    if record.topk is None:
        raise CapabilityError(
            f"record {record.instance_id!r} carries no top-k candidates; "
            "re-score with top-k recording enabled"
        )
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    width = len(record.topk[0]) if record.topk else 0
    if k > width:
        raise ValidationError(
            f"k={k} exceeds the record's stored top-k width {width} "
            "(model parameter k_record); re-score with a larger k_record"
        )
    return width


def mem_k(record: LogProbRecord, k: int) -> float:
    """Fraction of positions whose actual token is among the model's top k.

    Higher values argue seen: the model reproduces the instance from its
    own ranking, the k=1 case being greedy-decode agreement.
    """
    _require_nonempty(record)
    _require_topk(record, k)
    hits = 0
    for token, entries in zip(record.tokens, record.topk):
        top_tokens = {t for t, _ in entries[:k]}
        if token in top_tokens:
            hits += 1
    return hits / len(record.tokens)


def entropy_k(record: LogProbRecord, k: int) -> float:
    """Mean positional entropy of the raw (non-renormalized) top-k mass.

    Lower values argue seen: a model that has memorized the continuation
    concentrates probability on few candidates.
    """
    _require_nonempty(record)
    _require_topk(record, k)
    total = 0.0
    for entries in record.topk:
        h = 0.0
        for _tok, lp in entries[:k]:
            h -= math.exp(lp) * lp
        total += h
    return total / len(record.topk)


def ref_lm_ratio(record: LogProbRecord, reference: LogProbRecord) -> float:
    """Summed logprob under the target model minus under a reference model.

    Higher values argue seen: the target assigns this exact instance more
    mass than a model that never trained on it.
    """
    if record.instance_id != reference.instance_id:
        raise AlignmentError(
            f"records describe different instances: {record.instance_id!r} "
            f"vs {reference.instance_id!r}"
        )
    if len(record.token_logprobs) != len(reference.token_logprobs):
        raise AlignmentError(
            f"record {record.instance_id!r}: {len(record.token_logprobs)} positions "
            f"vs {len(reference.token_logprobs)} in the reference"
        )
    _require_nonempty(record)
    return sum(record.token_logprobs) - sum(reference.token_logprobs)


def zlib_ratio(record: LogProbRecord, text: str) -> float:
    """Summed logprob divided by the DEFLATE-compressed byte length of the text.

    Higher values argue seen. Compression level is pinned so the
    denominator is stable across runs and platforms.
    """
    _require_nonempty(record)
    compressed = len(zlib.compress(text.encode("utf-8"), ZLIB_LEVEL))
    return sum(record.token_logprobs) / compressed


# -- perturbations -----------------------------------------------------------

PERTURBATION_KINDS = (
    "whitespace",
    "case_change",
    "random_deletion",
    "char_noise",
    "sentence_shuffle",
)

_NOISE_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class PerturbationKind:
    """A perturbation family with its rate (where applicable) and seed."""

    kind: str
    rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValidationError(
                f"unknown perturbation {self.kind!r}; expected one of {PERTURBATION_KINDS}"
            )
        if not 0.0 <= self.rate < 1.0:
            raise ValidationError(f"rate must be in [0, 1), got {self.rate}")


def _instance_rng(kind: PerturbationKind, instance: Instance) -> np.random.Generator:
    digest = blake2b(instance.id.encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng([kind.seed, int.from_bytes(digest, "little")])


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


def perturb(
    instance: Instance,
    kind: PerturbationKind,
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER,
) -> Instance:
    """Produce the perturbed twin of an instance; pure under (instance, kind).

    The twin keeps the source id so delta metrics can pair records. When
    the seeded draws change nothing, the original text is returned
    byte-identically.
    """
    rng = _instance_rng(kind, instance)
    text = instance.text
    if kind.kind == "whitespace":
        words = text.split()
        if len(words) >= 2:
            gaps = ["  " if rng.random() < kind.rate else " " for _ in range(len(words) - 1)]
            if any(g != " " for g in gaps):
                text = words[0] + "".join(g + w for g, w in zip(gaps, words[1:]))
    elif kind.kind == "case_change":
        text = text.swapcase()
    elif kind.kind == "random_deletion":
        words = text.split()
        keep = rng.random(len(words)) >= kind.rate
        if not keep.all():
            text = " ".join(w for w, keep_it in zip(words, keep) if keep_it)
    elif kind.kind == "char_noise":
        chars = list(text)
        changed = False
        for i, ch in enumerate(chars):
            if not ch.isspace() and rng.random() < kind.rate:
                chars[i] = _NOISE_ALPHABET[int(rng.integers(len(_NOISE_ALPHABET)))]
                changed = True
        if changed:
            text = "".join(chars)
    else:  # sentence_shuffle
        sentences = [s for s in _SENTENCE_SPLIT.split(text.strip()) if s]
        if len(sentences) < 2:
            raise NotApplicableError(
                f"instance {instance.id!r} has {len(sentences)} sentence(s); "
                "sentence_shuffle needs at least 2"
            )
        perm = rng.permutation(len(sentences))
        if any(int(p) != i for i, p in enumerate(perm)):
            text = " ".join(sentences[int(p)] for p in perm)
    return Instance(
        id=instance.id,
        domain=instance.domain,
        split=instance.split,
        text=text,
        tokens=tokenize(text, tokenizer),
    )


def perturb_delta(record: LogProbRecord, perturbed: LogProbRecord) -> float:
    """Mean logprob of the original minus mean logprob of its perturbed twin.

    Higher values argue seen: memorized text loses much more probability
    under perturbation than merely in-distribution text does.
    """
    if record.instance_id != perturbed.instance_id:
        raise AlignmentError(
            f"perturbed record id {perturbed.instance_id!r} does not match "
            f"{record.instance_id!r}"
        )
    _require_nonempty(record)
    _require_nonempty(perturbed)
    mean_x = sum(record.token_logprobs) / len(record.token_logprobs)
    mean_p = sum(perturbed.token_logprobs) / len(perturbed.token_logprobs)
    return mean_x - mean_p


# -- generation-based probes --------------------------------------------------


def keyinfo_score(
    model: NgramLanguageModel, pair: ContextKeyPair, config: SimilarityConfig
) -> float:
    """Greedy-fill the masked span and compare the fill to the true key.

    Higher values argue seen: only a model that memorized the pairing can
    restore the missing slot from its context.
    """
    hole = pair.context.index(HOLE_TOKEN)
    if hole == 0:
        raise NotApplicableError(
            f"instance {pair.instance_id!r}: the hole has no preceding context to decode from"
        )
    if not pair.key:
        raise EmptyInputError(f"instance {pair.instance_id!r} has an empty key span")
    generated = model.greedy_decode(pair.context[:hole], max_len=len(pair.key))
    return similarity_tokens(generated, pair.key, config)


def metadata_probe(
    model: NgramLanguageModel,
    prompt_tokens: Sequence[str],
    dataset: Corpus,
    strategy: SamplingStrategy,
    n_samples: int,
    max_len: int,
    config: SimilarityConfig,
) -> tuple[float, str | None]:
    """Generate from a metadata prompt and find the closest dataset instance.

    Each generation is compared against every instance over all contiguous
    windows of the instance's length; the best (similarity, instance id)
    pair over all samples is returned. Higher similarity argues the
    dataset was part of training. Ties keep the earliest instance.
    """
    if n_samples < 1:
        raise ValidationError(f"n_samples must be >= 1, got {n_samples}")
    if max_len < 1:
        raise ValidationError(f"max_len must be >= 1, got {max_len}")
    if len(dataset) == 0:
        raise EmptyInputError("cannot probe an empty dataset")
    best = -1.0
    best_id: str | None = None
    for s in range(n_samples):
        strat = replace(strategy, seed=strategy.seed + s)
        gen = model.sample_decode(prompt_tokens, strat, max_len)
        if not gen:
            continue
        for inst in dataset:
            n = len(inst.tokens)
            if n == 0:
                continue
            if len(gen) <= n:
                windows = [gen]
            else:
                windows = [gen[i : i + n] for i in range(len(gen) - n + 1)]
            for win in windows:
                sim = similarity_tokens(win, inst.tokens, config)
                if sim > best:
                    best = sim
                    best_id = inst.id
    return max(best, 0.0), best_id


@dataclass(frozen=True)
class AnswerMemResult:
    """Benchmark-score gap between original and rephrased variants."""

    delta: float
    flagged: bool


def answer_mem_delta(
    score_original: float, score_variant: float, margin: float = 0.1
) -> AnswerMemResult:
    """Flag answer memorization when the original outscores its variant by > margin."""
    for name, v in (("score_original", score_original), ("score_variant", score_variant)):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"{name} must be in [0, 1], got {v}")
    if margin < 0.0:
        raise ValidationError(f"margin must be >= 0, got {margin}")
    delta = score_original - score_variant
    return AnswerMemResult(delta=delta, flagged=delta > margin)
