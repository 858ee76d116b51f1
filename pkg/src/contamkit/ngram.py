"""Deterministic add-alpha smoothed n-gram causal language model.

The model is the toolkit's stand-in for a large LM: it assigns every
instance an exact token-level log-probability trace, so detection metrics
can be validated against closed-form expectations. Counts are plain
integers, probabilities are (count + alpha) / (total + alpha * |vocab|),
and all logs are natural.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .corpus import BOS_TOKEN, EOS_TOKEN, Corpus, Instance
from .errors import EmptyInputError, FormatError, ValidationError

MODEL_FORMAT = "contamkit-ngram"
MODEL_FORMAT_VERSION = 1

SAMPLING_KINDS = ("greedy", "top_k", "top_p", "temperature")


@dataclass(frozen=True)
class SamplingStrategy:
    """How to pick the next token when decoding.

    kind is one of greedy, top_k, top_p, temperature. Only the parameter
    matching the kind is consulted; seed drives all randomness.
    """

    kind: str
    k: int | None = None
    p: float | None = None
    temperature: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLING_KINDS:
            raise ValidationError(
                f"unknown sampling kind {self.kind!r}; expected one of {SAMPLING_KINDS}"
            )
        if self.kind == "top_k" and (self.k is None or self.k < 1):
            raise ValidationError("top_k sampling requires k >= 1")
        if self.kind == "top_p" and (
            self.p is None or not 0.0 < self.p <= 1.0
        ):
            raise ValidationError("top_p sampling requires 0 < p <= 1")
        if self.kind == "temperature" and (
            self.temperature is None or self.temperature <= 0.0
        ):
            raise ValidationError("temperature sampling requires temperature > 0")


@dataclass(frozen=True)
class TopKDistribution:
    """The k most likely next tokens with their probabilities.

    Entries are sorted by probability descending, ties broken by token
    string ascending. clamped is set when fewer than k tokens exist.
    """

    entries: tuple[tuple[str, float], ...]
    clamped: bool = False


@dataclass(frozen=True)
class LogProbRecord:
    """Per-token scoring trace for one instance.

    token_logprobs[i] is ln P(tokens[i] | preceding tokens). topk, when
    present, holds for each position the model's top candidates as
    (token, logprob) pairs sorted by logprob descending. truncated marks
    records whose source text was cut to a maximum length upstream.
    """

    instance_id: str
    tokens: tuple[str, ...]
    token_logprobs: tuple[float, ...]
    topk: tuple[tuple[tuple[str, float], ...], ...] | None = None
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.tokens)


def validate_record(record: LogProbRecord) -> None:
    """Check a record's internal consistency, naming record and position on failure."""
    rid = record.instance_id
    if not rid:
        raise ValidationError("record has an empty instance_id")
    if len(record.tokens) != len(record.token_logprobs):
        raise ValidationError(
            f"record {rid!r}: {len(record.tokens)} tokens but "
            f"{len(record.token_logprobs)} logprobs"
        )
    if len(record.tokens) == 0:
        raise EmptyInputError(f"record {rid!r} is empty")
    for i, lp in enumerate(record.token_logprobs):
        if not math.isfinite(lp) or lp > 0.0:
            raise ValidationError(
                f"record {rid!r} position {i}: logprob {lp!r} must be finite and <= 0"
            )
    if record.topk is None:
        return
    if len(record.topk) != len(record.tokens):
        raise ValidationError(
            f"record {rid!r}: topk has {len(record.topk)} positions, "
            f"expected {len(record.tokens)}"
        )
    width = len(record.topk[0])
    for i, entries in enumerate(record.topk):
        if len(entries) != width:
            raise ValidationError(
                f"record {rid!r} position {i}: topk length {len(entries)} "
                f"differs from position 0 length {width}"
            )
        prev = math.inf
        for token, lp in entries:
            if not math.isfinite(lp) or lp > 0.0:
                raise ValidationError(
                    f"record {rid!r} position {i}: topk logprob {lp!r} "
                    "must be finite and <= 0"
                )
            if lp > prev:
                raise ValidationError(
                    f"record {rid!r} position {i}: topk logprobs not in "
                    "non-increasing order"
                )
            prev = lp


class NgramLanguageModel(BaseEstimator):
    """Add-alpha smoothed n-gram LM with exposure-controlled training.

    Parameters
    ----------
    order : context size n; each token is conditioned on the n-1 previous
        tokens, with begin sentinels padding the left edge.
    alpha : additive smoothing mass, > 0.
    exposure_multiplier : integer >= 1; every n-gram count is multiplied
        by this, simulating repeated epochs over the same data.
    k_record : how many top candidates to store per position in records.
    """

    def __init__(
        self,
        order: int = 2,
        alpha: float = 1.0,
        exposure_multiplier: int = 1,
        k_record: int = 25,
    ):
        self.order = order
        self.alpha = alpha
        self.exposure_multiplier = exposure_multiplier
        self.k_record = k_record

    # -- fitting -----------------------------------------------------------

    def fit(self, X: Corpus | Iterable[Instance], y=None) -> "NgramLanguageModel":
        """Count padded n-grams over the corpus, scaled by the exposure multiplier."""
        if not (isinstance(self.order, int) and self.order >= 1):
            raise ValidationError(f"order must be an int >= 1, got {self.order!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValidationError(f"alpha must be finite and > 0, got {self.alpha!r}")
        if not (isinstance(self.exposure_multiplier, int) and self.exposure_multiplier >= 1):
            raise ValidationError(
                f"exposure_multiplier must be an int >= 1, got {self.exposure_multiplier!r}"
            )
        if not (isinstance(self.k_record, int) and self.k_record >= 1):
            raise ValidationError(f"k_record must be an int >= 1, got {self.k_record!r}")

        instances = list(X)
        if not instances:
            raise EmptyInputError("cannot train on an empty corpus")

        order = self.order
        mult = self.exposure_multiplier
        pad = (BOS_TOKEN,) * (order - 1)
        counts: dict[tuple[str, ...], dict[str, int]] = {}
        vocab: set[str] = {BOS_TOKEN, EOS_TOKEN}
        for inst in instances:
            vocab.update(inst.tokens)
            seq = pad + inst.tokens + (EOS_TOKEN,)
            for i in range(order - 1, len(seq)):
                ctx = seq[i - order + 1 : i]
                tok = seq[i]
                d = counts.get(ctx)
                if d is None:
                    d = {}
                    counts[ctx] = d
                d[tok] = d.get(tok, 0) + mult

        self.counts_ = counts
        self.context_totals_ = {ctx: sum(d.values()) for ctx, d in counts.items()}
        self.vocab_ = frozenset(vocab)
        self.vocab_sorted_ = tuple(sorted(vocab))
        self.vocab_size_ = len(vocab)
        self.n_instances_ = len(instances)
        self._vocab_pos = {tok: i for i, tok in enumerate(self.vocab_sorted_)}
        self._bos_pos = self._vocab_pos[BOS_TOKEN]
        self._topk_cache: dict[tuple, tuple[tuple[str, float], ...]] = {}
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "counts_"):
            raise NotFittedError(
                "this NgramLanguageModel is not fitted yet; call fit(corpus) first"
            )

    # -- probabilities -----------------------------------------------------

    def _context_key(self, context: Sequence[str]) -> tuple[str, ...]:
        need = self.order - 1
        if need == 0:
            return ()
        ctx = tuple(context[-need:])
        if len(ctx) < need:
            ctx = (BOS_TOKEN,) * (need - len(ctx)) + ctx
        return ctx

    def token_logprob(self, context: Sequence[str], token: str) -> float:
        """ln of the smoothed conditional probability of token after context.

        Tokens outside the vocabulary get the bare smoothing floor; a
        context never seen in training yields the uniform ln(1/|vocab|).
        """
        self._check_fitted()
        ctx = self._context_key(context)
        d = self.counts_.get(ctx)
        c = d.get(token, 0) if d else 0
        total = self.context_totals_.get(ctx, 0)
        return math.log((c + self.alpha) / (total + self.alpha * self.vocab_size_))

    def _probs_array(self, ctx_key: tuple[str, ...]) -> np.ndarray:
        """Smoothed probabilities over vocab_sorted_, summing to 1."""
        arr = np.zeros(self.vocab_size_, dtype=np.float64)
        d = self.counts_.get(ctx_key)
        if d:
            pos = self._vocab_pos
            for tok, c in d.items():
                arr[pos[tok]] = c
        denom = self.context_totals_.get(ctx_key, 0) + self.alpha * self.vocab_size_
        return (arr + self.alpha) / denom

    def _sorted_topk(
        self, ctx_key: tuple[str, ...], k: int, exclude_bos: bool
    ) -> tuple[tuple[str, float], ...]:
        """Top candidates as (token, logprob), probability-descending, lexicographic ties."""
        cache_key = (ctx_key, k, exclude_bos)
        hit = self._topk_cache.get(cache_key)
        if hit is not None:
            return hit
        probs = self._probs_array(ctx_key)
        rank = np.lexsort((np.arange(self.vocab_size_), -probs))
        if exclude_bos:
            rank = rank[rank != self._bos_pos]
        take = rank[:k]
        vocab = self.vocab_sorted_
        entries = tuple((vocab[i], float(np.log(probs[i]))) for i in take)
        self._topk_cache[cache_key] = entries
        return entries

    def topk_next(self, context: Sequence[str], k: int) -> TopKDistribution:
        """The k most probable next tokens with probabilities; clamps when k > |vocab|."""
        self._check_fitted()
        if not (isinstance(k, int) and k >= 1):
            raise ValidationError(f"k must be an int >= 1, got {k!r}")
        clamped = k > self.vocab_size_
        k_eff = min(k, self.vocab_size_)
        entries_lp = self._sorted_topk(self._context_key(context), k_eff, False)
        entries = tuple((tok, math.exp(lp)) for tok, lp in entries_lp)
        return TopKDistribution(entries=entries, clamped=clamped)

    def sequence_logprobs(self, instance: Instance, include_topk: bool = True) -> LogProbRecord:
        """Score every token position of the instance under the chain rule."""
        self._check_fitted()
        tokens = instance.tokens
        if not tokens:
            raise EmptyInputError(f"instance {instance.id!r} has no tokens")
        order = self.order
        seq = (BOS_TOKEN,) * (order - 1) + tokens
        k_eff = min(self.k_record, self.vocab_size_)
        lps: list[float] = []
        topk: list[tuple[tuple[str, float], ...]] | None = [] if include_topk else None
        for i in range(order - 1, len(seq)):
            ctx_key = seq[i - order + 1 : i]
            lps.append(self.token_logprob(ctx_key, seq[i]))
            if topk is not None:
                topk.append(self._sorted_topk(ctx_key, k_eff, False))
        return LogProbRecord(
            instance_id=instance.id,
            tokens=tokens,
            token_logprobs=tuple(lps),
            topk=tuple(topk) if topk is not None else None,
        )

    # -- decoding ----------------------------------------------------------

    def greedy_decode(self, prefix: Sequence[str], max_len: int) -> tuple[str, ...]:
        """Always take the most likely next token; stop at the end sentinel.

        The begin sentinel is never emitted. Output excludes the end
        sentinel and holds at most max_len tokens.
        """
        self._check_fitted()
        if max_len < 0:
            raise ValidationError(f"max_len must be >= 0, got {max_len}")
        history = list(prefix)
        out: list[str] = []
        for _ in range(max_len):
            ctx_key = self._context_key(history)
            (token, _lp), = self._sorted_topk(ctx_key, 1, True)
            if token == EOS_TOKEN:
                break
            out.append(token)
            history.append(token)
        return tuple(out)

    def _strategy_support(
        self, ctx_key: tuple[str, ...], strategy: SamplingStrategy
    ) -> tuple[np.ndarray, np.ndarray]:
        """Candidate vocab indices and normalized probabilities under the strategy."""
        probs = self._probs_array(ctx_key)
        order_idx = np.lexsort((np.arange(self.vocab_size_), -probs))
        order_idx = order_idx[order_idx != self._bos_pos]
        p_sorted = probs[order_idx]
        if strategy.kind == "top_k":
            order_idx = order_idx[: strategy.k]
            p_sorted = p_sorted[: strategy.k]
        elif strategy.kind == "top_p":
            cum = np.cumsum(p_sorted / p_sorted.sum())
            cut = int(np.searchsorted(cum, strategy.p, side="left")) + 1
            order_idx = order_idx[:cut]
            p_sorted = p_sorted[:cut]
        elif strategy.kind == "temperature":
            logits = np.log(p_sorted) / strategy.temperature
            p_sorted = np.exp(logits - logits.max())
        return order_idx, p_sorted / p_sorted.sum()

    def sample_decode(
        self, prefix: Sequence[str], strategy: SamplingStrategy, max_len: int
    ) -> tuple[str, ...]:
        """Decode with the given sampling strategy; fully determined by its seed."""
        self._check_fitted()
        if max_len < 0:
            raise ValidationError(f"max_len must be >= 0, got {max_len}")
        if strategy.kind == "greedy":
            return self.greedy_decode(prefix, max_len)
        rng = np.random.default_rng(strategy.seed)
        history = list(prefix)
        out: list[str] = []
        for _ in range(max_len):
            ctx_key = self._context_key(history)
            idx, p = self._strategy_support(ctx_key, strategy)
            choice = int(rng.choice(len(idx), p=p))
            token = self.vocab_sorted_[int(idx[choice])]
            if token == EOS_TOKEN:
                break
            out.append(token)
            history.append(token)
        return tuple(out)

    # -- persistence -------------------------------------------------------

    def save(self, path: str) -> None:
        """Write the fitted model to a JSON file with deterministic layout."""
        self._check_fitted()
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_FORMAT_VERSION,
            "order": self.order,
            "alpha": self.alpha,
            "exposure_multiplier": self.exposure_multiplier,
            "k_record": self.k_record,
            "n_instances": self.n_instances_,
            "vocab": list(self.vocab_sorted_),
            "counts": [
                [list(ctx), sorted(d.items())]
                for ctx, d in sorted(self.counts_.items())
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, separators=(",", ":"), sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "NgramLanguageModel":
        """Read a model written by save; rejects unknown formats or versions."""
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != MODEL_FORMAT:
            raise FormatError(f"not a {MODEL_FORMAT} file: {path}")
        if payload.get("version") != MODEL_FORMAT_VERSION:
            raise FormatError(
                f"unsupported model version {payload.get('version')!r}; "
                f"this build reads version {MODEL_FORMAT_VERSION}"
            )
        model = cls(
            order=payload["order"],
            alpha=payload["alpha"],
            exposure_multiplier=payload["exposure_multiplier"],
            k_record=payload["k_record"],
        )
        counts = {
            tuple(ctx): dict((tok, int(c)) for tok, c in pairs)
            for ctx, pairs in payload["counts"]
        }
        model.counts_ = counts
        model.context_totals_ = {ctx: sum(d.values()) for ctx, d in counts.items()}
        vocab = payload["vocab"]
        model.vocab_ = frozenset(vocab)
        model.vocab_sorted_ = tuple(vocab)
        model.vocab_size_ = len(vocab)
        model.n_instances_ = payload["n_instances"]
        model._vocab_pos = {tok: i for i, tok in enumerate(model.vocab_sorted_)}
        model._bos_pos = model._vocab_pos[BOS_TOKEN]
        model._topk_cache = {}
        return model
