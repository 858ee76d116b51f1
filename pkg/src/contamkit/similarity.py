"""Instance similarity, the binary match indicator, and membership scanning.

The scanner answers the core question "does any training instance match
this one?" by existential search with a configurable similarity; it is
the exact (non-sketched) route.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .corpus import ContaminationLabel, Corpus, Instance
from .errors import EmptyInputError, ValidationError

SIMILARITY_KINDS = ("exact", "token_jaccard")


@dataclass(frozen=True)
class SimilarityConfig:
    """Similarity function choice plus its parameters.

    kind "exact" compares whole token sequences; "token_jaccard" compares
    sets of w-token shingles. threshold is the match cut-off used by the
    binary indicator. case_fold lowercases tokens before comparing.
    """

    kind: str = "token_jaccard"
    w: int = 8
    threshold: float = 0.8
    case_fold: bool = False

    def __post_init__(self):
        if self.kind not in SIMILARITY_KINDS:
            raise ValidationError(
                f"unknown similarity kind {self.kind!r}; expected one of {SIMILARITY_KINDS}"
            )
        if self.kind == "token_jaccard" and self.w < 1:
            raise ValidationError(f"w must be >= 1, got {self.w}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValidationError(
                f"threshold must be in (0, 1], got {self.threshold}"
            )


def _norm(tokens: Sequence[str], config: SimilarityConfig) -> tuple[str, ...]:
    if config.case_fold:
        return tuple(t.casefold() for t in tokens)
    return tuple(tokens)


def token_shingles(tokens: Sequence[str], w: int) -> set[tuple[str, ...]]:
    """All contiguous w-token windows as a set; empty when len(tokens) < w."""
    return {tuple(tokens[i : i + w]) for i in range(len(tokens) - w + 1)}


def similarity_tokens(
    a: Sequence[str], b: Sequence[str], config: SimilarityConfig
) -> float:
    """Similarity of two token sequences in [0, 1]; symmetric in its arguments."""
    a = _norm(a, config)
    b = _norm(b, config)
    if config.kind == "exact":
        return 1.0 if a == b else 0.0
    sa = token_shingles(a, config.w)
    sb = token_shingles(b, config.w)
    union = len(sa | sb)
    if union == 0:
        # both shingle sets empty (each sequence shorter than w)
        return 1.0
    return len(sa & sb) / union


def similarity(x: Instance, y: Instance, config: SimilarityConfig) -> float:
    """Similarity of two instances' token sequences."""
    return similarity_tokens(x.tokens, y.tokens, config)


def b_indicator(x: Instance, y: Instance, config: SimilarityConfig) -> int:
    """Binary match: 1 iff similarity reaches the configured threshold."""
    return 1 if similarity(x, y, config) >= config.threshold else 0


def scan_contamination(
    training: Corpus | Iterable[Instance], x: Instance, config: SimilarityConfig
) -> ContaminationLabel:
    """Label x seen iff some training instance matches it; early exit on first hit."""
    empty = True
    for t in training:
        empty = False
        if b_indicator(x, t, config) == 1:
            return ContaminationLabel.SEEN
    if empty:
        raise EmptyInputError("cannot scan an empty training corpus")
    return ContaminationLabel.UNSEEN


class ContaminationScanner(BaseEstimator):
    """Membership scanner over a fixed training corpus.

    fit stores the training instances (precomputing shingle sets for the
    jaccard kind); predict labels each query instance seen or unseen.
    """

    def __init__(self, config: SimilarityConfig = SimilarityConfig()):
        self.config = config

    def fit(self, X: Corpus | Iterable[Instance], y=None) -> "ContaminationScanner":
        self.training_ = tuple(X)
        if self.config.kind == "token_jaccard":
            self._train_shingles = [
                token_shingles(_norm(t.tokens, self.config), self.config.w)
                for t in self.training_
            ]
        else:
            self._train_norms = [_norm(t.tokens, self.config) for t in self.training_]
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "training_"):
            raise NotFittedError(
                "this ContaminationScanner is not fitted yet; call fit(corpus) first"
            )

    def predict_one(self, x: Instance) -> ContaminationLabel:
        self._check_fitted()
        cfg = self.config
        if cfg.kind == "exact":
            xn = _norm(x.tokens, cfg)
            for tn in self._train_norms:
                if xn == tn:
                    return ContaminationLabel.SEEN
            return ContaminationLabel.UNSEEN
        sx = token_shingles(_norm(x.tokens, cfg), cfg.w)
        for st in self._train_shingles:
            union = len(sx | st)
            sim = 1.0 if union == 0 else len(sx & st) / union
            if sim >= cfg.threshold:
                return ContaminationLabel.SEEN
        return ContaminationLabel.UNSEEN

    def predict(self, X: Iterable[Instance]) -> list[ContaminationLabel]:
        return [self.predict_one(x) for x in X]
