"""Bloom-filter sketch of a training corpus's w-gram inventory.

The sketch answers "was this exact w-token window in training?" with no
false negatives and a bounded false-positive rate, without retaining the
corpus itself. Hashing is keyed blake2b, so probe positions are portable
across platforms and runs.
"""
from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from hashlib import blake2b
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .corpus import ContaminationLabel, Corpus, Instance
from .errors import FormatError, NotApplicableError, ValidationError

PORTRAIT_MAGIC = b"CKPORTRT"
PORTRAIT_VERSION = 1
_HEADER = struct.Struct("<8sIIQQdQQ")  # magic, version, w, m, n_inserted, fpr, seed1, seed2
_SEED_MIX = 0x9E3779B97F4A7C15


def _gram_bytes(gram: Sequence[str]) -> bytes:
    # tokenizer output never contains whitespace, so a space join is injective
    return " ".join(gram).encode("utf-8")


def _hash64(data: bytes, seed: int) -> int:
    key = seed.to_bytes(8, "little")
    return int.from_bytes(blake2b(data, digest_size=8, key=key).digest(), "little")


@dataclass(frozen=True)
class PortraitHit:
    """Query outcome: fraction of the instance's w-gram windows found."""

    instance_id: str
    hit_fraction: float
    label: ContaminationLabel


class BloomPortrait(BaseEstimator):
    """w-gram membership sketch with standard Bloom sizing.

    Parameters
    ----------
    w : window width in tokens.
    target_fpr : designed false-positive probability per absent gram.
    tau_hit : hit-fraction threshold at which a query instance is
        labelled seen.
    seed : hash seed; two independent 64-bit hashes are derived from it
        and combined by double hashing for the probe sequence.
    """

    def __init__(
        self,
        w: int = 8,
        target_fpr: float = 0.001,
        tau_hit: float = 0.5,
        seed: int = 0,
    ):
        self.w = w
        self.target_fpr = target_fpr
        self.tau_hit = tau_hit
        self.seed = seed

    # -- construction --------------------------------------------------------

    def fit(self, X: Corpus | Iterable[Instance], y=None) -> "BloomPortrait":
        """Size the filter from the corpus's distinct w-gram count and insert them all."""
        if not (isinstance(self.w, int) and self.w >= 1):
            raise ValidationError(f"w must be an int >= 1, got {self.w!r}")
        if not 0.0 < self.target_fpr < 1.0:
            raise ValidationError(f"target_fpr must be in (0, 1), got {self.target_fpr!r}")
        if not 0.0 < self.tau_hit <= 1.0:
            raise ValidationError(f"tau_hit must be in (0, 1], got {self.tau_hit!r}")

        grams: set[bytes] = set()
        for inst in X:
            toks = inst.tokens
            for i in range(len(toks) - self.w + 1):
                grams.add(_gram_bytes(toks[i : i + self.w]))
        n = len(grams)
        if n == 0:
            warnings.warn(
                f"corpus contains no w-grams at w={self.w}; building an empty index",
                stacklevel=2,
            )
            m, h = 8, 1
        else:
            m = max(8, math.ceil(-n * math.log(self.target_fpr) / (math.log(2.0) ** 2)))
            h = max(1, round((m / n) * math.log(2.0)))
        self.m_ = m
        self.h_ = h
        self.seed1_ = self.seed & 0xFFFFFFFFFFFFFFFF
        self.seed2_ = (self.seed ^ _SEED_MIX) & 0xFFFFFFFFFFFFFFFF
        self.bits_ = bytearray((m + 7) // 8)
        for g in sorted(grams):
            self._set_bits(g)
        self.n_inserted_ = n
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "bits_"):
            raise NotFittedError(
                "this BloomPortrait is not fitted yet; call fit(corpus) or load(path)"
            )

    def _probes(self, data: bytes):
        h1 = _hash64(data, self.seed1_)
        h2 = _hash64(data, self.seed2_) | 1  # odd stride so probes never collapse
        m = self.m_
        for i in range(self.h_):
            yield (h1 + i * h2) % m

    def _set_bits(self, data: bytes) -> None:
        bits = self.bits_
        for pos in self._probes(data):
            bits[pos >> 3] |= 1 << (pos & 7)

    def _test_bits(self, data: bytes) -> bool:
        bits = self.bits_
        return all(bits[pos >> 3] & (1 << (pos & 7)) for pos in self._probes(data))

    # -- queries -------------------------------------------------------------

    def contains_gram(self, gram: Sequence[str]) -> bool:
        """Sketch membership of one w-token window; never false for inserted grams."""
        self._check_fitted()
        if len(gram) != self.w:
            raise ValidationError(f"gram must have exactly w={self.w} tokens, got {len(gram)}")
        return self._test_bits(_gram_bytes(gram))

    def query(self, instance: Instance) -> PortraitHit:
        """Fraction of the instance's w-gram windows (by position) found in the sketch."""
        self._check_fitted()
        toks = instance.tokens
        n_windows = len(toks) - self.w + 1
        if n_windows < 1:
            raise NotApplicableError(
                f"instance {instance.id!r} has {len(toks)} tokens; "
                f"querying needs at least w={self.w}"
            )
        hits = sum(
            1 for i in range(n_windows) if self._test_bits(_gram_bytes(toks[i : i + self.w]))
        )
        fraction = hits / n_windows
        label = (
            ContaminationLabel.SEEN
            if fraction >= self.tau_hit
            else ContaminationLabel.UNSEEN
        )
        return PortraitHit(instance_id=instance.id, hit_fraction=fraction, label=label)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str) -> None:
        """Write header plus little-endian bit array."""
        self._check_fitted()
        header = _HEADER.pack(
            PORTRAIT_MAGIC,
            PORTRAIT_VERSION,
            self.w,
            self.m_,
            self.n_inserted_,
            self.target_fpr,
            self.seed1_,
            self.seed2_,
        )
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<I", self.h_))
            fh.write(struct.pack("<d", self.tau_hit))
            fh.write(bytes(self.bits_))

    @classmethod
    def load(cls, path: str) -> "BloomPortrait":
        """Read a sketch written by save; rejects wrong magic or version."""
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < _HEADER.size + 12:
            raise FormatError(f"portrait file too short: {path}")
        magic, version, w, m, n_inserted, fpr, seed1, seed2 = _HEADER.unpack_from(raw, 0)
        if magic != PORTRAIT_MAGIC:
            raise FormatError(f"not a portrait file (bad magic): {path}")
        if version != PORTRAIT_VERSION:
            raise FormatError(
                f"unsupported portrait version {version}; this build reads {PORTRAIT_VERSION}"
            )
        off = _HEADER.size
        (h,) = struct.unpack_from("<I", raw, off)
        (tau,) = struct.unpack_from("<d", raw, off + 4)
        bits = raw[off + 12 :]
        if len(bits) != (m + 7) // 8:
            raise FormatError(
                f"portrait bit array length {len(bits)} does not match m={m}"
            )
        portrait = cls(w=w, target_fpr=fpr, tau_hit=tau, seed=int(seed1))
        portrait.m_ = m
        portrait.h_ = h
        portrait.seed1_ = seed1
        portrait.seed2_ = seed2
        portrait.n_inserted_ = n_inserted
        portrait.bits_ = bytearray(bits)
        return portrait
