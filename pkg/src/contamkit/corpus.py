"""Core data model: instances, corpora, labels, and token-level helpers.

Tokenization is whitespace-based and deterministic. Sentinel tokens used
elsewhere in the toolkit contain an embedded space, so the tokenizer can
never produce them from any input text.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyInputError, ValidationError

# Reserved tokens. Each contains a space: whitespace tokenization yields
# maximal runs of non-whitespace, so no real token can collide with these.
BOS_TOKEN = "<s> "
EOS_TOKEN = "</s> "
UNK_TOKEN = "<unk> "
HOLE_TOKEN = "<hole> "

RESERVED_TOKENS = (BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, HOLE_TOKEN)


class Split(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"
    UNKNOWN = "unknown"


class ContaminationLabel(str, Enum):
    SEEN = "seen"
    UNSEEN = "unseen"


class VerdictKind(str, Enum):
    FULL = "full"
    PARTIAL = "partial"
    CLEAN = "clean"


@dataclass(frozen=True)
class TokenizerConfig:
    """Options applied before splitting text on whitespace."""

    lowercase: bool = False


DEFAULT_TOKENIZER = TokenizerConfig()


def tokenize(text: str, config: TokenizerConfig = DEFAULT_TOKENIZER) -> tuple[str, ...]:
    """Split text into tokens on runs of whitespace.

    Empty or all-whitespace text yields an empty tuple.
    """
    if config.lowercase:
        text = text.lower()
    return tuple(text.split())


@dataclass(frozen=True)
class Instance:
    """One text item with its provenance and cached token sequence."""

    id: str
    domain: str
    split: Split
    text: str
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.id:
            raise ValidationError("instance id must be non-empty")

    def __len__(self) -> int:
        return len(self.tokens)


def make_instance(
    id: str,
    domain: str,
    split: Split | str,
    text: str,
    config: TokenizerConfig = DEFAULT_TOKENIZER,
) -> Instance:
    """Build an Instance whose tokens are the tokenizer's output on text."""
    return Instance(
        id=id,
        domain=domain,
        split=Split(split),
        text=text,
        tokens=tokenize(text, config),
    )


@dataclass(frozen=True)
class Corpus:
    """Immutable collection of instances with unique ids.

    domain_index maps each domain name to the ids of its instances, in
    corpus order; every instance appears under exactly one domain.
    """

    instances: tuple[Instance, ...]
    domain_index: dict[str, tuple[str, ...]] = field(init=False, repr=False)
    _by_id: dict[str, Instance] = field(init=False, repr=False)

    def __post_init__(self):
        by_id: dict[str, Instance] = {}
        domains: dict[str, list[str]] = {}
        for inst in self.instances:
            if inst.id in by_id:
                raise ValidationError(f"duplicate instance id {inst.id!r}")
            by_id[inst.id] = inst
            domains.setdefault(inst.domain, []).append(inst.id)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(
            self, "domain_index", {d: tuple(ids) for d, ids in domains.items()}
        )

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def by_id(self, instance_id: str) -> Instance:
        try:
            return self._by_id[instance_id]
        except KeyError:
            raise ValidationError(f"no instance with id {instance_id!r}") from None

    def with_split(self, split: Split | str) -> tuple[Instance, ...]:
        split = Split(split)
        return tuple(i for i in self.instances if i.split == split)

    def in_domain(self, domain: str) -> tuple[Instance, ...]:
        return tuple(self._by_id[i] for i in self.domain_index.get(domain, ()))


@dataclass(frozen=True)
class PrefixSuffixPair:
    """An instance's tokens cut into a leading prefix and trailing suffix."""

    instance_id: str
    prefix: tuple[str, ...]
    suffix: tuple[str, ...]


@dataclass(frozen=True)
class ContextKeyPair:
    """Tokens with one contiguous span replaced by a hole marker, plus the span."""

    instance_id: str
    context: tuple[str, ...]
    key: tuple[str, ...]


def split_pair(instance: Instance, prefix_len: int) -> PrefixSuffixPair:
    """Cut tokens at prefix_len, leaving non-empty prefix and suffix."""
    n = len(instance.tokens)
    if not 1 <= prefix_len < n:
        raise ValidationError(
            f"prefix_len must satisfy 1 <= prefix_len < {n}, got {prefix_len}"
        )
    return PrefixSuffixPair(
        instance_id=instance.id,
        prefix=instance.tokens[:prefix_len],
        suffix=instance.tokens[prefix_len:],
    )


def mask_key(instance: Instance, start: int, end: int) -> ContextKeyPair:
    """Replace tokens[start:end] with a single hole marker and keep the span."""
    n = len(instance.tokens)
    if not 0 <= start < end <= n:
        raise ValidationError(
            f"span must satisfy 0 <= start < end <= {n}, got [{start}, {end})"
        )
    context = instance.tokens[:start] + (HOLE_TOKEN,) + instance.tokens[end:]
    return ContextKeyPair(
        instance_id=instance.id,
        context=context,
        key=instance.tokens[start:end],
    )


def fill_hole(pair: ContextKeyPair) -> tuple[str, ...]:
    """Substitute the key back into the context's hole, reconstructing tokens."""
    i = pair.context.index(HOLE_TOKEN)
    return pair.context[:i] + pair.key + pair.context[i + 1 :]


@dataclass(frozen=True)
class DatasetVerdict:
    """Dataset-level contamination call with supporting counts."""

    verdict: VerdictKind
    n_seen: int
    n_total: int


def dataset_verdict(labels: list[ContaminationLabel] | tuple[ContaminationLabel, ...]) -> DatasetVerdict:
    """Aggregate instance labels: full iff all seen, clean iff none, else partial."""
    if not labels:
        raise EmptyInputError("cannot issue a verdict for an empty dataset")
    n_seen = sum(1 for lab in labels if ContaminationLabel(lab) == ContaminationLabel.SEEN)
    n_total = len(labels)
    if n_seen == n_total:
        kind = VerdictKind.FULL
    elif n_seen == 0:
        kind = VerdictKind.CLEAN
    else:
        kind = VerdictKind.PARTIAL
    return DatasetVerdict(verdict=kind, n_seen=n_seen, n_total=n_total)
