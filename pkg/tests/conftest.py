"""Shared builders for the test suite."""
import numpy as np
import pytest

from contamkit import Corpus, LogProbRecord, make_instance


def build_instance(id, text, split="train", domain="d"):
    return make_instance(id=id, domain=domain, split=split, text=text)


def build_corpus(texts, split="train", domain="d", prefix="i"):
    return Corpus(
        instances=tuple(
            build_instance(f"{prefix}{n:03d}", t, split=split, domain=domain)
            for n, t in enumerate(texts)
        )
    )


def record_from_logprobs(logprobs, instance_id="r0", topk=None, truncated=False):
    tokens = tuple(f"t{i}" for i in range(len(logprobs)))
    return LogProbRecord(
        instance_id=instance_id,
        tokens=tokens,
        token_logprobs=tuple(float(v) for v in logprobs),
        topk=None if topk is None else tuple(tuple(pos) for pos in topk),
        truncated=truncated,
    )


def random_texts(rng, n, vocab_size=30, len_min=3, len_max=12, prefix="w"):
    vocab = [f"{prefix}{i}" for i in range(vocab_size)]
    texts = []
    for _ in range(n):
        length = int(rng.integers(len_min, len_max + 1))
        texts.append(" ".join(vocab[int(j)] for j in rng.integers(0, vocab_size, size=length)))
    return texts


@pytest.fixture
def rng():
    return np.random.default_rng(991)


# one (name, passed) row per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, ok in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(("PASS: " if ok else "FAIL: ") + name)
