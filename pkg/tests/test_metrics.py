"""Detection metrics, perturbations, generation probes, metric naming."""
import math
import zlib

import numpy as np
import pytest

from contamkit import (
    BOS_TOKEN,
    Corpus,
    EOS_TOKEN,
    MetricId,
    NgramLanguageModel,
    Orientation,
    PerturbationKind,
    SamplingStrategy,
    SimilarityConfig,
    answer_mem_delta,
    entropy_k,
    keyinfo_score,
    mask_key,
    mem_k,
    metadata_probe,
    min_p_token,
    parse_metric_name,
    perturb,
    perturb_delta,
    ppl_k,
    ref_lm_ratio,
    zlib_ratio,
)
from contamkit.errors import (
    AlignmentError,
    CapabilityError,
    EmptyInputError,
    NotApplicableError,
    ValidationError,
)
from contamkit.metrics import ZLIB_LEVEL

from conftest import build_corpus, build_instance, random_texts, record_from_logprobs

LN = math.log
EXACT = SimilarityConfig(kind="exact")


def random_record(rng, n=None, instance_id="r0"):
    n = n or int(rng.integers(1, 30))
    return record_from_logprobs(-rng.exponential(2.0, size=n), instance_id=instance_id)


# -- ppl_k -------------------------------------------------------------------------


def test_ppl_constant_half():
    record = record_from_logprobs([LN(0.5)] * 6)
    for k in (1, 3, 6):
        score = ppl_k(record, k)
        assert score.value == pytest.approx(2.0, abs=1e-12)
        assert score.truncated is False


def test_ppl_truncation_flag():
    record = record_from_logprobs([LN(0.25)])
    score = ppl_k(record, 200)
    assert score.value == pytest.approx(4.0, abs=1e-12)
    assert score.truncated is True


def test_ppl_hand_geometric_mean():
    # exp(-(ln .5 + ln .125)/2) = 1/sqrt(.5 * .125) = 4
    record = record_from_logprobs([LN(0.5), LN(0.125)])
    assert ppl_k(record, 2).value == pytest.approx(4.0, abs=1e-12)


def test_ppl_uses_first_k_only():
    record = record_from_logprobs([LN(0.5), LN(0.5), LN(0.01)])
    assert ppl_k(record, 2).value == pytest.approx(2.0, abs=1e-12)


def test_ppl_skip_window():
    record = record_from_logprobs([LN(0.01), LN(0.5), LN(0.5)])
    assert ppl_k(record, 2, skip=1).value == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(EmptyInputError):
        ppl_k(record, 2, skip=3)
    with pytest.raises(ValidationError):
        ppl_k(record, 2, skip=-1)


def test_ppl_validation():
    record = record_from_logprobs([LN(0.5)])
    with pytest.raises(ValidationError):
        ppl_k(record, 0)
    with pytest.raises(EmptyInputError):
        ppl_k(record_from_logprobs([]), 5)


def test_ppl_depends_only_on_logprob_multiset(rng):
    values = list(-rng.exponential(1.0, size=8))
    a = record_from_logprobs(values)
    b = record_from_logprobs(values)  # token names differ only beyond index
    assert ppl_k(a, 8).value == ppl_k(b, 8).value


# -- min_p_token ---------------------------------------------------------------------


MINP_RECORD = record_from_logprobs([LN(0.1), LN(0.2), LN(0.4), LN(0.8)])


def test_min_p_hand_values():
    assert min_p_token(MINP_RECORD, 25) == pytest.approx(LN(0.1), abs=1e-12)
    assert min_p_token(MINP_RECORD, 50) == pytest.approx((LN(0.1) + LN(0.2)) / 2, abs=1e-12)


def test_min_p_constant_record():
    record = record_from_logprobs([LN(0.3)] * 5)
    for p in (1, 20, 60, 100):
        assert min_p_token(record, p) == pytest.approx(LN(0.3), abs=1e-12)


def test_min_p_full_window_equals_mean_exactly(rng):
    for _ in range(30):
        record = random_record(rng)
        mean = sum(record.token_logprobs) / len(record.token_logprobs)
        assert min_p_token(record, 100) == mean


def test_min_p_window_size_rounds_up():
    # 15% of 20 tokens must select exactly 3, never 4 via float drift
    values = sorted(-np.linspace(0.1, 2.0, 20))
    record = record_from_logprobs(values)
    worst3 = sorted(values)[:3]
    assert min_p_token(record, 15) == pytest.approx(sum(worst3) / 3, abs=1e-12)


def test_min_p_single_token_floor():
    record = record_from_logprobs([LN(0.5), LN(0.9)])
    assert min_p_token(record, 1) == pytest.approx(LN(0.5), abs=1e-12)


def test_min_p_monotone_in_p(rng):
    for _ in range(30):
        record = random_record(rng)
        values = [min_p_token(record, p) for p in (5, 10, 25, 50, 75, 100)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_min_p_validation():
    with pytest.raises(ValidationError):
        min_p_token(MINP_RECORD, 0)
    with pytest.raises(ValidationError):
        min_p_token(MINP_RECORD, 101)
    with pytest.raises(EmptyInputError):
        min_p_token(record_from_logprobs([]), 50)


# -- mem_k ----------------------------------------------------------------------------


def topped_record(hits):
    # actual token t<i>; top-2 candidates contain it only where hits[i]
    tokens = tuple(f"t{i}" for i in range(len(hits)))
    topk = tuple(
        ((tokens[i] if hit else "x", -0.1), ("y", -0.2))
        for i, hit in enumerate(hits)
    )
    return record_from_logprobs([-0.5] * len(hits), topk=topk)


def test_mem_hand_fraction():
    record = topped_record([True, True, True, False])
    assert mem_k(record, 1) == pytest.approx(0.75)
    assert mem_k(record, 2) == pytest.approx(0.75)


def test_mem_monotone_in_k(rng):
    model = NgramLanguageModel(order=2).fit(
        build_corpus(random_texts(rng, 10, vocab_size=8, len_min=2, len_max=8))
    )
    inst = build_instance("q", random_texts(rng, 1, vocab_size=8, len_min=4, len_max=8)[0])
    record = model.sequence_logprobs(inst)
    values = [mem_k(record, k) for k in range(1, len(record.topk[0]) + 1)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_mem_full_vocab_is_one(rng):
    # in-vocabulary tokens always appear once k spans the whole vocabulary
    corpus = build_corpus(random_texts(rng, 5, vocab_size=6, len_min=2, len_max=6))
    model = NgramLanguageModel(order=2, k_record=100).fit(corpus)
    for inst in corpus.instances:
        record = model.sequence_logprobs(inst)
        assert mem_k(record, model.vocab_size_) == 1.0


def test_mem_memorized_instance_is_one():
    target = build_instance("t", "alpha beta gamma delta", split="train")
    model = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        Corpus(instances=(target,))
    )
    record = model.sequence_logprobs(target)
    assert mem_k(record, 1) == 1.0


def test_mem_requires_topk():
    bare = record_from_logprobs([-0.5, -0.5])
    with pytest.raises(CapabilityError):
        mem_k(bare, 1)


def test_mem_k_beyond_stored_width():
    record = topped_record([True])
    with pytest.raises(ValidationError, match="k_record"):
        mem_k(record, 3)
    with pytest.raises(ValidationError):
        mem_k(record, 0)


# -- entropy_k ----------------------------------------------------------------------


def uniform_topk_record(n_pos, k):
    lp = LN(1.0 / k)
    topk = tuple(tuple((f"c{j}", lp) for j in range(k)) for _ in range(n_pos))
    return record_from_logprobs([-0.5] * n_pos, topk=topk)


def test_entropy_uniform_is_log_k():
    for k in (1, 2, 5, 10):
        record = uniform_topk_record(4, k)
        assert entropy_k(record, k) == pytest.approx(LN(k), abs=1e-12)


def test_entropy_hand_half_quarter():
    # -.5 ln .5 - .25 ln .25 = .5 ln 2 + .5 ln 2 = ln 2
    topk = ((("a", LN(0.5)), ("b", LN(0.25))),)
    record = record_from_logprobs([-0.5], topk=topk)
    assert entropy_k(record, 2) == pytest.approx(LN(2), abs=1e-12)


def test_entropy_certain_position_is_zero():
    topk = ((("a", 0.0), ("b", -50.0)),)
    record = record_from_logprobs([-0.5], topk=topk)
    assert entropy_k(record, 1) == 0.0


def test_entropy_one_is_single_term(rng):
    model = NgramLanguageModel(order=2).fit(
        build_corpus(random_texts(rng, 6, vocab_size=6, len_min=2, len_max=6))
    )
    inst = build_instance("q", random_texts(rng, 1, vocab_size=6, len_min=3, len_max=5)[0])
    record = model.sequence_logprobs(inst)
    expect = np.mean([
        -math.exp(entries[0][1]) * entries[0][1] for entries in record.topk
    ])
    assert entropy_k(record, 1) == pytest.approx(expect, abs=1e-12)


def test_entropy_raw_mass_bounded_by_full_entropy(rng):
    model = NgramLanguageModel(order=2, k_record=50).fit(
        build_corpus(random_texts(rng, 8, vocab_size=7, len_min=2, len_max=7))
    )
    inst = build_instance("q", random_texts(rng, 1, vocab_size=7, len_min=4, len_max=7)[0])
    record = model.sequence_logprobs(inst)
    full = len(record.topk[0])
    for k in range(1, full + 1):
        h = entropy_k(record, k)
        assert 0.0 <= h <= entropy_k(record, full) + 1e-12


def test_entropy_requires_topk():
    with pytest.raises(CapabilityError):
        entropy_k(record_from_logprobs([-0.5]), 1)


# -- ref_lm_ratio --------------------------------------------------------------------


def test_ref_ratio_identical_is_zero():
    record = record_from_logprobs([-0.5, -0.7])
    assert ref_lm_ratio(record, record) == 0.0


def test_ref_ratio_antisymmetric(rng):
    a = random_record(rng, n=6)
    b = record_from_logprobs(-rng.exponential(2.0, size=6), instance_id=a.instance_id)
    assert ref_lm_ratio(a, b) == pytest.approx(-ref_lm_ratio(b, a), abs=1e-12)


def test_ref_ratio_alignment_errors():
    a = record_from_logprobs([-0.5, -0.5], instance_id="a")
    other_id = record_from_logprobs([-0.5, -0.5], instance_id="b")
    short = record_from_logprobs([-0.5], instance_id="a")
    with pytest.raises(AlignmentError):
        ref_lm_ratio(a, other_id)
    with pytest.raises(AlignmentError):
        ref_lm_ratio(a, short)


def test_ref_ratio_memorization_oracle():
    target = build_instance("t", "p q r s t u", split="train")
    trained = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        Corpus(instances=(target,))
    )
    reference = NgramLanguageModel(order=2).fit(build_corpus(["m n o", "n o m"]))
    ratio = ref_lm_ratio(
        trained.sequence_logprobs(target, include_topk=False),
        reference.sequence_logprobs(target, include_topk=False),
    )
    assert ratio > 1.0


# -- zlib_ratio ----------------------------------------------------------------------


def test_zlib_ratio_matches_compressor_oracle():
    text = "the same words repeat the same words repeat"
    record = record_from_logprobs([-0.5] * 8)
    expect = sum(record.token_logprobs) / len(
        zlib.compress(text.encode("utf-8"), ZLIB_LEVEL)
    )
    got = zlib_ratio(record, text)
    assert got == expect
    assert zlib_ratio(record, text) == got  # deterministic


def test_zlib_ratio_linear_in_logprob_sum():
    text = "a b c d"
    single = record_from_logprobs([-0.25] * 4)
    double = record_from_logprobs([-0.5] * 4)
    assert zlib_ratio(double, text) == pytest.approx(2 * zlib_ratio(single, text), abs=1e-12)


def test_zlib_ratio_compressible_vs_random_text():
    repetitive = " ".join(["a"] * 40)
    scattered = " ".join(f"q{i}x{i * 7 % 13}" for i in range(40))
    record = record_from_logprobs([-1.0] * 40)
    len_rep = len(zlib.compress(repetitive.encode(), ZLIB_LEVEL))
    len_rand = len(zlib.compress(scattered.encode(), ZLIB_LEVEL))
    assert len_rep < len_rand
    # same logprob mass over a smaller denominator: more negative ratio
    assert zlib_ratio(record, repetitive) < zlib_ratio(record, scattered)


# -- perturbations --------------------------------------------------------------------


def test_perturbation_kind_validation():
    with pytest.raises(ValidationError):
        PerturbationKind(kind="swap")
    with pytest.raises(ValidationError):
        PerturbationKind(kind="char_noise", rate=1.0)
    with pytest.raises(ValidationError):
        PerturbationKind(kind="char_noise", rate=-0.1)


def test_perturb_is_pure():
    inst = build_instance("x", "One two. Three four. Five six.")
    for kind_name in ("whitespace", "case_change", "random_deletion", "char_noise",
                      "sentence_shuffle"):
        kind = PerturbationKind(kind=kind_name, rate=0.5, seed=9)
        first = perturb(inst, kind)
        again = perturb(inst, kind)
        assert first.text == again.text
        assert first.tokens == again.tokens
        assert first.id == inst.id


def test_deletion_rate_zero_is_identity():
    inst = build_instance("x", "a b c d e")
    out = perturb(inst, PerturbationKind(kind="random_deletion", rate=0.0))
    assert out.text == inst.text
    assert out.tokens == inst.tokens


def test_deletion_keeps_subsequence(rng):
    inst = build_instance("x", " ".join(f"t{i}" for i in range(30)))
    for seed in range(10):
        out = perturb(inst, PerturbationKind(kind="random_deletion", rate=0.4, seed=seed))
        kept = iter(inst.tokens)
        assert all(any(t == k for k in kept) for t in out.tokens)
        assert len(out.tokens) <= len(inst.tokens)


def test_deletion_count_tracks_rate():
    inst = build_instance("x", " ".join(f"t{i}" for i in range(200)))
    removed = [
        200 - len(perturb(inst, PerturbationKind(kind="random_deletion", rate=0.3, seed=s)).tokens)
        for s in range(40)
    ]
    mean = sum(removed) / len(removed)
    sigma = math.sqrt(200 * 0.3 * 0.7 / 40)
    assert abs(mean - 60) <= 5 * sigma


def test_case_change_swaps_case():
    inst = build_instance("x", "AbC dEf")
    out = perturb(inst, PerturbationKind(kind="case_change"))
    assert out.text == "aBc DeF"


def test_whitespace_keeps_tokens():
    inst = build_instance("x", " ".join(f"t{i}" for i in range(20)))
    out = perturb(inst, PerturbationKind(kind="whitespace", rate=0.9, seed=1))
    assert out.tokens == inst.tokens
    assert out.text != inst.text
    assert "  " in out.text


def test_char_noise_preserves_token_count():
    inst = build_instance("x", "alpha beta gamma delta")
    out = perturb(inst, PerturbationKind(kind="char_noise", rate=0.6, seed=2))
    assert len(out.tokens) == len(inst.tokens)
    assert out.text != inst.text
    assert [len(a) for a in out.text.split(" ")] == [len(a) for a in inst.text.split(" ")]


def test_sentence_shuffle_preserves_multiset():
    inst = build_instance("x", "Aa bb. Cc dd! Ee ff? Gg hh.")
    sentences = ["Aa bb.", "Cc dd!", "Ee ff?", "Gg hh."]
    for seed in range(8):
        out = perturb(inst, PerturbationKind(kind="sentence_shuffle", seed=seed))
        got = out.text.replace("! ", "!|").replace("? ", "?|").replace(". ", ".|").split("|")
        assert sorted(got) == sorted(sentences)


def test_sentence_shuffle_needs_two_sentences():
    inst = build_instance("x", "only one sentence here.")
    with pytest.raises(NotApplicableError):
        perturb(inst, PerturbationKind(kind="sentence_shuffle"))


def test_perturb_retokenizes():
    inst = build_instance("x", "a b c d e f g h")
    out = perturb(inst, PerturbationKind(kind="random_deletion", rate=0.5, seed=3))
    assert out.tokens == tuple(out.text.split())


# -- perturb_delta --------------------------------------------------------------------


def test_perturb_delta_identity_and_antisymmetry(rng):
    record = random_record(rng, n=8)
    assert perturb_delta(record, record) == 0.0
    other = record_from_logprobs(-rng.exponential(1.0, size=5), instance_id=record.instance_id)
    assert perturb_delta(record, other) == pytest.approx(-perturb_delta(other, record))


def test_perturb_delta_uses_means_not_sums():
    record = record_from_logprobs([-1.0, -1.0], instance_id="a")
    longer = record_from_logprobs([-1.0, -1.0, -1.0, -1.0], instance_id="a")
    assert perturb_delta(record, longer) == 0.0


def test_perturb_delta_id_mismatch():
    a = record_from_logprobs([-1.0], instance_id="a")
    b = record_from_logprobs([-1.0], instance_id="b")
    with pytest.raises(AlignmentError):
        perturb_delta(a, b)


def test_perturb_delta_memorization_oracle():
    target = build_instance("t", "p q r s t u v w", split="train")
    model = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        Corpus(instances=(target,))
    )
    twin = perturb(target, PerturbationKind(kind="random_deletion", rate=0.3, seed=4))
    assert twin.tokens != target.tokens
    delta = perturb_delta(
        model.sequence_logprobs(target, include_topk=False),
        model.sequence_logprobs(twin, include_topk=False),
    )
    assert delta > 0.0


# -- keyinfo -------------------------------------------------------------------------


def test_keyinfo_memorized_instance_scores_one():
    target = build_instance("t", "ctx0 ctx1 key0 key1 key2 tail", split="train")
    model = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        Corpus(instances=(target,))
    )
    pair = mask_key(target, 2, 5)
    assert keyinfo_score(model, pair, EXACT) == 1.0


def test_keyinfo_partial_jaccard_hand_value():
    # decode after "c" reproduces k1 k2 then diverges to "wrong":
    # unigram grams {k1,k2,k3} vs {k1,k2,wrong} give 2/4
    trained = build_instance("m", "c k1 k2 wrong", split="train")
    model = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        Corpus(instances=(trained,))
    )
    probe = build_instance("t", "c k1 k2 k3", split="test")
    pair = mask_key(probe, 1, 4)
    cfg = SimilarityConfig(kind="token_jaccard", w=1, threshold=0.5)
    assert keyinfo_score(model, pair, cfg) == pytest.approx(0.5)


def test_keyinfo_unknown_key_scores_zero():
    model = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        build_corpus(["c a b d"])
    )
    probe = build_instance("t", "c zz1 zz2", split="test")
    pair = mask_key(probe, 1, 3)
    assert keyinfo_score(model, pair, EXACT) == 0.0


def test_keyinfo_hole_at_start_not_applicable():
    model = NgramLanguageModel().fit(build_corpus(["a b c"]))
    probe = build_instance("t", "a b c")
    pair = mask_key(probe, 0, 2)
    with pytest.raises(NotApplicableError):
        keyinfo_score(model, pair, EXACT)


# -- metadata probe -------------------------------------------------------------------


def test_metadata_probe_memorized_generation_hits_one():
    seed_text = build_instance("m", "m0 m1 m2 m3", split="train")
    model = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        Corpus(instances=(seed_text,))
    )
    dataset = Corpus(instances=(build_instance("d0", "m1 m2 m3", split="test"),))
    score, best = metadata_probe(
        model, ("m0",), dataset, SamplingStrategy(kind="greedy"), 1, 10, EXACT
    )
    assert score == 1.0
    assert best == "d0"


def test_metadata_probe_disjoint_vocab_scores_zero():
    model = NgramLanguageModel(order=2, exposure_multiplier=50).fit(
        build_corpus(["m0 m1 m2"])
    )
    dataset = Corpus(instances=(build_instance("d0", "z0 z1 z2", split="test"),))
    cfg = SimilarityConfig(kind="token_jaccard", w=1)
    score, best = metadata_probe(
        model, ("m0",), dataset, SamplingStrategy(kind="greedy"), 1, 10, cfg
    )
    assert score == 0.0


def test_metadata_probe_reproducible(rng):
    corpus = build_corpus(random_texts(rng, 12, vocab_size=8, len_min=3, len_max=8))
    model = NgramLanguageModel(order=2).fit(corpus)
    dataset = Corpus(
        instances=tuple(
            build_instance(f"d{j}", t, split="test")
            for j, t in enumerate(random_texts(rng, 4, vocab_size=8, len_min=3, len_max=6))
        )
    )
    strat = SamplingStrategy(kind="top_k", k=3, seed=21)
    first = metadata_probe(model, ("w0",), dataset, strat, 4, 8, EXACT)
    assert metadata_probe(model, ("w0",), dataset, strat, 4, 8, EXACT) == first


def test_metadata_probe_validation(rng):
    model = NgramLanguageModel().fit(build_corpus(["a b"]))
    empty = Corpus(instances=())
    strat = SamplingStrategy(kind="greedy")
    with pytest.raises(EmptyInputError):
        metadata_probe(model, ("a",), empty, strat, 1, 5, EXACT)
    dataset = Corpus(instances=(build_instance("d", "a b", split="test"),))
    with pytest.raises(ValidationError):
        metadata_probe(model, ("a",), dataset, strat, 0, 5, EXACT)
    with pytest.raises(ValidationError):
        metadata_probe(model, ("a",), dataset, strat, 1, 0, EXACT)


# -- answer memorization ---------------------------------------------------------------


def test_answer_mem_hand_cases():
    flagged = answer_mem_delta(0.9, 0.5, margin=0.1)
    assert flagged.flagged is True
    assert flagged.delta == pytest.approx(0.4)
    equal = answer_mem_delta(0.7, 0.7, margin=0.1)
    assert equal.flagged is False
    assert equal.delta == 0.0
    near = answer_mem_delta(0.55, 0.5, margin=0.1)
    assert near.flagged is False


def test_answer_mem_boundary_not_flagged():
    # a gap exactly at the margin does not count as "much higher"
    result = answer_mem_delta(0.6, 0.5, margin=0.1)
    assert result.flagged is False


def test_answer_mem_validation():
    with pytest.raises(ValidationError):
        answer_mem_delta(1.2, 0.5)
    with pytest.raises(ValidationError):
        answer_mem_delta(0.5, -0.1)
    with pytest.raises(ValidationError):
        answer_mem_delta(0.5, 0.5, margin=-0.2)


# -- metric naming ---------------------------------------------------------------------


def test_parse_metric_names():
    assert parse_metric_name("PPL_50") == MetricId(family="ppl", param=50)
    assert parse_metric_name("Min 5% token") == MetricId(family="min_p_token", param=5)
    assert parse_metric_name("Mem 15") == MetricId(family="mem", param=15)
    assert parse_metric_name("Entropy 25") == MetricId(family="entropy", param=25)
    assert parse_metric_name("Zlib ratio") == MetricId(family="zlib_ratio")
    assert parse_metric_name("Ref LM ratio") == MetricId(family="ref_lm_ratio")


def test_display_name_round_trip():
    for name in (
        "PPL_200",
        "Min 15% token",
        "Mem 5",
        "Entropy 5",
        "Zlib ratio",
        "Ref LM ratio",
        "Perturb delta",
        "Key info",
        "Metadata probe",
    ):
        assert parse_metric_name(name).display_name() == name


def test_parse_unknown_metric_lists_valid_forms():
    with pytest.raises(ValidationError, match="PPL_<k>"):
        parse_metric_name("ppl_50")
    with pytest.raises(ValidationError):
        parse_metric_name("Min token")


def test_metric_id_validation():
    with pytest.raises(ValidationError):
        MetricId(family="nope")
    with pytest.raises(ValidationError):
        MetricId(family="ppl")  # parameter required


def test_orientations_cover_all_families():
    from contamkit.metrics import METRIC_FAMILIES, ORIENTATIONS

    assert set(ORIENTATIONS) == set(METRIC_FAMILIES)
    assert MetricId(family="ppl", param=50).orientation is Orientation.LOWER_MEANS_SEEN
    assert MetricId(family="mem", param=1).orientation is Orientation.HIGHER_MEANS_SEEN


# -- orientation semantics --------------------------------------------------------------


def test_every_metric_moves_toward_seen_under_memorization():
    # one memorized instance vs a held-out probe mixing familiar and novel
    # tokens; each family's score must move in its declared direction
    seen = build_instance("seen", "s0 s1 s2 s3 s4 s5 s6 s7", split="train")
    unseen = build_instance("unseen", "s0 u1 s2 u3 s4 u5 s6 u7", split="test")
    model = NgramLanguageModel(order=2, exposure_multiplier=60, k_record=25).fit(
        Corpus(instances=(seen,))
    )
    rec_seen = model.sequence_logprobs(seen)
    rec_unseen = model.sequence_logprobs(unseen)

    assert ppl_k(rec_seen, 8).value < ppl_k(rec_unseen, 8).value
    assert min_p_token(rec_seen, 25) > min_p_token(rec_unseen, 25)
    assert mem_k(rec_seen, 1) > mem_k(rec_unseen, 1)
    assert entropy_k(rec_seen, 4) < entropy_k(rec_unseen, 4)

    reference = NgramLanguageModel(order=2).fit(build_corpus(["r0 r1 r2 r3"]))
    assert ref_lm_ratio(rec_seen, reference.sequence_logprobs(seen)) > ref_lm_ratio(
        rec_unseen, reference.sequence_logprobs(unseen)
    )

    assert zlib_ratio(rec_seen, seen.text) > zlib_ratio(rec_unseen, unseen.text)

    kind = PerturbationKind(kind="random_deletion", rate=0.3, seed=11)
    delta_seen = perturb_delta(
        rec_seen, model.sequence_logprobs(perturb(seen, kind), include_topk=False)
    )
    delta_unseen = perturb_delta(
        rec_unseen, model.sequence_logprobs(perturb(unseen, kind), include_topk=False)
    )
    assert delta_seen > delta_unseen

    cfg = SimilarityConfig(kind="token_jaccard", w=1)
    key_seen = keyinfo_score(model, mask_key(seen, 3, 6), cfg)
    key_unseen = keyinfo_score(model, mask_key(unseen, 3, 6), cfg)
    assert key_seen > key_unseen

    strat = SamplingStrategy(kind="greedy")
    probe_seen, _ = metadata_probe(
        model, seen.tokens[:1], Corpus(instances=(seen,)), strat, 1, 10, cfg
    )
    probe_unseen, _ = metadata_probe(
        model, unseen.tokens[:1], Corpus(instances=(unseen,)), strat, 1, 10, cfg
    )
    assert probe_seen > probe_unseen
