"""Scenario configs, synthetic domain generation, and end-to-end runs."""
import json

import numpy as np
import pytest

from contamkit import Split
from contamkit.errors import ValidationError
from contamkit.scenarios import (
    DomainSpec,
    ScenarioAssertion,
    ScenarioConfig,
    generate_domain,
    load_scenario,
    run_scenario,
)


def tiny_domain(name="toy", **overrides):
    params = dict(
        name=name,
        vocab_size=20,
        zipf_exponent=0.8,
        len_min=5,
        len_max=10,
        n_train=300,
        n_test=150,
    )
    params.update(overrides)
    return DomainSpec(**params)


def tiny_config(**overrides):
    params = dict(
        name="tiny",
        seed=7,
        n_reps=2,
        model={"order": 2, "alpha": 1.0},
        plan={"n_seen": 100, "n_unseen": 100},
        domains=(tiny_domain(),),
        metrics=("PPL_50",),
        assertions=(
            ScenarioAssertion(
                kind="within", metric="PPL_50", band=(0.0, 1.0), domain="toy"
            ),
        ),
    )
    params.update(overrides)
    return ScenarioConfig(**params)


# -- validation -----------------------------------------------------------------


def test_domain_spec_validation():
    with pytest.raises(ValidationError):
        tiny_domain(vocab_size=1)
    with pytest.raises(ValidationError):
        tiny_domain(zipf_exponent=-0.1)
    with pytest.raises(ValidationError):
        tiny_domain(len_min=0)
    with pytest.raises(ValidationError):
        tiny_domain(len_min=8, len_max=5)
    with pytest.raises(ValidationError):
        tiny_domain(n_train=0)


def test_assertion_validation():
    with pytest.raises(ValidationError, match="kind"):
        ScenarioAssertion(kind="sideways", metric="PPL_50", band=(0, 1), domain="d")
    with pytest.raises(ValidationError, match="band"):
        ScenarioAssertion(kind="within", metric="PPL_50", band=(0.9, 0.1), domain="d")
    with pytest.raises(ValidationError, match="domain"):
        ScenarioAssertion(kind="within", metric="PPL_50", band=(0, 1))
    with pytest.raises(ValidationError, match="seen"):
        ScenarioAssertion(kind="cross", metric="PPL_50", band=(0, 1), seen="a")


def test_config_validation():
    with pytest.raises(ValidationError, match="n_reps"):
        tiny_config(n_reps=0)
    with pytest.raises(ValidationError, match="domain"):
        tiny_config(domains=())
    with pytest.raises(ValidationError, match="duplicate"):
        tiny_config(domains=(tiny_domain(), tiny_domain()))
    with pytest.raises(ValidationError, match="metric"):
        tiny_config(metrics=())
    with pytest.raises(ValidationError):
        tiny_config(metrics=("PPL_fifty",))
    with pytest.raises(ValidationError, match="cross_metric"):
        tiny_config(cross_metric="Mem 5")
    with pytest.raises(ValidationError, match="two domains"):
        tiny_config(cross_metric="PPL_50")
    with pytest.raises(ValidationError, match="not in the metric list"):
        tiny_config(
            assertions=(
                ScenarioAssertion(
                    kind="within", metric="Mem 5", band=(0, 1), domain="toy"
                ),
            )
        )
    with pytest.raises(ValidationError, match="unknown domain"):
        tiny_config(
            assertions=(
                ScenarioAssertion(
                    kind="within", metric="PPL_50", band=(0, 1), domain="nope"
                ),
            )
        )
    with pytest.raises(ValidationError, match="cross assertions"):
        tiny_config(
            domains=(tiny_domain("a"), tiny_domain("b")),
            assertions=(
                ScenarioAssertion(
                    kind="cross", metric="PPL_50", band=(0, 1), seen="a", unseen="b"
                ),
            ),
        )


def test_from_dict_and_load(tmp_path):
    obj = {
        "name": "file-scenario",
        "seed": 3,
        "n_reps": 1,
        "model": {"order": 2},
        "plan": {"n_seen": 100, "n_unseen": 100},
        "domains": [
            {
                "name": "toy",
                "vocab_size": 20,
                "zipf_exponent": 0.8,
                "len_min": 5,
                "len_max": 10,
                "n_train": 300,
                "n_test": 150,
            }
        ],
        "metrics": ["PPL_50"],
        "assertions": [
            {"kind": "within", "metric": "PPL_50", "band": [0, 1], "domain": "toy"}
        ],
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(obj), encoding="utf-8")
    config = load_scenario(str(path))
    assert config.name == "file-scenario"
    assert config.domains[0].vocab_size == 20
    assert config.assertions[0].band == (0.0, 1.0)

    del obj["name"]
    path.write_text(json.dumps(obj), encoding="utf-8")
    with pytest.raises(ValidationError, match="'name'"):
        load_scenario(str(path))

    path.write_text("{nope", encoding="utf-8")
    with pytest.raises(ValidationError, match="JSON"):
        load_scenario(str(path))


def test_shipped_scenarios_parse():
    names = {}
    for fname in ("pretraining.json", "finetuning.json", "domain_shift.json"):
        config = load_scenario(f"scenarios/{fname}")
        names[fname] = config.name
        assert config.assertions  # every shipped scenario asserts something
    assert names["pretraining.json"] == "pretraining-like"
    assert names["finetuning.json"] == "fine-tuning-like"
    assert names["domain_shift.json"] == "distribution-shift"


# -- generation -----------------------------------------------------------------


def test_generate_domain_structure():
    spec = tiny_domain(n_train=40, n_test=10)
    instances = generate_domain(spec, np.random.default_rng(1))
    assert len(instances) == 50
    train = [i for i in instances if i.split is Split.TRAIN]
    test = [i for i in instances if i.split is Split.TEST]
    assert len(train) == 40 and len(test) == 10
    assert train[0].id == "toy-train-000000"
    assert test[0].id == "toy-test-000000"
    vocab = {f"toy_{i:05d}" for i in range(spec.vocab_size)}
    for inst in instances:
        assert inst.domain == "toy"
        assert spec.len_min <= len(inst.tokens) <= spec.len_max
        assert set(inst.tokens) <= vocab
        assert tuple(inst.text.split()) == inst.tokens


def test_generate_domain_is_rng_deterministic():
    spec = tiny_domain()
    a = generate_domain(spec, np.random.default_rng(11))
    b = generate_domain(spec, np.random.default_rng(11))
    c = generate_domain(spec, np.random.default_rng(12))
    assert [i.text for i in a] == [i.text for i in b]
    assert [i.text for i in a] != [i.text for i in c]


# -- execution ------------------------------------------------------------------


def test_run_scenario_report_shape_and_determinism():
    config = tiny_config()
    report = run_scenario(config)
    again = run_scenario(config)
    assert report.to_json_dict() == again.to_json_dict()
    assert report.name == "tiny"
    assert report.n_reps == 2
    assert set(report.mean_auc) == {"PPL_50"}
    assert set(report.mean_auc["PPL_50"]) == {"toy"}
    assert len(report.per_rep_auc) == 2
    rep_values = [r["PPL_50"]["toy"] for r in report.per_rep_auc]
    assert report.mean_auc["PPL_50"]["toy"] == pytest.approx(np.mean(rep_values))
    assert report.passed is True
    assert report.assertion_results[0].passed is True
    # same-distribution halves at exposure 1: close to random guessing
    assert 0.3 <= report.mean_auc["PPL_50"]["toy"] <= 0.7
    text = report.to_text()
    assert "Overall: PASS" in text
    assert "Scenario: tiny" in text
    assert report.ppl_stats is not None and "toy" in report.ppl_stats


def test_run_scenario_failing_assertion():
    config = tiny_config(
        assertions=(
            ScenarioAssertion(
                kind="within", metric="PPL_50", band=(0.99, 1.0), domain="toy"
            ),
        ),
        n_reps=1,
    )
    report = run_scenario(config)
    assert report.passed is False
    result = report.assertion_results[0]
    assert result.passed is False
    assert result.observed < 0.99
    text = report.to_text()
    assert "FAIL" in text and "Overall: FAIL" in text
    payload = report.to_json_dict()
    assert payload["passed"] is False
    assert payload["assertions"][0]["pass"] is False
    assert payload["assertions"][0]["band"] == [0.99, 1.0]


def test_run_scenario_cross_domain_path():
    config = tiny_config(
        domains=(
            tiny_domain("narrow", vocab_size=10, zipf_exponent=1.0),
            tiny_domain("broad", vocab_size=200, zipf_exponent=0.2),
        ),
        metrics=("PPL_50",),
        cross_metric="PPL_50",
        n_reps=1,
        assertions=(
            ScenarioAssertion(
                kind="cross",
                metric="PPL_50",
                band=(0.5, 1.0),
                seen="narrow",
                unseen="broad",
            ),
        ),
    )
    report = run_scenario(config)
    assert set(report.cross_domains) == {"narrow", "broad"}
    assert report.cross_domains[0] == "narrow"  # lower PPL domain leads
    assert len(report.cross_mean) == 2 and all(len(r) == 2 for r in report.cross_mean)
    # single rep: diagonal cells are exactly the within-domain AUCs
    for idx, domain in enumerate(report.cross_domains):
        assert report.cross_mean[idx][idx] == report.mean_auc["PPL_50"][domain]
    i = report.cross_domains.index("narrow")
    j = report.cross_domains.index("broad")
    assert report.assertion_results[0].observed == report.cross_mean[i][j]
    assert "seen\\unseen" in report.to_text()


def test_report_json_has_no_timestamps():
    report = run_scenario(tiny_config(n_reps=1))
    payload = json.dumps(report.to_json_dict())
    assert "time" not in payload and "date" not in payload
