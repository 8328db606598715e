import json

import pytest

from aiti.encoder import EncoderOptions, encode
from aiti.objects import object_to_dict, parse_object, serialize_bundle, serialize_object
from aiti.redteam import load_report, report_from_dict, report_to_dict
from aiti.validation import has_errors, validate


@pytest.fixture
def listing1_report(fixtures_dir):
    return load_report(fixtures_dir / "listing1_report.json")


@pytest.fixture
def listing1_options(fixed_clock):
    return EncoderOptions(
        id_strategy="verbatim",
        verbatim_id="exampleFGM_Resnet-50_CIFAR10",
        clock=fixed_clock,
    )


def test_reconstructs_legacy_example_bytes(listing1_report, listing1_options, listing1_text):
    bundle = encode(listing1_report, listing1_options)
    assert len(bundle.objects) == 1
    reference = parse_object(listing1_text, "paper-compat")
    assert serialize_object(bundle.objects[0], "paper-compat") == serialize_object(
        reference, "paper-compat"
    )


def test_reconstruction_equals_verbatim_json(listing1_report, listing1_options, listing1_doc):
    bundle = encode(listing1_report, listing1_options)
    assert object_to_dict(bundle.objects[0], "paper-compat") == listing1_doc


def test_minimal_bundle_has_one_object(listing1_report, fixed_clock):
    opts = EncoderOptions(id_strategy="deterministic-from-content", clock=fixed_clock)
    bundle = encode(listing1_report, opts)
    assert len(bundle.objects) == 1
    assert bundle.objects[0].kind == "ai-attack"


def test_full_bundle_resolves_and_validates(listing1_report, fixed_clock):
    opts = EncoderOptions(
        id_strategy="deterministic-from-content",
        clock=fixed_clock,
        emit_pattern_object=True,
        emit_sighting=True,
    )
    bundle = encode(listing1_report, opts)
    assert [o.kind for o in bundle.objects] == [
        "ai-attack",
        "ai-attack-pattern",
        "relationship",
        "sighting",
    ]
    relationship = bundle.objects[2]
    assert relationship.prop("relationship_type") == "uses"
    assert relationship.prop("source_ref") == bundle.objects[0].id
    assert relationship.prop("target_ref") == bundle.objects[1].id
    sighting = bundle.objects[3]
    assert sighting.prop("sighting_of_ref") == bundle.objects[0].id
    assert sighting.prop("count") == listing1_report.sample_count
    assert not has_errors(validate(bundle, "strict"))


def test_producer_identity_object(listing1_report, fixed_clock):
    opts = EncoderOptions(
        id_strategy="deterministic-from-content",
        clock=fixed_clock,
        producer_identity="model-redteam-lab",
    )
    bundle = encode(listing1_report, opts)
    kinds = [o.kind for o in bundle.objects]
    assert kinds == ["ai-attack", "identity"]
    assert bundle.objects[1].prop("name") == "model-redteam-lab"
    assert not has_errors(validate(bundle, "lenient"))


def test_deterministic_ids_give_byte_identical_bundles(listing1_report, fixed_clock):
    opts = EncoderOptions(
        id_strategy="deterministic-from-content",
        clock=fixed_clock,
        emit_pattern_object=True,
        emit_sighting=True,
    )
    a = serialize_bundle(encode(listing1_report, opts), "canonical")
    b = serialize_bundle(encode(listing1_report, opts), "canonical")
    assert a == b


def test_random_ids_differ_between_runs(listing1_report, fixed_clock):
    opts = EncoderOptions(id_strategy="canonical-random", clock=fixed_clock)
    a = encode(listing1_report, opts)
    b = encode(listing1_report, opts)
    assert a.objects[0].id != b.objects[0].id
    assert a.id != b.id


def test_lenient_validation_always_clean(listing1_report, fixed_clock):
    for emit_pattern in (False, True):
        for emit_sighting in (False, True):
            opts = EncoderOptions(
                id_strategy="deterministic-from-content",
                clock=fixed_clock,
                emit_pattern_object=emit_pattern,
                emit_sighting=emit_sighting,
            )
            assert not has_errors(validate(encode(listing1_report, opts), "lenient"))


def test_default_threat_fields(listing1_report, fixed_clock):
    # strip the passthrough keys: defaults must kick in
    doc = report_to_dict(listing1_report)
    doc["hyperparameters"] = {"epsilon": 0.2, "norm": "inf", "targeted": False}
    report = report_from_dict(doc)
    obj = encode(report, EncoderOptions(clock=fixed_clock)).objects[0]
    assert obj.prop("sophistication") == "easy"  # epsilon is the only knob
    assert obj.prop("resource_level") == "individual"
    assert obj.prop("primary_motivation") == "unknown"
    assert obj.prop("description") == (
        "An Fast Gradient Method (FGM) attack is possible against an AI model trained "
        "using the CIFAR-10 dataset based on the Resnet-50 architecture."
    )


def test_sophistication_unknown_with_extra_knobs(listing1_report, fixed_clock):
    doc = report_to_dict(listing1_report)
    doc["hyperparameters"] = {
        "epsilon": 0.2,
        "norm": "inf",
        "targeted": False,
        "iterations": 40,
    }
    report = report_from_dict(doc)
    obj = encode(report, EncoderOptions(clock=fixed_clock)).objects[0]
    assert obj.prop("sophistication") == "unknown"


def test_pattern_text_uses_reported_epsilon(fixed_clock, listing1_report):
    doc = report_to_dict(listing1_report)
    doc["hyperparameters"]["epsilon"] = 0.5
    report = report_from_dict(doc)
    obj = encode(report, EncoderOptions(clock=fixed_clock)).objects[0]
    assert obj.prop("ai_attack_pattern").endswith("epsilon = 0.5")


def test_verbatim_strategy_requires_id():
    with pytest.raises(ValueError):
        EncoderOptions(id_strategy="verbatim")
    with pytest.raises(ValueError):
        EncoderOptions(id_strategy="round-robin")


def test_bundle_serialization_is_valid_json(listing1_report, fixed_clock):
    opts = EncoderOptions(id_strategy="deterministic-from-content", clock=fixed_clock)
    text = serialize_bundle(encode(listing1_report, opts), "paper-compat")
    doc = json.loads(text)
    assert doc["type"] == "bundle"
    assert len(doc["objects"]) == 1
