from __future__ import annotations

import json

import numpy as np
import pytest

from plasmaug import graph
from plasmaug.dist import Constant, Uniform
from plasmaug.errors import ConfigurationError
from plasmaug.field import SampleBundle


def flip_choice(seed: int) -> graph.AugNode:
    """The random-flip construction: vflip, hflip, both, or nothing."""
    return graph.choice([
        graph.leaf("vflip", seed=201),
        graph.leaf("hflip", seed=202),
        graph.cascade([graph.leaf("vflip", seed=203),
                       graph.leaf("hflip", seed=204)], seed=205),
        graph.identity(seed=206),
    ], seed=seed)


# --- construction and validation ------------------------------------------------

def test_leaf_fills_schema_defaults_in_order():
    node = graph.leaf("plasma_warp", seed=1, strength=Constant(3.0))
    assert [p for p, _ in node.params] == ["strength", "roughness"]
    assert dict(node.params)["strength"] == Constant(3.0)
    assert dict(node.params)["roughness"] == Uniform(0.2, 0.7)


def test_leaf_rejects_unknown_ops_params_and_bounds():
    with pytest.raises(ConfigurationError):
        graph.leaf("no_such_op", seed=1)
    with pytest.raises(ConfigurationError):
        graph.leaf("brightness", seed=1, gamma=Constant(1.0))
    with pytest.raises(ConfigurationError):
        graph.leaf("brightness", seed=1, delta=Uniform(-2.0, 0.0))


def test_composites_need_children_and_matching_weights():
    with pytest.raises(ConfigurationError):
        graph.cascade([], seed=0)
    with pytest.raises(ConfigurationError):
        graph.choice([graph.identity()], seed=0, weights=[0.5, 0.5])
    with pytest.raises(ConfigurationError):
        graph.choice([graph.identity(), graph.identity()], seed=0,
                     weights=[-1.0, 2.0])


# --- sampling --------------------------------------------------------------------

def test_constant_distribution_always_samples_its_value():
    node = graph.leaf("brightness", seed=3, delta=Constant(0.3))
    for size in ((64, 64), (128, 256)):
        applied = graph.sample_params(node, *size)
        assert dict(applied.values)["delta"] == 0.3


def test_same_node_same_size_samples_identically():
    node = graph.leaf("plasma_warp", seed=9)
    a = graph.sample_params(node, 256, 256)
    b = graph.sample_params(node, 256, 256)
    assert a == b


def test_degenerate_choice_weights_pick_surely():
    node = graph.choice([graph.identity(), graph.identity(), graph.identity()],
                        seed=5, weights=[1.0, 0.0, 0.0])
    for seed in range(20):
        applied = graph.sample_params(
            graph.AugNode(**{**node.__dict__, "seed": seed}), 100, 100)
        assert applied.branch == 0


def test_sizes_decorrelate_sampled_params():
    differing = 0
    for seed in range(100):
        node = graph.leaf("brightness", seed=seed)
        a = graph.sample_params(node, 256, 256)
        b = graph.sample_params(node, 257, 257)
        differing += (a != b)
    assert differing >= 95


def test_choice_respects_weights_empirically():
    hits = 0
    for seed in range(10_000):
        node = graph.choice([graph.identity(), graph.identity()], seed=seed,
                            weights=[0.7, 0.3])
        hits += (graph.sample_params(node, 64, 64).branch == 0)
    assert abs(hits / 10_000 - 0.7) <= 0.02


# --- application -----------------------------------------------------------------

def test_identity_node_keeps_bundle_and_makes_validity(card):
    bundle = SampleBundle(image=card)
    out = graph.apply(graph.identity(seed=4), bundle)
    assert np.array_equal(out.image, card)
    assert out.validity.min() == 1.0


def test_random_flip_produces_exactly_the_four_expected_images(card):
    bundle = SampleBundle(image=card)
    expected = {
        0: card[:, ::-1, :],          # vflip
        1: card[:, :, ::-1],          # hflip
        2: card[:, ::-1, ::-1],       # both
        3: card,                      # identity
    }
    seen = set()
    for seed in range(40):
        node = flip_choice(seed)
        out, applied = graph.apply_traced(node, bundle)
        branch = applied.branch
        assert np.array_equal(out.image, expected[branch])
        seen.add(branch)
    assert seen == {0, 1, 2, 3}


def test_cascaded_flips_cancel(card):
    node = graph.cascade([graph.leaf("hflip", seed=1),
                          graph.leaf("hflip", seed=2)], seed=3)
    out = graph.apply(node, SampleBundle(image=card))
    assert np.abs(out.image - card).max() <= 1e-6
    assert out.validity.min() == 1.0


def test_apply_is_deterministic(card):
    node = graph.cascade([
        graph.leaf("plasma_brightness", seed=11),
        graph.leaf("plasma_warp", seed=12),
        graph.leaf("gaussian_noise", seed=13),
    ], seed=10)
    bundle = SampleBundle(image=card)
    a = graph.apply(node, bundle)
    b = graph.apply(node, bundle)
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.validity, b.validity)


def test_dorsal_ops_leave_annotations_alone(card):
    from plasmaug.field import PointSet
    mask = (card[0] > 0.5).astype(float)
    bundle = SampleBundle(image=card, mask=mask, points=PointSet(np.array([[3.0, 4.0]])))
    node = graph.leaf("brightness", seed=2, delta=Constant(0.25))
    out = graph.apply(node, bundle)
    assert np.array_equal(out.mask, mask)
    assert np.array_equal(out.points.xy, [[3.0, 4.0]])
    assert out.validity.min() == 1.0
    assert not np.array_equal(out.image, card)


def test_ventral_ops_move_image_mask_and_points_consistently(card):
    from plasmaug.field import PointSet
    h, w = card.shape[1:]
    mask = np.zeros((h, w))
    mask[5:9, 3:7] = 1.0
    bundle = SampleBundle(image=card, mask=mask,
                          points=PointSet(np.array([[3.0, 5.0]])))
    node = graph.leaf("hflip", seed=1)
    out = graph.apply(node, bundle)
    assert np.array_equal(out.image, card[:, :, ::-1])
    assert np.array_equal(out.mask, mask[:, ::-1])
    assert np.abs(out.points.xy - [[w - 1 - 3.0, 5.0]]).max() <= 1e-9


def test_cascade_fusion_matches_sequential_application(card):
    h, w = card.shape[1:]
    fused_node = graph.cascade([
        graph.leaf("hflip", seed=21),
        graph.leaf("perspective", seed=22, corner_jitter=Constant(0.05)),
        graph.leaf("vflip", seed=23),
    ], seed=20)
    bundle = SampleBundle(image=card)
    fused = graph.apply(fused_node, bundle)

    sequential = bundle
    for child in fused_node.children:
        sequential = graph.apply(graph.cascade([child], seed=99), sequential)
    assert np.abs(fused.image - sequential.image).mean() <= 1e-3


def test_mixed_cascade_materializes_between_ventral_runs(card):
    node = graph.cascade([
        graph.leaf("hflip", seed=31),
        graph.leaf("brightness", seed=32, delta=Constant(0.2)),
        graph.leaf("vflip", seed=33),
    ], seed=30)
    out = graph.apply(node, SampleBundle(image=card))
    expected = np.clip(card[:, :, ::-1] + 0.2, 0.0, 1.0)[:, ::-1, :]
    assert np.abs(out.image - expected).max() <= 1e-6


def test_prior_validity_propagates(card):
    h, w = card.shape[1:]
    prior = np.ones((h, w))
    prior[:, :4] = 0.0
    bundle = SampleBundle(image=card, validity=prior)
    out = graph.apply(graph.leaf("hflip", seed=1), bundle)
    assert np.array_equal(out.validity[:, -4:], np.zeros((h, 4)))
    assert out.validity[:, :-4].min() == 1.0


# --- serialization ----------------------------------------------------------------

def build_fifteen_node_graph(seed: int = 77) -> graph.AugNode:
    return graph.cascade([
        graph.choice([
            graph.leaf("plasma_brightness", seed=1, strength=Uniform(0.0, 0.4)),
            graph.leaf("plasma_shadow", seed=2),
            graph.identity(seed=3),
        ], seed=4, weights=[0.5, 0.25, 0.25]),
        graph.cascade([
            graph.leaf("plasma_warp", seed=5, strength=Uniform(0.0, 8.0)),
            graph.leaf("perspective", seed=6),
        ], seed=7),
        graph.choice([
            graph.leaf("gaussian_noise", seed=8),
            graph.leaf("linear_color", seed=9),
            graph.cascade([graph.leaf("brightness", seed=10),
                           graph.leaf("hflip", seed=11)], seed=12),
        ], seed=13),
        graph.leaf("vflip", seed=14),
    ], seed=seed)


def test_serialize_round_trip_is_structural_identity():
    node = build_fifteen_node_graph()
    back = graph.deserialize(graph.serialize(node))
    assert back == node
    assert graph.serialize(back) == graph.serialize(node)


def test_seed_is_the_only_difference_between_reseeded_nodes():
    a = json.loads(graph.serialize(graph.leaf("brightness", seed=1)))
    b = json.loads(graph.serialize(graph.leaf("brightness", seed=2)))
    assert a.pop("seed") == 1
    assert b.pop("seed") == 2
    assert a == b


def test_deserialized_graph_behaves_bitwise_identically(card):
    node = build_fifteen_node_graph()
    back = graph.deserialize(graph.serialize(node))
    bundle = SampleBundle(image=card)
    out_a = graph.apply(node, bundle)
    out_b = graph.apply(back, bundle)
    assert np.array_equal(out_a.image, out_b.image)
    assert np.array_equal(out_a.validity, out_b.validity)


def test_serialized_form_validates_against_published_schema():
    import jsonschema
    from pathlib import Path
    schema = json.loads(Path(__file__).resolve().parents[1]
                        .joinpath("docs", "augnode.schema.json").read_text())
    doc = json.loads(graph.serialize(build_fifteen_node_graph()))
    jsonschema.validate(doc, schema)


def test_missing_seed_is_a_configuration_error():
    with pytest.raises(ConfigurationError, match="seed"):
        graph.deserialize('{"kind": "identity"}')


def test_deserialize_reports_json_pointer_paths():
    bad = ('{"kind": "cascade", "seed": 1, "children": ['
           '{"kind": "leaf", "name": "brightness", "seed": 2, '
           '"params": {"delta": {"dist": "zipf"}}}]}')
    with pytest.raises(ConfigurationError, match="/children/0/params/delta"):
        graph.deserialize(bad)
    with pytest.raises(ConfigurationError, match="invalid JSON"):
        graph.deserialize("{nope")
    with pytest.raises(ConfigurationError, match="/name"):
        graph.deserialize('{"kind": "leaf", "name": "nope_op", "seed": 1}')
