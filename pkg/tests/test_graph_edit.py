from __future__ import annotations

import random

import pytest

from venus.errors import EditOpError
from venus.graph_edit import (
    GraphDelta,
    GraphEditOp,
    apply_delta,
    apply_edits,
    compute_delta,
    ops_from_obj,
    split_graphs,
)
from venus.scene_graph import ObjectNode, RelationTriplet, SceneGraph

from .conftest import make_graph
from .oracles import brute_force_delta, brute_force_split, rendered_triplets


def keys(graph):
    return [k.as_dict() for k in graph.relation_keys()]


class TestApplyEdits:
    def test_rename_horse_to_zebra(self, horse_graph, zebra_graph):
        edited = apply_edits(horse_graph, [GraphEditOp("replace_node_name", node="horse", new_name="zebra")])
        assert set(edited.relation_keys()) == set(zebra_graph.relation_keys())

    def test_remove_moon_node_drops_its_relations(self, moon_graph, tree_graph):
        edited = apply_edits(moon_graph, [GraphEditOp("remove_node", node="moon")])
        assert set(edited.relation_keys()) == set(tree_graph.relation_keys())
        assert all(n.name != "moon" for n in edited.objects)

    def test_empty_ops_is_identity(self, moon_graph):
        edited = apply_edits(moon_graph, [])
        assert edited.relation_keys() == moon_graph.relation_keys()
        assert [n.name for n in edited.objects] == [n.name for n in moon_graph.objects]

    def test_add_relation_creates_missing_nodes(self, dog_bench_graph):
        edited = apply_edits(
            dog_bench_graph,
            [GraphEditOp("add_relation", subject="cat", predicate="under", object="bench")],
        )
        assert {"subject": "cat", "predicate": "under", "object": "bench"} in keys(edited)
        assert len(edited.objects) == 3

    def test_add_relation_with_attributed_selector(self, dog_bench_graph):
        op = GraphEditOp(
            "add_relation",
            subject={"name": "ball", "attributes": ["red"]},
            predicate="beside",
            object="bench",
        )
        edited = apply_edits(dog_bench_graph, [op])
        assert {"subject": "red ball", "predicate": "beside", "object": "bench"} in keys(edited)

    def test_set_attributes(self, dog_bench_graph):
        edited = apply_edits(
            dog_bench_graph, [GraphEditOp("set_attributes", node="dog", attributes=("Brown",))]
        )
        assert keys(edited)[0]["subject"] == "brown dog"

    def test_remove_relation(self, moon_graph):
        edited = apply_edits(
            moon_graph, [GraphEditOp("remove_relation", subject="moon", predicate="in", object="sky")]
        )
        assert keys(edited) == [{"subject": "tree", "predicate": "beside", "object": "lake"}]

    def test_unknown_node_names_op_index_and_selector(self, dog_bench_graph):
        with pytest.raises(EditOpError) as excinfo:
            apply_edits(dog_bench_graph, [GraphEditOp("remove_node", node="cat")])
        assert excinfo.value.op_index == 0
        assert "cat" in str(excinfo.value)

    def test_ambiguous_name_is_an_error(self):
        graph = SceneGraph.build(
            [ObjectNode("a", "dog"), ObjectNode("b", "dog", ("small",)), ObjectNode("c", "bench")],
            [RelationTriplet("a", "on", "c"), RelationTriplet("b", "under", "c")],
        )
        with pytest.raises(EditOpError, match="ambiguous"):
            apply_edits(graph, [GraphEditOp("replace_node_name", node="dog", new_name="cat")])

    def test_id_selector_disambiguates(self):
        graph = SceneGraph.build(
            [ObjectNode("a", "dog"), ObjectNode("b", "dog", ("small",)), ObjectNode("c", "bench")],
            [RelationTriplet("a", "on", "c"), RelationTriplet("b", "under", "c")],
        )
        edited = apply_edits(graph, [GraphEditOp("replace_node_name", node={"id": "b"}, new_name="cat")])
        assert keys(edited)[1]["subject"] == "small cat"

    def test_ops_from_obj_round_trip(self):
        doc = [
            {"kind": "replace_node_name", "node": "horse", "new_name": "zebra"},
            {"kind": "add_relation", "subject": "bird", "predicate": "above", "object": "field"},
        ]
        ops = ops_from_obj(doc)
        assert ops[0].kind == "replace_node_name"
        assert ops[1].subject == "bird"
        with pytest.raises(EditOpError):
            ops_from_obj([{"kind": "explode"}])


class TestSplitAndDelta:
    def test_identical_graphs(self, moon_graph):
        split = split_graphs(moon_graph, moon_graph)
        assert split.new_relations == ()
        assert split.bgd_relations == moon_graph.relations
        delta = compute_delta(moon_graph, moon_graph)
        assert delta.added == () and delta.removed == ()

    def test_horse_to_zebra(self, horse_graph, zebra_graph):
        split = split_graphs(horse_graph, zebra_graph)
        assert [zebra_graph.key_of(r).as_dict() for r in split.new_relations] == [
            {"subject": "zebra", "predicate": "standing on", "object": "field"}
        ]
        assert split.bgd_relations == ()
        delta = compute_delta(horse_graph, zebra_graph)
        assert [k.as_dict() for k in delta.added] == [
            {"subject": "zebra", "predicate": "standing on", "object": "field"}
        ]
        assert [k.as_dict() for k in delta.removed] == [
            {"subject": "horse", "predicate": "standing on", "object": "field"}
        ]

    def test_moon_removal(self, moon_graph, tree_graph):
        split = split_graphs(moon_graph, tree_graph)
        assert split.new_relations == ()
        assert [tree_graph.key_of(r).as_dict() for r in split.bgd_relations] == [
            {"subject": "tree", "predicate": "beside", "object": "lake"}
        ]
        delta = compute_delta(moon_graph, tree_graph)
        assert delta.added == ()
        assert [k.as_dict() for k in delta.removed] == [
            {"subject": "moon", "predicate": "in", "object": "sky"}
        ]

    def test_delta_json_encoding(self, horse_graph, zebra_graph):
        delta = compute_delta(horse_graph, zebra_graph)
        doc = delta.as_obj()
        assert doc == {
            "added": [{"subject": "zebra", "predicate": "standing on", "object": "field"}],
            "removed": [{"subject": "horse", "predicate": "standing on", "object": "field"}],
        }
        assert GraphDelta.from_obj(doc) == delta


# -- randomized oracle ---------------------------------------------------------

NOUNS = ["dog", "cat", "horse", "zebra", "bench", "field", "moon", "sky", "tree", "lake"]
PREDICATES = ["on", "under", "beside", "in", "above", "chasing"]
ATTRS = ["brown", "small", "tall", "old"]


def random_graph(rng: random.Random, max_triplets: int = 10) -> SceneGraph:
    triplets = []
    attrs: dict[str, list[str]] = {}
    for _ in range(rng.randint(0, max_triplets)):
        subject, obj = rng.sample(NOUNS, 2)
        triplets.append((subject, rng.choice(PREDICATES), obj))
        if rng.random() < 0.3:
            attrs[subject] = rng.sample(ATTRS, rng.randint(1, 2))
    return make_graph(*triplets, attrs=attrs)


def random_pair(rng: random.Random):
    source = random_graph(rng)
    if rng.random() < 0.15:
        return source, random_graph(rng)
    names = list({n.name for n in source.objects})
    ops: list[GraphEditOp] = []
    if names and rng.random() < 0.5:
        ops.append(
            GraphEditOp("replace_node_name", node=rng.choice(names), new_name=rng.choice(NOUNS) + "x")
        )
    if names and rng.random() < 0.4:
        ops.append(GraphEditOp("remove_node", node=rng.choice(names)))
    if rng.random() < 0.5:
        subject, obj = rng.sample(NOUNS, 2)
        ops.append(GraphEditOp("add_relation", subject=subject, predicate=rng.choice(PREDICATES), object=obj))
    try:
        return source, apply_edits(source, ops)
    except EditOpError:
        return source, source


def test_split_and_delta_match_brute_force_oracle():
    rng = random.Random(20240817)
    for _ in range(400):
        source, target = random_pair(rng)
        split = split_graphs(source, target)
        new_ref, bgd_ref = brute_force_split(source, target)
        new_keys = [
            (k.subject_text, k.predicate_text, k.object_text)
            for k in (target.key_of(r) for r in split.new_relations)
        ]
        bgd_keys = [
            (k.subject_text, k.predicate_text, k.object_text)
            for k in (target.key_of(r) for r in split.bgd_relations)
        ]
        assert new_keys == new_ref
        assert bgd_keys == bgd_ref

        delta = compute_delta(source, target)
        added_ref, removed_ref = brute_force_delta(source, target)
        assert [(k.subject_text, k.predicate_text, k.object_text) for k in delta.added] == added_ref
        assert [(k.subject_text, k.predicate_text, k.object_text) for k in delta.removed] == removed_ref


def test_split_partitions_target():
    rng = random.Random(99)
    for _ in range(200):
        source, target = random_pair(rng)
        split = split_graphs(source, target)
        combined = {target.key_of(r) for r in split.new_relations} | {
            target.key_of(r) for r in split.bgd_relations
        }
        assert combined == set(target.relation_keys())
        assert not {target.key_of(r) for r in split.new_relations} & {
            target.key_of(r) for r in split.bgd_relations
        }


def test_delta_reconstructs_target():
    rng = random.Random(4242)
    for _ in range(300):
        source, target = random_pair(rng)
        rebuilt = apply_delta(source, compute_delta(source, target))
        assert set(rebuilt.relation_keys()) == set(target.relation_keys())


def test_disjoint_added_removed():
    rng = random.Random(7)
    for _ in range(200):
        source, target = random_pair(rng)
        delta = compute_delta(source, target)
        assert not set(delta.added) & set(delta.removed)
