from __future__ import annotations

import random

import pytest

from venus.errors import ConfigError
from venus.prompt_compiler import (
    TokenBudget,
    compile_bundle,
    compile_caption,
    estimate_tokens,
    register_token_counter,
    render_phrase,
)

from .conftest import make_graph
from .oracles import estimate_tokens_reference
from .test_graph_edit import random_pair


class TestRenderPhrase:
    def test_dog_bench(self, dog_bench_graph):
        assert render_phrase(dog_bench_graph.relations[0], dog_bench_graph) == "dog sitting on bench"

    def test_zebra(self, zebra_graph):
        assert render_phrase(zebra_graph.relations[0], zebra_graph) == "zebra standing on field"

    def test_attributes_fold_into_phrase(self):
        graph = make_graph(("dog", "sitting on", "bench"), attrs={"dog": ["brown"]})
        assert render_phrase(graph.relations[0], graph) == "brown dog sitting on bench"


class TestEstimateTokens:
    def test_frozen_values(self):
        assert estimate_tokens("") == 2
        assert estimate_tokens("dog sitting on bench") == 8
        assert estimate_tokens("a, b") == 5

    def test_matches_reference_formula(self):
        samples = [
            "zebra standing on field",
            "a, b, c, d",
            "one",
            "brown dog sitting on bench, moon in sky",
        ]
        for text in samples:
            assert estimate_tokens(text) == estimate_tokens_reference(text)

    def test_unknown_strategy(self):
        with pytest.raises(ConfigError, match="unknown token counter"):
            estimate_tokens("x", counter="clip-vit")

    def test_pluggable_counter(self):
        register_token_counter("chars", len)
        assert estimate_tokens("abcd", counter="chars") == 4


class TestCompileCaption:
    def test_single(self, dog_bench_graph):
        caption, dropped = compile_caption(dog_bench_graph.relations, dog_bench_graph, TokenBudget())
        assert caption == "dog sitting on bench"
        assert dropped == []

    def test_empty(self, dog_bench_graph):
        caption, dropped = compile_caption([], dog_bench_graph, TokenBudget())
        assert caption == "" and dropped == []

    def test_relation_cap_drops_in_order(self):
        triplets = [(f"thing{i}", "near", f"spot{i}") for i in range(20)]
        graph = make_graph(*triplets)
        caption, dropped = compile_caption(graph.relations, graph, TokenBudget(max_tokens=1000))
        assert caption.count(",") == 14  # 15 phrases kept
        assert len(dropped) == 5
        assert [d.reason for d in dropped] == ["relation_cap"] * 5
        assert dropped[0].phrase == "thing15 near spot15"

    def test_token_budget_cuts_prefix(self):
        triplets = [(f"aa{i}", "gazing toward", f"bb{i}") for i in range(10)]
        graph = make_graph(*triplets)
        budget = TokenBudget(max_tokens=20)
        caption, dropped = compile_caption(graph.relations, graph, budget)
        assert estimate_tokens(caption) <= 20
        assert dropped and all(d.reason == "token_budget" for d in dropped)
        # kept ++ dropped is the original order
        phrases = [render_phrase(r, graph) for r in graph.relations]
        kept = caption.split(", ") if caption else []
        assert kept + [d.phrase for d in dropped] == phrases


class TestCompileBundle:
    def test_no_edit(self, dog_bench_graph):
        bundle = compile_bundle(dog_bench_graph, dog_bench_graph)
        assert bundle.src_caption == "dog sitting on bench"
        assert bundle.tgt_bgd_caption == "dog sitting on bench"
        assert bundle.tgt_new_caption == ""
        assert bundle.tgt_caption == "dog sitting on bench"
        assert bundle.truncated == ()

    def test_horse_to_zebra(self, horse_graph, zebra_graph):
        bundle = compile_bundle(horse_graph, zebra_graph)
        assert bundle.tgt_new_caption == "zebra standing on field"
        assert bundle.tgt_bgd_caption == ""
        assert bundle.src_caption == ""
        assert bundle.tgt_caption == "zebra standing on field"

    def test_moon_removal(self, moon_graph, tree_graph):
        bundle = compile_bundle(moon_graph, tree_graph)
        assert bundle.tgt_new_caption == ""
        assert bundle.src_caption == bundle.tgt_bgd_caption == bundle.tgt_caption == "tree beside lake"

    def test_new_content_first(self):
        source = make_graph(("tree", "beside", "lake"))
        target = make_graph(("zebra", "standing on", "field"), ("tree", "beside", "lake"))
        bundle = compile_bundle(source, target)
        assert bundle.tgt_caption == "zebra standing on field, tree beside lake"

    def test_json_shape(self, horse_graph, zebra_graph):
        doc = compile_bundle(horse_graph, zebra_graph).as_obj()
        assert set(doc) == {"src", "tgt", "tgt_new", "tgt_bgd", "token_counts", "truncated"}
        assert doc["token_counts"]["tgt"] == estimate_tokens("zebra standing on field")

    def test_background_drops_before_new_content(self):
        # 12 new + 12 background relations against a 15-relation cap:
        # all 12 new phrases survive, the background tail is cut
        bgd = [(f"rock{i}", "on", f"hill{i}") for i in range(12)]
        new = [(f"bird{i}", "above", f"pond{i}") for i in range(12)]
        source = make_graph(*bgd)
        target = make_graph(*(new + bgd))
        bundle = compile_bundle(source, target, TokenBudget(max_tokens=1000))
        assert bundle.tgt_new_caption.count(",") == 11  # all 12 kept
        assert bundle.tgt_bgd_caption.count(",") == 2  # 3 kept of 12
        assert len(bundle.truncated) == 9
        assert bundle.src_caption == bundle.tgt_bgd_caption

    def test_invariants_on_random_pairs(self):
        rng = random.Random(1234)
        budget = TokenBudget()
        for _ in range(300):
            source, target = random_pair(rng)
            bundle = compile_bundle(source, target, budget)
            assert bundle.src_caption == bundle.tgt_bgd_caption
            parts = [p for p in (bundle.tgt_new_caption, bundle.tgt_bgd_caption) if p]
            assert bundle.tgt_caption == ", ".join(parts)
            for caption in (bundle.src_caption, bundle.tgt_caption, bundle.tgt_new_caption, bundle.tgt_bgd_caption):
                assert estimate_tokens(caption) <= budget.max_tokens
            new_set = set(bundle.tgt_new_caption.split(", ")) - {""}
            bgd_set = set(bundle.tgt_bgd_caption.split(", ")) - {""}
            assert not new_set & bgd_set

    def test_determinism(self, moon_graph, tree_graph):
        a = compile_bundle(moon_graph, tree_graph)
        b = compile_bundle(moon_graph, tree_graph)
        assert a == b
        assert a.as_obj() == b.as_obj()
