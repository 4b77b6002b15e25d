"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -s``).

Everything here runs offline against the mock backend and fixture-mode
model client; no compiled extension, network, or model weights required.
"""

from __future__ import annotations

import json
import math
import random
import string
import time
from contextlib import contextmanager

import numpy as np
import pytest
from click.testing import CliRunner

from venus.cli import main as cli_main
from venus.graph_edit import apply_delta, compute_delta, split_graphs
from venus.metrics_eval import EvalManifest, ImageBuffer, evaluate, psnr, ssim
from venus.pipeline import load_manifest
from venus.prompt_compiler import TokenBudget, compile_bundle, estimate_tokens, render_phrase
from venus.scene_graph import (
    ObjectNode,
    RelationTriplet,
    SceneGraph,
    parse_graph_dsl,
    parse_graph_json,
    serialize_graph,
)
from venus.toy_inversion import (
    GuidanceConfig,
    LatentState,
    NoiseSchedule,
    ToyDenoiser,
    cfg_combine,
    edit,
    invert,
)

from .conftest import make_graph, make_png
from .oracles import brute_force_delta, brute_force_split, rendered_triplets


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL: {name}", flush=True)
        raise
    print(f"ACCEPTANCE PASS: {name}", flush=True)


# -- shared randomized graph generation (seeded, oracle-independent) ----------

NOUNS = ["dog", "cat", "horse", "zebra", "bench", "field", "moon", "sky", "tree",
         "lake", "car", "road", "bird", "cloud"]
PREDICATES = ["on", "under", "beside", "in", "above", "chasing", "standing on"]
ATTRS = ["brown", "small", "tall", "old", "red"]


def random_graph(rng: random.Random, max_triplets: int = 10) -> SceneGraph:
    triplets, attrs = [], {}
    for _ in range(rng.randint(0, max_triplets)):
        subject, obj = rng.sample(NOUNS, 2)
        triplets.append((subject, rng.choice(PREDICATES), obj))
        if rng.random() < 0.3:
            attrs[subject] = rng.sample(ATTRS, rng.randint(1, 2))
    return make_graph(*triplets, attrs=attrs)


def random_pair(rng: random.Random) -> tuple[SceneGraph, SceneGraph]:
    source = random_graph(rng)
    if rng.random() < 0.2 or not source.relations:
        return source, random_graph(rng)
    # mutate: drop a suffix, rename a node, graft extra triplets
    keep = rng.randint(0, len(source.relations))
    triplets = [
        (k.subject_text, k.predicate_text, k.object_text)
        for k in list(source.relation_keys())[:keep]
    ]
    if triplets and rng.random() < 0.6:
        i = rng.randrange(len(triplets))
        s, p, o = triplets[i]
        triplets[i] = (rng.choice(NOUNS) + " prime", p, o)
    for _ in range(rng.randint(0, 3)):
        subject, obj = rng.sample(NOUNS, 2)
        triplets.append((subject, rng.choice(PREDICATES), obj))
    return source, make_graph(*triplets)


def test_graph_algebra_oracle():
    with criterion("graph algebra: split/delta match brute-force oracle on 1000 pairs, "
                   "delta reconstructs target, < 10 s"):
        rng = random.Random(20250810)
        started = time.monotonic()
        for _ in range(1000):
            source, target = random_pair(rng)

            split = split_graphs(source, target)
            new_ref, bgd_ref = brute_force_split(source, target)
            as_tuple = lambda k: (k.subject_text, k.predicate_text, k.object_text)
            assert [as_tuple(target.key_of(r)) for r in split.new_relations] == new_ref
            assert [as_tuple(target.key_of(r)) for r in split.bgd_relations] == bgd_ref

            delta = compute_delta(source, target)
            added_ref, removed_ref = brute_force_delta(source, target)
            assert [as_tuple(k) for k in delta.added] == added_ref
            assert [as_tuple(k) for k in delta.removed] == removed_ref

            rebuilt = apply_delta(source, delta)
            assert set(rebuilt.relation_keys()) == set(target.relation_keys())
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"


def test_prompt_compiler_contract(dog_bench_graph):
    with criterion("prompt compiler: src == tgt_bgd, tgt = new then bgd, 15-relation and "
                   "77-token budgets, dog/bench renders exactly"):
        assert (
            render_phrase(dog_bench_graph.relations[0], dog_bench_graph)
            == "dog sitting on bench"
        )
        budget = TokenBudget()
        rng = random.Random(8123)
        for _ in range(500):
            source, target = random_pair(rng)
            bundle = compile_bundle(source, target, budget)
            assert bundle.src_caption == bundle.tgt_bgd_caption
            parts = [p for p in (bundle.tgt_new_caption, bundle.tgt_bgd_caption) if p]
            assert bundle.tgt_caption == ", ".join(parts)
            for caption in (
                bundle.src_caption,
                bundle.tgt_caption,
                bundle.tgt_new_caption,
                bundle.tgt_bgd_caption,
            ):
                assert estimate_tokens(caption) <= budget.max_tokens
                phrases = [p for p in caption.split(", ") if p]
                assert len(phrases) <= budget.max_relations


# -- round-trip fuzzing --------------------------------------------------------

_GENERAL_ALPHABET = string.ascii_letters + "äöüñéà "
_DSL_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


def _word(rng: random.Random, alphabet: str) -> str:
    while True:
        word = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 8))).strip()
        if word:
            return word


def fuzz_graph(rng: random.Random, dsl_safe: bool) -> SceneGraph:
    alphabet = _DSL_ALPHABET if dsl_safe else _GENERAL_ALPHABET
    nodes = []
    seen_phrases = set()
    for i in range(rng.randint(0, 7)):
        name = _word(rng, alphabet)
        attrs = tuple(_word(rng, alphabet) for _ in range(rng.randint(0, 2)))
        node = ObjectNode(id=f"n{i}", name=name, attributes=attrs)
        if dsl_safe:
            canon = SceneGraph.build([node], []).objects[0]
            if canon.phrase() in seen_phrases:
                continue
            seen_phrases.add(canon.phrase())
        nodes.append(node)
    relations = []
    if len(nodes) >= 2:
        for _ in range(rng.randint(0, 9)):
            a, b = rng.sample(range(len(nodes)), 2)
            relations.append(RelationTriplet(nodes[a].id, _word(rng, alphabet), nodes[b].id))
    return SceneGraph.build(nodes, relations)


def _node_multiset(graph: SceneGraph):
    return sorted((n.name, n.attributes) for n in graph.objects)


def test_round_trip_fuzz():
    with criterion("round-trip: parse(serialize(g)) identity on 1000 fuzzed graphs for "
                   "JSON and DSL, 0 failures"):
        rng = random.Random(550)
        for _ in range(1000):
            graph = fuzz_graph(rng, dsl_safe=False)
            back = parse_graph_json(serialize_graph(graph, "json"))
            assert set(back.relation_keys()) == set(graph.relation_keys())
            assert _node_multiset(back) == _node_multiset(graph)

            dsl_graph = fuzz_graph(rng, dsl_safe=True)
            back = parse_graph_dsl(serialize_graph(dsl_graph, "dsl").decode())
            assert set(back.relation_keys()) == set(dsl_graph.relation_keys())
            assert _node_multiset(back) == _node_multiset(dsl_graph)


def test_toy_inversion_criteria():
    with criterion("toy inversion: reconstruction < 1e-5 over 100 seeds, CFG identities, "
                   "edit locality, monotone guidance, < 30 s"):
        started = time.monotonic()
        schedule = NoiseSchedule.cosine(steps=50, skip=25)
        caption = "dog sitting on bench"

        for seed in range(42, 142):
            denoiser = ToyDenoiser.seeded(seed=seed)
            z0 = LatentState(values=np.random.default_rng(seed).standard_normal(64), step=0)
            trajectory = invert(denoiser, schedule, z0, caption, 7.5)
            recon = edit(denoiser, schedule, trajectory, GuidanceConfig(7.5, caption, caption))
            assert np.max(np.abs(recon.values - z0.values)) < 1e-5

        rng = np.random.default_rng(0)
        eps_null, eps_text = rng.standard_normal(64), rng.standard_normal(64)
        np.testing.assert_array_equal(cfg_combine(eps_null, eps_text, 1.0), eps_text)
        np.testing.assert_array_equal(cfg_combine(eps_null, eps_null, 7.5), eps_null)
        for s1, s2 in [(0.0, 1.0), (1.0, 2.5), (2.5, 7.5)]:
            delta = cfg_combine(eps_null, eps_text, s2) - cfg_combine(eps_null, eps_text, s1)
            np.testing.assert_allclose(delta, (s2 - s1) * (eps_text - eps_null), atol=1e-9)

        denoiser = ToyDenoiser.seeded(seed=42, diagonal=True)
        z0 = LatentState(values=np.random.default_rng(42).standard_normal(64), step=0)
        src, tgt = caption, "brown " + caption
        trajectory = invert(denoiser, schedule, z0, src, 7.5)
        recon = edit(denoiser, schedule, trajectory, GuidanceConfig(7.5, src, src))
        edited = edit(denoiser, schedule, trajectory, GuidanceConfig(7.5, src, tgt))
        change = np.abs(edited.values - recon.values)
        touched = set(np.flatnonzero(change > 1e-5).tolist())
        assert touched == set(denoiser.word_support("brown").tolist())
        untouched = sorted(set(range(64)) - touched)
        assert np.max(change[untouched]) < 1e-5

        deviations = []
        denoiser = ToyDenoiser.seeded(seed=42)
        for scale in (0.0, 1.0, 2.5, 5.0, 7.5):
            trajectory = invert(denoiser, schedule, z0, src, scale)
            recon = edit(denoiser, schedule, trajectory, GuidanceConfig(scale, src, src))
            edited = edit(denoiser, schedule, trajectory, GuidanceConfig(scale, src, "cat sitting on bench"))
            deviations.append(float(np.max(np.abs(edited.values - recon.values))))
        assert all(b >= a for a, b in zip(deviations, deviations[1:])), deviations

        elapsed = time.monotonic() - started
        assert elapsed < 30.0, f"toy suite took {elapsed:.1f}s"


def test_metric_criteria():
    with criterion("metrics: psnr(128,130) = 42.1102 +/- 1e-3, ssim(a,a) = 1.0, symmetry "
                   "and range on 200 fuzzed pairs, dual-implementation ssim to 1e-6"):
        from skimage.metrics import structural_similarity

        uniform = lambda v: ImageBuffer(np.full((24, 32, 3), v, dtype=np.uint8))
        assert abs(psnr(uniform(128), uniform(130)) - 42.1102) < 1e-3

        rng = np.random.default_rng(321)
        img = ImageBuffer(rng.integers(0, 256, (36, 44, 3), dtype=np.uint8))
        assert ssim(img, img) == 1.0

        for i in range(200):
            a = ImageBuffer(rng.integers(0, 256, (16, 20, 3), dtype=np.uint8))
            b = ImageBuffer(rng.integers(0, 256, (16, 20, 3), dtype=np.uint8))
            left, right = ssim(a, b), ssim(b, a)
            assert abs(left - right) < 1e-9
            assert -1.0 <= left <= 1.0
            assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-9)

        for seed in range(10):
            pair_rng = np.random.default_rng(9000 + seed)
            a_pixels = pair_rng.integers(0, 256, (40, 52, 3), dtype=np.uint8)
            b_pixels = np.clip(
                a_pixels.astype(np.float64) + pair_rng.normal(0, 4 + seed, a_pixels.shape),
                0,
                255,
            ).astype(np.uint8)
            mine = ssim(ImageBuffer(a_pixels), ImageBuffer(b_pixels))
            reference = np.mean(
                [
                    structural_similarity(
                        a_pixels[:, :, c].astype(np.float64),
                        b_pixels[:, :, c].astype(np.float64),
                        win_size=11,
                        gaussian_weights=True,
                        sigma=1.5,
                        use_sample_covariance=False,
                        data_range=255,
                    )
                    for c in range(3)
                ]
            )
            assert abs(mine - reference) < 1e-6


def test_end_to_end_mock_backend(tmp_path, horse_graph, zebra_graph):
    with criterion("end to end: horse->zebra via CLI exits 0, manifest bundle byte-equal "
                   "to standalone compile, reruns byte-identical, null edit hits the "
                   "PSNR sentinel, < 5 s"):
        started = time.monotonic()
        runner = CliRunner()
        image_path = tmp_path / "scene.png"
        image_path.write_bytes(make_png(seed=77))
        source_path = tmp_path / "horse.json"
        target_path = tmp_path / "zebra.json"
        source_path.write_bytes(serialize_graph(horse_graph, "json"))
        target_path.write_bytes(serialize_graph(zebra_graph, "json"))

        def run(runs_dir, target=target_path):
            result = runner.invoke(
                cli_main,
                [
                    "edit",
                    "--image", str(image_path),
                    "--source-graph", str(source_path),
                    "--target-graph", str(target),
                    "--seed", "42",
                    "--runs-dir", str(runs_dir),
                ],
            )
            assert result.exit_code == 0, result.output
            return runs_dir / result.output.strip().splitlines()[0]

        run_a = run(tmp_path / "runs_a")
        run_b = run(tmp_path / "runs_b")

        manifest = load_manifest(run_a).doc
        standalone = compile_bundle(horse_graph, zebra_graph).as_obj()
        canonical = lambda doc: json.dumps(doc, sort_keys=True, ensure_ascii=False).encode()
        assert canonical(manifest["prompt_bundle"]) == canonical(standalone)

        assert (run_a / "output.png").read_bytes() == (run_b / "output.png").read_bytes()

        null_run = run(tmp_path / "runs_null", target=source_path)
        null_manifest = load_manifest(null_run).doc
        assert null_manifest["prompt_bundle"]["tgt_new"] == ""
        assert null_manifest["metrics"]["psnr_db"] == "inf"
        harness = EvalManifest.from_obj(
            {"entries": [{"id": "null", "run_dir": str(null_run)}]}
        )
        report = evaluate(harness, ("psnr",))
        assert report.items[0]["psnr_db"] == math.inf
        assert report.counts["psnr_identical_excluded"] == 1

        elapsed = time.monotonic() - started
        assert elapsed < 5.0, f"end-to-end took {elapsed:.1f}s"
