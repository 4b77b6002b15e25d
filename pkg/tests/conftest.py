from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from venus.mllm_client import EDIT_TEMPLATE_ID, EXTRACT_TEMPLATE_ID, fixture_key
from venus.scene_graph import ObjectNode, RelationTriplet, SceneGraph


def make_graph(*triplets: tuple[str, str, str], attrs: dict[str, list[str]] | None = None) -> SceneGraph:
    """Build a graph from (subject, predicate, object) name triples; nodes
    are interned by name in first-appearance order."""
    attrs = attrs or {}
    ids: dict[str, str] = {}
    objects: list[ObjectNode] = []
    relations: list[RelationTriplet] = []
    for subject, predicate, obj in triplets:
        for name in (subject, obj):
            if name not in ids:
                ids[name] = f"o{len(ids) + 1}"
                objects.append(
                    ObjectNode(id=ids[name], name=name, attributes=tuple(attrs.get(name, ())))
                )
        relations.append(RelationTriplet(ids[subject], predicate, ids[obj]))
    return SceneGraph.build(objects, relations)


@pytest.fixture
def dog_bench_graph() -> SceneGraph:
    return make_graph(("dog", "sitting on", "bench"))


@pytest.fixture
def horse_graph() -> SceneGraph:
    return make_graph(("horse", "standing on", "field"))


@pytest.fixture
def zebra_graph() -> SceneGraph:
    return make_graph(("zebra", "standing on", "field"))


@pytest.fixture
def moon_graph() -> SceneGraph:
    return make_graph(("moon", "in", "sky"), ("tree", "beside", "lake"))


@pytest.fixture
def tree_graph() -> SceneGraph:
    return make_graph(("tree", "beside", "lake"))


def make_png(width: int = 64, height: int = 48, seed: int = 7) -> bytes:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture
def png_bytes() -> bytes:
    return make_png()


@pytest.fixture
def png_file(tmp_path: Path, png_bytes: bytes) -> Path:
    path = tmp_path / "scene.png"
    path.write_bytes(png_bytes)
    return path


def graph_json(graph: SceneGraph) -> str:
    from venus.scene_graph import serialize_graph

    return serialize_graph(graph, "json").decode("utf-8")


def write_mllm_fixtures(fixtures_dir: Path, image: bytes, *, extract_graph: SceneGraph | None = None,
                        edits: list[tuple[SceneGraph, str, SceneGraph]] | None = None) -> Path:
    """Author an offline fixture directory: an extraction response keyed on
    the image, plus (source graph, instruction, edited graph) responses."""
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    index: dict[str, str] = {}
    if extract_graph is not None:
        key = fixture_key(EXTRACT_TEMPLATE_ID, image)
        name = "extract_response.txt"
        (fixtures_dir / name).write_text(
            "Here is the scene graph you asked for:\n```json\n"
            + graph_json(extract_graph)
            + "\n```\n",
            encoding="utf-8",
        )
        index[key] = name
    for i, (source, instruction, edited) in enumerate(edits or []):
        key = fixture_key(EDIT_TEMPLATE_ID, image, instruction.strip(), source)
        name = f"edit_response_{i}.txt"
        (fixtures_dir / name).write_text(graph_json(edited), encoding="utf-8")
        index[key] = name
    (fixtures_dir / "index.json").write_text(json.dumps(index, indent=2), encoding="utf-8")
    return fixtures_dir
