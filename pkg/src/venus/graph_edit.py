"""Graph edit ops, source/target diffing, and the new/background split.

All comparisons between two graphs go through :class:`CanonicalKey` set
algebra: ``added = target \\ source``, ``removed = source \\ target``, and
the split of the target into relations absent from the source (new content)
versus relations shared with it (preserved background).  Node renames never
appear as a distinct delta kind — a rename changes the key of every triplet
touching the node, so it surfaces as paired adds/removes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import EditOpError, GraphValidationError
from .scene_graph import (
    CanonicalKey,
    ObjectNode,
    RelationTriplet,
    SceneGraph,
    canonicalize_text,
)

__all__ = [
    "NodeSelector",
    "GraphEditOp",
    "GraphDelta",
    "GraphSplit",
    "apply_edits",
    "split_graphs",
    "compute_delta",
    "apply_delta",
    "ops_from_obj",
]

# a selector is a node id / canonical name string, or {"id": ...} /
# {"name": ..., "attributes": [...]} in parsed-JSON form
NodeSelector = Union[str, dict]


@dataclass(frozen=True)
class GraphEditOp:
    """One edit gesture; ``kind`` decides which payload fields apply."""

    kind: str  # add_relation | remove_relation | replace_node_name | set_attributes | remove_node
    subject: NodeSelector | None = None
    predicate: str | None = None
    object: NodeSelector | None = None
    node: NodeSelector | None = None
    new_name: str | None = None
    attributes: tuple[str, ...] | None = None

    KINDS = ("add_relation", "remove_relation", "replace_node_name", "set_attributes", "remove_node")


@dataclass(frozen=True)
class GraphDelta:
    """Relation-level changes between two graphs: ``added ∩ removed = ∅``."""

    added: tuple[CanonicalKey, ...]
    removed: tuple[CanonicalKey, ...]

    def as_obj(self) -> dict:
        return {
            "added": [k.as_dict() for k in self.added],
            "removed": [k.as_dict() for k in self.removed],
        }

    @classmethod
    def from_obj(cls, doc: dict) -> "GraphDelta":
        def keys(items: Iterable[dict]) -> tuple[CanonicalKey, ...]:
            return tuple(
                CanonicalKey(d["subject"], d["predicate"], d["object"]) for d in items
            )

        return cls(added=keys(doc.get("added", [])), removed=keys(doc.get("removed", [])))


@dataclass(frozen=True)
class GraphSplit:
    """Target relations partitioned into new content and shared background."""

    new_relations: tuple[RelationTriplet, ...]
    bgd_relations: tuple[RelationTriplet, ...]


def split_graphs(source: SceneGraph, target: SceneGraph) -> GraphSplit:
    """Partition the target's relations by membership of their canonical key
    in the source; order inside each part follows target relation order."""
    source_keys = set(source.relation_keys())
    new, bgd = [], []
    for rel in target.relations:
        (bgd if target.key_of(rel) in source_keys else new).append(rel)
    return GraphSplit(new_relations=tuple(new), bgd_relations=tuple(bgd))


def compute_delta(source: SceneGraph, target: SceneGraph) -> GraphDelta:
    """Canonical-key set difference in both directions, in relation order."""
    source_keys = set(source.relation_keys())
    target_keys = set(target.relation_keys())
    added = tuple(k for k in target.relation_keys() if k not in source_keys)
    removed = tuple(k for k in source.relation_keys() if k not in target_keys)
    return GraphDelta(added=added, removed=removed)


def apply_delta(source: SceneGraph, delta: GraphDelta) -> SceneGraph:
    """Apply a delta to a graph: drop ``removed`` keys, append ``added``.

    Nodes for added relations are created from the rendered phrase text, so
    the result is canonical-key-equal to the delta's target even though
    attribute structure is not recoverable from a key.
    """
    removed = set(delta.removed)
    relations = [r for r in source.relations if source.key_of(r) not in removed]
    objects = list(source.objects)
    by_phrase = {n.phrase(): n.id for n in objects}
    next_id = _id_counter(objects)

    def intern(phrase: str) -> str:
        if phrase not in by_phrase:
            node_id = next(next_id)
            by_phrase[phrase] = node_id
            objects.append(ObjectNode(id=node_id, name=phrase))
        return by_phrase[phrase]

    for key in delta.added:
        relations.append(
            RelationTriplet(intern(key.subject_text), key.predicate_text, intern(key.object_text))
        )
    return SceneGraph.build(objects, relations)


def _id_counter(objects: Sequence[ObjectNode]):
    taken = {n.id for n in objects}
    i = len(objects)
    while True:
        i += 1
        candidate = f"o{i}"
        if candidate not in taken:
            taken.add(candidate)
            yield candidate


# ---------------------------------------------------------------------------
# Edit ops
# ---------------------------------------------------------------------------


class _Workspace:
    """Mutable node/relation scratch space while ops are applied."""

    def __init__(self, graph: SceneGraph):
        self.objects: list[ObjectNode] = list(graph.objects)
        self.relations: list[RelationTriplet] = list(graph.relations)
        self._ids = _id_counter(self.objects)

    def resolve(self, selector: NodeSelector, op_index: int, create: bool = False) -> str:
        if isinstance(selector, dict):
            if "id" in selector:
                node_id = selector["id"]
                if any(n.id == node_id for n in self.objects):
                    return node_id
                raise EditOpError(
                    f"op {op_index}: no node with id {node_id!r}",
                    op_index=op_index,
                    selector=selector,
                )
            name = canonicalize_text(selector.get("name", ""))
            attrs = tuple(canonicalize_text(a) for a in selector.get("attributes", []))
        else:
            name = canonicalize_text(selector)
            attrs = None
        if not name:
            raise EditOpError(f"op {op_index}: empty node selector", op_index=op_index, selector=selector)

        matches = [n for n in self.objects if n.name == name]
        if len(matches) > 1:
            raise EditOpError(
                f"op {op_index}: node name {name!r} is ambiguous ({len(matches)} nodes)",
                op_index=op_index,
                selector=selector,
            )
        if matches:
            return matches[0].id
        if not create:
            raise EditOpError(
                f"op {op_index}: no node named {name!r}", op_index=op_index, selector=selector
            )
        node_id = next(self._ids)
        self.objects.append(ObjectNode(id=node_id, name=name, attributes=attrs or ()))
        return node_id

    def replace(self, node_id: str, **changes) -> None:
        for i, node in enumerate(self.objects):
            if node.id == node_id:
                self.objects[i] = ObjectNode(
                    id=node.id,
                    name=changes.get("name", node.name),
                    attributes=changes.get("attributes", node.attributes),
                )
                return

    def finish(self) -> SceneGraph:
        return SceneGraph.build(self.objects, self.relations)


def apply_edits(graph: SceneGraph, ops: Sequence[GraphEditOp]) -> SceneGraph:
    """Apply ops left to right and revalidate.

    ``add_relation`` creates missing nodes by name; ``remove_node`` drops
    every relation touching the node.
    """
    ws = _Workspace(graph)
    for i, op in enumerate(ops):
        if op.kind == "add_relation":
            subj = ws.resolve(op.subject, i, create=True)
            obj = ws.resolve(op.object, i, create=True)
            predicate = canonicalize_text(op.predicate or "")
            if not predicate:
                raise EditOpError(f"op {i}: add_relation needs a predicate", op_index=i)
            ws.relations.append(RelationTriplet(subj, predicate, obj))
        elif op.kind == "remove_relation":
            subj = ws.resolve(op.subject, i)
            obj = ws.resolve(op.object, i)
            predicate = canonicalize_text(op.predicate or "")
            match = [
                r
                for r in ws.relations
                if r.subject_id == subj and r.object_id == obj and r.predicate == predicate
            ]
            if not match:
                raise EditOpError(
                    f"op {i}: no relation ({subj!r}, {predicate!r}, {obj!r})", op_index=i
                )
            ws.relations.remove(match[0])
        elif op.kind == "replace_node_name":
            node_id = ws.resolve(op.node, i)
            new_name = canonicalize_text(op.new_name or "")
            if not new_name:
                raise EditOpError(f"op {i}: replacement name is empty", op_index=i)
            ws.replace(node_id, name=new_name)
        elif op.kind == "set_attributes":
            node_id = ws.resolve(op.node, i)
            attrs = tuple(
                a for a in (canonicalize_text(x) for x in (op.attributes or ())) if a
            )
            ws.replace(node_id, attributes=attrs)
        elif op.kind == "remove_node":
            node_id = ws.resolve(op.node, i)
            ws.objects = [n for n in ws.objects if n.id != node_id]
            ws.relations = [
                r for r in ws.relations if node_id not in (r.subject_id, r.object_id)
            ]
        else:
            raise EditOpError(f"op {i}: unknown kind {op.kind!r}", op_index=i)
    try:
        return ws.finish()
    except GraphValidationError as exc:
        raise EditOpError(f"edited graph is invalid: {exc}") from exc


def ops_from_obj(doc: object) -> list[GraphEditOp]:
    """Decode a JSON array of edit ops (the CLI/API wire form)."""
    if not isinstance(doc, list):
        raise EditOpError("edit ops document must be a JSON array")
    ops = []
    for i, raw in enumerate(doc):
        if not isinstance(raw, dict) or "kind" not in raw:
            raise EditOpError(f"op {i}: each op needs a 'kind' field", op_index=i)
        kind = raw["kind"]
        if kind not in GraphEditOp.KINDS:
            raise EditOpError(f"op {i}: unknown kind {kind!r}", op_index=i)
        attrs = raw.get("attributes")
        ops.append(
            GraphEditOp(
                kind=kind,
                subject=raw.get("subject"),
                predicate=raw.get("predicate"),
                object=raw.get("object"),
                node=raw.get("node"),
                new_name=raw.get("new_name"),
                attributes=tuple(attrs) if attrs is not None else None,
            )
        )
    return ops
