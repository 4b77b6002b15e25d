"""Scene-graph data model, canonicalization, and the JSON / DSL codecs.

A scene graph is a set of object nodes plus an ordered sequence of
(subject, predicate, object) relation triplets.  Triplet identity is judged
by canonical rendered text (see :class:`CanonicalKey`), never by node id,
so graphs produced by independent sources can be compared.

Two interchange formats are supported:

* JSON: ``{"objects": [{"id", "name", "attributes"?}],
  "relations": [{"subject_id", "predicate", "object_id"}]}``
* a line-oriented DSL: ``subject -[predicate]-> object`` with attributes in
  parentheses, e.g. ``dog(brown) -[sitting on]-> bench``.  A line holding a
  bare phrase declares a node with no relations.  ``#`` starts a comment
  line.  The DSL identifies nodes by their rendered phrase, so graphs with
  two nodes sharing a phrase are not representable in it.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .errors import DslSyntaxError, ExtractionError, GraphParseError, GraphValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "ObjectNode",
    "RelationTriplet",
    "SceneGraph",
    "CanonicalKey",
    "canonicalize_text",
    "parse_graph_json",
    "parse_graph_dsl",
    "serialize_graph",
    "extract_graph_from_model_text",
]

_WS_RUN = re.compile(r"\s+")


def canonicalize_text(raw: str) -> str:
    """Lowercase, trim, and collapse internal whitespace runs to one space.

    Idempotent; may return ``""`` (callers validate non-emptiness).
    """
    return _WS_RUN.sub(" ", raw.strip()).lower()


@dataclass(frozen=True)
class ObjectNode:
    """One object in the scene: a noun phrase plus optional adjectives."""

    id: str
    name: str
    attributes: tuple[str, ...] = ()

    def phrase(self) -> str:
        """Rendered phrase: space-joined attributes before the noun."""
        return " ".join((*self.attributes, self.name))


@dataclass(frozen=True)
class RelationTriplet:
    """Directed relation between two nodes of the owning graph."""

    subject_id: str
    predicate: str
    object_id: str


@dataclass(frozen=True)
class CanonicalKey:
    """Rendered-text identity of a triplet; equal semantics ⇒ equal key."""

    subject_text: str
    predicate_text: str
    object_text: str

    def as_dict(self) -> dict[str, str]:
        return {
            "subject": self.subject_text,
            "predicate": self.predicate_text,
            "object": self.object_text,
        }


@dataclass(frozen=True)
class SceneGraph:
    """Validated, immutable scene graph.

    Construct through :meth:`build`, which canonicalizes text, checks the
    structural invariants, and deduplicates relations by canonical key
    (warning in default mode, error in strict mode).
    """

    objects: tuple[ObjectNode, ...]
    relations: tuple[RelationTriplet, ...]
    _by_id: dict[str, ObjectNode] = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def build(
        cls,
        objects: list[ObjectNode] | tuple[ObjectNode, ...],
        relations: list[RelationTriplet] | tuple[RelationTriplet, ...],
        strict: bool = False,
    ) -> "SceneGraph":
        canon_objects: list[ObjectNode] = []
        by_id: dict[str, ObjectNode] = {}
        for node in objects:
            if not node.id:
                raise GraphValidationError("object node has an empty id")
            if node.id in by_id:
                raise GraphValidationError(f"duplicate object id {node.id!r}")
            name = canonicalize_text(node.name)
            if not name:
                raise GraphValidationError(f"object {node.id!r} has an empty name")
            attrs = tuple(a for a in (canonicalize_text(x) for x in node.attributes) if a)
            canon = ObjectNode(id=node.id, name=name, attributes=attrs)
            by_id[node.id] = canon
            canon_objects.append(canon)

        canon_relations: list[RelationTriplet] = []
        seen_keys: set[CanonicalKey] = set()
        for rel in relations:
            for ref in (rel.subject_id, rel.object_id):
                if ref not in by_id:
                    raise GraphValidationError(f"relation references unknown object id {ref!r}")
            predicate = canonicalize_text(rel.predicate)
            if not predicate:
                raise GraphValidationError(
                    f"relation ({rel.subject_id!r}, {rel.object_id!r}) has an empty predicate"
                )
            if rel.subject_id == rel.object_id:
                raise GraphValidationError(f"self-relation on object id {rel.subject_id!r}")
            canon = RelationTriplet(rel.subject_id, predicate, rel.object_id)
            key = CanonicalKey(
                by_id[canon.subject_id].phrase(), predicate, by_id[canon.object_id].phrase()
            )
            if key in seen_keys:
                if strict:
                    raise GraphValidationError(f"duplicate relation {key.as_dict()}")
                logger.warning("dropping duplicate relation %s", key.as_dict())
                continue
            seen_keys.add(key)
            canon_relations.append(canon)

        graph = cls(tuple(canon_objects), tuple(canon_relations))
        object.__setattr__(graph, "_by_id", by_id)
        return graph

    def node(self, node_id: str) -> ObjectNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise GraphValidationError(f"unknown object id {node_id!r}") from None

    def key_of(self, rel: RelationTriplet) -> CanonicalKey:
        return CanonicalKey(
            self.node(rel.subject_id).phrase(),
            rel.predicate,
            self.node(rel.object_id).phrase(),
        )

    def relation_keys(self) -> tuple[CanonicalKey, ...]:
        return tuple(self.key_of(r) for r in self.relations)

    def __len__(self) -> int:
        return len(self.relations)


# ---------------------------------------------------------------------------
# JSON codec
# ---------------------------------------------------------------------------

_KNOWN_OBJECT_FIELDS = {"id", "name", "attributes"}
_KNOWN_RELATION_FIELDS = {"subject_id", "predicate", "object_id"}


def parse_graph_json(data: bytes | str, strict: bool = False) -> SceneGraph:
    """Parse the JSON graph format into a validated :class:`SceneGraph`.

    Unknown fields are ignored unless ``strict``; relation order is
    preserved from the input.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GraphParseError(f"input is not UTF-8: {exc}", byte_offset=exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise GraphParseError(
            f"malformed JSON at byte {offset}: {exc.msg}", byte_offset=offset
        ) from exc
    return graph_from_obj(doc, strict=strict)


def graph_from_obj(doc: object, strict: bool = False) -> SceneGraph:
    """Validate an already-decoded JSON object as a scene graph."""
    if not isinstance(doc, dict):
        raise GraphParseError("top-level JSON value must be an object")
    for key in ("objects", "relations"):
        if key not in doc:
            raise GraphParseError(f"missing top-level field {key!r}")
        if not isinstance(doc[key], list):
            raise GraphParseError(f"field {key!r} must be an array")
    if strict:
        extra = set(doc) - {"objects", "relations"}
        if extra:
            raise GraphParseError(f"unknown top-level fields {sorted(extra)}")

    objects = []
    for i, raw in enumerate(doc["objects"]):
        if not isinstance(raw, dict):
            raise GraphParseError(f"objects[{i}] must be an object")
        if strict and set(raw) - _KNOWN_OBJECT_FIELDS:
            raise GraphParseError(
                f"objects[{i}] has unknown fields {sorted(set(raw) - _KNOWN_OBJECT_FIELDS)}"
            )
        node_id = raw.get("id")
        name = raw.get("name")
        if not isinstance(node_id, str) or not isinstance(name, str):
            raise GraphParseError(f"objects[{i}] needs string 'id' and 'name'")
        attrs = raw.get("attributes", [])
        if not isinstance(attrs, list) or any(not isinstance(a, str) for a in attrs):
            raise GraphParseError(f"objects[{i}].attributes must be an array of strings")
        objects.append(ObjectNode(id=node_id, name=name, attributes=tuple(attrs)))

    relations = []
    for i, raw in enumerate(doc["relations"]):
        if not isinstance(raw, dict):
            raise GraphParseError(f"relations[{i}] must be an object")
        if strict and set(raw) - _KNOWN_RELATION_FIELDS:
            raise GraphParseError(
                f"relations[{i}] has unknown fields {sorted(set(raw) - _KNOWN_RELATION_FIELDS)}"
            )
        try:
            relations.append(
                RelationTriplet(raw["subject_id"], raw["predicate"], raw["object_id"])
            )
        except KeyError as exc:
            raise GraphParseError(f"relations[{i}] is missing field {exc.args[0]!r}") from exc

    return SceneGraph.build(objects, relations, strict=strict)


def graph_to_obj(graph: SceneGraph) -> dict:
    return {
        "objects": [
            {"id": n.id, "name": n.name, "attributes": list(n.attributes)}
            for n in graph.objects
        ],
        "relations": [
            {"subject_id": r.subject_id, "predicate": r.predicate, "object_id": r.object_id}
            for r in graph.relations
        ],
    }


# ---------------------------------------------------------------------------
# DSL codec
# ---------------------------------------------------------------------------

_DSL_LINE = re.compile(r"^(?P<subject>.+?)\s*-\[(?P<predicate>[^\]]*)\]->\s*(?P<object>.+)$")
_DSL_PHRASE = re.compile(r"^(?P<name>[^()]+?)\s*(?:\(\s*(?P<attrs>[^()]*?)\s*\))?$")
# rendered text containing these cannot survive a DSL round-trip
_DSL_UNSAFE = re.compile(r"[()#,\[\]]|-\[|\]->")


def _parse_phrase(text: str, line_no: int) -> tuple[str, tuple[str, ...]]:
    match = _DSL_PHRASE.match(text.strip())
    if not match:
        raise DslSyntaxError(f"line {line_no}: cannot parse phrase {text!r}", line=line_no)
    name = canonicalize_text(match.group("name"))
    if not name:
        raise DslSyntaxError(f"line {line_no}: empty name in phrase {text!r}", line=line_no)
    attrs_raw = match.group("attrs")
    attrs: tuple[str, ...] = ()
    if attrs_raw:
        attrs = tuple(a for a in (canonicalize_text(p) for p in attrs_raw.split(",")) if a)
    return name, attrs


def parse_graph_dsl(text: str, strict: bool = False) -> SceneGraph:
    """Parse the line-oriented DSL; node ids are assigned o1, o2, ... in
    first-appearance order of distinct phrases."""
    nodes: dict[tuple[str, tuple[str, ...]], str] = {}
    objects: list[ObjectNode] = []
    relations: list[RelationTriplet] = []

    def intern(name: str, attrs: tuple[str, ...]) -> str:
        key = (name, attrs)
        if key not in nodes:
            node_id = f"o{len(nodes) + 1}"
            nodes[key] = node_id
            objects.append(ObjectNode(id=node_id, name=name, attributes=attrs))
        return nodes[key]

    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        match = _DSL_LINE.match(stripped)
        if match:
            subj = intern(*_parse_phrase(match.group("subject"), line_no))
            obj = intern(*_parse_phrase(match.group("object"), line_no))
            predicate = canonicalize_text(match.group("predicate"))
            if not predicate:
                raise DslSyntaxError(f"line {line_no}: empty predicate", line=line_no)
            relations.append(RelationTriplet(subj, predicate, obj))
        elif "-[" in stripped or "]->" in stripped:
            raise DslSyntaxError(f"line {line_no}: malformed relation {stripped!r}", line=line_no)
        else:
            intern(*_parse_phrase(stripped, line_no))  # bare phrase: orphan node

    try:
        return SceneGraph.build(objects, relations, strict=strict)
    except GraphValidationError as exc:
        raise GraphValidationError(f"DSL graph invalid: {exc}") from exc


def _dsl_phrase(node: ObjectNode) -> str:
    if node.attributes:
        return f"{node.name}({', '.join(node.attributes)})"
    return node.name


def serialize_graph(graph: SceneGraph, format: str = "json") -> bytes:
    """Serialize to ``json`` or ``dsl`` bytes; deterministic for a given graph.

    DSL output refuses graphs it cannot round-trip (phrases containing DSL
    metacharacters, or two nodes rendering to the same phrase).
    """
    if format == "json":
        return json.dumps(
            graph_to_obj(graph), separators=(",", ":"), ensure_ascii=False
        ).encode("utf-8")
    if format != "dsl":
        raise ValueError(f"unknown graph format {format!r}")

    phrases: dict[str, str] = {}
    for node in graph.objects:
        for part in (node.name, *node.attributes):
            if _DSL_UNSAFE.search(part):
                raise GraphValidationError(f"text {part!r} is not representable in the DSL")
        phrase = node.phrase()
        if phrase in phrases:
            raise GraphValidationError(
                f"nodes {phrases[phrase]!r} and {node.id!r} share the phrase {phrase!r}; "
                "the DSL identifies nodes by phrase"
            )
        phrases[phrase] = node.id
    for rel in graph.relations:
        if _DSL_UNSAFE.search(rel.predicate):
            raise GraphValidationError(
                f"predicate {rel.predicate!r} is not representable in the DSL"
            )

    lines = [
        f"{_dsl_phrase(graph.node(r.subject_id))} -[{r.predicate}]-> "
        f"{_dsl_phrase(graph.node(r.object_id))}\n"
        for r in graph.relations
    ]
    related = {r.subject_id for r in graph.relations} | {r.object_id for r in graph.relations}
    lines.extend(
        f"{_dsl_phrase(node)}\n" for node in graph.objects if node.id not in related
    )
    return "".join(lines).encode("utf-8")


# ---------------------------------------------------------------------------
# Tolerant extraction from model output
# ---------------------------------------------------------------------------


def _balanced_json_candidates(text: str):
    """Yield each top-level balanced ``{...}`` substring in order."""
    depth = 0
    start = -1
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"' and depth > 0:
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                yield text[start : i + 1]


def extract_graph_from_model_text(text: str) -> SceneGraph:
    """Pull the first balanced JSON object out of free-form model output and
    parse it as a graph (non-strict), ignoring prose and code fences.

    Balanced-brace runs that are not valid JSON (e.g. ``{5/10}`` in prose)
    are skipped; the first run that *is* JSON decides the outcome — a later
    block never overrides an earlier JSON object that fails graph validation.
    """
    for candidate in _balanced_json_candidates(text):
        try:
            doc = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        try:
            return graph_from_obj(doc, strict=False)
        except (GraphParseError, GraphValidationError) as exc:
            raise ExtractionError(
                f"model output contained a JSON object but it is not a valid graph: {exc}",
                raw_text=text,
            ) from exc
    raise ExtractionError("no JSON object found in model output", raw_text=text)
