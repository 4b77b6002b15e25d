"""Client for graph extraction and automated graph editing via an external
multimodal chat model.

Speaks the de-facto OpenAI-compatible chat-completions wire shape (one
image part + one text part), with bounded retries, one "JSON only"
reprompt on unparseable output, and an offline fixture mode keyed by a
request hash so the rest of the toolchain is testable without a live
endpoint.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import requests

from .errors import ConfigError, EndpointError, ExtractionError
from .graph_edit import compute_delta
from .scene_graph import (
    SceneGraph,
    extract_graph_from_model_text,
    graph_to_obj,
    serialize_graph,
)

logger = logging.getLogger(__name__)

__all__ = [
    "MllmEndpointConfig",
    "ExtractionRequest",
    "AutoEditRequest",
    "MllmClient",
    "extract_scene_graph",
    "auto_edit_graph",
    "fixture_key",
]

ENV_BASE_URL = "VENUS_MLLM_BASE_URL"
ENV_API_KEY = "VENUS_MLLM_API_KEY"
ENV_MODEL = "VENUS_MLLM_MODEL"
ENV_FIXTURES = "VENUS_MLLM_FIXTURES"

GRAPH_SCHEMA_HINT = (
    '{"objects": [{"id": "o1", "name": "dog", "attributes": ["brown"]}], '
    '"relations": [{"subject_id": "o1", "predicate": "sitting on", "object_id": "o2"}]}'
)

EXTRACT_TEMPLATE_ID = "extract.v1"
EDIT_TEMPLATE_ID = "edit.v1"


def extract_system_prompt(max_relations: int) -> str:
    return (
        "You analyze one image and return its scene graph. Respond with exactly one "
        f"JSON object and no prose, matching this schema: {GRAPH_SCHEMA_HINT} "
        "Use lowercase noun phrases for names, lowercase adjectives for attributes, "
        f"and lowercase predicates. List at most {max_relations} relations, most "
        'salient first. Every relation must reference object ids defined in "objects"; '
        "never relate an object to itself."
    )


def edit_system_prompt(max_relations: int) -> str:
    return (
        "You edit a scene graph to follow an instruction, using the image for "
        "grounding. Respond with exactly one JSON object and no prose: the FULL "
        "edited graph in the same schema as the input graph. Keep the ids, names, "
        "and attributes of every object the instruction does not touch, and keep "
        f"unaffected relations unchanged. List at most {max_relations} relations."
    )

REPROMPT = "Your previous reply was not parseable. Respond with the JSON object only."

_MEDIA_TYPES = ("image/png", "image/jpeg")


@dataclass(frozen=True)
class MllmEndpointConfig:
    base_url: str = ""
    api_key: str = ""
    model_name: str = ""
    timeout: float = 60.0
    max_retries: int = 3
    max_relations: int = 15
    fixtures_dir: str | None = None
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_relations < 1:
            raise ConfigError("max_relations must be >= 1")
        if not self.base_url and not self.fixtures_dir:
            raise ConfigError(
                f"no MLLM endpoint configured: set {ENV_BASE_URL} or enable fixture "
                f"mode via {ENV_FIXTURES}"
            )

    @classmethod
    def from_env(cls, **overrides) -> "MllmEndpointConfig":
        values = dict(
            base_url=os.environ.get(ENV_BASE_URL, ""),
            api_key=os.environ.get(ENV_API_KEY, ""),
            model_name=os.environ.get(ENV_MODEL, ""),
            fixtures_dir=os.environ.get(ENV_FIXTURES) or None,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class ExtractionRequest:
    image: bytes
    media_type: str = "image/png"
    system_template_id: str = EXTRACT_TEMPLATE_ID

    def __post_init__(self):
        if not self.image:
            raise ConfigError("extraction request needs image bytes")
        if self.media_type not in _MEDIA_TYPES:
            raise ConfigError(f"media type must be one of {_MEDIA_TYPES}")


@dataclass(frozen=True)
class AutoEditRequest:
    image: bytes
    graph: SceneGraph
    instruction: str
    media_type: str = "image/png"

    def __post_init__(self):
        if not self.image:
            raise ConfigError("auto-edit request needs image bytes")
        if self.media_type not in _MEDIA_TYPES:
            raise ConfigError(f"media type must be one of {_MEDIA_TYPES}")
        if not self.instruction.strip():
            raise ConfigError("auto-edit instruction is empty")


def fixture_key(
    template_id: str, image: bytes, instruction: str = "", graph: SceneGraph | None = None
) -> str:
    """Stable hash identifying a logical request in fixture mode."""
    payload = json.dumps(
        {
            "template": template_id,
            "image_sha256": hashlib.sha256(image).hexdigest(),
            "instruction": instruction,
            "graph": graph_to_obj(graph) if graph is not None else None,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class MllmClient:
    """Stateless per-call client; safe to share across threads."""

    def __init__(self, config: MllmEndpointConfig, transport: Callable | None = None):
        self.config = config
        self._post = transport or requests.post

    # -- wire helpers -------------------------------------------------------

    def _messages(self, system_text: str, user_text: str, image: bytes, media_type: str) -> list:
        data_url = f"data:{media_type};base64,{base64.b64encode(image).decode('ascii')}"
        return [
            {"role": "system", "content": system_text},
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": user_text},
                    {"type": "image_url", "image_url": {"url": data_url}},
                ],
            },
        ]

    def _complete(self, messages: list) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        # the api key travels only in headers, so the logged body leaks nothing
        body = {"model": self.config.model_name, "messages": messages, "temperature": 0}
        logger.debug("mllm request to %s: %.2000s", url, json.dumps(body))
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                response = self._post(url, json=body, headers=headers, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_error = exc
                logger.debug("mllm attempt %d transport error: %s", attempt + 1, exc)
                continue
            if response.status_code >= 500 or response.status_code == 429:
                last_error = EndpointError(f"HTTP {response.status_code} from endpoint")
                logger.debug("mllm attempt %d: HTTP %d", attempt + 1, response.status_code)
                continue
            if response.status_code != 200:
                raise EndpointError(
                    f"endpoint rejected request: HTTP {response.status_code}: {response.text[:200]}"
                )
            try:
                doc = response.json()
                content = doc["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise EndpointError(f"malformed completion envelope: {exc}") from exc
            logger.debug("mllm response: %.2000s", content)
            return content
        raise EndpointError(
            f"endpoint failed after {self.config.max_retries + 1} attempts: {last_error}"
        )

    def _fixture_response(self, key: str) -> str:
        fixtures = Path(self.config.fixtures_dir)
        index_path = fixtures / "index.json"
        if index_path.exists():
            index = json.loads(index_path.read_text("utf-8"))
            if key in index:
                return (fixtures / index[key]).read_text("utf-8")
        direct = fixtures / f"{key}.txt"
        if direct.exists():
            return direct.read_text("utf-8")
        raise EndpointError(f"fixture mode: no response file for request key {key}")

    def _chat(self, system_text: str, user_text: str, image: bytes, media_type: str, key: str) -> SceneGraph:
        if self.config.fixtures_dir:
            return extract_graph_from_model_text(self._fixture_response(key))
        messages = self._messages(system_text, user_text, image, media_type)
        text = self._complete(messages)
        try:
            return extract_graph_from_model_text(text)
        except ExtractionError:
            logger.debug("reprompting after unparseable response")
            messages = messages + [
                {"role": "assistant", "content": text},
                {"role": "user", "content": REPROMPT},
            ]
            return extract_graph_from_model_text(self._complete(messages))

    def _cap_relations(self, graph: SceneGraph) -> SceneGraph:
        if len(graph.relations) <= self.config.max_relations:
            return graph
        return SceneGraph.build(
            list(graph.objects), list(graph.relations[: self.config.max_relations])
        )

    # -- operations ---------------------------------------------------------

    def extract_scene_graph(self, request: ExtractionRequest) -> SceneGraph:
        """Scene-graph extraction from one image."""
        system = extract_system_prompt(self.config.max_relations)
        key = fixture_key(request.system_template_id, request.image)
        graph = self._chat(
            system, "Extract the scene graph of this image.", request.image, request.media_type, key
        )
        return self._cap_relations(graph)

    def auto_edit_graph(self, request: AutoEditRequest) -> SceneGraph:
        """Instruction-driven graph edit; returns the full edited graph.

        Logs a structural-alignment warning when fewer than half of the
        input relations survive (a likely hallucinated rewrite).
        """
        system = edit_system_prompt(self.config.max_relations)
        graph_json = serialize_graph(request.graph, "json").decode("utf-8")
        user_text = (
            f"Current scene graph:\n{graph_json}\n\nInstruction: {request.instruction.strip()}"
        )
        key = fixture_key(EDIT_TEMPLATE_ID, request.image, request.instruction.strip(), request.graph)
        edited = self._cap_relations(
            self._chat(system, user_text, request.image, request.media_type, key)
        )
        total = len(request.graph.relations)
        if total:
            shared = total - len(compute_delta(request.graph, edited).removed)
            if shared / total < 0.5:
                logger.warning(
                    "structural alignment low: %d of %d input relations survived the edit",
                    shared,
                    total,
                )
        return edited


def extract_scene_graph(config: MllmEndpointConfig, request: ExtractionRequest) -> SceneGraph:
    return MllmClient(config).extract_scene_graph(request)


def auto_edit_graph(config: MllmEndpointConfig, request: AutoEditRequest) -> SceneGraph:
    return MllmClient(config).auto_edit_graph(request)
