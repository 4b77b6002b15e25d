"""Editing backends and the wire protocol they speak.

A backend receives the input image plus the compiled prompt bundle and
returns edited image bytes.  Two implementations ship here: a deterministic
mock (keyed-hash pixel perturbation, prompts stamped into PNG metadata) and
a client for remote servers implementing ``POST /v1/edit``:

request::

    {"image": <base64 png>, "src_prompt": str, "tgt_prompt": str,
     "tgt_new": str, "tgt_bgd": str,
     "params": {"steps": int, "skip": int, "guidance_scale": float, "seed": int}}

response::

    {"image": <base64 png>, "backend": {"name": str, "version": str,
     "prompt_convention": "concat"|"split"}, "timing_ms": int}
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
import requests
from PIL import Image, PngImagePlugin

from .errors import BackendProtocolError, ConfigError

logger = logging.getLogger(__name__)

__all__ = [
    "EditParams",
    "BackendRequest",
    "BackendResult",
    "mock_backend",
    "RemoteBackend",
    "get_backend",
    "register_backend",
    "MOCK_BLOCK",
]

MOCK_BLOCK = 16  # side of the corner block the mock perturbs
MOCK_METADATA_KEY = "venus-edit-record"


@dataclass(frozen=True)
class EditParams:
    steps: int = 50
    skip: int = 25
    guidance_scale: float = 7.5
    seed: int = 42
    backend: str = "mock"

    def __post_init__(self):
        if not 0 <= self.skip < self.steps:
            raise ConfigError(f"skip must satisfy 0 <= skip < steps, got {self.skip}/{self.steps}")
        if self.guidance_scale < 0:
            raise ConfigError("guidance_scale must be >= 0")

    def as_wire(self) -> dict:
        return {
            "steps": self.steps,
            "skip": self.skip,
            "guidance_scale": self.guidance_scale,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class BackendRequest:
    """One edit call: image + split prompts + sampler parameters."""

    image_png: bytes
    src_prompt: str
    tgt_prompt: str
    tgt_new: str
    tgt_bgd: str
    params: EditParams

    def as_wire(self) -> dict:
        return {
            "image": base64.b64encode(self.image_png).decode("ascii"),
            "src_prompt": self.src_prompt,
            "tgt_prompt": self.tgt_prompt,
            "tgt_new": self.tgt_new,
            "tgt_bgd": self.tgt_bgd,
            "params": self.params.as_wire(),
        }


@dataclass(frozen=True)
class BackendResult:
    image_png: bytes
    name: str
    version: str
    prompt_convention: str = "concat"
    timing_ms: int = 0
    warnings: tuple[str, ...] = ()


class Backend(Protocol):
    def edit(self, request: BackendRequest) -> BackendResult: ...


@dataclass(frozen=True)
class MockBackend:
    """Deterministic stand-in: the corner block is shifted by a keyed hash
    of (tgt_new, seed); an empty tgt_new leaves pixels untouched.  The full
    prompt record is stamped into PNG metadata either way."""

    name: str = "mock"
    version: str = "1"

    def edit(self, request: BackendRequest) -> BackendResult:
        try:
            with Image.open(io.BytesIO(request.image_png)) as img:
                pixels = np.array(img.convert("RGB"), dtype=np.uint8)
        except Exception as exc:
            raise BackendProtocolError(f"mock backend got undecodable PNG: {exc}") from exc

        if request.tgt_new:
            key = f"{request.tgt_new}\x00{request.params.seed}".encode("utf-8")
            digest = hashlib.sha256(key).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            h = min(MOCK_BLOCK, pixels.shape[0])
            w = min(MOCK_BLOCK, pixels.shape[1])
            delta = rng.integers(1, 256, size=(h, w, 3), dtype=np.uint16)
            block = pixels[:h, :w, :].astype(np.uint16)
            pixels[:h, :w, :] = ((block + delta) % 256).astype(np.uint8)

        record = json.dumps(
            {
                "src_prompt": request.src_prompt,
                "tgt_prompt": request.tgt_prompt,
                "tgt_new": request.tgt_new,
                "tgt_bgd": request.tgt_bgd,
                "seed": request.params.seed,
            },
            sort_keys=True,
        )
        meta = PngImagePlugin.PngInfo()
        meta.add_text(MOCK_METADATA_KEY, record)
        buf = io.BytesIO()
        Image.fromarray(pixels, mode="RGB").save(buf, format="PNG", pnginfo=meta)
        return BackendResult(image_png=buf.getvalue(), name=self.name, version=self.version)


def mock_backend(request: BackendRequest) -> bytes:
    """Functional form of the mock backend (returns just the image bytes)."""
    return MockBackend().edit(request).image_png


@dataclass(frozen=True)
class RemoteBackend:
    """Client for a server implementing the edit wire protocol."""

    endpoint: str
    timeout: float = 300.0
    transport: Callable = field(default=requests.post, compare=False)

    def edit(self, request: BackendRequest) -> BackendResult:
        url = self.endpoint.rstrip("/") + "/v1/edit"
        try:
            response = self.transport(url, json=request.as_wire(), timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendProtocolError(f"backend transport failure: {exc}") from exc
        if response.status_code != 200:
            raise BackendProtocolError(
                f"backend returned HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            doc = response.json()
        except ValueError as exc:
            raise BackendProtocolError(f"backend response is not JSON: {exc}") from exc

        for fld in ("image", "backend", "timing_ms"):
            if fld not in doc:
                raise BackendProtocolError(f"backend response is missing field {fld!r}")
        meta = doc["backend"]
        if not isinstance(meta, dict) or not {"name", "version"} <= set(meta):
            raise BackendProtocolError("backend response 'backend' must carry name and version")
        try:
            image_png = base64.b64decode(doc["image"], validate=True)
        except Exception as exc:
            raise BackendProtocolError(f"backend image is not valid base64: {exc}") from exc

        warnings: list[str] = []
        try:
            with Image.open(io.BytesIO(image_png)) as out_img:
                out_size = out_img.size
            with Image.open(io.BytesIO(request.image_png)) as in_img:
                in_size = in_img.size
        except Exception as exc:
            raise BackendProtocolError(f"backend image does not decode: {exc}") from exc
        if out_size != in_size:
            # backends may resize; record it rather than failing the run
            message = f"backend resized image from {in_size} to {out_size}"
            logger.warning(message)
            warnings.append(message)

        return BackendResult(
            image_png=image_png,
            name=str(meta["name"]),
            version=str(meta["version"]),
            prompt_convention=str(meta.get("prompt_convention", "concat")),
            timing_ms=int(doc["timing_ms"]),
            warnings=tuple(warnings),
        )


_REGISTRY: dict[str, Callable[..., Backend]] = {}


def register_backend(name: str, factory: Callable[..., Backend]) -> None:
    _REGISTRY[name] = factory


def get_backend(name: str, backend_url: str | None = None) -> Backend:
    """Resolve a backend by registry name before any I/O happens."""
    if name in _REGISTRY:
        return _REGISTRY[name](backend_url=backend_url)
    raise ConfigError(f"no backend registered under {name!r}; known: {sorted(_REGISTRY)}")


def _make_mock(backend_url: str | None = None) -> Backend:
    return MockBackend()


def _make_remote(backend_url: str | None = None) -> Backend:
    if not backend_url:
        raise ConfigError("remote backend needs a backend URL (flag, config, or VENUS_BACKEND_URL)")
    return RemoteBackend(endpoint=backend_url)


register_backend("mock", _make_mock)
register_backend("remote", _make_remote)
