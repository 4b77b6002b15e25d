"""Executable conformance suite for the edit-backend wire protocol.

Any server claiming to implement ``POST /v1/edit`` can be checked with
:func:`run_conformance`, which needs only a ``post(path, json=...)``
callable returning an object with ``status_code`` and ``json()`` (a
``TestClient`` method or a thin ``requests`` wrapper both qualify).

Checked here: response schema on valid requests, byte-determinism under a
fixed seed, and a 400 + ``{"error": str}`` envelope for malformed
requests.  Load-failure (503) and busy (429) responses depend on server
state, so servers exercise those paths in their own tests using
:func:`validate_error_body`.
"""

from __future__ import annotations

import base64
import io
from typing import Callable, Iterable

import numpy as np
from PIL import Image

EDIT_PATH = "/v1/edit"

REQUEST_FIELDS = {"image", "src_prompt", "tgt_prompt", "tgt_new", "tgt_bgd", "params"}
PARAM_FIELDS = {"steps", "skip", "guidance_scale", "seed"}
PROMPT_CONVENTIONS = ("concat", "split")


def _encode_png(seed: int, width: int, height: int) -> str:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def sample_request(seed: int = 42, width: int = 64, height: int = 48) -> dict:
    """A fully valid request with a deterministic image."""
    return {
        "image": _encode_png(seed, width, height),
        "src_prompt": "tree beside lake",
        "tgt_prompt": "zebra standing on field, tree beside lake",
        "tgt_new": "zebra standing on field",
        "tgt_bgd": "tree beside lake",
        "params": {"steps": 50, "skip": 25, "guidance_scale": 7.5, "seed": seed},
    }


def invalid_requests() -> list[tuple[str, dict]]:
    """(name, payload) pairs a conforming server must reject with 400."""
    missing_image = sample_request()
    del missing_image["image"]
    bad_base64 = sample_request()
    bad_base64["image"] = "@@not-base64@@"
    not_png = sample_request()
    not_png["image"] = base64.b64encode(b"plain text").decode()
    missing_params = sample_request()
    del missing_params["params"]
    bad_skip = sample_request()
    bad_skip["params"]["skip"] = 99
    wrong_type = sample_request()
    wrong_type["src_prompt"] = 17
    return [
        ("missing image", missing_image),
        ("image not base64", bad_base64),
        ("image not a png", not_png),
        ("missing params", missing_params),
        ("skip >= steps", bad_skip),
        ("non-string prompt", wrong_type),
    ]


def validate_response(doc: object) -> list[str]:
    """Schema problems in a success response (empty list = conformant)."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        return ["response body is not a JSON object"]
    if not isinstance(doc.get("image"), str):
        problems.append("missing or non-string 'image'")
    else:
        try:
            raw = base64.b64decode(doc["image"], validate=True)
            with Image.open(io.BytesIO(raw)) as img:
                if img.format != "PNG":
                    problems.append(f"'image' decodes to {img.format}, not PNG")
        except Exception as exc:
            problems.append(f"'image' is not base64 PNG: {exc}")
    backend = doc.get("backend")
    if not isinstance(backend, dict):
        problems.append("missing 'backend' object")
    else:
        for field in ("name", "version"):
            if not isinstance(backend.get(field), str):
                problems.append(f"backend.{field} missing or not a string")
        if backend.get("prompt_convention") not in PROMPT_CONVENTIONS:
            problems.append(
                f"backend.prompt_convention must be one of {PROMPT_CONVENTIONS}"
            )
    if not isinstance(doc.get("timing_ms"), int):
        problems.append("missing or non-integer 'timing_ms'")
    return problems


def validate_error_body(doc: object) -> list[str]:
    if not isinstance(doc, dict) or not isinstance(doc.get("error"), str) or not doc["error"]:
        return ["error responses must carry {'error': <non-empty string>}"]
    return []


def run_conformance(post: Callable, seeds: Iterable[int] = (42, 7)) -> None:
    """Assert protocol conformance against a live ``post`` callable."""
    for seed in seeds:
        request = sample_request(seed=seed)
        response = post(EDIT_PATH, json=request)
        assert response.status_code == 200, (
            f"valid request (seed {seed}) got HTTP {response.status_code}"
        )
        problems = validate_response(response.json())
        assert not problems, f"seed {seed}: {problems}"

        again = post(EDIT_PATH, json=request)
        assert again.status_code == 200
        assert again.json()["image"] == response.json()["image"], (
            f"seed {seed}: identical requests produced different images"
        )

    for name, payload in invalid_requests():
        response = post(EDIT_PATH, json=payload)
        assert response.status_code == 400, (
            f"invalid request ({name}) got HTTP {response.status_code}, expected 400"
        )
        assert not validate_error_body(response.json()), f"{name}: bad error envelope"
