"""The wire-protocol server: request validation, one edit at a time.

Error policy: malformed request → 400 naming the offending field;
model not loadable → 503; an edit already in flight → 429.  All error
bodies are ``{"error": str}``.
"""

from __future__ import annotations

import base64
import binascii
import io
import logging
import threading
import time
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image

from .models import EditInputs, EditingModel, ModelUnavailable, load_model

logger = logging.getLogger(__name__)

PROMPT_CONVENTIONS = ("concat", "split")


@dataclass(frozen=True)
class AdapterConfig:
    model: str = "stub"
    device: str = "cpu"
    steps: int = 50
    skip: int = 25
    guidance_scale: float = 7.5
    prompt_convention: str = "concat"

    def __post_init__(self):
        if self.prompt_convention not in PROMPT_CONVENTIONS:
            raise ValueError(f"prompt_convention must be one of {PROMPT_CONVENTIONS}")
        if not 0 <= self.skip < self.steps:
            raise ValueError("skip must satisfy 0 <= skip < steps")


class RequestError(Exception):
    """400-level problem; the message names the field."""


def _require_str(body: dict, field: str) -> str:
    value = body.get(field)
    if not isinstance(value, str):
        raise RequestError(f"field {field!r} must be a string")
    return value


def _decode_image(body: dict) -> bytes:
    raw = body.get("image")
    if not isinstance(raw, str):
        raise RequestError("field 'image' must be a base64 string")
    try:
        data = base64.b64decode(raw, validate=True)
    except binascii.Error as exc:
        raise RequestError(f"field 'image' is not valid base64: {exc}") from exc
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.format != "PNG":
                raise RequestError(f"field 'image' must be a PNG, got {img.format}")
    except RequestError:
        raise
    except Exception as exc:
        raise RequestError(f"field 'image' does not decode: {exc}") from exc
    return data


def parse_edit_request(body: object, config: AdapterConfig) -> EditInputs:
    if not isinstance(body, dict):
        raise RequestError("request body must be a JSON object")
    image = _decode_image(body)
    prompts = {field: _require_str(body, field) for field in ("src_prompt", "tgt_prompt", "tgt_new", "tgt_bgd")}
    params = body.get("params")
    if not isinstance(params, dict):
        raise RequestError("field 'params' must be an object")
    try:
        steps = int(params["steps"])
        skip = int(params["skip"])
        guidance_scale = float(params["guidance_scale"])
        seed = int(params["seed"])
    except KeyError as exc:
        raise RequestError(f"field 'params.{exc.args[0]}' is missing") from exc
    except (TypeError, ValueError) as exc:
        raise RequestError(f"field 'params' holds a non-numeric value: {exc}") from exc
    if not 0 <= skip < steps:
        raise RequestError("field 'params.skip' must satisfy 0 <= skip < steps")
    if guidance_scale < 0:
        raise RequestError("field 'params.guidance_scale' must be >= 0")
    return EditInputs(
        image_png=image,
        steps=steps,
        skip=skip,
        guidance_scale=guidance_scale,
        seed=seed,
        **prompts,
    )


def create_app(config: AdapterConfig | None = None) -> FastAPI:
    config = config or AdapterConfig()
    app = FastAPI(title="venus-diffusion-adapter")
    app.state.config = config
    app.state.edit_slot = threading.Semaphore(1)  # GPU-bound: one edit in flight
    app.state.model = None
    app.state.model_error: str | None = None

    def model() -> EditingModel:
        if app.state.model is None and app.state.model_error is None:
            try:
                app.state.model = load_model(config.model, config.device)
            except ModelUnavailable as exc:
                app.state.model_error = str(exc)
                logger.error("model load failed: %s", exc)
        if app.state.model is None:
            raise ModelUnavailable(app.state.model_error or "model not loaded")
        return app.state.model

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "model": config.model,
            "prompt_convention": config.prompt_convention,
        }

    @app.post("/v1/edit")
    async def edit(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "request body is not JSON"}, status_code=400)
        try:
            inputs = parse_edit_request(body, config)
        except RequestError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)

        try:
            editing_model = model()
        except ModelUnavailable as exc:
            return JSONResponse({"error": str(exc)}, status_code=503)

        if not app.state.edit_slot.acquire(blocking=False):
            return JSONResponse(
                {"error": "an edit is already in flight; retry later"}, status_code=429
            )
        try:
            started = time.monotonic()
            image_png = editing_model.edit(inputs, config.prompt_convention)
            timing_ms = int((time.monotonic() - started) * 1000)
        finally:
            app.state.edit_slot.release()

        return {
            "image": base64.b64encode(image_png).decode("ascii"),
            "backend": {
                "name": editing_model.name,
                "version": editing_model.version,
                "prompt_convention": config.prompt_convention,
            },
            "timing_ms": timing_ms,
        }

    return app
