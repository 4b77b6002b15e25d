"""Editing models behind the adapter.

Two implementations: a deterministic stub that needs no weights (CI and
protocol testing), and an optional wrapper around a real noise-inversion
editing pipeline (diffusers), loaded only when requested.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)


class ModelUnavailable(Exception):
    """The requested model cannot be loaded on this host."""


@dataclass(frozen=True)
class EditInputs:
    """One edit call after validation, convention already applied."""

    image_png: bytes
    src_prompt: str
    tgt_prompt: str
    tgt_new: str
    tgt_bgd: str
    steps: int
    skip: int
    guidance_scale: float
    seed: int


class EditingModel(Protocol):
    name: str
    version: str

    def edit(self, inputs: EditInputs, prompt_convention: str) -> bytes: ...


class StubModel:
    """Weight-free stand-in with inversion-shaped behavior.

    The image is blended toward a seed-keyed noise field; the blend weight
    grows with how far the effective target prompt departs from the source
    prompt and shrinks with the skip fraction (more skipped steps = milder
    edit), echoing how the real pipeline trades edit strength against
    preservation.  Identical requests produce identical bytes.
    """

    name = "stub-inversion"
    version = "1"

    def edit(self, inputs: EditInputs, prompt_convention: str) -> bytes:
        with Image.open(io.BytesIO(inputs.image_png)) as img:
            pixels = np.asarray(img.convert("RGB"), dtype=np.float64)

        if prompt_convention == "split":
            conditioning = {"new": inputs.tgt_new, "bgd": inputs.tgt_bgd}
        else:
            conditioning = {"tgt": inputs.tgt_prompt}
        key = json.dumps(
            {
                "src": inputs.src_prompt,
                "conditioning": conditioning,
                "seed": inputs.seed,
                "steps": inputs.steps,
                "skip": inputs.skip,
                "scale": inputs.guidance_scale,
            },
            sort_keys=True,
        ).encode("utf-8")
        digest = hashlib.sha256(key).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))

        edited_content = inputs.tgt_new if prompt_convention == "split" else (
            inputs.tgt_prompt if inputs.tgt_prompt != inputs.src_prompt else ""
        )
        preserve = inputs.skip / max(inputs.steps, 1)
        weight = (0.25 if edited_content else 0.02) * (1.0 - 0.5 * preserve)

        noise = rng.uniform(0.0, 255.0, size=pixels.shape)
        blended = np.clip((1.0 - weight) * pixels + weight * noise, 0, 255).astype(np.uint8)

        buf = io.BytesIO()
        Image.fromarray(blended, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


class RealInversionModel:
    """Wrapper around a diffusers noise-inversion editing pipeline.

    Requires the ``real`` extra (torch + diffusers) and model weights;
    never exercised in CI.  The source prompt conditions the inversion
    pass; the target side conditions generation, either as one caption
    (concat) or as separate edited-content / background concepts (split).
    """

    name = "ledits-sdv2.1"

    def __init__(self, model_id: str, device: str = "cuda"):
        try:
            import torch
            from diffusers import LEditsPPPipelineStableDiffusion
        except ImportError as exc:
            raise ModelUnavailable(f"real model mode needs torch+diffusers: {exc}") from exc
        try:
            self._pipe = LEditsPPPipelineStableDiffusion.from_pretrained(model_id)
            self._pipe.to(device)
        except Exception as exc:
            raise ModelUnavailable(f"cannot load {model_id!r}: {exc}") from exc
        self._torch = torch
        self.version = model_id

    def edit(self, inputs: EditInputs, prompt_convention: str) -> bytes:
        with Image.open(io.BytesIO(inputs.image_png)) as img:
            image = img.convert("RGB")
        generator = self._torch.Generator().manual_seed(inputs.seed)
        self._pipe.invert(
            image=image,
            source_prompt=inputs.src_prompt,
            num_inversion_steps=inputs.steps,
            skip=inputs.skip / max(inputs.steps, 1),
            generator=generator,
        )
        if prompt_convention == "split":
            concepts = [p for p in (inputs.tgt_new, inputs.tgt_bgd) if p]
            reverse = [False] * len(concepts)
        else:
            concepts = [inputs.tgt_prompt]
            reverse = [False]
        result = self._pipe(
            editing_prompt=concepts,
            reverse_editing_direction=reverse,
            edit_guidance_scale=inputs.guidance_scale,
            generator=generator,
        )
        buf = io.BytesIO()
        result.images[0].save(buf, format="PNG")
        return buf.getvalue()


def load_model(model_id: str, device: str) -> EditingModel:
    if model_id == "stub":
        return StubModel()
    return RealInversionModel(model_id, device=device)
