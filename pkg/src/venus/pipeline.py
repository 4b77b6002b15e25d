"""End-to-end edit runs: graph resolution, prompt compilation, backend
dispatch, and persisted run directories.

Every run lives in its own directory under the runs root::

    <runs_dir>/<run_id>/
        manifest.json    # self-verifying record of the run
        input.png
        output.png       # absent for failed runs

The manifest stores the graphs it compiled from, so provenance can be
checked later by recompiling and comparing byte-for-byte.  Two modes exist:
``scene_graph`` (target prompt compiled from the graph pair) and
``text_gttp`` (benchmark ground-truth target prompt passed through verbatim,
with the source prompt still compiled from the source graph as auxiliary
guidance).
"""

from __future__ import annotations

import datetime as _dt
import io
import json
import logging
import math
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .backends import BackendRequest, EditParams, get_backend
from .errors import ConfigError, RunError, VenusError
from .graph_edit import GraphEditOp, apply_edits, compute_delta
from .metrics_eval import ImageBuffer, psnr, ssim
from .mllm_client import AutoEditRequest, MllmClient, MllmEndpointConfig
from .prompt_compiler import PromptBundle, TokenBudget, compile_bundle, compile_caption
from .scene_graph import SceneGraph, graph_to_obj

logger = logging.getLogger(__name__)

__all__ = [
    "EditJob",
    "RunManifest",
    "run_edit",
    "load_manifest",
    "verify_prompt_provenance",
    "semantic_manifest",
    "MANIFEST_NAME",
]

MANIFEST_NAME = "manifest.json"
MODES = ("scene_graph", "text_gttp")

_id_lock = threading.Lock()


@dataclass(frozen=True)
class EditJob:
    """One requested edit; exactly one way to derive the target in
    scene_graph mode (explicit graph, ops, or an instruction)."""

    image_path: Path
    source_graph: SceneGraph
    params: EditParams = field(default_factory=EditParams)
    mode: str = "scene_graph"
    target_graph: SceneGraph | None = None
    ops: tuple[GraphEditOp, ...] | None = None
    instruction: str | None = None
    gttp: str | None = None
    id: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "text_gttp" and not self.gttp:
            raise ConfigError("text_gttp mode requires a gttp string")
        if self.mode == "scene_graph":
            sources = [self.target_graph is not None, self.ops is not None, self.instruction is not None]
            if sum(sources) != 1:
                raise ConfigError(
                    "scene_graph mode needs exactly one of: target graph, edit ops, instruction"
                )


@dataclass(frozen=True)
class RunManifest:
    doc: dict
    path: Path

    @property
    def run_id(self) -> str:
        return self.doc["run_id"]

    @property
    def status(self) -> str:
        return self.doc["status"]


def _new_run_id() -> str:
    with _id_lock:
        return _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S") + "-" + secrets.token_hex(4)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="milliseconds")


def _write_json_atomic(path: Path, doc: dict) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    tmp = path.with_suffix(".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def bundle_to_canonical_bytes(bundle_obj: dict) -> bytes:
    """Canonical byte encoding used for provenance comparisons."""
    return json.dumps(bundle_obj, sort_keys=True, ensure_ascii=False).encode("utf-8")


def _resolve_target(job: EditJob, mllm_config: MllmEndpointConfig | None, image: bytes) -> SceneGraph:
    if job.target_graph is not None:
        return job.target_graph
    if job.ops is not None:
        return apply_edits(job.source_graph, job.ops)
    config = mllm_config or MllmEndpointConfig.from_env()
    request = AutoEditRequest(image=image, graph=job.source_graph, instruction=job.instruction)
    return MllmClient(config).auto_edit_graph(request)


def run_edit(
    job: EditJob,
    runs_dir: str | Path,
    backend_url: str | None = None,
    mllm_config: MllmEndpointConfig | None = None,
    compute_metrics: bool = True,
) -> RunManifest:
    """Execute one edit job and persist its run directory.

    Configuration problems (bad mode, unregistered backend, unreadable
    image) raise before anything is written.  Once the run directory
    exists, any stage failure is recorded in a failure manifest and
    re-raised as :class:`RunError` tagged with the stage.
    """
    backend = get_backend(job.params.backend, backend_url=backend_url)

    image_path = Path(job.image_path)
    try:
        image_bytes = image_path.read_bytes()
        with Image.open(io.BytesIO(image_bytes)) as img:
            if img.format != "PNG":
                raise ConfigError(f"input image must be PNG, got {img.format}")
            width, height = img.size
            img.convert("RGB")
    except OSError as exc:
        raise ConfigError(f"cannot read input image {image_path}: {exc}") from exc

    run_id = job.id or _new_run_id()
    run_dir = Path(runs_dir) / run_id
    run_dir.mkdir(parents=True, exist_ok=False)
    (run_dir / "input.png").write_bytes(image_bytes)
    created_at = _now()

    doc: dict = {
        "run_id": run_id,
        "mode": job.mode,
        "created_at": created_at,
        "params": {**job.params.as_wire(), "backend": job.params.backend},
        "images": {"input": "input.png", "width": width, "height": height},
        "source_graph": graph_to_obj(job.source_graph),
    }

    stage = "resolve_target"
    try:
        target = None
        if job.mode == "scene_graph":
            target = _resolve_target(job, mllm_config, image_bytes)
            doc["target_graph"] = graph_to_obj(target)

        stage = "compile"
        budget = TokenBudget()
        if job.mode == "scene_graph":
            bundle = compile_bundle(job.source_graph, target, budget)
            request = BackendRequest(
                image_png=image_bytes,
                src_prompt=bundle.src_caption,
                tgt_prompt=bundle.tgt_caption,
                tgt_new=bundle.tgt_new_caption,
                tgt_bgd=bundle.tgt_bgd_caption,
                params=job.params,
            )
            doc["delta"] = compute_delta(job.source_graph, target).as_obj()
            doc["prompt_bundle"] = bundle.as_obj()
        else:
            # ground-truth target prompt travels verbatim; the compiler only
            # produces the auxiliary source prompt from the source graph
            src_caption, _ = compile_caption(
                job.source_graph.relations, job.source_graph, budget
            )
            doc["gttp"] = job.gttp
            doc["src_caption"] = src_caption
            request = BackendRequest(
                image_png=image_bytes,
                src_prompt=src_caption,
                tgt_prompt=job.gttp,
                tgt_new=job.gttp,
                tgt_bgd="",
                params=job.params,
            )

        stage = "backend"
        started = time.monotonic()
        result = backend.edit(request)
        wall_ms = int((time.monotonic() - started) * 1000)
        (run_dir / "output.png").write_bytes(result.image_png)
        doc["images"]["output"] = "output.png"
        doc["backend"] = {
            "name": result.name,
            "version": result.version,
            "prompt_convention": result.prompt_convention,
            "timing_ms": result.timing_ms,
            "wall_ms": wall_ms,
        }
        if result.warnings:
            doc["warnings"] = list(result.warnings)

        if compute_metrics:
            stage = "metrics"
            doc["metrics"] = _safe_metrics(image_bytes, result.image_png)

        doc["status"] = "succeeded"
        doc["finished_at"] = _now()
        manifest_path = run_dir / MANIFEST_NAME
        _write_json_atomic(manifest_path, doc)
        return RunManifest(doc=doc, path=manifest_path)

    except Exception as exc:
        doc["status"] = "failed"
        doc["finished_at"] = _now()
        doc["error"] = {"stage": stage, "message": str(exc)}
        manifest_path = run_dir / MANIFEST_NAME
        _write_json_atomic(manifest_path, doc)
        error = RunError(f"run {run_id} failed at stage {stage}: {exc}", stage=stage)
        error.run_dir = run_dir  # type: ignore[attr-defined]
        raise error from exc


def _safe_metrics(input_png: bytes, output_png: bytes) -> dict:
    try:
        a = ImageBuffer.from_png_bytes(input_png)
        b = ImageBuffer.from_png_bytes(output_png)
        value = psnr(a, b)
        metrics = {"psnr_db": "inf" if value == math.inf else value}
        if min(a.height, a.width) >= 11:
            metrics["ssim"] = ssim(a, b)
        return metrics
    except VenusError as exc:
        # sizes may legitimately differ when a backend resizes
        return {"skipped": str(exc)}


def load_manifest(run_dir: str | Path) -> RunManifest:
    path = Path(run_dir) / MANIFEST_NAME
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    return RunManifest(doc=doc, path=path)


def verify_prompt_provenance(doc: dict) -> bool:
    """Recompile the stored graphs and compare against the stored bundle
    byte-for-byte (scene_graph manifests only)."""
    if doc.get("mode") != "scene_graph" or "prompt_bundle" not in doc:
        return False
    from .scene_graph import graph_from_obj

    source = graph_from_obj(doc["source_graph"])
    target = graph_from_obj(doc["target_graph"])
    recompiled: PromptBundle = compile_bundle(source, target, TokenBudget())
    return bundle_to_canonical_bytes(recompiled.as_obj()) == bundle_to_canonical_bytes(
        doc["prompt_bundle"]
    )


_VOLATILE_KEYS = ("created_at", "finished_at",)


def semantic_manifest(doc: dict) -> dict:
    """Copy of a manifest with volatile fields (timestamps, wall time)
    removed, for determinism comparisons."""
    out = {k: v for k, v in doc.items() if k not in _VOLATILE_KEYS}
    if "backend" in out:
        out["backend"] = {
            k: v for k, v in out["backend"].items() if k not in ("wall_ms", "timing_ms")
        }
    return out
