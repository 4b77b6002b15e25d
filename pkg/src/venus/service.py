"""HTTP API over the toolchain, plus static hosting for the companion UI.

One endpoint per pipeline stage so a client can preview graphs, deltas, and
prompts before committing an edit.  Edits are asynchronous: ``POST
/api/edit`` answers 202 with a run id and the client polls ``GET
/api/runs/{id}``.  Responses that have a CLI twin are emitted in the same
canonical JSON encoding so CLI and API output are byte-identical.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import FileResponse, HTMLResponse

from . import __version__
from .backends import EditParams, get_backend
from .config import CliConfig
from .errors import USAGE_ERRORS, ConfigError, RunError, VenusError
from .graph_edit import compute_delta, ops_from_obj
from .mllm_client import AutoEditRequest, ExtractionRequest, MllmClient
from .pipeline import EditJob, load_manifest, run_edit
from .prompt_compiler import TokenBudget, compile_bundle
from .scene_graph import graph_from_obj, graph_to_obj

logger = logging.getLogger(__name__)

EDIT_WORKERS = 2

_PLACEHOLDER_INDEX = """<!doctype html>
<html><head><title>venus</title></head>
<body><h1>venus service</h1>
<p>API is up; see <a href="/api/health">/api/health</a>.
The UI bundle is not installed (build the frontend and copy its dist/ into
the configured static directory).</p></body></html>
"""


def canonical_json(doc: dict) -> Response:
    """Same bytes the CLI writes for the same document."""
    text = json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return Response(content=text, media_type="application/json")


class RunRegistry:
    """Tracks in-flight runs and serializes id allocation."""

    def __init__(self, runs_dir: Path):
        self.runs_dir = runs_dir
        self._lock = threading.Lock()
        self._active: dict[str, str] = {}  # run_id -> pending | running | failed

    def allocate(self) -> str:
        from .pipeline import _new_run_id

        with self._lock:
            run_id = _new_run_id()
            self._active[run_id] = "pending"
            return run_id

    def set(self, run_id: str, status: str) -> None:
        with self._lock:
            self._active[run_id] = status

    def forget(self, run_id: str) -> None:
        with self._lock:
            self._active.pop(run_id, None)

    def status_of(self, run_id: str) -> str | None:
        with self._lock:
            if run_id in self._active:
                return self._active[run_id]
        if (self.runs_dir / run_id / "manifest.json").exists():
            return "done"
        return None

    def all_statuses(self) -> dict[str, str]:
        with self._lock:
            statuses = dict(self._active)
        if self.runs_dir.is_dir():
            for manifest in sorted(self.runs_dir.glob("*/manifest.json")):
                statuses.setdefault(manifest.parent.name, "done")
        return statuses

    def fail_pending(self) -> None:
        with self._lock:
            for run_id, status in self._active.items():
                if status in ("pending", "running"):
                    self._active[run_id] = "failed"


def _body_graph(body: dict, key: str):
    if key not in body:
        raise ConfigError(f"request body is missing {key!r}")
    return graph_from_obj(body[key])


def _body_image(body: dict) -> bytes:
    try:
        return base64.b64decode(body["image"], validate=True)
    except KeyError:
        raise ConfigError("request body is missing 'image'") from None
    except binascii.Error as exc:
        raise ConfigError(f"'image' is not valid base64: {exc}") from exc


def create_app(config: CliConfig, static_dir: str | Path | None = None) -> FastAPI:
    runs_dir = Path(config.runs_dir)
    registry = RunRegistry(runs_dir)
    executor = ThreadPoolExecutor(max_workers=EDIT_WORKERS, thread_name_prefix="edit")

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        executor.shutdown(wait=True, cancel_futures=True)
        registry.fail_pending()

    app = FastAPI(title="venus", version=__version__, lifespan=lifespan)

    @app.exception_handler(VenusError)
    async def venus_error_handler(request: Request, exc: VenusError):
        status = 400 if isinstance(exc, USAGE_ERRORS) else 500
        return Response(
            content=json.dumps({"error": str(exc)}),
            status_code=status,
            media_type="application/json",
        )

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/extract")
    async def api_extract(request: Request):
        body = await request.json()
        image = _body_image(body)
        client = MllmClient(config.mllm_config())
        graph = client.extract_scene_graph(
            ExtractionRequest(image=image, media_type=body.get("media_type", "image/png"))
        )
        return canonical_json(graph_to_obj(graph))

    @app.post("/api/auto-edit")
    async def api_auto_edit(request: Request):
        body = await request.json()
        image = _body_image(body)
        graph = _body_graph(body, "graph")
        instruction = body.get("instruction", "")
        client = MllmClient(config.mllm_config())
        edited = client.auto_edit_graph(
            AutoEditRequest(image=image, graph=graph, instruction=instruction)
        )
        return canonical_json(graph_to_obj(edited))

    @app.post("/api/diff")
    async def api_diff(request: Request):
        body = await request.json()
        delta = compute_delta(_body_graph(body, "source"), _body_graph(body, "target"))
        return canonical_json(delta.as_obj())

    @app.post("/api/compile")
    async def api_compile(request: Request):
        body = await request.json()
        budget_doc = body.get("budget", {})
        budget = TokenBudget(
            max_tokens=budget_doc.get("max_tokens", 77),
            max_relations=budget_doc.get("max_relations", 15),
        )
        bundle = compile_bundle(_body_graph(body, "source"), _body_graph(body, "target"), budget)
        return canonical_json(bundle.as_obj())

    @app.post("/api/edit", status_code=202)
    async def api_edit(request: Request):
        body = await request.json()
        image = _body_image(body)
        params_doc = body.get("params", {})
        params = EditParams(
            steps=params_doc.get("steps", 50),
            skip=params_doc.get("skip", 25),
            guidance_scale=params_doc.get("guidance_scale", 7.5),
            seed=params_doc.get("seed", 42),
            backend=params_doc.get("backend", "mock"),
        )
        get_backend(params.backend, backend_url=config.backend_url)  # fail fast on config
        ops = None
        if "ops" in body:
            ops = tuple(ops_from_obj(body["ops"]))
        # the job holds a temp file path; the run directory keeps its own copy
        tmp = tempfile.NamedTemporaryFile(suffix=".png", delete=False)
        tmp.write(image)
        tmp.close()
        try:
            job = EditJob(
                image_path=Path(tmp.name),
                source_graph=_body_graph(body, "source_graph"),
                target_graph=graph_from_obj(body["target_graph"]) if "target_graph" in body else None,
                ops=ops,
                instruction=body.get("instruction"),
                mode=body.get("mode", "scene_graph"),
                gttp=body.get("gttp"),
                params=params,
                id=registry.allocate(),
            )
        except VenusError:
            Path(tmp.name).unlink(missing_ok=True)
            raise
        mllm_config = config.mllm_config() if job.instruction else None

        def execute():
            registry.set(job.id, "running")
            try:
                run_edit(job, runs_dir, backend_url=config.backend_url, mllm_config=mllm_config)
                registry.forget(job.id)  # manifest on disk is now authoritative
            except RunError:
                registry.forget(job.id)
            except Exception:
                logger.exception("run %s crashed before writing a manifest", job.id)
                registry.set(job.id, "failed")
            finally:
                Path(tmp.name).unlink(missing_ok=True)

        executor.submit(execute)
        return {"run_id": job.id, "status": "pending"}

    @app.get("/api/runs")
    def list_runs():
        statuses = registry.all_statuses()
        return {
            "runs": [
                {"run_id": run_id, "status": status}
                for run_id, status in sorted(statuses.items())
            ]
        }

    @app.get("/api/runs/{run_id}")
    def run_view(run_id: str):
        manifest_path = runs_dir / run_id / "manifest.json"
        if manifest_path.exists():
            manifest = load_manifest(runs_dir / run_id)
            status = "done" if manifest.doc.get("status") == "succeeded" else "failed"
            return canonical_json({"run_id": run_id, "status": status, "manifest": manifest.doc})
        status = registry.status_of(run_id)
        if status is None:
            raise HTTPException(status_code=404, detail=f"no run {run_id!r}")
        return canonical_json({"run_id": run_id, "status": status, "manifest": None})

    @app.get("/api/runs/{run_id}/image/{which}")
    def run_image(run_id: str, which: str):
        if which not in ("input", "output"):
            raise HTTPException(status_code=404, detail="image must be 'input' or 'output'")
        path = runs_dir / run_id / f"{which}.png"
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no {which} image for run {run_id!r}")
        return FileResponse(path, media_type="image/png")

    static_root = Path(static_dir) if static_dir else Path(__file__).parent / "static"
    if static_root.is_dir() and (static_root / "index.html").exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_root, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return _PLACEHOLDER_INDEX

    return app
