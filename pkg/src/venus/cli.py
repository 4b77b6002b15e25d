"""Command-line interface.

Exit codes: 0 success, 1 runtime failure (endpoint, backend, run), 2
usage / configuration / validation errors.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import toy_inversion as toy
from .backends import EditParams
from .config import resolve_config
from .errors import USAGE_ERRORS, ConfigError, VenusError
from .graph_edit import compute_delta, ops_from_obj
from .metrics_eval import EvalManifest, evaluate
from .mllm_client import ExtractionRequest, MllmClient
from .pipeline import EditJob, run_edit
from .prompt_compiler import TokenBudget, compile_bundle
from .scene_graph import parse_graph_dsl, parse_graph_json, serialize_graph

def _fail(exc: Exception, code: int):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def handles_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except USAGE_ERRORS as exc:
            _fail(exc, 2)
        except VenusError as exc:
            _fail(exc, 1)

    return wrapper


def _load_graph(path: str):
    raw = Path(path).read_bytes()
    if path.endswith(".dsl") or path.endswith(".sg"):
        return parse_graph_dsl(raw.decode("utf-8"))
    return parse_graph_json(raw)


def _read_graph_arg(path: str):
    try:
        return _load_graph(path)
    except OSError as exc:
        raise ConfigError(f"cannot read graph {path}: {exc}") from exc


def _write_json(path: str | None, doc: dict) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@click.group()
def main():
    """Scene-graph-guided image editing toolchain."""


@main.command()
@click.argument("image", type=click.Path())
@click.option("--out", type=click.Path(), help="Graph JSON output path (default: stdout).")
@click.option("--config", "config_file", type=click.Path(), help="Config file (JSON).")
@click.option("--fixtures", "fixtures_dir", type=click.Path(), help="Offline fixture directory.")
@handles_errors
def extract(image, out, config_file, fixtures_dir):
    """Extract a scene graph from IMAGE via the configured model."""
    config = resolve_config(config_file=config_file, fixtures_dir=fixtures_dir)
    try:
        image_bytes = Path(image).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read image {image}: {exc}") from exc
    media_type = "image/jpeg" if image.lower().endswith((".jpg", ".jpeg")) else "image/png"
    client = MllmClient(config.mllm_config())
    graph = client.extract_scene_graph(ExtractionRequest(image=image_bytes, media_type=media_type))
    data = serialize_graph(graph, "json")
    if out:
        Path(out).write_bytes(data + b"\n")
    else:
        click.echo(data.decode("utf-8"))
    click.echo(f"extracted {len(graph.relations)} relations, {len(graph.objects)} objects", err=True)


@main.command("auto-edit")
@click.argument("image", type=click.Path())
@click.argument("graph", type=click.Path())
@click.option("--instruction", required=True, help="Natural-language edit instruction.")
@click.option("--out", type=click.Path(), help="Edited graph output path (default: stdout).")
@click.option("--config", "config_file", type=click.Path())
@click.option("--fixtures", "fixtures_dir", type=click.Path())
@handles_errors
def auto_edit(image, graph, instruction, out, config_file, fixtures_dir):
    """Let the model apply INSTRUCTION to GRAPH, grounded in IMAGE."""
    from .mllm_client import AutoEditRequest

    config = resolve_config(config_file=config_file, fixtures_dir=fixtures_dir)
    try:
        image_bytes = Path(image).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read image {image}: {exc}") from exc
    source = _read_graph_arg(graph)
    client = MllmClient(config.mllm_config())
    edited = client.auto_edit_graph(
        AutoEditRequest(image=image_bytes, graph=source, instruction=instruction)
    )
    data = serialize_graph(edited, "json")
    if out:
        Path(out).write_bytes(data + b"\n")
    else:
        click.echo(data.decode("utf-8"))


@main.command()
@click.argument("source", type=click.Path())
@click.argument("target", type=click.Path())
@click.option("--out", type=click.Path(), help="Delta JSON output path (default: stdout).")
@handles_errors
def diff(source, target, out):
    """Relation-level delta between two graph files."""
    delta = compute_delta(_read_graph_arg(source), _read_graph_arg(target))
    _write_json(out, delta.as_obj())


@main.command()
@click.argument("source", type=click.Path())
@click.argument("target", type=click.Path())
@click.option("--out", type=click.Path(), help="Bundle JSON output path (default: stdout).")
@click.option("--max-tokens", default=77, show_default=True)
@click.option("--max-relations", default=15, show_default=True)
@handles_errors
def compile(source, target, out, max_tokens, max_relations):
    """Compile the split prompt bundle for a graph pair."""
    bundle = compile_bundle(
        _read_graph_arg(source),
        _read_graph_arg(target),
        TokenBudget(max_tokens=max_tokens, max_relations=max_relations),
    )
    _write_json(out, bundle.as_obj())
    click.echo(f"src: {bundle.src_caption}", err=True)
    click.echo(f"tgt: {bundle.tgt_caption}", err=True)


@main.command()
@click.option("--image", required=True, type=click.Path())
@click.option("--source-graph", "source_graph", required=True, type=click.Path())
@click.option("--target-graph", "target_graph", type=click.Path())
@click.option("--ops", "ops_path", type=click.Path(), help="JSON array of edit ops.")
@click.option("--instruction", help="Derive the target graph via the model.")
@click.option("--mode", type=click.Choice(["scene_graph", "text_gttp"]), default="scene_graph")
@click.option("--gttp", help="Ground-truth target prompt (text_gttp mode).")
@click.option("--backend", default="mock", show_default=True)
@click.option("--steps", default=50, show_default=True)
@click.option("--skip", default=25, show_default=True)
@click.option("--scale", default=7.5, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--runs-dir", type=click.Path())
@click.option("--backend-url")
@click.option("--config", "config_file", type=click.Path())
@click.option("--fixtures", "fixtures_dir", type=click.Path())
@handles_errors
def edit(
    image,
    source_graph,
    target_graph,
    ops_path,
    instruction,
    mode,
    gttp,
    backend,
    steps,
    skip,
    scale,
    seed,
    runs_dir,
    backend_url,
    config_file,
    fixtures_dir,
):
    """Run one edit end to end and persist the run directory."""
    config = resolve_config(
        config_file=config_file,
        runs_dir=runs_dir,
        backend_url=backend_url,
        fixtures_dir=fixtures_dir,
    )
    params = EditParams(steps=steps, skip=skip, guidance_scale=scale, seed=seed, backend=backend)
    ops = None
    if ops_path:
        try:
            ops = tuple(ops_from_obj(json.loads(Path(ops_path).read_text("utf-8"))))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read ops file {ops_path}: {exc}") from exc
    job = EditJob(
        image_path=Path(image),
        source_graph=_read_graph_arg(source_graph),
        target_graph=_read_graph_arg(target_graph) if target_graph else None,
        ops=ops,
        instruction=instruction,
        mode=mode,
        gttp=gttp,
        params=params,
    )
    mllm_config = config.mllm_config() if instruction else None
    manifest = run_edit(
        job, config.runs_dir, backend_url=config.backend_url, mllm_config=mllm_config
    )
    click.echo(manifest.run_id)
    click.echo(str(manifest.path), err=True)


@main.command("eval")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--metrics", default="psnr,ssim", show_default=True)
@click.option("--out", type=click.Path(), help="Report JSON output path (default: stdout).")
@handles_errors
def eval_command(manifest_path, metrics, out):
    """Score (source, edited) image pairs listed in an eval manifest."""
    names = tuple(m.strip() for m in metrics.split(",") if m.strip())
    report = evaluate(EvalManifest.load(manifest_path), names)
    _write_json(out, report.as_obj())
    counts = report.counts
    click.echo(f"scored {counts['scored']}/{counts['total']} ({counts['skipped']} skipped)", err=True)


@main.command("toy-demo")
@click.option("--dim", default=toy.DEFAULT_DIM, show_default=True)
@click.option("--steps", default=toy.DEFAULT_STEPS, show_default=True)
@click.option("--skip", default=toy.DEFAULT_SKIP, show_default=True)
@click.option("--scale", default=toy.DEFAULT_SCALE, show_default=True)
@click.option("--src", default="", help="Source caption.")
@click.option("--tgt", default="", help="Target caption.")
@click.option("--seed", default=toy.DEFAULT_SEED, show_default=True)
@handles_errors
def toy_demo(dim, steps, skip, scale, src, tgt, seed):
    """Exercise the inversion sandbox and report reconstruction/edit stats."""
    denoiser = toy.ToyDenoiser.seeded(dim=dim, seed=seed, diagonal=True)
    schedule = toy.NoiseSchedule.cosine(steps=steps, skip=skip)
    rng = np.random.default_rng(seed)
    z0 = toy.LatentState(values=rng.standard_normal(dim), step=0)

    trajectory = toy.invert(denoiser, schedule, z0, src, scale)
    recon = toy.edit(denoiser, schedule, trajectory, toy.GuidanceConfig(scale, src, src))
    edited = toy.edit(denoiser, schedule, trajectory, toy.GuidanceConfig(scale, src, tgt))
    change = np.abs(edited.values - recon.values)

    per_scale = []
    for s in (0.0, 1.0, 2.5, 5.0, 7.5):
        traj_s = toy.invert(denoiser, schedule, z0, src, s)
        recon_s = toy.edit(denoiser, schedule, traj_s, toy.GuidanceConfig(s, src, src))
        edited_s = toy.edit(denoiser, schedule, traj_s, toy.GuidanceConfig(s, src, tgt))
        per_scale.append(
            {"scale": s, "deviation": float(np.max(np.abs(edited_s.values - recon_s.values)))}
        )

    click.echo(
        json.dumps(
            {
                "recon_error": float(np.max(np.abs(recon.values - z0.values))),
                "changed_dims": [int(i) for i in np.flatnonzero(change > 1e-5)],
                "max_change": float(np.max(change)),
                "per_scale_deviation": per_scale,
            },
            indent=2,
        )
    )


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--runs-dir", type=click.Path())
@click.option("--backend-url")
@click.option("--config", "config_file", type=click.Path())
@click.option("--fixtures", "fixtures_dir", type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@handles_errors
def serve(port, runs_dir, backend_url, config_file, fixtures_dir, host):
    """Serve the HTTP API and the bundled UI."""
    import uvicorn

    from .service import create_app

    config = resolve_config(
        config_file=config_file,
        runs_dir=runs_dir,
        backend_url=backend_url,
        port=port,
        fixtures_dir=fixtures_dir,
    )
    uvicorn.run(create_app(config), host=host, port=config.port)


if __name__ == "__main__":
    main()
