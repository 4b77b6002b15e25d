"""Effective configuration: flags > environment > config file > defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .mllm_client import ENV_API_KEY, ENV_BASE_URL, ENV_FIXTURES, ENV_MODEL, MllmEndpointConfig

ENV_RUNS_DIR = "VENUS_RUNS_DIR"
ENV_BACKEND_URL = "VENUS_BACKEND_URL"

DEFAULT_RUNS_DIR = "runs"
DEFAULT_PORT = 8321


@dataclass(frozen=True)
class CliConfig:
    runs_dir: Path
    backend_url: str | None
    port: int
    mllm: dict  # raw values handed to MllmEndpointConfig on first use

    def mllm_config(self, **overrides) -> MllmEndpointConfig:
        values = {k: v for k, v in self.mllm.items() if v is not None}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return MllmEndpointConfig(**values)


def _load_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def resolve_config(
    config_file: str | None = None,
    runs_dir: str | None = None,
    backend_url: str | None = None,
    port: int | None = None,
    fixtures_dir: str | None = None,
) -> CliConfig:
    """Merge config file, environment, and explicit flag values."""
    doc = _load_file(config_file)
    mllm_doc = doc.get("mllm", {})
    if not isinstance(mllm_doc, dict):
        raise ConfigError("config key 'mllm' must be an object")

    def pick(flag, env_name, file_value, default=None):
        if flag is not None:
            return flag
        env_value = os.environ.get(env_name)
        if env_value:
            return env_value
        if file_value is not None:
            return file_value
        return default

    mllm = {
        "base_url": pick(None, ENV_BASE_URL, mllm_doc.get("base_url"), ""),
        "api_key": pick(None, ENV_API_KEY, mllm_doc.get("api_key"), ""),
        "model_name": pick(None, ENV_MODEL, mllm_doc.get("model"), ""),
        "fixtures_dir": pick(fixtures_dir, ENV_FIXTURES, mllm_doc.get("fixtures_dir")),
        "timeout": mllm_doc.get("timeout"),
        "max_retries": mllm_doc.get("max_retries"),
        "max_relations": mllm_doc.get("max_relations"),
    }
    return CliConfig(
        runs_dir=Path(pick(runs_dir, ENV_RUNS_DIR, doc.get("runs_dir"), DEFAULT_RUNS_DIR)),
        backend_url=pick(backend_url, ENV_BACKEND_URL, doc.get("backend_url")),
        port=int(pick(port, "VENUS_PORT", doc.get("port"), DEFAULT_PORT)),
        mllm=mllm,
    )
