#!/usr/bin/env python3
"""Record real toolchain service responses as UI test fixtures.

Run from the repo root with the primary package installed:

    python frontend/scripts/record_fixtures.py

Regenerates frontend/tests/fixtures/*.json by driving the actual FastAPI
service in-process (fixture-mode model client + mock backend), so the UI
tests replay genuine responses rather than hand-written approximations.
"""

from __future__ import annotations

import base64
import copy
import json
import sys
import time
from pathlib import Path

from fastapi.testclient import TestClient

from venus.config import CliConfig
from venus.service import create_app

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
from conftest import make_graph, make_png, write_mllm_fixtures  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def rename(doc: dict, old: str, new: str) -> dict:
    out = copy.deepcopy(doc)
    for node in out["objects"]:
        if node["name"] == old:
            node["name"] = new
    return out


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    workdir = FIXTURES / ".record-tmp"
    workdir.mkdir(exist_ok=True)

    image = make_png(width=64, height=48, seed=77)
    (FIXTURES / "scene_png_base64.txt").write_text(base64.b64encode(image).decode())

    horse = make_graph(("horse", "standing on", "field"))
    write_mllm_fixtures(workdir / "fx", image, extract_graph=horse)

    config = CliConfig(
        runs_dir=workdir / "runs",
        backend_url=None,
        port=0,
        mllm={"fixtures_dir": str(workdir / "fx")},
    )

    with TestClient(create_app(config)) as client:
        extract = client.post(
            "/api/extract", json={"image": base64.b64encode(image).decode()}
        )
        assert extract.status_code == 200, extract.text
        horse_doc = extract.json()
        (FIXTURES / "extract_horse.json").write_bytes(extract.content)

        zebra_doc = rename(horse_doc, "horse", "zebra")
        cat_doc = rename(zebra_doc, "zebra", "cat")

        pairs = {
            "compile_identity.json": (horse_doc, horse_doc),
            "compile_horse_zebra.json": (horse_doc, zebra_doc),
            "compile_zebra_cat.json": (zebra_doc, cat_doc),
        }
        for name, (source, target) in pairs.items():
            response = client.post("/api/compile", json={"source": source, "target": target})
            assert response.status_code == 200, response.text
            (FIXTURES / name).write_bytes(response.content)

        edit = client.post(
            "/api/edit",
            json={
                "image": base64.b64encode(image).decode(),
                "source_graph": horse_doc,
                "target_graph": zebra_doc,
                "params": {"seed": 42},
            },
        )
        assert edit.status_code == 202, edit.text
        (FIXTURES / "edit_accepted.json").write_bytes(edit.content)
        run_id = edit.json()["run_id"]

        for _ in range(100):
            view = client.get(f"/api/runs/{run_id}")
            if view.json()["status"] in ("done", "failed"):
                break
            time.sleep(0.05)
        assert view.json()["status"] == "done", view.text
        (FIXTURES / "run_view_done.json").write_bytes(view.content)

        second = client.post(
            "/api/edit",
            json={
                "image": base64.b64encode(image).decode(),
                "source_graph": zebra_doc,
                "target_graph": cat_doc,
                "params": {"seed": 42},
            },
        )
        assert second.status_code == 202
        (FIXTURES / "edit_accepted_second.json").write_bytes(second.content)
        second_id = second.json()["run_id"]
        for _ in range(100):
            view = client.get(f"/api/runs/{second_id}")
            if view.json()["status"] in ("done", "failed"):
                break
            time.sleep(0.05)
        (FIXTURES / "run_view_done_second.json").write_bytes(view.content)

    manifest = {
        name: json.loads((FIXTURES / name).read_text())
        for name in [
            "extract_horse.json",
            "compile_identity.json",
            "compile_horse_zebra.json",
            "compile_zebra_cat.json",
            "edit_accepted.json",
            "run_view_done.json",
            "edit_accepted_second.json",
            "run_view_done_second.json",
        ]
    }
    print("recorded:", ", ".join(manifest))
    print("run ids:", manifest["edit_accepted.json"]["run_id"], manifest["edit_accepted_second.json"]["run_id"])


if __name__ == "__main__":
    main()
