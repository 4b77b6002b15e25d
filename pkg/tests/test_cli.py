from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from venus.cli import main
from venus.scene_graph import serialize_graph

from .conftest import make_png, write_mllm_fixtures


@pytest.fixture
def runner():
    return CliRunner()


def write_graph(path: Path, graph) -> Path:
    path.write_bytes(serialize_graph(graph, "json"))
    return path


@pytest.fixture
def graph_files(tmp_path, horse_graph, zebra_graph):
    return (
        write_graph(tmp_path / "horse.json", horse_graph),
        write_graph(tmp_path / "zebra.json", zebra_graph),
    )


class TestCompile:
    def test_identical_graphs(self, runner, tmp_path, horse_graph):
        path = write_graph(tmp_path / "g.json", horse_graph)
        out = tmp_path / "bundle.json"
        result = runner.invoke(main, ["compile", str(path), str(path), "--out", str(out)])
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        assert doc["tgt_new"] == ""
        assert doc["src"] == "horse standing on field"

    def test_horse_to_zebra(self, runner, tmp_path, graph_files):
        source, target = graph_files
        out = tmp_path / "bundle.json"
        result = runner.invoke(main, ["compile", str(source), str(target), "--out", str(out)])
        assert result.exit_code == 0
        assert json.loads(out.read_text())["tgt_new"] == "zebra standing on field"

    def test_truncation_reported(self, runner, tmp_path):
        from .conftest import make_graph

        source = make_graph(("a", "by", "b"))
        triplets = [(f"x{i}", "near", f"y{i}") for i in range(20)]
        target = make_graph(*triplets)
        src_path = write_graph(tmp_path / "s.json", source)
        tgt_path = write_graph(tmp_path / "t.json", target)
        out = tmp_path / "bundle.json"
        result = runner.invoke(main, ["compile", str(src_path), str(tgt_path), "--out", str(out)])
        assert result.exit_code == 0
        assert len(json.loads(out.read_text())["truncated"]) == 5

    def test_parse_error_is_exit_2(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        result = runner.invoke(main, ["compile", str(bad), str(bad)])
        assert result.exit_code == 2
        assert "error" in result.output or result.stderr


class TestDiff:
    def test_delta_file(self, runner, tmp_path, graph_files):
        source, target = graph_files
        out = tmp_path / "delta.json"
        result = runner.invoke(main, ["diff", str(source), str(target), "--out", str(out)])
        assert result.exit_code == 0
        doc = json.loads(out.read_text())
        assert doc["added"] == [
            {"subject": "zebra", "predicate": "standing on", "object": "field"}
        ]
        assert doc["removed"] == [
            {"subject": "horse", "predicate": "standing on", "object": "field"}
        ]


class TestExtract:
    def test_fixture_mode(self, runner, tmp_path, dog_bench_graph):
        image = make_png(seed=11)
        image_path = tmp_path / "scene.png"
        image_path.write_bytes(image)
        fixtures = write_mllm_fixtures(tmp_path / "fx", image, extract_graph=dog_bench_graph)
        out = tmp_path / "graph.json"
        result = runner.invoke(
            main,
            ["extract", str(image_path), "--out", str(out), "--fixtures", str(fixtures)],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        assert len(doc["relations"]) == 1

    def test_unreadable_image_is_exit_2(self, runner, tmp_path):
        result = runner.invoke(
            main, ["extract", str(tmp_path / "nope.png"), "--fixtures", str(tmp_path)]
        )
        assert result.exit_code == 2
        assert "nope.png" in result.output

    def test_missing_endpoint_config_is_exit_2(self, runner, tmp_path, monkeypatch):
        for var in ("VENUS_MLLM_BASE_URL", "VENUS_MLLM_FIXTURES"):
            monkeypatch.delenv(var, raising=False)
        image_path = tmp_path / "scene.png"
        image_path.write_bytes(make_png())
        result = runner.invoke(main, ["extract", str(image_path)])
        assert result.exit_code == 2


class TestEdit:
    def test_mock_end_to_end(self, runner, tmp_path, graph_files, png_file):
        source, target = graph_files
        runs = tmp_path / "runs"
        result = runner.invoke(
            main,
            [
                "edit",
                "--image", str(png_file),
                "--source-graph", str(source),
                "--target-graph", str(target),
                "--runs-dir", str(runs),
            ],
        )
        assert result.exit_code == 0, result.output
        run_id = result.output.strip().splitlines()[0]
        assert (runs / run_id / "manifest.json").exists()
        assert (runs / run_id / "output.png").exists()

    def test_gttp_mode_without_gttp_is_exit_2(self, runner, tmp_path, graph_files, png_file):
        source, _ = graph_files
        result = runner.invoke(
            main,
            [
                "edit",
                "--image", str(png_file),
                "--source-graph", str(source),
                "--mode", "text_gttp",
                "--runs-dir", str(tmp_path / "runs"),
            ],
        )
        assert result.exit_code == 2

    def test_bad_skip_is_exit_2(self, runner, tmp_path, graph_files, png_file):
        source, target = graph_files
        result = runner.invoke(
            main,
            [
                "edit",
                "--image", str(png_file),
                "--source-graph", str(source),
                "--target-graph", str(target),
                "--skip", "60",
                "--steps", "50",
                "--runs-dir", str(tmp_path / "runs"),
            ],
        )
        assert result.exit_code == 2

    def test_backend_failure_is_exit_1(self, runner, tmp_path, graph_files, png_file):
        source, target = graph_files
        result = runner.invoke(
            main,
            [
                "edit",
                "--image", str(png_file),
                "--source-graph", str(source),
                "--target-graph", str(target),
                "--backend", "remote",
                "--backend-url", "http://127.0.0.1:1",
                "--runs-dir", str(tmp_path / "runs"),
            ],
        )
        assert result.exit_code == 1
        assert "backend" in result.output


class TestEval:
    def test_report(self, runner, tmp_path):
        img = make_png(32, 32, seed=1)
        (tmp_path / "a.png").write_bytes(img)
        (tmp_path / "b.png").write_bytes(make_png(32, 32, seed=2))
        manifest = {"entries": [{"id": "x", "source": "a.png", "edited": "b.png"}]}
        (tmp_path / "eval.json").write_text(json.dumps(manifest))
        out = tmp_path / "report.json"
        result = runner.invoke(
            main,
            ["eval", "--manifest", str(tmp_path / "eval.json"), "--metrics", "psnr,ssim", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        assert doc["counts"]["scored"] == 1
        assert "psnr_db" in doc["items"][0] and "ssim" in doc["items"][0]

    def test_unknown_metric_is_exit_2(self, runner, tmp_path):
        (tmp_path / "eval.json").write_text(json.dumps({"entries": []}))
        result = runner.invoke(
            main, ["eval", "--manifest", str(tmp_path / "eval.json"), "--metrics", "lpips"]
        )
        assert result.exit_code == 2


class TestToyDemo:
    def test_report_shape_and_values(self, runner):
        result = runner.invoke(
            main,
            ["toy-demo", "--src", "dog on bench", "--tgt", "cat on bench", "--steps", "20", "--skip", "10"],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(result.output)
        assert doc["recon_error"] < 1e-5
        assert doc["changed_dims"]
        assert doc["max_change"] > 0
        scales = [entry["scale"] for entry in doc["per_scale_deviation"]]
        assert scales == [0.0, 1.0, 2.5, 5.0, 7.5]
        deviations = [entry["deviation"] for entry in doc["per_scale_deviation"]]
        assert deviations == sorted(deviations)

    def test_null_edit(self, runner):
        result = runner.invoke(main, ["toy-demo", "--src", "same caption", "--tgt", "same caption"])
        doc = json.loads(result.output)
        assert doc["changed_dims"] == []
        assert doc["max_change"] < 1e-9
