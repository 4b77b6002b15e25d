"""PSNR and SSIM from first principles, plus a manifest-driven harness.

PSNR is ``10 * log10(255^2 / MSE)`` over all samples; identical images are
reported as an infinity sentinel and excluded from aggregate means.  SSIM
is the standard single-scale formulation: 11x11 Gaussian window with
sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255, computed per RGB channel over
fully interior windows and averaged.  The windowed-moment inner loop lives
in :mod:`venus._kernels` (compiled when available, numpy otherwise).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import _kernels
from .errors import ConfigError, MetricError

__all__ = [
    "ImageBuffer",
    "MetricReport",
    "EvalManifest",
    "psnr",
    "ssim",
    "evaluate",
    "SSIM_CONSTANTS",
]

PEAK = 255.0
SSIM_CONSTANTS = {
    "window_size": 11,
    "sigma": 1.5,
    "K1": 0.01,
    "K2": 0.03,
    "L": 255,
    "channels": "rgb-mean",
}

KNOWN_METRICS = ("psnr", "ssim")


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """8-bit RGB image as a (height, width, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise MetricError(f"expected (h, w, 3) uint8 pixels, got {arr.shape} {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise MetricError("image must be at least 1x1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @classmethod
    def from_png_bytes(cls, data: bytes) -> "ImageBuffer":
        import io

        try:
            with Image.open(io.BytesIO(data)) as img:
                return cls(np.asarray(img.convert("RGB"), dtype=np.uint8))
        except MetricError:
            raise
        except Exception as exc:
            raise MetricError(f"cannot decode image: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "ImageBuffer":
        return cls.from_png_bytes(Path(path).read_bytes())

    def to_png_bytes(self) -> bytes:
        import io

        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


def _check_comparable(a: ImageBuffer, b: ImageBuffer) -> None:
    if (a.height, a.width) != (b.height, b.width):
        raise MetricError(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the images are identical."""
    _check_comparable(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean structural similarity over RGB channels, in [-1, 1]."""
    _check_comparable(a, b)
    win = SSIM_CONSTANTS["window_size"]
    if min(a.height, a.width) < win:
        raise MetricError(f"images must be at least {win}x{win} for SSIM")
    taps = _kernels.gaussian_taps(win, SSIM_CONSTANTS["sigma"])
    c1 = (SSIM_CONSTANTS["K1"] * SSIM_CONSTANTS["L"]) ** 2
    c2 = (SSIM_CONSTANTS["K2"] * SSIM_CONSTANTS["L"]) ** 2
    total = 0.0
    for ch in range(3):
        x = np.ascontiguousarray(a.pixels[:, :, ch], dtype=np.float64)
        y = np.ascontiguousarray(b.pixels[:, :, ch], dtype=np.float64)
        mu_x, mu_y, var_x, var_y, cov_xy = _kernels.window_moments(x, y, taps)
        ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)) / (
            (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
        )
        total += float(ssim_map.mean())
    return total / 3.0


_METRIC_FUNCS = {"psnr": psnr, "ssim": ssim}


# ---------------------------------------------------------------------------
# Manifest-driven evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalEntry:
    id: str
    source_path: Path
    edited_path: Path
    gttp: str | None = None


@dataclass(frozen=True)
class EvalManifest:
    """List of (source, edited) pairs to score.

    JSON shape: ``{"entries": [{"id", "source", "edited"} |
    {"id", "run_dir"}]}`` where a run directory stands for its
    ``input.png`` / ``output.png`` pair.
    """

    entries: tuple[EvalEntry, ...]

    @classmethod
    def from_obj(cls, doc: object, base_dir: Path | None = None) -> "EvalManifest":
        if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
            raise ConfigError("manifest must be an object with an 'entries' array")
        base = base_dir or Path(".")
        entries = []
        seen_ids = set()
        for i, raw in enumerate(doc["entries"]):
            if not isinstance(raw, dict) or "id" not in raw:
                raise ConfigError(f"entries[{i}] needs an 'id' field")
            entry_id = str(raw["id"])
            if entry_id in seen_ids:
                raise ConfigError(f"duplicate entry id {entry_id!r}")
            seen_ids.add(entry_id)
            if "run_dir" in raw:
                run_dir = base / raw["run_dir"]
                source, edited = run_dir / "input.png", run_dir / "output.png"
            else:
                try:
                    source, edited = base / raw["source"], base / raw["edited"]
                except KeyError as exc:
                    raise ConfigError(
                        f"entries[{i}] needs 'source'+'edited' or 'run_dir'"
                    ) from exc
            entries.append(
                EvalEntry(id=entry_id, source_path=source, edited_path=edited, gttp=raw.get("gttp"))
            )
        return cls(entries=tuple(entries))

    @classmethod
    def load(cls, path: str | Path) -> "EvalManifest":
        path = Path(path)
        try:
            doc = json.loads(path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
        return cls.from_obj(doc, base_dir=path.parent)


@dataclass
class MetricReport:
    """Per-item scores, aggregate means over scored items, and skip notes."""

    items: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    aggregates: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    constants: dict = field(default_factory=lambda: dict(SSIM_CONSTANTS))

    def as_obj(self) -> dict:
        def jsonable(value):
            return "inf" if value == math.inf else value

        return {
            "items": [
                {k: jsonable(v) for k, v in item.items()} for item in self.items
            ],
            "skipped": list(self.skipped),
            "aggregates": dict(self.aggregates),
            "counts": dict(self.counts),
            "constants": dict(self.constants),
        }


def evaluate(manifest: EvalManifest, metrics: tuple[str, ...] = ("psnr", "ssim")) -> MetricReport:
    """Score every manifest pair; unreadable or mismatched items are skipped
    with a reason, never aborting the batch.  Items are processed in id
    order; PSNR infinities are excluded from the mean and counted."""
    for name in metrics:
        if name not in _METRIC_FUNCS:
            raise ConfigError(f"unknown metric {name!r}; known: {list(KNOWN_METRICS)}")

    report = MetricReport()
    sums: dict[str, float] = {m: 0.0 for m in metrics}
    scored: dict[str, int] = {m: 0 for m in metrics}
    identical = 0

    for entry in sorted(manifest.entries, key=lambda e: e.id):
        try:
            source = ImageBuffer.load(entry.source_path)
            edited = ImageBuffer.load(entry.edited_path)
            row: dict = {"id": entry.id}
            for name in metrics:
                value = _METRIC_FUNCS[name](source, edited)
                row[name if name != "psnr" else "psnr_db"] = value
                if name == "psnr" and value == math.inf:
                    identical += 1
                else:
                    sums[name] += value
                    scored[name] += 1
        except (OSError, MetricError, ConfigError) as exc:
            report.skipped.append({"id": entry.id, "reason": str(exc)})
            continue
        report.items.append(row)

    for name in metrics:
        key = "psnr_db" if name == "psnr" else name
        if scored[name]:
            report.aggregates[f"mean_{key}"] = sums[name] / scored[name]
    report.counts = {
        "total": len(manifest.entries),
        "scored": len(report.items),
        "skipped": len(report.skipped),
        "psnr_identical_excluded": identical,
    }
    return report
