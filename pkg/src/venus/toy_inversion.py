"""Deterministic noise-inversion sandbox.

A desk-scale stand-in for a diffusion editing backend: a fixed-dimension
latent vector is pushed up a DDIM-style noising recurrence under the source
caption, then brought back down under the target caption, with
classifier-free guidance applied in both phases.  The denoiser is affine
(stable linear map plus a sparse caption embedding), so the editing phase
can invert each forward step *exactly* via a linear solve — making
"a null edit reconstructs the input" and "an edit only moves the dimensions
its words touch" numerically assertable properties instead of vibes.

Conventions: step 0 is the clean state, step T the noisiest;
``alphas_bar`` is the cumulative signal fraction, strictly decreasing from
1.  Editing starts ``skip`` steps below T, i.e. the noisiest part of the
inversion trajectory is skipped.  The same guidance scale is used in both
phases.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericOverflowError
from .scene_graph import canonicalize_text

__all__ = [
    "LatentState",
    "NoiseSchedule",
    "ToyDenoiser",
    "GuidanceConfig",
    "cfg_combine",
    "predict_noise",
    "invert",
    "edit",
]

DEFAULT_DIM = 64
DEFAULT_STEPS = 50
DEFAULT_SKIP = 25
DEFAULT_SCALE = 7.5
DEFAULT_SEED = 42

_EMBED_INDICES_PER_WORD = 3
_ALPHA_FLOOR = 1e-4


def _frozen(values: np.ndarray) -> np.ndarray:
    out = np.asarray(values, dtype=np.float64).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LatentState:
    """Latent vector at one timestep of the recurrence."""

    values: np.ndarray
    step: int

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if not np.all(np.isfinite(self.values)):
            raise NumericOverflowError("latent contains non-finite entries", step=self.step)
        if self.step < 0:
            raise ConfigError(f"negative step {self.step}")


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Cumulative signal schedule with boundary convention alphas_bar[0] = 1."""

    steps: int
    skip: int
    alphas_bar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alphas_bar", _frozen(self.alphas_bar))
        if self.alphas_bar.shape != (self.steps + 1,):
            raise ConfigError("schedule needs steps + 1 alpha_bar values")
        if not math.isclose(float(self.alphas_bar[0]), 1.0):
            raise ConfigError("alphas_bar[0] must be 1")
        if np.any(np.diff(self.alphas_bar) >= 0) or np.any(self.alphas_bar <= 0):
            raise ConfigError("alphas_bar must be strictly decreasing within (0, 1]")
        if not 0 <= self.skip < self.steps:
            raise ConfigError(f"skip must satisfy 0 <= skip < steps, got {self.skip}/{self.steps}")

    @classmethod
    def cosine(cls, steps: int = DEFAULT_STEPS, skip: int = DEFAULT_SKIP) -> "NoiseSchedule":
        """Squared-cosine schedule clipped to [1e-4, 1]."""
        t = np.arange(steps + 1, dtype=np.float64) / steps
        f = np.cos((t + 0.008) / 1.008 * math.pi / 2.0) ** 2
        alphas = np.clip(f / f[0], _ALPHA_FLOOR, 1.0)
        alphas[0] = 1.0
        return cls(steps=steps, skip=skip, alphas_bar=alphas)

    def signal(self, t: int) -> float:
        """sqrt(alpha_bar_t): coefficient of the clean component."""
        return math.sqrt(float(self.alphas_bar[t]))

    def noise(self, t: int) -> float:
        """sqrt(1 - alpha_bar_t): coefficient of the predicted noise."""
        return math.sqrt(1.0 - float(self.alphas_bar[t]))


def _word_embedding(word: str, dim: int) -> np.ndarray:
    """Deterministic sparse vector for one canonical word.

    The word's sha256 digest seeds the index set and signed magnitudes, so
    the activation pattern is stable across processes and runs.
    """
    digest = hashlib.sha256(word.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    idx = rng.choice(dim, size=min(_EMBED_INDICES_PER_WORD, dim), replace=False)
    vec = np.zeros(dim)
    vec[idx] = rng.uniform(0.5, 1.5, size=idx.size) * rng.choice([-1.0, 1.0], size=idx.size)
    return vec


@dataclass(frozen=True, eq=False)
class ToyDenoiser:
    """Affine noise predictor: eps(z, caption) = A @ z + embed(caption)."""

    A: np.ndarray
    dim: int = DEFAULT_DIM
    _embed_cache: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A))
        if self.A.shape != (self.dim, self.dim):
            raise ConfigError(f"A must be {self.dim}x{self.dim}, got {self.A.shape}")

    @classmethod
    def seeded(
        cls, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED, diagonal: bool = False
    ) -> "ToyDenoiser":
        """Random stable map with spectral norm 0.05 (diagonal on request)."""
        rng = np.random.default_rng(seed)
        if diagonal:
            a = np.diag(rng.uniform(-1.0, 1.0, size=dim))
        else:
            a = rng.standard_normal((dim, dim))
        a *= 0.05 / max(np.linalg.norm(a, ord=2), 1e-12)
        return cls(A=a, dim=dim)

    def prompt_embed(self, caption: str) -> np.ndarray:
        """Sum of per-word sparse embeddings; the empty caption maps to 0."""
        canon = canonicalize_text(caption)
        if canon not in self._embed_cache:
            vec = np.zeros(self.dim)
            for word in canon.split(" ") if canon else ():
                vec += _word_embedding(word, self.dim)
            vec.setflags(write=False)
            self._embed_cache[canon] = vec
        return self._embed_cache[canon]

    def word_support(self, word: str) -> np.ndarray:
        """Indices a single word activates (for locality assertions)."""
        return np.flatnonzero(_word_embedding(canonicalize_text(word), self.dim))


@dataclass(frozen=True)
class GuidanceConfig:
    """Guidance scale plus the two captions steering an edit."""

    scale: float = DEFAULT_SCALE
    src_caption: str = ""
    tgt_caption: str = ""

    def __post_init__(self):
        if not math.isfinite(self.scale) or self.scale < 0:
            raise ConfigError(f"guidance scale must be finite and >= 0, got {self.scale}")


def cfg_combine(eps_null: np.ndarray, eps_text: np.ndarray, scale: float) -> np.ndarray:
    """Classifier-free guidance: eps_null + scale * (eps_text - eps_null)."""
    eps_null = np.asarray(eps_null, dtype=np.float64)
    eps_text = np.asarray(eps_text, dtype=np.float64)
    if eps_null.shape != eps_text.shape:
        raise ConfigError(
            f"prediction shapes differ: {eps_null.shape} vs {eps_text.shape}"
        )
    if scale == 1.0:
        # the difference form is 1 ulp off here; the identity must hold exactly
        return eps_text.copy()
    return eps_null + scale * (eps_text - eps_null)


def predict_noise(denoiser: ToyDenoiser, state: LatentState, caption: str) -> np.ndarray:
    return denoiser.A @ state.values + denoiser.prompt_embed(caption)


def _forward_coeffs(schedule: NoiseSchedule, t: int) -> tuple[float, float]:
    """(ratio, c) of the step z_t = ratio * z_{t-1} + c * eps."""
    ratio = schedule.signal(t) / schedule.signal(t - 1)
    c = schedule.noise(t) - ratio * schedule.noise(t - 1)
    return ratio, c


def invert(
    denoiser: ToyDenoiser,
    schedule: NoiseSchedule,
    z0: LatentState,
    src_caption: str,
    scale: float = DEFAULT_SCALE,
) -> list[LatentState]:
    """Run the noising recurrence from step 0 to step T and return the full
    trajectory [z_0 ... z_T].

    Each step rewrites the DDIM update toward higher noise, with the
    guided prediction evaluated at the current (lower-noise) state:

        z_t = (a_t / a_{t-1}) * (z_{t-1} - b_{t-1} * eps) + b_t * eps

    where a = sqrt(alpha_bar), b = sqrt(1 - alpha_bar).
    """
    if z0.step != 0:
        raise ConfigError(f"inversion must start at step 0, got {z0.step}")
    if z0.values.shape != (denoiser.dim,):
        raise ConfigError(f"latent dimension {z0.values.shape} != denoiser dim {denoiser.dim}")
    trajectory = [z0]
    z = z0.values
    for t in range(1, schedule.steps + 1):
        state = trajectory[-1]
        eps = cfg_combine(
            predict_noise(denoiser, state, ""),
            predict_noise(denoiser, state, src_caption),
            scale,
        )
        ratio, c = _forward_coeffs(schedule, t)
        z = ratio * z + c * eps
        if not np.all(np.isfinite(z)):
            raise NumericOverflowError(f"inversion diverged at step {t}", step=t)
        trajectory.append(LatentState(values=z, step=t))
    return trajectory


def edit(
    denoiser: ToyDenoiser,
    schedule: NoiseSchedule,
    trajectory: list[LatentState],
    cfg: GuidanceConfig,
) -> LatentState:
    """Denoise from trajectory[T - skip] back to step 0 under the target
    caption and return the edited clean state.

    Each reverse step is the exact algebraic inverse of the forward update.
    Because the denoiser is affine, the forward step is

        z_t = M_t @ z_{t-1} + c_t * scale * embed(caption),
        M_t = (a_t / a_{t-1}) * I + c_t * A,

    so stepping down solves M_t @ z_{t-1} = z_t - c_t * scale * embed(tgt).
    With tgt == src this reproduces the inversion's input exactly (up to
    float round-off); with a different caption, only the embedding
    difference is injected into the otherwise identical recurrence.
    """
    if len(trajectory) != schedule.steps + 1:
        raise ConfigError(
            f"trajectory has {len(trajectory)} states; schedule expects {schedule.steps + 1}"
        )
    start = schedule.steps - schedule.skip
    z = trajectory[start].values
    embed = denoiser.prompt_embed(cfg.tgt_caption)
    identity = np.eye(denoiser.dim)
    for t in range(start, 0, -1):
        ratio, c = _forward_coeffs(schedule, t)
        z = np.linalg.solve(ratio * identity + c * denoiser.A, z - c * cfg.scale * embed)
        if not np.all(np.isfinite(z)):
            raise NumericOverflowError(f"editing diverged at step {t}", step=t)
    return LatentState(values=z, step=0)
