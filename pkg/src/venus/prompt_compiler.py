"""Compile graphs into the split source/target prompt bundle.

The target caption is assembled new-content-first: phrases for relations
that exist only in the target graph, then phrases for relations shared with
the source.  The source caption is exactly the background part, so the
inversion side of an editing backend sees only what must be preserved.
Both a relation cap and an estimated-token budget are enforced per caption;
under pressure, trailing (background) phrases drop before new content.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ConfigError
from .graph_edit import split_graphs
from .scene_graph import RelationTriplet, SceneGraph

__all__ = [
    "PromptBundle",
    "TokenBudget",
    "render_phrase",
    "compile_caption",
    "compile_bundle",
    "estimate_tokens",
    "register_token_counter",
]

PHRASE_SEPARATOR = ", "

_WORD = re.compile(r"\w+")


def _approx_tokens(text: str) -> int:
    # word count * 1.3 rounded up, plus 2 for start/end sentinels;
    # punctuation does not count as a word
    words = len(_WORD.findall(text))
    return math.ceil(words * 1.3) + 2


_TOKEN_COUNTERS: dict[str, Callable[[str], int]] = {"approx": _approx_tokens}


def register_token_counter(name: str, counter: Callable[[str], int]) -> None:
    """Register an exact tokenizer under ``name`` (e.g. a CLIP tokenizer)."""
    _TOKEN_COUNTERS[name] = counter


def estimate_tokens(text: str, counter: str = "approx") -> int:
    try:
        return _TOKEN_COUNTERS[counter](text)
    except KeyError:
        raise ConfigError(
            f"unknown token counter {counter!r}; registered: {sorted(_TOKEN_COUNTERS)}"
        ) from None


@dataclass(frozen=True)
class TokenBudget:
    """Per-caption limits; defaults are 77 tokens / 15 relations."""

    max_tokens: int = 77
    max_relations: int = 15
    counter: str = "approx"

    def __post_init__(self):
        if self.max_tokens < 1 or self.max_relations < 1:
            raise ConfigError("token and relation budgets must be >= 1")

    def tokens(self, text: str) -> int:
        return estimate_tokens(text, self.counter)


@dataclass(frozen=True)
class DroppedRelation:
    phrase: str
    reason: str  # relation_cap | token_budget

    def as_dict(self) -> dict:
        return {"phrase": self.phrase, "reason": self.reason}


@dataclass(frozen=True)
class PromptBundle:
    """Compiled captions plus token accounting.

    ``tgt_caption`` is the new-content caption followed by the background
    caption; ``src_caption`` string-equals the background caption.
    """

    src_caption: str
    tgt_new_caption: str
    tgt_bgd_caption: str
    tgt_caption: str
    token_counts: dict[str, int] = field(default_factory=dict)
    truncated: tuple[DroppedRelation, ...] = ()

    def as_obj(self) -> dict:
        return {
            "src": self.src_caption,
            "tgt": self.tgt_caption,
            "tgt_new": self.tgt_new_caption,
            "tgt_bgd": self.tgt_bgd_caption,
            "token_counts": dict(self.token_counts),
            "truncated": [d.as_dict() for d in self.truncated],
        }


def render_phrase(triplet: RelationTriplet, graph: SceneGraph) -> str:
    """``<subject phrase> <predicate> <object phrase>`` with attributes
    folded into the phrases ("brown dog sitting on bench")."""
    return " ".join(
        (
            graph.node(triplet.subject_id).phrase(),
            triplet.predicate,
            graph.node(triplet.object_id).phrase(),
        )
    )


def compile_caption(
    relations: Sequence[RelationTriplet], graph: SceneGraph, budget: TokenBudget
) -> tuple[str, list[DroppedRelation]]:
    """Join rendered phrases with ``", "`` keeping the longest prefix that
    fits both budgets; everything after the cut is reported as dropped."""
    kept: list[str] = []
    dropped: list[DroppedRelation] = []
    cut_reason = None
    for rel in relations:
        phrase = render_phrase(rel, graph)
        if cut_reason is None:
            if len(kept) >= budget.max_relations:
                cut_reason = "relation_cap"
            elif budget.tokens(PHRASE_SEPARATOR.join((*kept, phrase))) > budget.max_tokens:
                cut_reason = "token_budget"
        if cut_reason is None:
            kept.append(phrase)
        else:
            dropped.append(DroppedRelation(phrase=phrase, reason=cut_reason))
    return PHRASE_SEPARATOR.join(kept), dropped


def compile_bundle(
    source: SceneGraph, target: SceneGraph, budget: TokenBudget | None = None
) -> PromptBundle:
    """Split the target against the source and compile the prompt bundle.

    The combined target caption is compiled over the new-content phrases
    followed by the background phrases under a single budget, which makes
    every emitted caption (tgt, tgt_new, tgt_bgd, src) individually fit and
    guarantees background phrases are sacrificed before new content.
    """
    budget = budget or TokenBudget()
    split = split_graphs(source, target)
    ordered = [*split.new_relations, *split.bgd_relations]
    _, dropped = compile_caption(ordered, target, budget)
    kept_count = len(ordered) - len(dropped)

    new_kept = split.new_relations[: min(kept_count, len(split.new_relations))]
    bgd_kept = split.bgd_relations[: max(0, kept_count - len(split.new_relations))]
    tgt_new = PHRASE_SEPARATOR.join(render_phrase(r, target) for r in new_kept)
    tgt_bgd = PHRASE_SEPARATOR.join(render_phrase(r, target) for r in bgd_kept)
    tgt = PHRASE_SEPARATOR.join(part for part in (tgt_new, tgt_bgd) if part)

    return PromptBundle(
        src_caption=tgt_bgd,
        tgt_new_caption=tgt_new,
        tgt_bgd_caption=tgt_bgd,
        tgt_caption=tgt,
        token_counts={
            "src": budget.tokens(tgt_bgd),
            "tgt": budget.tokens(tgt),
            "tgt_new": budget.tokens(tgt_new),
            "tgt_bgd": budget.tokens(tgt_bgd),
        },
        truncated=tuple(dropped),
    )
