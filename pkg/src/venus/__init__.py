"""Scene-graph-guided image editing toolchain.

Extract a scene graph from an image, edit it (by hand, by ops, or via a
multimodal model), diff it against the original, compile split
source/target prompts, drive an editing backend, and score the results —
with a deterministic inversion sandbox standing in for a real diffusion
stack so the pipeline's guarantees stay testable offline.
"""

__version__ = "0.1.0"

from .scene_graph import (  # noqa: F401
    CanonicalKey,
    ObjectNode,
    RelationTriplet,
    SceneGraph,
    canonicalize_text,
    extract_graph_from_model_text,
    parse_graph_dsl,
    parse_graph_json,
    serialize_graph,
)
from .graph_edit import (  # noqa: F401
    GraphDelta,
    GraphEditOp,
    GraphSplit,
    apply_delta,
    apply_edits,
    compute_delta,
    split_graphs,
)
from .prompt_compiler import (  # noqa: F401
    PromptBundle,
    TokenBudget,
    compile_bundle,
    compile_caption,
    estimate_tokens,
    render_phrase,
)
