"""Contextual semantic parsing of spatial commands over a blocks world.

The pipeline turns a typed command into a typed semantic tree and a motion
plan: an IOB2 trigram-HMM chunker, a graph-structured-stack shift-reduce
parser with planner-guided pruning, anaphora resolution, and lexical
scoring with plan verification.  A synthetic treebank generator and a
cross-validation harness exercise the whole loop.
"""

from .trees import (
    Feature,
    LosrNode,
    LosrParseError,
    MalformedNodeError,
    deserialize,
    equals_exact,
    serialize,
    strip_ids,
)
from .world import (
    Cell,
    Shape,
    WorldError,
    WorldModel,
    dumps_scene,
    loads_scene,
    pick_up,
    place_at,
    scene_from_json,
    scene_to_json,
    scenes_equal,
    validate,
)
from .planner import (
    Grounding,
    Plan,
    PlannerError,
    execute_sequence,
    ground,
    grounding_map,
    resolve_destination,
    validate_action,
)
from .chunker import Chunk, ChunkError, HmmModel, chunk, extract_chunks, tag, train
from .lexicon import (
    EllipsisRules,
    Grammar,
    Lexicon,
    OovError,
    induce_ellipsis,
    induce_grammar,
    induce_lexicon,
)
from .gss import EXHAUSTIVE, PRUNED, NoParseError, ParseForest, parse
from .postprocess import (
    AllParsesRejectedError,
    AnaphoraError,
    NoUniqueParseError,
    resolve_anaphora,
    verify_and_score,
)
from .corpus import (
    Artifacts,
    TreebankRecord,
    cross_validate,
    generate_corpus,
    load_artifacts,
    load_treebank,
    run_command,
    save_artifacts,
    save_treebank,
    tokenize,
    train_artifacts,
)

__version__ = "0.1.0"

__all__ = [
    "Feature", "LosrNode", "LosrParseError", "MalformedNodeError",
    "deserialize", "equals_exact", "serialize", "strip_ids",
    "Cell", "Shape", "WorldError", "WorldModel", "dumps_scene", "loads_scene",
    "pick_up", "place_at", "scene_from_json", "scene_to_json", "scenes_equal",
    "validate",
    "Grounding", "Plan", "PlannerError", "execute_sequence", "ground",
    "grounding_map", "resolve_destination", "validate_action",
    "Chunk", "ChunkError", "HmmModel", "chunk", "extract_chunks", "tag", "train",
    "EllipsisRules", "Grammar", "Lexicon", "OovError",
    "induce_ellipsis", "induce_grammar", "induce_lexicon",
    "EXHAUSTIVE", "PRUNED", "NoParseError", "ParseForest", "parse",
    "AllParsesRejectedError", "AnaphoraError", "NoUniqueParseError",
    "resolve_anaphora", "verify_and_score",
    "Artifacts", "TreebankRecord", "cross_validate", "generate_corpus",
    "load_artifacts", "load_treebank", "run_command", "save_artifacts",
    "save_treebank", "tokenize", "train_artifacts",
    "__version__",
]
