"""Knowledge-graph completion via prompt-scored candidate ranking."""

from .graph import (
    Graph,
    QueryBlock,
    SplitBundle,
    Triple,
    TripleFileError,
    check_inductive_disjointness,
    linearize,
    load_graph,
    load_query_blocks,
    sample_relation_support,
)
from .neighbors import CachedEmbedder, HashEmbedder, NeighborSet, cosine, select_neighbors
from .paths import ReasoningPath, extract_paths, filter_paths, path_degree
from .pipeline import PipelineContext
from .prompts import PromptInstance, build_sr_prompt, build_tar_prompt
from .scoring import (
    ConstantScorer,
    OracleScorer,
    RandomScorer,
    RemoteScorer,
    ensemble_score,
    rank_block,
)
from .evaluate import EvalReport, hits_at, mrr, run_evaluation
from .sftgen import build_instruction_corpus, gen_negatives

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "QueryBlock",
    "SplitBundle",
    "Triple",
    "TripleFileError",
    "check_inductive_disjointness",
    "linearize",
    "load_graph",
    "load_query_blocks",
    "sample_relation_support",
    "CachedEmbedder",
    "HashEmbedder",
    "NeighborSet",
    "cosine",
    "select_neighbors",
    "ReasoningPath",
    "extract_paths",
    "filter_paths",
    "path_degree",
    "PipelineContext",
    "PromptInstance",
    "build_sr_prompt",
    "build_tar_prompt",
    "ConstantScorer",
    "OracleScorer",
    "RandomScorer",
    "RemoteScorer",
    "ensemble_score",
    "rank_block",
    "EvalReport",
    "hits_at",
    "mrr",
    "run_evaluation",
    "build_instruction_corpus",
    "gen_negatives",
]
