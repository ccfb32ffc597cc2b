"""Correction of erroneous knowledge-base assertions.

Given assertions flagged as wrong (literal objects standing in for
entities, or confused entity objects), the pipeline proposes a replacement
entity or reports that none exists, by combining related-entity retrieval,
link prediction over a task sub-graph, and validation against soft
constraints mined from the whole store.
"""

from .constraints import (
    CardinalityConstraint,
    ConsistencyParams,
    RangeConstraint,
    check_consistency,
    combine,
    mine_cardinality,
    mine_range,
)
from .decide import CorrectionResult, ScoredCandidate, decide, decide_all, ensemble, normalize_scores
from .embeddings import (
    DISTMULT,
    TRANSE,
    EmbeddingModel,
    TrainConfig,
    distmult_score,
    likelihood,
    train,
    transe_score,
)
from .features import PathVocabulary, build_vocabulary, encode, node_feature, path_features
from .kb import (
    ENTITY,
    LITERAL,
    KnowledgeBase,
    Term,
    Triple,
    entity,
    literal,
    load_kb,
)
from .lexical import LexicalIndex, RemoteLookup, build_lexical_index, lookup
from .metrics import Metrics, correction_metrics, ranking_metrics, recall_at_k, tau_sweep
from .mlp import MlpModel, mlp_score, train_mlp
from .pipeline import Pipeline, PipelineConfig, parse_config_file, run_pipeline
from .relatedness import (
    CandidateList,
    TargetAssertion,
    WordVecModel,
    candidates_for_target,
    edit_candidates,
    edit_distance,
    lookup_star,
    normalize_phrase,
    phrase_vector,
    sub_phrases,
    wordvec_candidates,
)
from .subgraph import SampleSet, SubGraph, build_samples, extract_subgraph, sample_negatives, sample_positives
from .synth import SynthConfig, generate_synthetic_case

__version__ = "0.1.0"
