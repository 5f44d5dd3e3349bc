"""Beam reranking toolkit for semantic parsing.

Ingests beam candidates from any generator, processes candidate logical forms
into text, scores candidate/utterance similarity with a pluggable scorer,
applies threshold-gated reranking, and evaluates accuracy and oracle metrics.
"""

from .data import BeamCandidate, DatasetExample, MissingBeamError, MissingResultError, Utterance
from .evaluate import EvalReport, oracle_at_k, report, top1_accuracy
from .lf import (
    FORMALISMS,
    FUNQL,
    LAMBDA,
    OVERNIGHT,
    FormalismMismatchError,
    LfSyntaxError,
    LfTree,
    NormalForm,
    UnboundVariableError,
    lf_equal,
    normal_text,
    normalize,
    parse,
    serialize,
)
from .pairgen import PairExample, generate_dataset, generate_pairs
from .preprocess import (
    EntityLexicon,
    GrammarError,
    MissingResourceError,
    ProcessedCandidate,
    TemplateGrammar,
    expand_template,
    naturalize,
    process,
    process_raw,
)
from .rerank import (
    EmptyBeamError,
    RerankPolicy,
    RerankResult,
    oracle_scorer_factory,
    rerank_dataset,
    rerank_one,
)
from .scorer import (
    BaselineConfig,
    BaselineScorer,
    ConstantScorer,
    DegenerateCorpusError,
    OracleScorer,
    RemoteProtocolError,
    RemoteScorer,
    RemoteUnavailableError,
    Scorer,
    oracle_scorer,
    score_batch,
    train_baseline,
)

__version__ = "0.1.0"
