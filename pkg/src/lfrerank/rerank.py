"""Select an output form from beam candidates using critic scores.

Gating rules decide whether the critic's ranking replaces the generator's:

  always  rerank unconditionally
  th1     rerank only if at least one score is above the floor (0.5)
  th2     rerank only if best minus second-best score exceeds the margin (0.001)
  th3     th1 and th2 combined

When the gate fails, or every candidate is excluded by processing, the
generator's rank-1 candidate is returned untouched.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from .data import (
    BeamCandidate,
    DatasetExample,
    MissingBeamError,
    Utterance,
    validate_beam,
)
from .lf import LfTree, parse, serialize
from .preprocess import (
    EXCLUDED_TEXT,
    EntityLexicon,
    TemplateGrammar,
    process,
    process_lf,
)
from .scorer import OracleScorer, Scorer, score_batch

RULE_ALWAYS = "always"
RULE_TH1 = "th1"
RULE_TH2 = "th2"
RULE_TH3 = "th3"
RULES = (RULE_ALWAYS, RULE_TH1, RULE_TH2, RULE_TH3)

FALLBACK_ALL_EXCLUDED = "all_excluded"
FALLBACK_RULE_NOT_MET = "rule_not_met"


class EmptyBeamError(ValueError):
    pass


@dataclass(frozen=True)
class RerankPolicy:
    method: str = "raw"
    rule: str = RULE_ALWAYS
    score_floor: float = 0.5
    margin: float = 0.001

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if not 0.0 < self.score_floor < 1.0:
            raise ValueError(f"score_floor must be in (0, 1), got {self.score_floor}")
        if self.margin < 0.0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


@dataclass
class RerankResult:
    example_id: str
    chosen: LfTree
    reranked: bool
    scores: list[tuple[BeamCandidate, Optional[float]]] = field(default_factory=list)
    fallback_reason: Optional[str] = None


ScorerOrFactory = Union[Scorer, Callable[[DatasetExample], Scorer]]


def _gate_passes(policy: RerankPolicy, best: float, second: float) -> bool:
    if policy.rule == RULE_ALWAYS:
        return True
    th1 = best > policy.score_floor
    th2 = (best - second) > policy.margin
    if policy.rule == RULE_TH1:
        return th1
    if policy.rule == RULE_TH2:
        return th2
    return th1 and th2


def rerank_one(
    utterance: Utterance,
    beam: list[BeamCandidate],
    policy: RerankPolicy,
    scorer: Scorer,
    lexicon: Optional[EntityLexicon] = None,
    grammar: Optional[TemplateGrammar] = None,
) -> RerankResult:
    """Rerank one beam. Scores are compared at full precision, ties go to the
    lower generator rank, and excluded candidates never enter the ranking."""
    if not beam:
        raise EmptyBeamError(f"empty beam for utterance {utterance.id!r}")
    validate_beam(beam)
    beam = sorted(beam, key=lambda c: c.generator_rank)
    top1 = beam[0]

    processed = process(beam, policy.method, lexicon, grammar)
    kept = [p for p in processed if not p.excluded]
    if not kept:
        return RerankResult(
            example_id=utterance.id,
            chosen=top1.lf,
            reranked=False,
            scores=[(p.candidate, None) for p in processed],
            fallback_reason=FALLBACK_ALL_EXCLUDED,
        )

    scores = score_batch([(utterance.text, p.text) for p in kept], scorer)
    scores_iter = iter(scores)
    score_rows = [
        (p.candidate, None if p.excluded else next(scores_iter)) for p in processed
    ]

    ranked = sorted(scores, reverse=True)
    best = ranked[0]
    second = ranked[1] if len(ranked) > 1 else float("-inf")
    if not _gate_passes(policy, best, second):
        return RerankResult(
            example_id=utterance.id,
            chosen=top1.lf,
            reranked=False,
            scores=score_rows,
            fallback_reason=FALLBACK_RULE_NOT_MET,
        )
    chosen = max(
        zip(kept, scores),
        key=lambda item: (item[1], -item[0].candidate.generator_rank),
    )[0].candidate
    return RerankResult(
        example_id=utterance.id,
        chosen=chosen.lf,
        reranked=True,
        scores=score_rows,
    )


def rerank_dataset(
    dataset: list[DatasetExample],
    beams: Mapping[str, list[BeamCandidate]],
    policy: RerankPolicy,
    scorer: ScorerOrFactory,
    lexicon: Optional[EntityLexicon] = None,
    grammar: Optional[TemplateGrammar] = None,
    jobs: int = 1,
    beam_size: Optional[int] = None,
) -> list[RerankResult]:
    """Rerank every example; results follow dataset order.

    ``scorer`` is either a Scorer shared across examples or a callable
    building one per example (used by the oracle). ``beam_size`` truncates
    each beam to its top ranks first.
    """
    for ex in dataset:
        if ex.id not in beams:
            raise MissingBeamError(ex.id)

    def scorer_for(ex: DatasetExample) -> Scorer:
        if isinstance(scorer, Scorer):
            return scorer
        return scorer(ex)

    def one(ex: DatasetExample) -> RerankResult:
        beam = beams[ex.id]
        if beam_size is not None:
            beam = [c for c in beam if c.generator_rank <= beam_size]
        return rerank_one(ex.utterance, beam, policy, scorer_for(ex), lexicon, grammar)

    if jobs <= 1:
        return [one(ex) for ex in dataset]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, dataset))


def oracle_scorer_factory(
    method: str,
    lexicon: Optional[EntityLexicon] = None,
    grammar: Optional[TemplateGrammar] = None,
) -> Callable[[DatasetExample], Scorer]:
    """Per-example oracle: 1.0 exactly on the gold's processed text."""

    def make(ex: DatasetExample) -> Scorer:
        gold_text = process_lf(ex.gold_lf, method, lexicon, grammar)
        return OracleScorer(gold_text if gold_text is not None else "")

    return make


def save_results(results: list[RerankResult], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in results:
            row = {
                "id": r.example_id,
                "chosen_lf": serialize(r.chosen),
                "reranked": r.reranked,
                "fallback_reason": r.fallback_reason,
                "scores": [
                    {
                        "rank": cand.generator_rank,
                        "score": EXCLUDED_TEXT if score is None else score,
                    }
                    for cand, score in r.scores
                ],
            }
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_chosen(path, formalism_of: Mapping[str, str]) -> dict[str, LfTree]:
    """Chosen forms from a results file, keyed by example id."""
    chosen: dict[str, LfTree] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                example_id = str(row["id"])
                if example_id not in formalism_of:
                    raise ValueError(f"result id {example_id!r} not in dataset")
                chosen[example_id] = parse(row["chosen_lf"], formalism_of[example_id])
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{path}:{lineno}: bad result row: {e}") from e
    return chosen
