"""Labeled sentence-pair generation for training the critic.

For each training utterance the gold form yields one positive pair, every
incorrect beam candidate yields a negative pair against the utterance, and
every unordered pair of distinct candidates yields a candidate-candidate
negative. Candidates are deduplicated by normal form first, excluded
candidates are skipped everywhere, and textually identical pairs are emitted
once.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Mapping, Optional

from .data import BeamCandidate, DatasetExample, MissingBeamError, Utterance
from .lf import LfTree, normal_text
from .preprocess import EntityLexicon, TemplateGrammar, process_lf

SOURCE_GOLD = "gold_positive"
SOURCE_BEAM = "beam_negative"
SOURCE_BEAM_BEAM = "beam_beam_negative"
SOURCES = (SOURCE_GOLD, SOURCE_BEAM, SOURCE_BEAM_BEAM)


@dataclass(frozen=True)
class PairExample:
    text_a: str
    text_b: str
    label: int
    source: str

    def __post_init__(self):
        if (self.label == 1) != (self.source == SOURCE_GOLD):
            raise ValueError(f"label {self.label} inconsistent with source {self.source}")


def generate_pairs(
    utterance: Utterance,
    gold_lf: LfTree,
    beam: list[BeamCandidate],
    method: str,
    lexicon: Optional[EntityLexicon] = None,
    grammar: Optional[TemplateGrammar] = None,
    pair_gold_in_beam: bool = True,
) -> list[PairExample]:
    """Pairs for one training example.

    ``pair_gold_in_beam=False`` keeps candidates equal to gold out of the
    candidate-candidate negatives; the default pairs any two distinct
    candidates.
    """
    if not beam:
        raise ValueError(f"empty beam for utterance {utterance.id!r}")
    gold_key = normal_text(gold_lf)
    gold_text = process_lf(gold_lf, method, lexicon, grammar)

    # One representative per distinct normal form, lowest rank first.
    reps: list[tuple[str, BeamCandidate, Optional[str]]] = []
    seen: set[str] = set()
    for cand in sorted(beam, key=lambda c: c.generator_rank):
        key = normal_text(cand.lf)
        if key in seen:
            continue
        seen.add(key)
        reps.append((key, cand, process_lf(cand.lf, method, lexicon, grammar)))

    pairs: list[PairExample] = []
    if gold_text is not None and gold_text != utterance.text:
        pairs.append(PairExample(utterance.text, gold_text, 1, SOURCE_GOLD))
    scored = [(key, cand, text) for key, cand, text in reps if text is not None]
    for key, cand, text in scored:
        if key == gold_key or text == gold_text:
            continue
        if text == utterance.text:
            continue
        pairs.append(PairExample(utterance.text, text, 0, SOURCE_BEAM))
    for i in range(len(scored)):
        for j in range(i + 1, len(scored)):
            key_i, _, text_i = scored[i]
            key_j, _, text_j = scored[j]
            if not pair_gold_in_beam and gold_key in (key_i, key_j):
                continue
            if text_i == text_j:
                continue
            pairs.append(PairExample(text_i, text_j, 0, SOURCE_BEAM_BEAM))
    return _dedup(pairs)


def _dedup(pairs: list[PairExample]) -> list[PairExample]:
    # Candidate-candidate pairs are symmetric, so their key sorts the texts.
    out = []
    seen = set()
    for p in pairs:
        if p.source == SOURCE_BEAM_BEAM:
            key = (min(p.text_a, p.text_b), max(p.text_a, p.text_b), p.label)
        else:
            key = (p.text_a, p.text_b, p.label)
        if key in seen:
            continue
        seen.add(key)
        out.append(p)
    return out


def generate_dataset(
    dataset: list[DatasetExample],
    beams: Mapping[str, list[BeamCandidate]],
    method: str,
    lexicon: Optional[EntityLexicon] = None,
    grammar: Optional[TemplateGrammar] = None,
    pair_gold_in_beam: bool = True,
) -> list[PairExample]:
    """Concatenated pairs in dataset order (then source, then rank)."""
    corpus: list[PairExample] = []
    for ex in dataset:
        if ex.id not in beams:
            raise MissingBeamError(ex.id)
        corpus.extend(
            generate_pairs(
                ex.utterance,
                ex.gold_lf,
                beams[ex.id],
                method,
                lexicon,
                grammar,
                pair_gold_in_beam,
            )
        )
    return corpus


def shuffle_pairs(pairs: list[PairExample], seed: int) -> list[PairExample]:
    """Seeded permutation of a pair corpus."""
    out = list(pairs)
    random.Random(seed).shuffle(out)
    return out


def save_pairs(pairs: list[PairExample], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            row = {"text_a": p.text_a, "text_b": p.text_b, "label": p.label, "source": p.source}
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_pairs(path) -> list[PairExample]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                pairs.append(
                    PairExample(row["text_a"], row["text_b"], int(row["label"]), row["source"])
                )
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{path}:{lineno}: bad pair row: {e}") from e
    return pairs
