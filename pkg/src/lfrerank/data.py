"""Dataset and beam types plus their JSON Lines file formats.

Dataset files carry one example per line:
    {"id": ..., "utterance": ..., "gold_lf": ..., "domain": ..., "formalism": ...}
Beam files carry one beam per line:
    {"id": ..., "candidates": [{"lf": ..., "rank": ..., "score": ...}, ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .lf import FORMALISMS, LfTree, parse, serialize


class MissingBeamError(Exception):
    def __init__(self, example_id: str):
        super().__init__(f"no beam for example {example_id!r}")
        self.example_id = example_id


class MissingResultError(Exception):
    def __init__(self, example_id: str):
        super().__init__(f"no result for example {example_id!r}")
        self.example_id = example_id


@dataclass(frozen=True)
class Utterance:
    id: str
    text: str
    domain: str

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"utterance {self.id!r} has empty text")


@dataclass(frozen=True)
class DatasetExample:
    id: str
    utterance: Utterance
    gold_lf: LfTree
    domain: str
    formalism: str


@dataclass(frozen=True)
class BeamCandidate:
    """One generator output. Ranks start at 1; rank 1 is the generator's choice."""

    lf: LfTree
    generator_rank: int
    generator_score: float | None = None


def validate_beam(candidates: list[BeamCandidate]) -> None:
    """Ranks must be unique and contiguous from 1."""
    ranks = sorted(c.generator_rank for c in candidates)
    if ranks != list(range(1, len(candidates) + 1)):
        raise ValueError(f"beam ranks not contiguous from 1: {ranks}")


def _read_jsonl(path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {e}") from e


def load_dataset(path) -> list[DatasetExample]:
    examples = []
    seen = set()
    for lineno, row in _read_jsonl(path):
        try:
            formalism = row["formalism"]
            if formalism not in FORMALISMS:
                raise ValueError(f"unknown formalism {formalism!r}")
            ex = DatasetExample(
                id=str(row["id"]),
                utterance=Utterance(str(row["id"]), row["utterance"], row["domain"]),
                gold_lf=parse(row["gold_lf"], formalism),
                domain=row["domain"],
                formalism=formalism,
            )
        except KeyError as e:
            raise ValueError(f"{path}:{lineno}: missing field {e}") from e
        if ex.id in seen:
            raise ValueError(f"{path}:{lineno}: duplicate example id {ex.id!r}")
        seen.add(ex.id)
        examples.append(ex)
    return examples


def save_dataset(examples: list[DatasetExample], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            row = {
                "id": ex.id,
                "utterance": ex.utterance.text,
                "gold_lf": serialize(ex.gold_lf),
                "domain": ex.domain,
                "formalism": ex.formalism,
            }
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_beams(path, formalism: str | Mapping[str, str]) -> dict[str, list[BeamCandidate]]:
    """Load beams keyed by example id, sorted by rank.

    ``formalism`` is either a single tag for the whole file or a mapping from
    example id to tag (see formalism_by_id).
    """
    beams: dict[str, list[BeamCandidate]] = {}
    for lineno, row in _read_jsonl(path):
        example_id = str(row["id"])
        if example_id in beams:
            raise ValueError(f"{path}:{lineno}: duplicate beam for id {example_id!r}")
        if isinstance(formalism, str):
            tag = formalism
        else:
            if example_id not in formalism:
                continue  # beams may cover a superset of the dataset
            tag = formalism[example_id]
        candidates = [
            BeamCandidate(
                lf=parse(c["lf"], tag),
                generator_rank=int(c["rank"]),
                generator_score=c.get("score"),
            )
            for c in row["candidates"]
        ]
        candidates.sort(key=lambda c: c.generator_rank)
        validate_beam(candidates)
        beams[example_id] = candidates
    return beams


def save_beams(beams: Mapping[str, list[BeamCandidate]], path, order: Iterable[str] | None = None) -> None:
    ids = list(order) if order is not None else list(beams)
    with open(path, "w", encoding="utf-8") as f:
        for example_id in ids:
            row = {
                "id": example_id,
                "candidates": [
                    {
                        "lf": serialize(c.lf),
                        "rank": c.generator_rank,
                        **({"score": c.generator_score} if c.generator_score is not None else {}),
                    }
                    for c in beams[example_id]
                ],
            }
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def formalism_by_id(dataset: list[DatasetExample]) -> dict[str, str]:
    return {ex.id: ex.formalism for ex in dataset}
