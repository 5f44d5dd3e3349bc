"""Accuracy and oracle metrics with per-domain reporting.

Correctness is normalized exact match on logical forms. The headline average
is the unweighted (macro) mean over per-domain accuracies; the
example-weighted (micro) accuracy is reported alongside it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .data import BeamCandidate, DatasetExample, MissingBeamError, MissingResultError
from .lf import LfTree, lf_equal
from .rerank import RerankResult

METRIC_LABEL = "normalized_exact_match"

ResultsLike = Union[Sequence[RerankResult], Mapping[str, Union[RerankResult, LfTree]]]


def _chosen_by_id(results: ResultsLike) -> dict[str, LfTree]:
    if isinstance(results, Mapping):
        return {
            str(k): (v.chosen if isinstance(v, RerankResult) else v)
            for k, v in results.items()
        }
    return {r.example_id: r.chosen for r in results}


def top1_accuracy(results: ResultsLike, dataset: list[DatasetExample]) -> float:
    """Fraction of examples whose chosen form matches gold."""
    if not dataset:
        return 0.0
    chosen = _chosen_by_id(results)
    correct = 0
    for ex in dataset:
        if ex.id not in chosen:
            raise MissingResultError(ex.id)
        if lf_equal(chosen[ex.id], ex.gold_lf):
            correct += 1
    return correct / len(dataset)


def oracle_at_k(
    beams: Mapping[str, list[BeamCandidate]],
    dataset: list[DatasetExample],
    k: int,
) -> float:
    """Fraction of examples with a gold-matching candidate at rank <= k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not dataset:
        return 0.0
    hits = 0
    for ex in dataset:
        if ex.id not in beams:
            raise MissingBeamError(ex.id)
        if any(
            c.generator_rank <= k and lf_equal(c.lf, ex.gold_lf)
            for c in beams[ex.id]
        ):
            hits += 1
    return hits / len(dataset)


@dataclass
class EvalReport:
    metric: str
    per_domain: dict[str, float]
    macro_avg: float
    micro_acc: float
    oracle: dict[int, float]
    counts: dict[str, int]
    domain_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "per_domain": self.per_domain,
            "macro_avg": self.macro_avg,
            "micro_acc": self.micro_acc,
            "oracle": {str(k): v for k, v in self.oracle.items()},
            "counts": self.counts,
            "domain_counts": self.domain_counts,
        }

    def format_table(self) -> str:
        domains = list(self.per_domain)
        headers = [d[:4].capitalize() + "." for d in domains] + ["Avg.", "Micro"]
        values = [self.per_domain[d] for d in domains] + [self.macro_avg, self.micro_acc]
        widths = [max(len(h), 5) for h in headers]
        lines = [
            "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
            "  ".join(f"{100 * v:.1f}".rjust(w) for v, w in zip(values, widths)),
        ]
        for k in sorted(self.oracle):
            lines.append(f"oracle@{k}: {100 * self.oracle[k]:.1f}")
        lines.append(f"metric: {self.metric}   examples: {self.counts['examples']}")
        if self.counts.get("empty_domains"):
            lines.append(f"warning: {self.counts['empty_domains']} requested domain(s) had no examples")
        return "\n".join(lines)


def report(
    dataset: list[DatasetExample],
    beams: Mapping[str, list[BeamCandidate]],
    results: ResultsLike,
    ks: Sequence[int] = (1, 10, 25),
    domains: Iterable[str] | None = None,
) -> EvalReport:
    """Assemble per-domain accuracies, macro and micro averages, and oracles.

    ``domains`` optionally fixes the set and order of reported domains;
    requested domains with no examples are dropped from the macro average and
    counted as a warning.
    """
    chosen = _chosen_by_id(results)
    correct_by_domain: dict[str, int] = {}
    total_by_domain: dict[str, int] = {}
    total_correct = 0
    for ex in dataset:
        if ex.id not in chosen:
            raise MissingResultError(ex.id)
        ok = lf_equal(chosen[ex.id], ex.gold_lf)
        total_by_domain[ex.domain] = total_by_domain.get(ex.domain, 0) + 1
        correct_by_domain[ex.domain] = correct_by_domain.get(ex.domain, 0) + int(ok)
        total_correct += int(ok)

    if domains is None:
        ordered = sorted(total_by_domain)
        empty = 0
    else:
        requested = list(domains)
        ordered = [d for d in requested if total_by_domain.get(d)]
        empty = len(requested) - len(ordered)
        for d in total_by_domain:
            if d not in requested:
                ordered.append(d)

    per_domain = {d: correct_by_domain[d] / total_by_domain[d] for d in ordered}
    macro = sum(per_domain.values()) / len(per_domain) if per_domain else 0.0
    micro = total_correct / len(dataset) if dataset else 0.0
    oracle = {k: oracle_at_k(beams, dataset, k) for k in ks}
    return EvalReport(
        metric=METRIC_LABEL,
        per_domain=per_domain,
        macro_avg=macro,
        micro_acc=micro,
        oracle=oracle,
        counts={"examples": len(dataset), "correct": total_correct, "empty_domains": empty},
        domain_counts=dict(total_by_domain),
    )


def save_report(rep: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(rep.to_dict(), f, ensure_ascii=False, indent=1)
        f.write("\n")
