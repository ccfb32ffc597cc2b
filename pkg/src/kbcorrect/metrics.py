"""Evaluation metrics for candidate ranking and correction decisions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .decide import CorrectionResult, ScoreKey, decide_all
from .kb import KnowledgeBase
from .relatedness import CandidateList, TargetAssertion


@dataclass
class Metrics:
    mrr: float | None = None
    hits_at_1: float | None = None
    hits_at_5: float | None = None
    recall_at_k: dict[int, float] = field(default_factory=dict)
    correction_rate: float | None = None
    empty_rate: float | None = None
    accuracy: float | None = None

    def as_dict(self) -> dict:
        return {
            "mrr": self.mrr,
            "hits_at_1": self.hits_at_1,
            "hits_at_5": self.hits_at_5,
            "recall_at_k": {str(k): v for k, v in sorted(self.recall_at_k.items())},
            "correction_rate": self.correction_rate,
            "empty_rate": self.empty_rate,
            "accuracy": self.accuracy,
        }


def ranking_metrics(
    ranked_lists: Sequence[Sequence[str]], ground_truths: Sequence[str]
) -> tuple[float, float, float]:
    """MRR and Hits@1/@5 of the ground truth within each ranked list.

    Every ground truth must be an entity id; a ground truth missing from
    its list contributes reciprocal rank 0.
    """
    if not ranked_lists:
        raise ValueError("ranking metrics need at least one ranked list")
    if len(ranked_lists) != len(ground_truths):
        raise ValueError("ranked lists and ground truths disagree in length")
    if any(not gt for gt in ground_truths):
        raise ValueError("every ground truth must be an entity id")
    rr_total = hits1 = hits5 = 0
    for ranked, gt in zip(ranked_lists, ground_truths):
        try:
            rank = list(ranked).index(gt) + 1
        except ValueError:
            continue
        rr_total += 1.0 / rank
        hits1 += rank <= 1
        hits5 += rank <= 5
    n = len(ranked_lists)
    return rr_total / n, hits1 / n, hits5 / n


def recall_at_k(
    candidates: Mapping[TargetAssertion, CandidateList],
    targets: Sequence[TargetAssertion],
    ks: Sequence[int],
) -> dict[int, float]:
    """Fraction of entity-annotated targets whose truth is in the top k."""
    entity_targets = [t for t in targets if t.has_entity_gt]
    if not entity_targets:
        return {k: 0.0 for k in ks}
    out = {}
    for k in ks:
        hit = 0
        for t in entity_targets:
            cl = candidates.get(t)
            if cl is not None and t.ground_truth in cl.entity_ids()[:k]:
                hit += 1
        out[k] = hit / len(entity_targets)
    return out


def correction_metrics(
    results: Sequence[CorrectionResult], targets: Sequence[TargetAssertion]
) -> tuple[float | None, float | None, float]:
    """Correction rate, empty rate and accuracy over annotated targets.

    Correction rate is the fraction of entity-annotated targets whose
    substitute equals the annotation; empty rate is the fraction of
    empty-annotated targets decided as none; accuracy counts both kinds of
    success over all targets. A rate with an empty denominator is None.
    """
    if not results:
        raise ValueError("correction metrics need at least one result")
    by_key = {t.key(): t for t in targets}
    n_entity = n_empty = ok_entity = ok_empty = 0
    for r in results:
        target = by_key.get(r.target.key())
        if target is None or target.ground_truth is None:
            raise ValueError(f"target {r.target.key()} has unknown ground truth")
        if target.has_entity_gt:
            n_entity += 1
            ok_entity += r.substitute == target.ground_truth
        else:
            n_empty += 1
            ok_empty += r.substitute is None
    total = n_entity + n_empty
    correction_rate = ok_entity / n_entity if n_entity else None
    empty_rate = ok_empty / n_empty if n_empty else None
    accuracy = (ok_entity + ok_empty) / total
    return correction_rate, empty_rate, accuracy


def default_tau_grid(step: float = 0.05) -> list[float]:
    """Threshold grid from 0 to 1 inclusive."""
    n = round(1.0 / step)
    return [round(i * step, 10) for i in range(n + 1)]


def tau_sweep(
    targets: Sequence[TargetAssertion],
    candidates: Mapping[TargetAssertion, CandidateList],
    raw_likelihood: Mapping[ScoreKey, float] | None,
    raw_consistency: Mapping[ScoreKey, float] | None,
    kb: KnowledgeBase,
    tau_grid: Sequence[float] | None = None,
    strict_label: bool = False,
    per_property: bool = False,
) -> list[tuple[float, Metrics]]:
    """Re-run the decision stage over a threshold grid using cached scores."""
    grid = list(tau_grid) if tau_grid is not None else default_tau_grid()
    if not grid:
        raise ValueError("tau grid must be non-empty")
    rows = []
    for tau in grid:
        results = decide_all(
            targets,
            candidates,
            raw_likelihood,
            raw_consistency,
            tau,
            kb,
            strict_label=strict_label,
            per_property=per_property,
        )
        cr, er, acc = correction_metrics(results, targets)
        rows.append(
            (tau, Metrics(correction_rate=cr, empty_rate=er, accuracy=acc))
        )
    return rows


def best_tau(rows: Sequence[tuple[float, Metrics]]) -> float:
    """Threshold with the highest accuracy; earlier grid point wins ties."""
    best = max(rows, key=lambda row: (row[1].accuracy, -row[0]))
    return best[0]
