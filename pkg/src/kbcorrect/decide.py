"""Correction decision making: normalize, ensemble, filter, substitute.

Likelihood and consistency scores are min-max normalized across every
prediction made for the whole target set, averaged per candidate, and the
candidates below the filtering threshold are dropped. A literal target
whose text exactly matches a candidate's label keeps that candidate
unconditionally. The substitute is the first survivor in the original
relatedness order, or none when no candidate survives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .kb import KnowledgeBase
from .lexical import fold_text
from .relatedness import CandidateList, TargetAssertion

ScoreKey = tuple[TargetAssertion, str]


@dataclass(frozen=True)
class ScoredCandidate:
    entity: str
    relatedness_rank: int
    y_likelihood: float | None
    y_consistency: float | None
    y: float
    kept: bool
    kept_by_label_rule: bool


@dataclass(frozen=True)
class CorrectionResult:
    target: TargetAssertion
    substitute: str | None
    survivors: tuple[ScoredCandidate, ...]
    tau: float

    @property
    def is_none_decision(self) -> bool:
        return self.substitute is None


def normalize_scores(
    raw: Mapping[ScoreKey, float], per_property: bool = False
) -> dict[ScoreKey, float]:
    """Min-max normalize raw model outputs into [0, 1].

    Normalization is global over all predictions of one model for the
    target set; ``per_property`` restricts it to predictions sharing the
    target property. A degenerate group (max equals min) maps to 0.5.
    """
    if not raw:
        raise ValueError("cannot normalize an empty score map")
    for key, v in raw.items():
        if not math.isfinite(v):
            raise ValueError(f"non-finite raw score for {key}")

    def _normalize_group(keys: list[ScoreKey]) -> dict[ScoreKey, float]:
        values = [raw[k] for k in keys]
        lo, hi = min(values), max(values)
        if hi == lo:
            return {k: 0.5 for k in keys}
        return {k: (raw[k] - lo) / (hi - lo) for k in keys}

    if not per_property:
        return _normalize_group(list(raw))
    groups: dict[str, list[ScoreKey]] = {}
    for key in raw:
        groups.setdefault(key[0].p, []).append(key)
    out: dict[ScoreKey, float] = {}
    for keys in groups.values():
        out.update(_normalize_group(keys))
    return out


def ensemble(y_likelihood: float, y_consistency: float) -> float:
    return (y_likelihood + y_consistency) / 2.0


def label_matches(
    target: TargetAssertion, entity_id: str, kb: KnowledgeBase, strict: bool = False
) -> bool:
    """Keep rule: the target is a literal equal to one of the entity's labels.

    Comparison folds case and trims whitespace unless ``strict`` asks for
    raw byte equality.
    """
    if target.o.is_entity:
        return False
    labels = kb.labels.get(entity_id, ())
    if strict:
        return any(target.o.value == lab for lab in labels)
    text = fold_text(target.o.value).strip()
    return any(text == fold_text(lab).strip() for lab in labels)


def decide(
    target: TargetAssertion,
    candidates: CandidateList,
    y_likelihood: Mapping[ScoreKey, float] | None,
    y_consistency: Mapping[ScoreKey, float] | None,
    tau: float,
    kb: KnowledgeBase,
    strict_label: bool = False,
) -> CorrectionResult:
    """Filter one target's candidates and pick the substitute.

    Either score map may be absent (single-model run); the ensemble then
    equals the remaining model's normalized score. Survivors keep their
    relatedness order.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]")
    survivors = []
    for rank, (entity_id, _score) in enumerate(candidates.entities, start=1):
        key = (target, entity_id)
        yl = y_likelihood.get(key) if y_likelihood is not None else None
        yc = y_consistency.get(key) if y_consistency is not None else None
        if yl is None and yc is None:
            raise ValueError(f"no scores available for candidate {entity_id!r}")
        if yl is None:
            y = yc
        elif yc is None:
            y = yl
        else:
            y = ensemble(yl, yc)
        by_label = label_matches(target, entity_id, kb, strict_label)
        kept = y >= tau or by_label
        if kept:
            survivors.append(
                ScoredCandidate(
                    entity=entity_id,
                    relatedness_rank=rank,
                    y_likelihood=yl,
                    y_consistency=yc,
                    y=y,
                    kept=True,
                    kept_by_label_rule=by_label,
                )
            )
    substitute = survivors[0].entity if survivors else None
    return CorrectionResult(
        target=target, substitute=substitute, survivors=tuple(survivors), tau=tau
    )


def decide_all(
    targets: Sequence[TargetAssertion],
    candidates: Mapping[TargetAssertion, CandidateList],
    raw_likelihood: Mapping[ScoreKey, float] | None,
    raw_consistency: Mapping[ScoreKey, float] | None,
    tau: float,
    kb: KnowledgeBase,
    strict_label: bool = False,
    per_property: bool = False,
) -> list[CorrectionResult]:
    """Normalize raw scores over the whole target set, then decide per target.

    Targets without a candidate list (or with an empty one) yield a none
    decision.
    """
    norm_l = (
        normalize_scores(raw_likelihood, per_property) if raw_likelihood else None
    )
    norm_c = (
        normalize_scores(raw_consistency, per_property) if raw_consistency else None
    )
    results = []
    for target in targets:
        cl = candidates.get(target)
        if cl is None or not cl.entities:
            results.append(
                CorrectionResult(target=target, substitute=None, survivors=(), tau=tau)
            )
            continue
        results.append(decide(target, cl, norm_l, norm_c, tau, kb, strict_label))
    return results


# -- persistence -------------------------------------------------------------


def write_corrections(results: Iterable[CorrectionResult], path: str | Path) -> None:
    """One JSON line per target with the decision and surviving candidates."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            t = r.target
            rec = {
                "s": t.s,
                "p": t.p,
                "o": t.o.value,
                "o_kind": t.o.kind,
                "decision": "none" if r.substitute is None else "substitute",
                "survivors": [
                    {
                        "entity": c.entity,
                        "y": c.y,
                        "yL": c.y_likelihood,
                        "yC": c.y_consistency,
                    }
                    for c in r.survivors
                ],
                "tau": r.tau,
            }
            if r.substitute is not None:
                rec["substitute"] = r.substitute
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_corrections(
    path: str | Path, targets: Sequence[TargetAssertion]
) -> list[CorrectionResult]:
    """Rebuild decisions from a corrections file, matched to known targets."""
    by_key = {t.key(): t for t in targets}
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            target = by_key.get((rec["s"], rec["p"], rec["o_kind"], rec["o"]))
            if target is None:
                continue
            survivors = tuple(
                ScoredCandidate(
                    entity=c["entity"],
                    relatedness_rank=i + 1,
                    y_likelihood=c.get("yL"),
                    y_consistency=c.get("yC"),
                    y=c["y"],
                    kept=True,
                    kept_by_label_rule=False,
                )
                for i, c in enumerate(rec["survivors"])
            )
            out.append(
                CorrectionResult(
                    target=target,
                    substitute=rec.get("substitute"),
                    survivors=survivors,
                    tau=rec["tau"],
                )
            )
    return out
