"""Soft property constraints: mined cardinality distributions and
hierarchical ranges, plus the consistency-checking model that scores a
candidate assertion against them.

Constraints are statistical summaries of the ABox, not axioms: every
cardinality and range class carries the fraction of the data supporting
it. An external constraints file may override mined values per property.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .kb import KnowledgeBase, Triple, UnknownEntityError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CardinalityConstraint:
    """Distribution of entity-object counts per subject for one property.

    ``dist[k]`` is the fraction of subjects with exactly ``k`` distinct
    entity objects; ``on_max`` is the largest observed count (0 when the
    property has no entity objects at all).
    """

    property_id: str
    dist: Mapping[int, float]
    on_max: int

    def tail(self, n: int) -> float:
        """Probability that the cardinality exceeds ``n``."""
        return sum(p for k, p in self.dist.items() if k > n)


@dataclass(frozen=True)
class RangeConstraint:
    """Supporting degree of each specific/general object class for a property."""

    property_id: str
    specific: Mapping[str, float]
    general: Mapping[str, float]


@dataclass(frozen=True)
class ConsistencyParams:
    max_exceed_rate: float = 1.0
    w_specific: float = 0.8
    w_general: float = 0.2
    combine_mode: str = "average"

    def __post_init__(self):
        if not 0.0 < self.max_exceed_rate <= 1.0:
            raise ValueError("max_exceed_rate must be in (0, 1]")
        if self.w_specific < 0 or self.w_general < 0:
            raise ValueError("range weights must be non-negative")
        if abs(self.w_specific + self.w_general - 1.0) > 1e-9:
            raise ValueError("range weights must sum to 1")
        if self.combine_mode not in ("multiply", "average"):
            raise ValueError(f"unknown combine mode {self.combine_mode!r}")


# -- mining ------------------------------------------------------------------


def mine_cardinality(kb: KnowledgeBase, p: str) -> CardinalityConstraint:
    """Group entity-object assertions of ``p`` by subject and count objects."""
    objects_per_subject: dict[str, set[str]] = {}
    for t in kb.assertions_of_property(p):
        if t.o.is_entity:
            objects_per_subject.setdefault(t.s, set()).add(t.o.value)
    if not objects_per_subject:
        return CardinalityConstraint(property_id=p, dist={}, on_max=0)
    counts = [len(objs) for objs in objects_per_subject.values()]
    n_subjects = len(counts)
    dist = {}
    for k in sorted(set(counts)):
        dist[k] = counts.count(k) / n_subjects
    return CardinalityConstraint(property_id=p, dist=dist, on_max=max(counts))


def cardinality_tail(constraint: CardinalityConstraint, n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return constraint.tail(n)


def mine_range(kb: KnowledgeBase, p: str) -> RangeConstraint:
    """Supporting degrees over the specific and general classes of ``p``'s objects."""
    objects = sorted({t.o.value for t in kb.assertions_of_property(p) if t.o.is_entity})
    if not objects:
        return RangeConstraint(property_id=p, specific={}, general={})
    specific_counts: dict[str, int] = {}
    general_counts: dict[str, int] = {}
    for oe in objects:
        for c in kb.specific_classes(oe):
            specific_counts[c] = specific_counts.get(c, 0) + 1
        for c in kb.general_classes(oe):
            general_counts[c] = general_counts.get(c, 0) + 1
    n = len(objects)
    return RangeConstraint(
        property_id=p,
        specific={c: cnt / n for c, cnt in sorted(specific_counts.items())},
        general={c: cnt / n for c, cnt in sorted(general_counts.items())},
    )


def mine_constraints(
    kb: KnowledgeBase, properties: Iterable[str] | None = None
) -> dict[str, tuple[CardinalityConstraint, RangeConstraint]]:
    props = sorted(properties) if properties is not None else sorted(kb.properties)
    return {p: (mine_cardinality(kb, p), mine_range(kb, p)) for p in props}


# -- consistency checking ----------------------------------------------------


def check_consistency(
    kb: KnowledgeBase,
    candidate: Triple,
    cardinality: CardinalityConstraint,
    prange: RangeConstraint,
    params: ConsistencyParams,
) -> tuple[float, float]:
    """Score a candidate assertion against the property's soft constraints.

    The cardinality branch counts the subject's distinct entity objects as
    if the candidate were added; a count beyond the observed maximum by
    ``max_exceed_rate`` or more (or a property that never takes entity
    objects) scores 0, and mild excess degrades the score linearly. The
    range branch combines, with a noisy-or, the supporting degrees of the
    candidate object's classes that fall in the specific and general
    ranges, then mixes the two with the configured weights.
    """
    e = candidate.o.value
    if not candidate.o.is_entity:
        raise ValueError("candidate object must be an entity")
    if e not in kb.entities:
        raise UnknownEntityError(e)

    n = len(kb.entity_objects(candidate.s, candidate.p) | {e})
    # The exceeding rate is undefined at on_max = 0, so that branch is
    # decided before any division.
    if cardinality.on_max == 0:
        y_car = 0.0
    else:
        rate = (n - cardinality.on_max) / cardinality.on_max
        if rate >= params.max_exceed_rate:
            y_car = 0.0
        elif n == 1:
            y_car = cardinality.dist.get(1, 0.0)
        elif rate <= 0:
            y_car = cardinality.tail(1)
        else:
            y_car = (1.0 - rate) * cardinality.tail(1)
        if y_car < 0.0:
            logger.warning(
                "cardinality score clamped to 0 for %s (exceeding rate %.3f > 1)",
                candidate,
                rate,
            )
            y_car = 0.0

    classes = kb.inferred_classes(e)
    prod_specific = 1.0
    for c in classes:
        if c in prange.specific:
            prod_specific *= 1.0 - prange.specific[c]
    prod_general = 1.0
    for c in classes:
        if c in prange.general:
            prod_general *= 1.0 - prange.general[c]
    y_ran_specific = 1.0 - prod_specific
    y_ran_general = 1.0 - prod_general
    y_ran = params.w_specific * y_ran_specific + params.w_general * y_ran_general
    return y_car, y_ran


def combine(y_car: float, y_ran: float, mode: str) -> float:
    """Fuse the two consistency scores into one."""
    if mode == "multiply":
        return y_car * y_ran
    if mode == "average":
        return (y_car + y_ran) / 2.0
    raise ValueError(f"unknown combine mode {mode!r}")


# -- persistence and overrides ------------------------------------------------


def write_constraints(
    constraints: Mapping[str, tuple[CardinalityConstraint, RangeConstraint]],
    path: str | Path,
) -> None:
    payload = {
        p: {
            "cardinality": {
                "dist": {str(k): v for k, v in card.dist.items()},
                "onMax": card.on_max,
            },
            "range": {"specific": dict(rng.specific), "general": dict(rng.general)},
        }
        for p, (card, rng) in constraints.items()
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_constraints(
    path: str | Path,
) -> dict[str, tuple[CardinalityConstraint, RangeConstraint]]:
    payload = json.loads(Path(path).read_text())
    out = {}
    for p, entry in payload.items():
        card_entry = entry.get("cardinality", {})
        rng_entry = entry.get("range", {})
        card = CardinalityConstraint(
            property_id=p,
            dist={int(k): float(v) for k, v in card_entry.get("dist", {}).items()},
            on_max=int(card_entry.get("onMax", 0)),
        )
        rng = RangeConstraint(
            property_id=p,
            specific=dict(rng_entry.get("specific", {})),
            general=dict(rng_entry.get("general", {})),
        )
        out[p] = (card, rng)
    return out


def merge_overrides(
    mined: Mapping[str, tuple[CardinalityConstraint, RangeConstraint]],
    overrides: Mapping[str, tuple[CardinalityConstraint, RangeConstraint]],
) -> dict[str, tuple[CardinalityConstraint, RangeConstraint]]:
    """Overlaid constraints; an override replaces the mined entry per property."""
    merged = dict(mined)
    merged.update(overrides)
    return merged


def apply_override_file(
    mined: Mapping[str, tuple[CardinalityConstraint, RangeConstraint]],
    path: str | Path,
) -> dict[str, tuple[CardinalityConstraint, RangeConstraint]]:
    """Merge an override file over mined constraints, override winning.

    Overrides are section-granular: an entry that only carries a
    ``range`` section leaves the mined cardinality untouched.
    """
    payload = json.loads(Path(path).read_text())
    merged = dict(mined)
    for p, entry in payload.items():
        card, rng = merged.get(
            p,
            (
                CardinalityConstraint(property_id=p, dist={}, on_max=0),
                RangeConstraint(property_id=p, specific={}, general={}),
            ),
        )
        if "cardinality" in entry:
            card = CardinalityConstraint(
                property_id=p,
                dist={int(k): float(v) for k, v in entry["cardinality"].get("dist", {}).items()},
                on_max=int(entry["cardinality"].get("onMax", 0)),
            )
        if "range" in entry:
            rng = RangeConstraint(
                property_id=p,
                specific=dict(entry["range"].get("specific", {})),
                general=dict(entry["range"].get("general", {})),
            )
        merged[p] = (card, rng)
    return merged
