"""Task-specific sub-graph extraction and balanced training-sample drawing.

The sub-graph seeds on the flagged assertions' subjects, properties,
objects and candidate substitutes, then pulls in every assertion of a seed
property and every assertion incident to a seed entity. Only entity-object
assertions participate; literals cannot be graph nodes.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping

from .kb import ENTITY, KnowledgeBase, Term, Triple, UnknownEntityError, sorted_triples
from .relatedness import CandidateList, TargetAssertion

logger = logging.getLogger(__name__)

NEGATIVE_RETRY_BUDGET = 100


@dataclass(frozen=True)
class SubGraph:
    """A multi-relational sub-graph plus the seed sets it grew from."""

    entities: frozenset[str]
    properties: frozenset[str]
    triples: frozenset[Triple]
    seed_subjects: frozenset[str]
    related_entities: frozenset[str]


@dataclass(frozen=True)
class SampleSet:
    """Balanced positive/negative triples for link-prediction training."""

    positives: frozenset[Triple]
    negatives: frozenset[Triple]
    seed: int


def extract_subgraph(
    kb: KnowledgeBase,
    targets: Iterable[TargetAssertion],
    candidates: Mapping[TargetAssertion, CandidateList],
    strict_incidence: bool = False,
) -> SubGraph:
    """Grow the sub-graph around the targets in three steps.

    Step 1 collects seeds: target subjects, target properties, all
    candidate entities and entity objects of the targets. Step 2 collects
    neighbourhoods: every entity-object assertion of a seed property, plus
    every assertion whose subject or object is a seed entity
    (``strict_incidence`` demands both endpoints). Step 3 re-closes the
    entity and property sets over the collected assertions.
    """
    targets = list(targets)
    seed_subjects = {t.s for t in targets}
    seed_properties = {t.p for t in targets}
    related: set[str] = set()
    for t in targets:
        cl = candidates.get(t)
        if cl is None:
            continue
        for e in cl.entity_ids():
            if e not in kb.entities:
                raise UnknownEntityError(e)
            related.add(e)
    seed_entities = set(seed_subjects) | related
    for t in targets:
        if t.o.is_entity:
            seed_entities.add(t.o.value)

    triples: set[Triple] = set()
    for p in seed_properties:
        triples.update(t for t in kb.assertions_of_property(p) if t.o.is_entity)
    for e in seed_entities:
        if strict_incidence:
            triples.update(
                t
                for t in kb.assertions_of_subject(e)
                if t.o.is_entity and t.o.value in seed_entities
            )
        else:
            triples.update(t for t in kb.assertions_of_subject(e) if t.o.is_entity)
            triples.update(kb.assertions_of_object(e))

    entities = set(seed_entities)
    properties = set(seed_properties)
    for t in triples:
        entities.add(t.s)
        entities.add(t.o.value)
        properties.add(t.p)

    return SubGraph(
        entities=frozenset(entities),
        properties=frozenset(properties),
        triples=frozenset(triples),
        seed_subjects=frozenset(seed_subjects),
        related_entities=frozenset(related),
    )


def whole_kb_subgraph(
    kb: KnowledgeBase,
    targets: Iterable[TargetAssertion],
    candidates: Mapping[TargetAssertion, CandidateList],
) -> SubGraph:
    """Bypass extraction: every entity-object assertion of the whole store."""
    targets = list(targets)
    related = {
        e
        for t in targets
        for e in (candidates[t].entity_ids() if t in candidates else ())
    }
    triples = frozenset(t for t in kb.property_assertions if t.o.is_entity)
    entities = {t.s for t in triples} | {t.o.value for t in triples}
    entities |= {t.s for t in targets} | related
    return SubGraph(
        entities=frozenset(entities),
        properties=frozenset(t.p for t in triples) | {t.p for t in targets},
        triples=triples,
        seed_subjects=frozenset(t.s for t in targets),
        related_entities=frozenset(related),
    )


def sample_positives(sub: SubGraph) -> tuple[frozenset[Triple], frozenset[Triple]]:
    """Positives: seed-subject assertions and related-object assertions."""
    by_subject = frozenset(
        t for t in sub.triples if t.s in sub.seed_subjects and t.p in sub.properties
    )
    by_object = frozenset(
        t
        for t in sub.triples
        if t.p in sub.properties and t.o.value in sub.related_entities
    )
    return by_subject, by_object


def _corrupt(
    t: Triple, slot: str, pool: list[str], existing, taken, rng: random.Random, budget: int
) -> Triple | None:
    for _ in range(budget):
        e = pool[rng.randrange(len(pool))]
        cand = Triple(e, t.p, t.o) if slot == "s" else Triple(t.s, t.p, Term(ENTITY, e))
        if cand not in existing and cand not in taken:
            return cand
    return None


def _sample_negative_sides(sub, pos_subject, pos_object, seed, budget):
    """One novel corruption per unique positive; returns drops too."""
    if len(sub.entities) < 2:
        raise ValueError("negative sampling needs at least 2 entities")
    rng = random.Random(seed)
    pool = sorted(sub.entities)
    taken: set[Triple] = set()
    neg_subject: set[Triple] = set()
    neg_object: set[Triple] = set()
    dropped: set[Triple] = set()

    # Positives in both sides are corrupted once, on the object slot.
    for t in sorted_triples(pos_subject):
        cand = _corrupt(t, "o", pool, sub.triples, taken, rng, budget)
        if cand is None:
            logger.warning("dropping positive %s: corruption budget exhausted", t)
            dropped.add(t)
            continue
        taken.add(cand)
        neg_subject.add(cand)
    for t in sorted_triples(pos_object - pos_subject):
        cand = _corrupt(t, "s", pool, sub.triples, taken, rng, budget)
        if cand is None:
            logger.warning("dropping positive %s: corruption budget exhausted", t)
            dropped.add(t)
            continue
        taken.add(cand)
        neg_object.add(cand)
    return frozenset(neg_subject), frozenset(neg_object), frozenset(dropped)


def sample_negatives(
    sub: SubGraph,
    pos_subject: frozenset[Triple],
    pos_object: frozenset[Triple],
    seed: int,
    retry_budget: int = NEGATIVE_RETRY_BUDGET,
) -> tuple[frozenset[Triple], frozenset[Triple]]:
    """Corrupt each positive into a triple the sub-graph does not contain.

    Subject-seeded positives get their object replaced; related-object
    positives get their subject replaced. Deterministic for a fixed seed.
    """
    neg_s, neg_o, _dropped = _sample_negative_sides(
        sub, pos_subject, pos_object, seed, retry_budget
    )
    return neg_s, neg_o


def build_samples(
    sub: SubGraph, seed: int, retry_budget: int = NEGATIVE_RETRY_BUDGET
) -> SampleSet:
    """Draw a balanced sample set from the sub-graph."""
    pos_subject, pos_object = sample_positives(sub)
    neg_s, neg_o, dropped = _sample_negative_sides(
        sub, pos_subject, pos_object, seed, retry_budget
    )
    positives = frozenset((pos_subject | pos_object) - dropped)
    negatives = frozenset(neg_s | neg_o)
    assert len(positives) == len(negatives)
    return SampleSet(positives=positives, negatives=negatives, seed=seed)


# -- adjacency index ---------------------------------------------------------


class GraphIndex:
    """Adjacency views over a sub-graph for feature extraction."""

    def __init__(self, sub: SubGraph):
        out_edges: dict[str, list[tuple[str, str]]] = {}
        in_edges: dict[str, list[tuple[str, str]]] = {}
        subj_of: set[tuple[str, str]] = set()
        obj_of: set[tuple[str, str]] = set()
        for t in sub.triples:
            out_edges.setdefault(t.s, []).append((t.p, t.o.value))
            in_edges.setdefault(t.o.value, []).append((t.p, t.s))
            subj_of.add((t.s, t.p))
            obj_of.add((t.o.value, t.p))
        self.out_edges = out_edges
        self.in_edges = in_edges
        self._subject_of = subj_of
        self._object_of = obj_of

    def is_subject_of(self, e: str, p: str) -> bool:
        return (e, p) in self._subject_of

    def is_object_of(self, e: str, p: str) -> bool:
        return (e, p) in self._object_of


@lru_cache(maxsize=8)
def graph_index(sub: SubGraph) -> GraphIndex:
    return GraphIndex(sub)


# -- serialization -----------------------------------------------------------


def write_subgraph(sub: SubGraph, triples_path: str | Path, sidecar_path: str | Path) -> None:
    lines = sorted(f"{t.s}\t{t.p}\t{t.o.value}\t{t.o.kind}" for t in sub.triples)
    Path(triples_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = {
        "SE": sorted(sub.seed_subjects),
        "RE": sorted(sub.related_entities),
        "P": sorted(sub.properties),
        "E": sorted(sub.entities),
    }
    Path(sidecar_path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_subgraph(triples_path: str | Path, sidecar_path: str | Path) -> SubGraph:
    triples = set()
    for line in Path(triples_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        s, p, o, kind = line.split("\t")
        triples.add(Triple(s, p, Term(kind, o)))
    sidecar = json.loads(Path(sidecar_path).read_text())
    return SubGraph(
        entities=frozenset(sidecar["E"]),
        properties=frozenset(sidecar["P"]),
        triples=frozenset(triples),
        seed_subjects=frozenset(sidecar["SE"]),
        related_entities=frozenset(sidecar["RE"]),
    )


def write_samples(
    samples: SampleSet,
    positives_path: str | Path,
    negatives_path: str | Path,
    sidecar_path: str | Path,
) -> None:
    for path, triples in ((positives_path, samples.positives), (negatives_path, samples.negatives)):
        lines = sorted(f"{t.s}\t{t.p}\t{t.o.value}\t{t.o.kind}" for t in triples)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    Path(sidecar_path).write_text(json.dumps({"seed": samples.seed}) + "\n")


def read_samples(
    positives_path: str | Path, negatives_path: str | Path, sidecar_path: str | Path
) -> SampleSet:
    def _read(path):
        out = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            s, p, o, kind = line.split("\t")
            out.add(Triple(s, p, Term(kind, o)))
        return frozenset(out)

    seed = json.loads(Path(sidecar_path).read_text())["seed"]
    return SampleSet(positives=_read(positives_path), negatives=_read(negatives_path), seed=seed)
