"""Synthetic benchmark generator: a controlled world with recoverable errors.

The generated knowledge base has a class hierarchy per object family,
regional hub structure (every entity sits in a region that links back to
it), functional and non-functional object properties typed family-to-family,
and data properties with literal objects. Targets are built by corrupting
true assertions: swapping the object for a lexically confusable entity of
the wrong family, stringifying the object into (a variant of) its label,
or replacing a data literal with misleading text that has no valid entity
substitute.

Every corrupted assertion's original is removed from the store and the
corrupted form inserted, so the benchmark behaves like a curation task on
a damaged knowledge base.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass

from .kb import ENTITY, KnowledgeBase, Term, Triple, literal
from .relatedness import STOP_WORDS, TargetAssertion

_SYLLABLES = [c + v for c in "bdfgklmnprstvz" for v in "aeiou"]

_CLASSWORDS = [
    "city", "fort", "lake", "farm", "mine", "port", "camp", "mill",
    "glen", "dune", "reef", "peak",
]
_CHAIN_SUFFIXES = ["", "Site", "Zone", "Belt", "Realm", "Sphere", "Order"]
_TYPED_VERBS = [
    "governs", "overlooks", "supplies", "guards", "manages", "borders",
    "owns", "serves",
]
_DATA_NAMES = ["motto", "nickname"]

LOCATED_IN = "p:locatedIn"
CONTAINS = "p:contains"


class _Tokens:
    """Deterministic supply of unique non-stop-word tokens."""

    def __init__(self):
        self.counter = 0

    def fresh(self) -> str:
        while True:
            i = self.counter
            self.counter += 1
            parts = [_SYLLABLES[i % len(_SYLLABLES)]]
            i //= len(_SYLLABLES)
            parts.append(_SYLLABLES[i % len(_SYLLABLES)])
            i //= len(_SYLLABLES)
            while i:
                parts.append(_SYLLABLES[i % len(_SYLLABLES)])
                i //= len(_SYLLABLES)
            token = "".join(parts)
            if token not in STOP_WORDS:
                return token


@dataclass
class SynthConfig:
    entities: int = 500
    properties: int = 8
    class_depth: int = 3
    confusability: float = 0.3
    corruptions: int = 60
    empty_corruptions: int = 20
    subject_share: float = 0.4
    same_region_bias: float = 0.8

    def validate(self) -> None:
        if self.entities < 20:
            raise ValueError("need at least 20 entities")
        if self.properties < 4:
            raise ValueError("need at least 4 properties")
        if self.class_depth < 1:
            raise ValueError("class_depth must be >= 1")
        if not 0.0 <= self.confusability <= 1.0:
            raise ValueError("confusability must be in [0, 1]")
        if self.corruptions < 0 or self.empty_corruptions < 0:
            raise ValueError("corruption counts must be non-negative")
        if self.empty_corruptions > self.corruptions:
            raise ValueError("empty_corruptions cannot exceed corruptions")


def _class_chain(word: str, depth: int) -> list[str]:
    base = word.capitalize()
    chain = []
    for level in range(depth):
        suffix = (
            _CHAIN_SUFFIXES[level]
            if level < len(_CHAIN_SUFFIXES)
            else f"Tier{level}"
        )
        chain.append(f"c:{base}{suffix}")
    return chain


def generate_synthetic_case(
    config: SynthConfig, seed: int
) -> tuple[KnowledgeBase, list[TargetAssertion]]:
    """Build a knowledge base and a corrupted target set with ground truth.

    Deterministic for a fixed seed. Raises ValueError when the requested
    corruption counts cannot be satisfied by the generated world.
    """
    config.validate()
    rng = random.Random(seed)
    tokens = _Tokens()

    n_data = 2 if config.properties >= 8 else 1
    n_typed = config.properties - n_data - 2
    if n_typed < 1:
        raise ValueError("property budget leaves no typed object property")
    n_functional_typed = (n_typed + 1) // 2

    data_props = [f"p:{_DATA_NAMES[i % 2]}{'' if i < 2 else i}" for i in range(n_data)]
    typed_props = []
    for j in range(n_typed):
        verb = _TYPED_VERBS[j] if j < len(_TYPED_VERBS) else f"rel{j}"
        typed_props.append((f"p:{verb}", j < n_functional_typed))
    classwords = [
        _CLASSWORDS[j] if j < len(_CLASSWORDS) else tokens.fresh() for j in range(n_typed)
    ]

    # Class hierarchy: one chain per object family plus subjects and regions.
    subclass_edges: list[tuple[str, str]] = []
    family_leaf: list[str] = []
    for word in classwords + ["person", "region"]:
        chain = _class_chain(word, config.class_depth)
        family_leaf.append(chain[0])
        for lower, upper in zip(chain, chain[1:]):
            subclass_edges.append((lower, upper))
        subclass_edges.append((chain[-1], "owl:Thing"))
    person_leaf, region_leaf = family_leaf[-2], family_leaf[-1]

    # Entities: regions, subjects, object families.
    n_regions = max(2, config.entities // 100)
    n_subjects = max(4, int(config.entities * config.subject_share))
    n_objects = config.entities - n_regions - n_subjects
    if n_objects < 2 * n_typed:
        raise ValueError("entity budget too small for the object families")

    regions = [f"e:reg{i}" for i in range(n_regions)]
    subjects = [f"e:sub{i}" for i in range(n_subjects)]
    families: list[list[str]] = []
    per_family = n_objects // n_typed
    extra = n_objects - per_family * n_typed
    for j, word in enumerate(classwords):
        size = per_family + (1 if j < extra else 0)
        families.append([f"e:{word}{i}" for i in range(size)])

    class_assertions: dict[str, set[str]] = {}
    for r in regions:
        class_assertions[r] = {region_leaf}
    for s in subjects:
        class_assertions[s] = {person_leaf}
    for j, members in enumerate(families):
        for m in members:
            class_assertions[m] = {family_leaf[j]}

    # Confusable partners: a base object shares its two name tokens with a
    # fresh member of the next family, whose label keeps its own classword.
    partner_of: dict[str, str] = {}
    if n_typed >= 2:
        consumed: set[str] = set()
        pointer = [0] * n_typed
        for j, members in enumerate(families):
            nxt = (j + 1) % n_typed
            for m in members:
                if m in consumed:
                    continue
                if rng.random() >= config.confusability:
                    continue
                while pointer[nxt] < len(families[nxt]):
                    cand = families[nxt][pointer[nxt]]
                    pointer[nxt] += 1
                    if cand not in consumed and cand not in partner_of:
                        partner_of[m] = cand
                        consumed.add(cand)
                        break

    labels: dict[str, list[str]] = {}
    for r in regions:
        labels[r] = [f"{tokens.fresh()} {tokens.fresh()} region"]
    for s in subjects:
        labels[s] = [f"{tokens.fresh()} {tokens.fresh()} person"]
    name_tokens: dict[str, tuple[str, str]] = {}
    consumed_partners = set(partner_of.values())
    for members in families:
        for m in members:
            if m not in consumed_partners:
                name_tokens[m] = (tokens.fresh(), tokens.fresh())
    for base, partner in partner_of.items():
        name_tokens[partner] = name_tokens[base]
    for j, members in enumerate(families):
        for m in members:
            ta, tb = name_tokens[m]
            labels[m] = [f"{ta} {tb} {classwords[j]}"]

    # Regional structure: every non-region entity sits in one region.
    triples: list[Triple] = []
    region_of: dict[str, str] = {}
    for e in subjects + [m for members in families for m in members]:
        r = regions[rng.randrange(n_regions)]
        region_of[e] = r
        triples.append(Triple(e, LOCATED_IN, Term(ENTITY, r)))
        triples.append(Triple(r, CONTAINS, Term(ENTITY, e)))

    # Data assertions: literal-valued facts about subjects.
    data_assertions: list[Triple] = []
    for p in data_props:
        participants = rng.sample(subjects, max(2, len(subjects) // 2))
        for s in participants:
            text = f"{tokens.fresh()} {tokens.fresh()} {tokens.fresh()}"
            data_assertions.append(Triple(s, p, literal(text)))
    triples.extend(data_assertions)

    # Typed object assertions, biased toward same-region objects.
    typed_assertions: list[Triple] = []
    for j, (p, functional) in enumerate(typed_props):
        members = families[j]
        participants = rng.sample(subjects, max(3, int(len(subjects) * 0.6)))
        for s in participants:
            count = 1 if functional else rng.randint(1, 3)
            chosen: set[str] = set()
            same_region = [m for m in members if region_of[m] == region_of[s]]
            for _ in range(count):
                for _attempt in range(8):
                    if same_region and rng.random() < config.same_region_bias:
                        o = same_region[rng.randrange(len(same_region))]
                    else:
                        o = members[rng.randrange(len(members))]
                    if o not in chosen:
                        chosen.add(o)
                        typed_assertions.append(Triple(s, p, Term(ENTITY, o)))
                        break
    triples.extend(typed_assertions)

    targets = _corrupt_assertions(
        config, rng, tokens, triples, typed_assertions, data_assertions,
        typed_props, labels, partner_of,
    )

    kb = KnowledgeBase(
        property_assertions=triples,
        class_assertions=class_assertions,
        subclass_edges=subclass_edges,
        labels=labels,
    )
    return kb, targets


def _corrupt_assertions(
    config, rng, tokens, triples, typed_assertions, data_assertions,
    typed_props, labels, partner_of,
):
    """Select true assertions, damage them in place, and record ground truth."""
    n_entity_gt = config.corruptions - config.empty_corruptions
    if config.corruptions == 0:
        return []
    if config.corruptions > len(typed_assertions) + len(data_assertions):
        raise ValueError("corruption count exceeds the generated assertions")

    functional = {p for p, is_f in typed_props if is_f}
    multiplicity = Counter((t.p, t.o.value) for t in typed_assertions)
    used_sp: set[tuple[str, str]] = set()
    removed: set[Triple] = set()

    def take(t: Triple) -> None:
        used_sp.add((t.s, t.p))
        multiplicity[(t.p, t.o.value)] -= 1
        removed.add(t)

    pool = typed_assertions[:]
    rng.shuffle(pool)

    swaps: list[Triple] = []
    want_swaps = n_entity_gt // 3
    for t in pool:
        if len(swaps) == want_swaps:
            break
        if (
            t.p not in functional
            and t not in removed
            and (t.s, t.p) not in used_sp
            and t.o.value in partner_of
            and multiplicity[(t.p, t.o.value)] >= 2
        ):
            take(t)
            swaps.append(t)

    lits: list[Triple] = []
    for t in pool:
        if len(swaps) + len(lits) == n_entity_gt:
            break
        if (
            t not in removed
            and (t.s, t.p) not in used_sp
            and multiplicity[(t.p, t.o.value)] >= 2
        ):
            take(t)
            lits.append(t)
    if len(swaps) + len(lits) < n_entity_gt:
        raise ValueError(
            "cannot place the requested corruptions: too few eligible assertions"
        )
    exact_lits = lits[: (len(lits) + 1) // 2]
    modified_lits = lits[(len(lits) + 1) // 2 :]

    data_pool = data_assertions[:]
    rng.shuffle(data_pool)
    empties: list[Triple] = []
    for t in data_pool:
        if len(empties) == config.empty_corruptions:
            break
        if t not in removed and (t.s, t.p) not in used_sp:
            take(t)
            empties.append(t)
    if len(empties) < config.empty_corruptions:
        raise ValueError("cannot place the requested empty corruptions")

    labelled_entities = sorted(e for e in labels if labels[e])
    targets: list[TargetAssertion] = []

    # Swapped-entity targets are flagged and quarantined: the erroneous
    # triple is not re-inserted, otherwise it would witness its own
    # features in the sub-graph and score as a true assertion.
    for t in swaps:
        wrong = partner_of[t.o.value]
        targets.append(
            TargetAssertion(t.s, t.p, Term(ENTITY, wrong), ground_truth=t.o.value)
        )
    for t in exact_lits:
        text = labels[t.o.value][0]
        triples.append(Triple(t.s, t.p, literal(text)))
        targets.append(TargetAssertion(t.s, t.p, literal(text), ground_truth=t.o.value))
    for t in modified_lits:
        words = labels[t.o.value][0].split()
        if rng.random() < 0.5:
            text = " ".join(words[:-1])  # drop the classword
        else:
            text = " ".join(words + [tokens.fresh()])
        triples.append(Triple(t.s, t.p, literal(text)))
        targets.append(TargetAssertion(t.s, t.p, literal(text), ground_truth=t.o.value))
    for i, t in enumerate(empties):
        if i % 2 == 0:
            decoy = labelled_entities[rng.randrange(len(labelled_entities))]
            text = f"{labels[decoy][0]} {tokens.fresh()}"
        else:
            text = f"{tokens.fresh()} {tokens.fresh()}"
        triples.append(Triple(t.s, t.p, literal(text)))
        targets.append(TargetAssertion(t.s, t.p, literal(text), ground_truth=""))

    triples[:] = [t for t in triples if t not in removed]
    return targets
