"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written as plain, brute-force code with no
imports from the implementation internals beyond the public data types, so
a bug in an optimized code path cannot hide in its own oracle.
"""

from __future__ import annotations

import random

from kbcorrect.kb import ENTITY, KnowledgeBase, Term, Triple


def warshall_closure(nodes: list[str], edges: list[tuple[str, str]]) -> dict[str, set[str]]:
    """Strict reachability via boolean Floyd-Warshall."""
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    reach = [[False] * n for _ in range(n)]
    for a, b in edges:
        reach[index[a]][index[b]] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                row_i, row_k = reach[i], reach[k]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return {a: {b for b in nodes if reach[index[a]][index[b]]} for a in nodes}


def brute_specific_classes(declared: set[str], closure: dict[str, set[str]]) -> set[str]:
    return {
        c
        for c in declared
        if not any(c in closure.get(d, set()) for d in declared if d != c)
    }


def brute_general_classes(
    declared: set[str], closure: dict[str, set[str]], top: set[str]
) -> set[str]:
    specific = brute_specific_classes(declared, closure)
    ancestors = set()
    for c in specific:
        ancestors |= closure.get(c, set())
    return ancestors - top - specific


def exhaustive_lookup(kb: KnowledgeBase, phrase: str, k: int) -> list[str]:
    """Score every labelled entity with token Jaccard; no index involved."""
    import re
    import unicodedata

    def toks(text):
        return set(re.findall(r"\w+", unicodedata.normalize("NFC", text).casefold()))

    phrase_tokens = toks(phrase)
    scored = []
    for e in kb.entities:
        pieces = list(kb.labels.get(e, ()))
        if e in kb.anchor_text:
            pieces.append(kb.anchor_text[e])
        if not pieces:
            continue
        entity_tokens = set()
        for piece in pieces:
            entity_tokens |= toks(piece)
        if not (phrase_tokens & entity_tokens):
            continue
        score = len(phrase_tokens & entity_tokens) / len(phrase_tokens | entity_tokens)
        min_label = min((len(lab) for lab in kb.labels.get(e, ())), default=1 << 30)
        scored.append((-score, min_label, e))
    scored.sort()
    return [e for _neg, _len, e in scored[:k]]


def levenshtein_table(a: str, b: str) -> int:
    """Full dynamic-programming matrix."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return table[len(a)][len(b)]


def subgraph_comprehension(kb, targets, candidate_map):
    """Literal set-comprehension transcription of the extraction steps.

    Returns (E, P, T, SE, RE) as plain sets of ids/triples.
    """
    se = {t.s for t in targets}
    p = {t.p for t in targets}
    re_ = set()
    for t in targets:
        cl = candidate_map.get(t)
        if cl is not None:
            re_ |= set(cl.entity_ids())
    e = se | re_ | {t.o.value for t in targets if t.o.is_entity}

    entity_triples = {t for t in kb.property_assertions if t.o.is_entity}
    big_t = {t for t in entity_triples if t.p in p}
    big_t |= {t for t in entity_triples if t.s in e or t.o.value in e}
    e = e | {t.s for t in big_t} | {t.o.value for t in big_t}
    p = p | {t.p for t in big_t}
    return e, p, big_t, se, re_


def path_triple_loops(triples: set[Triple], s: str, o: str) -> set[tuple[str, tuple[str, ...]]]:
    """Brute enumeration of depth-1/2 connecting paths over raw triples."""
    out = set()
    for t in triples:
        if t.s == s and t.o.value == o:
            out.add(("so", (t.p,)))
        if t.s == o and t.o.value == s:
            out.add(("os", (t.p,)))
    for t1 in triples:
        for t2 in triples:
            if t1.o.value == t2.s:
                if t1.s == s and t2.o.value == o:
                    out.add(("so", (t1.p, t2.p)))
                if t1.s == o and t2.o.value == s:
                    out.add(("os", (t1.p, t2.p)))
    return out


def consistency_transcription(
    existing_objects: set[str],
    e: str,
    dist: dict[int, float],
    on_max: int,
    sigma: float,
    specific: dict[str, float],
    general: dict[str, float],
    classes_of_e: set[str],
    w_specific: float,
    w_general: float,
) -> tuple[float, float]:
    """Straight-line transcription of the consistency-checking procedure."""
    n = len(existing_objects | {e})
    if on_max == 0:
        y_car = 0.0
    else:
        r = (n - on_max) / on_max
        if r >= sigma:
            y_car = 0.0
        elif n == 1:
            y_car = dist.get(1, 0.0)
        else:
            tail = 0.0
            for k in range(2, on_max + 1):
                tail += dist.get(k, 0.0)
            if r <= 0:
                y_car = tail
            else:
                y_car = (1 - r) * tail
            if y_car < 0:
                y_car = 0.0
    prod_c = 1.0
    for c in specific:
        if c in classes_of_e:
            prod_c *= 1 - specific[c]
    prod_g = 1.0
    for c in general:
        if c in classes_of_e:
            prod_g *= 1 - general[c]
    y_ran = w_specific * (1 - prod_c) + w_general * (1 - prod_g)
    return y_car, y_ran


def brute_cardinality(kb: KnowledgeBase, p: str) -> tuple[dict[int, float], int]:
    """Group-by-subject over a raw scan of the assertion set."""
    per_subject: dict[str, set[str]] = {}
    for t in kb.property_assertions:
        if t.p == p and t.o.kind == ENTITY:
            per_subject.setdefault(t.s, set()).add(t.o.value)
    if not per_subject:
        return {}, 0
    counts = sorted(len(v) for v in per_subject.values())
    dist = {}
    for k in set(counts):
        dist[k] = sum(1 for c in counts if c == k) / len(counts)
    return dist, max(counts)


def brute_range(
    kb: KnowledgeBase, p: str, closure: dict[str, set[str]]
) -> tuple[dict[str, float], dict[str, float]]:
    """Per-object class minimality/ancestry computed from the raw closure."""
    objects = {t.o.value for t in kb.property_assertions if t.p == p and t.o.kind == ENTITY}
    if not objects:
        return {}, {}
    specific_counts: dict[str, int] = {}
    general_counts: dict[str, int] = {}
    for oe in objects:
        declared = set(kb.class_assertions.get(oe, set()))
        spec = brute_specific_classes(declared, closure)
        gen = brute_general_classes(declared, closure, set(kb.top_classes))
        for c in spec:
            specific_counts[c] = specific_counts.get(c, 0) + 1
        for c in gen:
            general_counts[c] = general_counts.get(c, 0) + 1
    n = len(objects)
    return (
        {c: v / n for c, v in specific_counts.items()},
        {c: v / n for c, v in general_counts.items()},
    )


# -- random instance builders --------------------------------------------------


def random_class_forest(rng: random.Random, n_classes: int) -> tuple[list[str], list[tuple[str, str]]]:
    """Acyclic hierarchy: each class may point to higher-numbered parents."""
    classes = [f"c{i}" for i in range(n_classes)]
    edges = []
    for i in range(n_classes - 1):
        for j in range(i + 1, n_classes):
            if rng.random() < 0.25:
                edges.append((classes[i], classes[j]))
    return classes, edges


def random_kb(
    rng: random.Random,
    n_entities: int = 30,
    n_properties: int = 5,
    n_classes: int = 8,
    n_triples: int = 60,
    literal_share: float = 0.2,
    with_labels: bool = True,
) -> KnowledgeBase:
    entities = [f"e{i}" for i in range(n_entities)]
    properties = [f"p{i}" for i in range(n_properties)]
    classes, edges = random_class_forest(rng, n_classes)
    class_assertions = {
        e: {rng.choice(classes) for _ in range(rng.randint(0, 2))} for e in entities
    }
    triples = set()
    for _ in range(n_triples):
        s = rng.choice(entities)
        p = rng.choice(properties)
        if rng.random() < literal_share:
            o = Term("literal", f"text {rng.randint(0, 99)}")
        else:
            o = Term(ENTITY, rng.choice(entities))
        triples.add(Triple(s, p, o))
    labels = {}
    if with_labels:
        words = ["alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "zeta"]
        for e in entities:
            labels[e] = [" ".join(rng.sample(words, rng.randint(1, 3)))]
    return KnowledgeBase(
        property_assertions=triples,
        class_assertions={e: c for e, c in class_assertions.items() if c},
        subclass_edges=edges,
        labels=labels,
    )
