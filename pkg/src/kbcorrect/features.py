"""Observed features for link prediction: connecting paths and node bits.

Path features enumerate property paths of depth one and two between the
subject and object, in both directions. Node features record whether the
subject/object already plays its role for the assertion's property
anywhere in the sub-graph.
"""

from __future__ import annotations

import numpy as np

from .kb import Triple, sorted_triples
from .subgraph import SampleSet, SubGraph, graph_index

# A path key is (direction, property sequence); depth is the sequence
# length. Under merge_directions the direction tag is dropped, collapsing
# the two orientations the way a plain path union would.
PathKey = tuple[str, tuple[str, ...]]


def node_feature(sub: SubGraph, s: str, p: str, o: str) -> np.ndarray:
    """Two bits: s is some subject of p, o is some object of p."""
    idx = graph_index(sub)
    return np.array(
        [float(idx.is_subject_of(s, p)), float(idx.is_object_of(o, p))],
        dtype=np.float64,
    )


def path_features(
    sub: SubGraph, s: str, o: str, merge_directions: bool = False
) -> frozenset[PathKey]:
    """Connecting paths of depth <= 2 between ``s`` and ``o``, tagged by direction."""
    idx = graph_index(sub)
    keys: set[PathKey] = set()

    def add(direction: str, seq: tuple[str, ...]):
        keys.add(("", seq) if merge_directions else (direction, seq))

    for p0, obj in idx.out_edges.get(s, ()):
        if obj == o:
            add("so", (p0,))
    for p0, obj in idx.out_edges.get(o, ()):
        if obj == s:
            add("os", (p0,))
    for p1, mid in idx.out_edges.get(s, ()):
        for p2, obj in idx.out_edges.get(mid, ()):
            if obj == o:
                add("so", (p1, p2))
    for p1, mid in idx.out_edges.get(o, ()):
        for p2, obj in idx.out_edges.get(mid, ()):
            if obj == s:
                add("os", (p1, p2))
    return frozenset(keys)


class PathVocabulary:
    """Stable slot assignment for observed path keys."""

    def __init__(self, keys: list[PathKey], merge_directions: bool = False):
        if len(keys) != len(set(keys)):
            raise ValueError("vocabulary keys must be unique")
        self.keys: tuple[PathKey, ...] = tuple(keys)
        self.index: dict[PathKey, int] = {k: i for i, k in enumerate(self.keys)}
        self.merge_directions = merge_directions

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def feature_width(self) -> int:
        return len(self.keys) + 2


def build_vocabulary(
    samples: SampleSet, sub: SubGraph, merge_directions: bool = False
) -> PathVocabulary:
    """Unique paths over all samples, in first-seen order.

    Samples iterate positives then negatives, each sorted, and each
    sample's path set is visited in sorted order, so the slot layout is
    reproducible.
    """
    keys: list[PathKey] = []
    seen: set[PathKey] = set()
    for t in sorted_triples(samples.positives) + sorted_triples(samples.negatives):
        for key in sorted(path_features(sub, t.s, t.o.value, merge_directions)):
            if key not in seen:
                seen.add(key)
                keys.append(key)
    return PathVocabulary(keys, merge_directions)


def encode(vocab: PathVocabulary, sub: SubGraph, s: str, p: str, o: str) -> np.ndarray:
    """Multi-hot path bits over the vocabulary plus the two node bits."""
    vec = np.zeros(vocab.feature_width, dtype=np.float64)
    for key in path_features(sub, s, o, vocab.merge_directions):
        slot = vocab.index.get(key)
        if slot is not None:
            vec[slot] = 1.0
    vec[len(vocab) :] = node_feature(sub, s, p, o)
    return vec


def encode_triples(vocab: PathVocabulary, sub: SubGraph, triples: list[Triple]) -> np.ndarray:
    return np.stack([encode(vocab, sub, t.s, t.p, t.o.value) for t in triples])
