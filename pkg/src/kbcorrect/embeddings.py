"""Latent-feature link prediction: TransE and DistMult embeddings.

Both models train on the sub-graph with a margin-based ranking loss over
positive triples and per-batch random corruptions. TransE scores a triple
by the translation residual ``||e_s + e_p - e_o||`` (lower is better);
DistMult scores by the trilinear product ``sum(e_p * e_s * e_o)`` (higher
is better). ``likelihood`` orients both the same way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kb import Triple, sorted_triples
from .subgraph import SubGraph

MODEL_FORMAT = "kbcorrect-embed-1"

TRANSE = "transe"
DISTMULT = "distmult"


class MissingVectorError(KeyError):
    """A term has no embedding vector; names the offending term."""

    def __init__(self, term: str):
        super().__init__(term)
        self.term = term

    def __str__(self) -> str:
        return f"no embedding vector for {self.term!r}"


@dataclass
class TrainConfig:
    dim: int = 100
    margin_start: float = 1.0
    margin_end: float = 4.0
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 0
    negatives_per_positive: int = 1

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.margin_start <= 0 or self.margin_end <= 0:
            raise ValueError("margins must be positive")


@dataclass
class EmbeddingModel:
    kind: str
    dim: int
    entity_ids: tuple[str, ...]
    property_ids: tuple[str, ...]
    entity_vectors: np.ndarray
    property_vectors: np.ndarray
    seed: int
    history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.entity_index = {e: i for i, e in enumerate(self.entity_ids)}
        self.property_index = {p: i for i, p in enumerate(self.property_ids)}

    def entity_vector(self, e: str) -> np.ndarray:
        try:
            return self.entity_vectors[self.entity_index[e]]
        except KeyError:
            raise MissingVectorError(e) from None

    def property_vector(self, p: str) -> np.ndarray:
        try:
            return self.property_vectors[self.property_index[p]]
        except KeyError:
            raise MissingVectorError(p) from None


# -- scoring -----------------------------------------------------------------


def transe_score(m: EmbeddingModel, s: str, p: str, o: str) -> float:
    """Translation residual; 0 means a perfect match."""
    v = m.entity_vector(s) + m.property_vector(p) - m.entity_vector(o)
    return float(np.linalg.norm(v))


def distmult_score(m: EmbeddingModel, s: str, p: str, o: str) -> float:
    return float(np.sum(m.property_vector(p) * m.entity_vector(s) * m.entity_vector(o)))


def likelihood(m: EmbeddingModel, s: str, p: str, e: str) -> float:
    """Plausibility of ``(s, p, e)``; higher is better for both model kinds."""
    if m.kind == TRANSE:
        return -transe_score(m, s, p, e)
    if m.kind == DISTMULT:
        return distmult_score(m, s, p, e)
    raise ValueError(f"unknown model kind {m.kind!r}")


# -- loss and gradients ------------------------------------------------------


def margin_loss_and_grads(
    kind: str,
    ent: np.ndarray,
    prop: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    margin: float,
):
    """Summed hinge ranking loss and its gradients for paired triples.

    ``pos`` and ``neg`` are (n, 3) index arrays into the entity/property
    tables; row i of ``neg`` is the corruption of row i of ``pos``.
    """
    d_ent = np.zeros_like(ent)
    d_prop = np.zeros_like(prop)
    ps, pp, po = pos[:, 0], pos[:, 1], pos[:, 2]
    ns, np_, no = neg[:, 0], neg[:, 1], neg[:, 2]

    if kind == TRANSE:
        v_pos = ent[ps] + prop[pp] - ent[po]
        v_neg = ent[ns] + prop[np_] - ent[no]
        g_pos = np.linalg.norm(v_pos, axis=1)
        g_neg = np.linalg.norm(v_neg, axis=1)
        losses = margin + g_pos - g_neg
        active = losses > 0
        loss = float(np.sum(losses[active]))
        u_pos = v_pos[active] / np.maximum(g_pos[active], 1e-12)[:, None]
        u_neg = v_neg[active] / np.maximum(g_neg[active], 1e-12)[:, None]
        np.add.at(d_ent, ps[active], u_pos)
        np.add.at(d_ent, po[active], -u_pos)
        np.add.at(d_prop, pp[active], u_pos)
        np.add.at(d_ent, ns[active], -u_neg)
        np.add.at(d_ent, no[active], u_neg)
        np.add.at(d_prop, np_[active], -u_neg)
    elif kind == DISTMULT:
        g_pos = np.sum(prop[pp] * ent[ps] * ent[po], axis=1)
        g_neg = np.sum(prop[np_] * ent[ns] * ent[no], axis=1)
        losses = margin - g_pos + g_neg
        active = losses > 0
        loss = float(np.sum(losses[active]))
        np.add.at(d_ent, ps[active], -(prop[pp] * ent[po])[active])
        np.add.at(d_ent, po[active], -(prop[pp] * ent[ps])[active])
        np.add.at(d_prop, pp[active], -(ent[ps] * ent[po])[active])
        np.add.at(d_ent, ns[active], (prop[np_] * ent[no])[active])
        np.add.at(d_ent, no[active], (prop[np_] * ent[ns])[active])
        np.add.at(d_prop, np_[active], (ent[ns] * ent[no])[active])
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return loss, d_ent, d_prop


def _default_corrupt(rng, triple_idx, n_entities, triple_set):
    """Random subject-or-object replacement, avoiding known triples."""
    s, p, o = triple_idx
    for _ in range(10):
        if rng.integers(2) == 0:
            cand = (int(rng.integers(n_entities)), p, o)
        else:
            cand = (s, p, int(rng.integers(n_entities)))
        if cand not in triple_set:
            return cand
    return cand


def train(
    sub: SubGraph,
    config: TrainConfig,
    kind: str = TRANSE,
    negative_sampler=None,
) -> EmbeddingModel:
    """Mini-batch SGD on the margin ranking loss over the sub-graph triples.

    The margin grows linearly from ``margin_start`` to ``margin_end``
    across training steps. TransE entity vectors are re-normalized to unit
    length at every epoch start and once more after the final epoch.
    Deterministic for a fixed config seed.
    """
    if kind not in (TRANSE, DISTMULT):
        raise ValueError(f"unknown model kind {kind!r}")
    if not sub.triples:
        raise ValueError("cannot train on an empty triple set")
    if len(sub.entities) < 2:
        raise ValueError("training requires at least 2 entities")

    entity_ids = tuple(sorted(sub.entities))
    property_ids = tuple(sorted(sub.properties))
    e_index = {e: i for i, e in enumerate(entity_ids)}
    p_index = {p: i for i, p in enumerate(property_ids)}
    triples = sorted_triples(sub.triples)
    pos = np.array(
        [(e_index[t.s], p_index[t.p], e_index[t.o.value]) for t in triples], dtype=np.int64
    )
    triple_set = {tuple(row) for row in pos.tolist()}

    rng = np.random.default_rng(config.seed)
    limit = 6.0 / np.sqrt(config.dim)
    ent = rng.uniform(-limit, limit, size=(len(entity_ids), config.dim))
    prop = rng.uniform(-limit, limit, size=(len(property_ids), config.dim))
    corrupt = negative_sampler or _default_corrupt

    n = pos.shape[0]
    batches_per_epoch = (n + config.batch_size - 1) // config.batch_size
    total_steps = max(config.epochs * batches_per_epoch, 1)
    history: list[float] = []
    step = 0
    for _epoch in range(config.epochs):
        if kind == TRANSE:
            ent /= np.maximum(np.linalg.norm(ent, axis=1, keepdims=True), 1e-12)
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = pos[perm[start : start + config.batch_size]]
            frac = step / (total_steps - 1) if total_steps > 1 else 0.0
            margin = config.margin_start + (config.margin_end - config.margin_start) * frac
            neg_rows = []
            for row in batch:
                for _ in range(config.negatives_per_positive):
                    neg_rows.append(corrupt(rng, tuple(row), len(entity_ids), triple_set))
            neg = np.array(neg_rows, dtype=np.int64)
            pos_batch = (
                batch
                if config.negatives_per_positive == 1
                else np.repeat(batch, config.negatives_per_positive, axis=0)
            )
            loss, d_ent, d_prop = margin_loss_and_grads(kind, ent, prop, pos_batch, neg, margin)
            scale = config.learning_rate / len(pos_batch)
            ent -= scale * d_ent
            prop -= scale * d_prop
            epoch_loss += loss
            step += 1
        if not (np.all(np.isfinite(ent)) and np.all(np.isfinite(prop))):
            raise FloatingPointError("training produced non-finite embeddings")
        history.append(epoch_loss / n)
    if kind == TRANSE:
        ent /= np.maximum(np.linalg.norm(ent, axis=1, keepdims=True), 1e-12)

    model = EmbeddingModel(
        kind=kind,
        dim=config.dim,
        entity_ids=entity_ids,
        property_ids=property_ids,
        entity_vectors=ent,
        property_vectors=prop,
        seed=config.seed,
    )
    model.history = history
    return model


# -- persistence -------------------------------------------------------------


def save_embedding(model: EmbeddingModel, path: str | Path) -> None:
    meta = {
        "format": MODEL_FORMAT,
        "kind": model.kind,
        "dim": model.dim,
        "entities": len(model.entity_ids),
        "properties": len(model.property_ids),
        "seed": model.seed,
    }
    np.savez(
        path,
        meta=np.array(json.dumps(meta, sort_keys=True)),
        entity_ids=np.array(model.entity_ids),
        property_ids=np.array(model.property_ids),
        entity_vectors=model.entity_vectors,
        property_vectors=model.property_vectors,
    )


def load_embedding(path: str | Path) -> EmbeddingModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {meta.get('format')!r}")
        return EmbeddingModel(
            kind=meta["kind"],
            dim=meta["dim"],
            entity_ids=tuple(data["entity_ids"].tolist()),
            property_ids=tuple(data["property_ids"].tolist()),
            entity_vectors=data["entity_vectors"],
            property_vectors=data["property_vectors"],
            seed=meta["seed"],
        )
