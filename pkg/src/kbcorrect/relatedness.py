"""Related-entity estimation: candidate substitutes for a flagged assertion.

Three interchangeable methods produce a ranked, duplicate-free candidate
list capped at ``k``: sub-phrase lookup against a lexical index or remote
service, minimum label edit distance, and averaged word-vector cosine
similarity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .kb import ENTITY, KnowledgeBase, Term
from .lexical import fold_text, text_tokens

STOP_WORDS_VERSION = "en-1"

#: Fixed English stop-word list shipped with the package (deployments may
#: substitute their own via the ``stop_words`` parameters).
STOP_WORDS = frozenset("""
a about above after again against all am an and any are as at be because been
before being below between both but by did do does doing down during each few
for from further had has have having he her here hers him his how i if in into
is it its itself just me more most my no nor not now of off on once only or
other our out over own same she should so some such than that the their theirs
them then there these they this those through to too under until up very was we
were what when where which while who whom why will with you your
""".split())

#: Operating-point defaults for the candidate cap, per method.
DEFAULT_K_LOOKUP = 30
DEFAULT_K_EDIT = 76


class LookupStarError(RuntimeError):
    """A lookup provider failed; carries the sub-phrase that was being queried."""

    def __init__(self, sub_phrase: str, cause: Exception):
        super().__init__(f"lookup failed for sub-phrase {sub_phrase!r}: {cause}")
        self.sub_phrase = sub_phrase


@dataclass(frozen=True)
class TargetAssertion:
    """An assertion flagged as erroneous, with optional ground truth.

    ``ground_truth`` is an entity id, ``""`` for "no valid substitute
    exists", or ``None`` when unannotated.
    """

    s: str
    p: str
    o: Term
    ground_truth: str | None = None

    @property
    def has_entity_gt(self) -> bool:
        return bool(self.ground_truth)

    @property
    def has_empty_gt(self) -> bool:
        return self.ground_truth == ""

    def key(self) -> tuple[str, str, str, str]:
        return (self.s, self.p, self.o.kind, self.o.value)


@dataclass(frozen=True)
class CandidateList:
    """Ranked candidate substitutes for one target, capped at ``k``."""

    target: TargetAssertion | None
    entities: tuple[tuple[str, float], ...]
    k: int

    def __post_init__(self):
        ids = [e for e, _ in self.entities]
        if len(ids) != len(set(ids)):
            raise ValueError("candidate list contains duplicates")
        if len(ids) > self.k:
            raise ValueError(f"candidate list exceeds cap k={self.k}")

    def entity_ids(self) -> list[str]:
        return [e for e, _ in self.entities]


# -- phrase handling ---------------------------------------------------------


def normalize_phrase(phrase: str, stop_words: frozenset[str] = STOP_WORDS) -> list[str]:
    """Lowercased tokens with stop words removed, original order kept."""
    return [t for t in text_tokens(phrase) if t not in stop_words]


def sub_phrases(tokens: Sequence[str]) -> list[str]:
    """All contiguous sub-phrases, longest first, then by start position."""
    n = len(tokens)
    out = []
    for length in range(n, 0, -1):
        for start in range(n - length + 1):
            out.append(" ".join(tokens[start : start + length]))
    return out


def target_phrase(target: TargetAssertion, kb: KnowledgeBase) -> str:
    """The query phrase for a target: the literal itself, or the object's label."""
    if not target.o.is_entity:
        return target.o.value
    labs = kb.labels.get(target.o.value, ())
    return labs[0] if labs else target.o.value


# -- lookup with sub-phrases -------------------------------------------------


def lookup_star(
    provider,
    phrase: str,
    k: int,
    stop_words: frozenset[str] = STOP_WORDS,
) -> list[tuple[str, float]]:
    """Repeated lookup over longest-first sub-phrases of ``phrase``.

    Result lists are concatenated in sub-phrase order and deduplicated
    keeping the first occurrence, stopping once ``k`` entities are
    collected. Providers exposing ``rerank``/``similarity`` (the local
    index) get each sub-list reordered by similarity to the original
    phrase; otherwise the provider's order is trusted and scores fall back
    to reciprocal positions.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = normalize_phrase(phrase, stop_words)
    collected: list[tuple[str, float]] = []
    seen: set[str] = set()
    for sub in sub_phrases(tokens):
        try:
            ids = provider.lookup(sub, k)
        except Exception as exc:  # noqa: BLE001 - wrapped with context
            raise LookupStarError(sub, exc) from exc
        if hasattr(provider, "rerank"):
            ids = provider.rerank(ids, phrase)
        for e in ids:
            if e in seen:
                continue
            seen.add(e)
            if hasattr(provider, "similarity"):
                score = provider.similarity(phrase, e)
            else:
                score = 1.0 / (1 + len(collected))
            collected.append((e, score))
            if len(collected) >= k:
                return collected
    return collected


# -- edit distance -----------------------------------------------------------


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit-cost insert/delete/substitute."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[len(b)]


def edit_candidates(kb: KnowledgeBase, phrase: str, k: int) -> list[tuple[str, float]]:
    """Labelled entities ranked by ascending minimum label edit distance.

    Strings are case-folded before comparison; the recorded score is the
    distance itself (smaller is more related). Ties break by entity id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    folded = fold_text(phrase).strip()
    scored = []
    for e in sorted(kb.labels):
        labs = kb.labels[e]
        if not labs:
            continue
        d = min(edit_distance(folded, fold_text(lab).strip()) for lab in labs)
        scored.append((e, float(d)))
    scored.sort(key=lambda pair: (pair[1], pair[0]))
    return scored[:k]


# -- word vectors ------------------------------------------------------------


class WordVecModel:
    """Token-to-vector table with a fixed dimension."""

    def __init__(self, vocabulary: dict[str, np.ndarray], dim: int):
        self.vocabulary = vocabulary
        self.dim = dim


def load_word_vectors(path: str | Path) -> WordVecModel:
    """Load a text vector file: ``token v1 v2 ... vd`` per line.

    A first line of exactly two integer fields is treated as a
    ``count dim`` header and skipped.
    """
    vocab: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if line_no == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue
                except ValueError:
                    pass
            token, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: bad vector value ({exc})") from exc
            if dim is None:
                dim = vec.shape[0]
                if dim == 0:
                    raise ValueError(f"{path}:{line_no}: empty vector")
            elif vec.shape[0] != dim:
                raise ValueError(
                    f"{path}:{line_no}: dimension {vec.shape[0]} != {dim}"
                )
            vocab[token] = vec
    if dim is None:
        raise ValueError(f"{path}: no vectors found")
    return WordVecModel(vocab, dim)


def phrase_vector(
    model: WordVecModel,
    phrase: str | Sequence[str],
    stop_words: frozenset[str] = STOP_WORDS,
) -> np.ndarray:
    """Mean vector of in-vocabulary tokens; zero vector when none are known."""
    tokens = normalize_phrase(phrase, stop_words) if isinstance(phrase, str) else phrase
    vecs = [model.vocabulary[t] for t in tokens if t in model.vocabulary]
    if not vecs:
        return np.zeros(model.dim, dtype=np.float64)
    return np.mean(vecs, axis=0)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def wordvec_candidates(
    model: WordVecModel,
    kb: KnowledgeBase,
    phrase: str,
    k: int,
    stop_words: frozenset[str] = STOP_WORDS,
) -> list[tuple[str, float]]:
    """Labelled entities ranked by cosine similarity of averaged vectors.

    An entity's relatedness is the maximum similarity over its labels;
    all-out-of-vocabulary phrases score 0. Ties break by entity id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pv = phrase_vector(model, phrase, stop_words)
    scored = []
    for e in sorted(kb.labels):
        labs = kb.labels[e]
        if not labs:
            continue
        sim = max(
            cosine_similarity(pv, phrase_vector(model, lab, stop_words)) for lab in labs
        )
        scored.append((e, sim))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


# -- method dispatch ---------------------------------------------------------


def candidates_for_target(
    target: TargetAssertion,
    kb: KnowledgeBase,
    method: str,
    k: int,
    provider=None,
    wordvec: WordVecModel | None = None,
    stop_words: frozenset[str] = STOP_WORDS,
) -> CandidateList:
    """Run one estimation method for a target and wrap the result."""
    phrase = target_phrase(target, kb)
    if method == "lookup_star":
        if provider is None:
            raise ValueError("lookup_star requires a lookup provider")
        pairs = lookup_star(provider, phrase, k, stop_words)
    elif method == "edit":
        pairs = edit_candidates(kb, phrase, k)
    elif method == "wordvec":
        if wordvec is None:
            raise ValueError("wordvec method requires a word-vector model")
        pairs = wordvec_candidates(wordvec, kb, phrase, k, stop_words)
    else:
        raise ValueError(f"unknown candidate method {method!r}")
    return CandidateList(target=target, entities=tuple(pairs), k=k)


# -- file formats ------------------------------------------------------------


def read_targets(path: str | Path) -> list[TargetAssertion]:
    """Read JSON Lines target records ``{s, p, o, o_kind, gt}``."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                out.append(
                    TargetAssertion(
                        s=rec["s"],
                        p=rec["p"],
                        o=Term(rec.get("o_kind", ENTITY), rec["o"]),
                        ground_truth=rec.get("gt"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad target record ({exc})") from exc
    return out


def write_targets(targets: Iterable[TargetAssertion], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in targets:
            rec = {"s": t.s, "p": t.p, "o": t.o.value, "o_kind": t.o.kind, "gt": t.ground_truth}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_candidates(candidate_lists: Iterable[CandidateList], path: str | Path) -> None:
    """Dump one JSON line per target with its ranked candidates."""
    with open(path, "w", encoding="utf-8") as fh:
        for cl in candidate_lists:
            t = cl.target
            rec = {
                "s": t.s,
                "p": t.p,
                "o": t.o.value,
                "o_kind": t.o.kind,
                "candidates": [
                    {"entity": e, "score": score, "rank": i + 1}
                    for i, (e, score) in enumerate(cl.entities)
                ],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_candidates(path: str | Path, targets: Sequence[TargetAssertion], k: int) -> dict:
    """Re-attach a candidate dump to its targets, keyed by TargetAssertion."""
    by_key = {t.key(): t for t in targets}
    out: dict[TargetAssertion, CandidateList] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            key = (rec["s"], rec["p"], rec["o_kind"], rec["o"])
            target = by_key.get(key)
            if target is None:
                continue
            pairs = tuple(
                (c["entity"], float(c["score"]))
                for c in sorted(rec["candidates"], key=lambda c: c["rank"])
            )
            out[target] = CandidateList(target=target, entities=pairs, k=max(k, len(pairs)))
    return out
