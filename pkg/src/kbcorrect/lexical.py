"""Lexical entity index and lookup providers.

Fuzzy entity access works through a single provider interface: anything
with ``lookup(phrase, k) -> list[entity id]``. The local
:class:`LexicalIndex` ranks by token overlap; :class:`RemoteLookup` defers
ranking to an HTTP service.
"""

from __future__ import annotations

import json
import re
import unicodedata
import urllib.parse
import urllib.request
from collections import defaultdict

from .kb import KnowledgeBase

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def fold_text(text: str) -> str:
    """Case-fold and NFC-normalize a string."""
    return unicodedata.normalize("NFC", text).casefold()


def text_tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(fold_text(text))


def token_jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


class LexicalIndex:
    """Inverted token index over entity labels and anchor text.

    Ranking is token-Jaccard between the query phrase and the entity's
    concatenated indexed text; ties break by shorter label, then entity id,
    so results are fully deterministic.
    """

    def __init__(self, kb: KnowledgeBase):
        self.postings: dict[str, set[tuple[str, str]]] = defaultdict(set)
        self.entity_tokens: dict[str, frozenset[str]] = {}
        self._min_label_len: dict[str, int] = {}

        per_entity: dict[str, set[str]] = defaultdict(set)
        for e, labs in kb.labels.items():
            for lab in labs:
                toks = text_tokens(lab)
                per_entity[e].update(toks)
                for tok in toks:
                    self.postings[tok].add((e, "label"))
            if labs:
                self._min_label_len[e] = min(len(lab) for lab in labs)
        for e, text in kb.anchor_text.items():
            toks = text_tokens(text)
            per_entity[e].update(toks)
            for tok in toks:
                self.postings[tok].add((e, "anchor"))
        self.entity_tokens = {e: frozenset(ts) for e, ts in per_entity.items()}

    def similarity(self, phrase: str, e: str) -> float:
        return token_jaccard(
            frozenset(text_tokens(phrase)), self.entity_tokens.get(e, frozenset())
        )

    def _rank_key(self, phrase_tokens: frozenset[str]):
        def key(e: str):
            score = token_jaccard(phrase_tokens, self.entity_tokens[e])
            return (-score, self._min_label_len.get(e, 1 << 30), e)

        return key

    def lookup(self, phrase: str, k: int) -> list[str]:
        """Top-``k`` entities sharing at least one token with ``phrase``."""
        if k < 1:
            raise ValueError("k must be >= 1")
        toks = frozenset(text_tokens(phrase))
        hits = {e for tok in toks for e, _field in self.postings.get(tok, ())}
        return sorted(hits, key=self._rank_key(toks))[:k]

    def rerank(self, entity_ids: list[str], phrase: str) -> list[str]:
        """Reorder a result list by similarity to ``phrase`` (same tie-break)."""
        toks = frozenset(text_tokens(phrase))
        known = [e for e in entity_ids if e in self.entity_tokens]
        unknown = [e for e in entity_ids if e not in self.entity_tokens]
        return sorted(known, key=self._rank_key(toks)) + unknown


def build_lexical_index(kb: KnowledgeBase) -> LexicalIndex:
    return LexicalIndex(kb)


def lookup(index: LexicalIndex, phrase: str, k: int) -> list[str]:
    return index.lookup(phrase, k)


class RemoteLookup:
    """Entity lookup backed by an HTTP service.

    Issues ``GET <base_url>?q=<phrase>&max=<k>`` and expects a JSON array of
    entity ids in rank order. The provider's own ranking is trusted.
    """

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url
        self.timeout = timeout

    def lookup(self, phrase: str, k: int) -> list[str]:
        if k < 1:
            raise ValueError("k must be >= 1")
        query = urllib.parse.urlencode({"q": phrase, "max": k})
        url = f"{self.base_url}?{query}"
        with urllib.request.urlopen(url, timeout=self.timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        if not isinstance(payload, list):
            raise ValueError(f"lookup service returned non-array payload from {url}")
        return [str(e) for e in payload][:k]
