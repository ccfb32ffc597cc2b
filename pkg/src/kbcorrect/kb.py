"""In-memory triple store with subclass inference and indexed access paths.

The store keeps property assertions, class assertions, an acyclic
``rdfs:subClassOf`` hierarchy and entity labels/anchor text. Everything is
immutable after construction, so a loaded knowledge base can be shared
freely between threads.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)

RDF_TYPE = "rdf:type"
RDFS_SUBCLASS_OF = "rdfs:subClassOf"

ENTITY = "entity"
LITERAL = "literal"

#: Classes treated as the universal top and excluded from general ranges.
DEFAULT_TOP_CLASSES = frozenset({"owl:Thing", "rdfs:Resource"})


class KbParseError(ValueError):
    """A source file line could not be parsed."""

    def __init__(self, path: str | Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class SubclassCycleError(ValueError):
    """The subclass graph contains a cycle; ``member`` is one class on it."""

    def __init__(self, member: str):
        super().__init__(f"subclass hierarchy contains a cycle through {member!r}")
        self.member = member


class UnknownEntityError(KeyError):
    """An operation referenced an entity the knowledge base does not contain."""

    def __init__(self, entity: str):
        super().__init__(entity)
        self.entity = entity

    def __str__(self) -> str:
        return f"unknown entity {self.entity!r}"


@dataclass(frozen=True)
class Term:
    """Object position of a triple: an entity reference or a literal value."""

    kind: str
    value: str

    def __post_init__(self):
        if self.kind not in (ENTITY, LITERAL):
            raise ValueError(f"bad term kind {self.kind!r}")
        if self.kind == ENTITY and not self.value:
            raise ValueError("entity term requires a non-empty id")

    @property
    def is_entity(self) -> bool:
        return self.kind == ENTITY


def entity(value: str) -> Term:
    return Term(ENTITY, value)


def literal(value: str) -> Term:
    return Term(LITERAL, value)


@dataclass(frozen=True)
class Triple:
    """One property assertion ``subject property object``."""

    s: str
    p: str
    o: Term

    def __post_init__(self):
        if not self.s or not self.p:
            raise ValueError("triple requires non-empty subject and property")

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.s, self.p, self.o.kind, self.o.value)


def sorted_triples(triples: Iterable[Triple]) -> list[Triple]:
    return sorted(triples, key=Triple.sort_key)


class KnowledgeBase:
    """Immutable triple store over property assertions, classes and labels.

    Entailment is deliberately asymmetric: property assertions are entailed
    only when declared, while class membership is closed under the
    ``rdfs:subClassOf`` hierarchy.
    """

    def __init__(
        self,
        property_assertions: Iterable[Triple] = (),
        class_assertions: Mapping[str, Iterable[str]] | None = None,
        subclass_edges: Iterable[tuple[str, str]] = (),
        labels: Mapping[str, Iterable[str]] | None = None,
        anchor_text: Mapping[str, str] | None = None,
        top_classes: Iterable[str] = DEFAULT_TOP_CLASSES,
    ):
        self.property_assertions: frozenset[Triple] = frozenset(property_assertions)
        self.class_assertions: dict[str, frozenset[str]] = {
            e: frozenset(cs) for e, cs in (class_assertions or {}).items()
        }
        self.labels: dict[str, tuple[str, ...]] = {
            e: tuple(ls) for e, ls in (labels or {}).items()
        }
        self.anchor_text: dict[str, str] = dict(anchor_text or {})
        self.top_classes: frozenset[str] = frozenset(top_classes)

        supers: dict[str, set[str]] = defaultdict(set)
        for sub, sup in subclass_edges:
            supers[sub].add(sup)
        self.subclass_of: dict[str, frozenset[str]] = {
            c: frozenset(s) for c, s in supers.items()
        }
        self._check_acyclic()

        self._by_property: dict[str, set[Triple]] = defaultdict(set)
        self._by_subject: dict[str, set[Triple]] = defaultdict(set)
        self._by_object: dict[str, set[Triple]] = defaultdict(set)
        for t in self.property_assertions:
            self._by_property[t.p].add(t)
            self._by_subject[t.s].add(t)
            if t.o.is_entity:
                self._by_object[t.o.value].add(t)

        ents: set[str] = set()
        for t in self.property_assertions:
            ents.add(t.s)
            if t.o.is_entity:
                ents.add(t.o.value)
        ents.update(self.class_assertions)
        ents.update(self.labels)
        ents.update(self.anchor_text)
        self.entities: frozenset[str] = frozenset(ents)
        self.properties: frozenset[str] = frozenset(self._by_property)

        self._ancestors: dict[str, frozenset[str]] = {}

    # -- hierarchy ---------------------------------------------------------

    def _check_acyclic(self) -> None:
        # Iterative three-colour DFS; a back edge names the cycle member.
        WHITE, GREY, BLACK = 0, 1, 2
        colour: dict[str, int] = defaultdict(int)
        for start in sorted(self.subclass_of):
            if colour[start] != WHITE:
                continue
            stack: list[tuple[str, bool]] = [(start, False)]
            while stack:
                node, done = stack.pop()
                if done:
                    colour[node] = BLACK
                    continue
                if colour[node] == BLACK:
                    continue
                if colour[node] == GREY:
                    raise SubclassCycleError(node)
                colour[node] = GREY
                stack.append((node, True))
                for sup in sorted(self.subclass_of.get(node, ())):
                    if colour[sup] == GREY:
                        raise SubclassCycleError(sup)
                    if colour[sup] == WHITE:
                        stack.append((sup, False))

    def class_ancestors(self, c: str) -> frozenset[str]:
        """Strict ancestors of ``c`` under the subclass closure."""
        cached = self._ancestors.get(c)
        if cached is not None:
            return cached
        seen: set[str] = set()
        frontier = list(self.subclass_of.get(c, ()))
        while frontier:
            node = frontier.pop()
            if node in seen:
                continue
            seen.add(node)
            frontier.extend(self.subclass_of.get(node, ()))
        result = frozenset(seen)
        self._ancestors[c] = result
        return result

    # -- entailment --------------------------------------------------------

    def declared_classes(self, e: str) -> frozenset[str]:
        return self.class_assertions.get(e, frozenset())

    def entails_type(self, e: str, c: str) -> bool:
        """True iff ``c`` is declared for ``e`` or reachable via subclass edges."""
        declared = self.class_assertions.get(e)
        if not declared:
            return False
        if c in declared:
            return True
        return any(c in self.class_ancestors(d) for d in declared)

    def inferred_classes(self, e: str) -> frozenset[str]:
        """All classes of ``e``: declared plus every subclass ancestor."""
        declared = self.class_assertions.get(e, frozenset())
        out = set(declared)
        for d in declared:
            out |= self.class_ancestors(d)
        return frozenset(out)

    def entails_property(self, s: str, p: str, o: Term) -> bool:
        """True iff the assertion is declared (no subproperty reasoning)."""
        return Triple(s, p, o) in self.property_assertions

    # -- indexed access ----------------------------------------------------

    def assertions_of_property(self, p: str) -> frozenset[Triple]:
        return frozenset(self._by_property.get(p, ()))

    def assertions_of_subject(self, e: str) -> frozenset[Triple]:
        return frozenset(self._by_subject.get(e, ()))

    def assertions_of_object(self, e: str) -> frozenset[Triple]:
        """Assertions whose object is the entity ``e`` (literals never match)."""
        return frozenset(self._by_object.get(e, ()))

    def entity_objects(self, s: str, p: str) -> frozenset[str]:
        """Distinct entity objects declared for the subject/property pair."""
        return frozenset(
            t.o.value for t in self._by_subject.get(s, ()) if t.p == p and t.o.is_entity
        )

    # -- class granularity -------------------------------------------------

    def specific_classes(self, e: str) -> frozenset[str]:
        """Most fine-grained declared classes of ``e``.

        A declared class is dropped when it is a strict ancestor of another
        declared class; several incomparable classes may remain.
        """
        declared = self.class_assertions.get(e, frozenset())
        return frozenset(
            c
            for c in declared
            if not any(c in self.class_ancestors(d) for d in declared if d != c)
        )

    def general_classes(self, e: str) -> frozenset[str]:
        """Strict ancestors of the specific classes, minus top classes."""
        specific = self.specific_classes(e)
        out: set[str] = set()
        for c in specific:
            out |= self.class_ancestors(c)
        return frozenset(out - self.top_classes - specific)


# -- loading ---------------------------------------------------------------


def _parse_triple_line(path, line_no, line):
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise KbParseError(path, line_no, f"expected 4 tab-separated fields, got {len(parts)}")
    s, p, o, kind = parts
    if kind not in (ENTITY, LITERAL):
        raise KbParseError(path, line_no, f"bad object kind {kind!r}")
    if not s or not p:
        raise KbParseError(path, line_no, "empty subject or property")
    return s, p, o, kind


def _read_triple_file(path, property_triples, class_map, subclass_edges):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            s, p, o, kind = _parse_triple_line(path, line_no, line)
            if p == RDF_TYPE:
                if kind != ENTITY:
                    raise KbParseError(path, line_no, "class assertion object must be an entity")
                class_map[s].add(o)
            elif p == RDFS_SUBCLASS_OF:
                if kind != ENTITY:
                    raise KbParseError(path, line_no, "subclass edge object must be an entity")
                subclass_edges.append((s, o))
            else:
                try:
                    property_triples.append(Triple(s, p, Term(kind, o)))
                except ValueError as exc:
                    raise KbParseError(path, line_no, str(exc)) from exc


def _read_pair_file(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or not parts[0]:
                raise KbParseError(path, line_no, "expected `entity<TAB>text`")
            yield parts


def load_kb(
    triples_source: str | Path,
    labels_source: str | Path | None = None,
    schema_source: str | Path | None = None,
    anchors_source: str | Path | None = None,
    top_classes: Iterable[str] = DEFAULT_TOP_CLASSES,
) -> KnowledgeBase:
    """Load a knowledge base from tab-separated source files.

    ``triples_source`` holds one assertion per line as
    ``s<TAB>p<TAB>o<TAB>kind``; lines with ``rdf:type`` become class
    assertions and lines with ``rdfs:subClassOf`` become hierarchy edges.
    ``schema_source`` uses the same format and is simply merged (it usually
    carries only the hierarchy). ``labels_source`` and ``anchors_source``
    are repeatable ``entity<TAB>text`` files.

    Raises :class:`KbParseError` with the offending line number, or
    :class:`SubclassCycleError` when the hierarchy is cyclic.
    """
    property_triples: list[Triple] = []
    class_map: dict[str, set[str]] = defaultdict(set)
    subclass_edges: list[tuple[str, str]] = []

    _read_triple_file(triples_source, property_triples, class_map, subclass_edges)
    if schema_source is not None:
        _read_triple_file(schema_source, property_triples, class_map, subclass_edges)

    labels: dict[str, list[str]] = defaultdict(list)
    if labels_source is not None:
        for e, text in _read_pair_file(labels_source):
            labels[e].append(text)

    anchors: dict[str, str] = {}
    if anchors_source is not None:
        for e, text in _read_pair_file(anchors_source):
            anchors[e] = f"{anchors[e]} {text}" if e in anchors else text

    return KnowledgeBase(
        property_assertions=property_triples,
        class_assertions=class_map,
        subclass_edges=subclass_edges,
        labels=labels,
        anchor_text=anchors,
        top_classes=top_classes,
    )


def write_triples(kb: KnowledgeBase, path: str | Path) -> None:
    """Serialize all assertions (property, class, subclass) deterministically."""
    lines = [f"{t.s}\t{t.p}\t{t.o.value}\t{t.o.kind}" for t in kb.property_assertions]
    for e in sorted(kb.class_assertions):
        for c in sorted(kb.class_assertions[e]):
            lines.append(f"{e}\t{RDF_TYPE}\t{c}\t{ENTITY}")
    for sub in sorted(kb.subclass_of):
        for sup in sorted(kb.subclass_of[sub]):
            lines.append(f"{sub}\t{RDFS_SUBCLASS_OF}\t{sup}\t{ENTITY}")
    Path(path).write_text("\n".join(sorted(lines)) + "\n", encoding="utf-8")


def write_labels(kb: KnowledgeBase, path: str | Path) -> None:
    lines = []
    for e in sorted(kb.labels):
        for lab in kb.labels[e]:
            lines.append(f"{e}\t{lab}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
