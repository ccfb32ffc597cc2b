"""Store loading, entailment and class-granularity behaviour."""

import random

import pytest

from kbcorrect.kb import (
    KbParseError,
    KnowledgeBase,
    SubclassCycleError,
    Term,
    Triple,
    entity,
    literal,
    load_kb,
    write_labels,
    write_triples,
)

from oracles import (
    brute_general_classes,
    brute_specific_classes,
    random_kb,
    warshall_closure,
)


class TestLoading:
    def test_empty_files(self, tmp_path):
        triples = tmp_path / "t.tsv"
        labels = tmp_path / "l.tsv"
        triples.write_text("")
        labels.write_text("")
        kb = load_kb(triples, labels)
        assert len(kb.property_assertions) == 0
        assert kb.entities == frozenset()

    def test_three_triples(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text(
            "a\tp\tb\tentity\n"
            "a\tq\tsome text\tliteral\n"
            "b\tp\tc\tentity\n"
        )
        kb = load_kb(path)
        assert len(kb.property_assertions) == 3

    def test_class_and_subclass_lines_are_split_out(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text(
            "e0\trdf:type\tc1\tentity\n"
            "c1\trdfs:subClassOf\tc2\tentity\n"
            "e0\tp\te1\tentity\n"
        )
        kb = load_kb(path)
        assert kb.class_assertions["e0"] == frozenset({"c1"})
        assert kb.subclass_of["c1"] == frozenset({"c2"})
        assert len(kb.property_assertions) == 1

    def test_cycle_error_names_a_member(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text(
            "A\trdfs:subClassOf\tB\tentity\n"
            "B\trdfs:subClassOf\tA\tentity\n"
        )
        with pytest.raises(SubclassCycleError) as err:
            load_kb(path)
        assert err.value.member in ("A", "B")

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("a\tp\tb\tentity\nbroken line\n")
        with pytest.raises(KbParseError) as err:
            load_kb(path)
        assert err.value.line_no == 2

    def test_bad_kind_rejected(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("a\tp\tb\tthing\n")
        with pytest.raises(KbParseError):
            load_kb(path)

    def test_labels_and_anchors(self, tmp_path):
        triples = tmp_path / "t.tsv"
        triples.write_text("a\tp\tb\tentity\n")
        labels = tmp_path / "l.tsv"
        labels.write_text("a\tAlpha\na\tFirst letter\n")
        anchors = tmp_path / "anchor.tsv"
        anchors.write_text("a\tthe first greek letter\n")
        kb = load_kb(triples, labels, anchors_source=anchors)
        assert kb.labels["a"] == ("Alpha", "First letter")
        assert "greek" in kb.anchor_text["a"]

    def test_roundtrip_is_deterministic(self, tmp_path):
        rng = random.Random(5)
        kb = random_kb(rng)
        write_triples(kb, tmp_path / "t1.tsv")
        write_triples(kb, tmp_path / "t2.tsv")
        assert (tmp_path / "t1.tsv").read_bytes() == (tmp_path / "t2.tsv").read_bytes()
        write_labels(kb, tmp_path / "l.tsv")
        kb2 = load_kb(tmp_path / "t1.tsv", tmp_path / "l.tsv")
        assert kb2.property_assertions == kb.property_assertions
        assert kb2.class_assertions == kb.class_assertions
        assert kb2.subclass_of == kb.subclass_of


class TestEntailment:
    def test_declared_and_inherited_type(self, place_kb):
        assert place_kb.entails_type("rome", "City")
        assert place_kb.entails_type("rome", "Settlement")
        assert place_kb.entails_type("rome", "Place")
        assert not place_kb.entails_type("rome", "Country")

    def test_unknown_entity_is_false(self, place_kb):
        assert not place_kb.entails_type("nowhere", "City")

    def test_long_chain_against_closure_oracle(self):
        edges = [(f"c{i}", f"c{i+1}") for i in range(5)]
        kb = KnowledgeBase(class_assertions={"e": {"c0"}}, subclass_edges=edges)
        closure = warshall_closure([f"c{i}" for i in range(6)], edges)
        for c in closure["c0"]:
            assert kb.entails_type("e", c)
        assert kb.entails_type("e", "c5")

    def test_monotone_under_new_edges(self):
        rng = random.Random(11)
        for _ in range(20):
            kb = random_kb(rng, n_entities=10, n_classes=6)
            pairs = [
                (e, c)
                for e in kb.entities
                for c in ("c0", "c3", "c5")
                if kb.entails_type(e, c)
            ]
            extra_edges = [(f"c{rng.randrange(6)}", "c_new")]
            edges = [(a, b) for a, sups in kb.subclass_of.items() for b in sups]
            grown = KnowledgeBase(
                property_assertions=kb.property_assertions,
                class_assertions=kb.class_assertions,
                subclass_edges=edges + extra_edges,
                labels=kb.labels,
            )
            for e, c in pairs:
                assert grown.entails_type(e, c)

    def test_property_entailment_is_declared_only(self, place_kb):
        assert place_kb.entails_property("rome", "p:capitalOf", entity("italy"))
        assert not place_kb.entails_property("rome", "p:capitalOf", entity("france"))

    def test_property_entailment_against_set_oracle(self):
        rng = random.Random(3)
        kb = random_kb(rng, n_entities=15, n_triples=50)
        declared = set(kb.property_assertions)
        entities = sorted(kb.entities)
        for _ in range(1000):
            t = Triple(
                rng.choice(entities),
                f"p{rng.randrange(5)}",
                Term("entity", rng.choice(entities)),
            )
            assert kb.entails_property(t.s, t.p, t.o) == (t in declared)


class TestAccessPaths:
    def test_property_with_no_assertions(self, place_kb):
        assert place_kb.assertions_of_property("p:nope") == frozenset()

    def test_property_accessor_exact(self):
        triples = [Triple(f"e{i}", "p" if i < 4 else "q", entity("x")) for i in range(10)]
        kb = KnowledgeBase(property_assertions=triples)
        assert kb.assertions_of_property("p") == frozenset(triples[:4])

    def test_object_accessor_skips_literals(self, place_kb):
        assert place_kb.assertions_of_object("2873000") == frozenset()
        assert len(place_kb.assertions_of_object("italy")) == 1

    def test_property_partition(self):
        rng = random.Random(7)
        kb = random_kb(rng)
        union = frozenset()
        for p in kb.properties:
            union |= kb.assertions_of_property(p)
        assert union == kb.property_assertions

    def test_subject_object_cover(self):
        rng = random.Random(9)
        kb = random_kb(rng)
        union = frozenset()
        for e in kb.entities:
            union |= kb.assertions_of_subject(e) | kb.assertions_of_object(e)
        assert union == kb.property_assertions


class TestClassGranularity:
    def test_specific_drops_ancestors(self, place_kb):
        assert place_kb.specific_classes("paris") == frozenset({"City"})

    def test_unrelated_classes_both_specific(self):
        kb = KnowledgeBase(class_assertions={"e": {"City", "Person"}})
        assert kb.specific_classes("e") == frozenset({"City", "Person"})

    def test_general_excludes_top(self, place_kb):
        assert place_kb.general_classes("rome") == frozenset({"Settlement", "Place"})

    def test_no_classes_means_empty(self, place_kb):
        assert place_kb.specific_classes("italy") == frozenset({"Country"})
        assert place_kb.general_classes("unknown") == frozenset()

    def test_against_brute_force_oracle(self):
        rng = random.Random(21)
        for _ in range(30):
            kb = random_kb(rng, n_entities=12, n_classes=8)
            edges = [(a, b) for a, sups in kb.subclass_of.items() for b in sups]
            nodes = sorted({c for e in edges for c in e} | {f"c{i}" for i in range(8)})
            closure = warshall_closure(nodes, edges)
            for e in kb.entities:
                declared = set(kb.class_assertions.get(e, set()))
                assert kb.specific_classes(e) == brute_specific_classes(declared, closure)
                assert kb.general_classes(e) == brute_general_classes(
                    declared, closure, set(kb.top_classes)
                )

    def test_specific_general_disjoint_and_ancestry(self):
        rng = random.Random(33)
        for _ in range(20):
            kb = random_kb(rng, n_entities=10, n_classes=7)
            for e in kb.entities:
                specific = kb.specific_classes(e)
                general = kb.general_classes(e)
                assert not (specific & general)
                for g in general:
                    assert any(g in kb.class_ancestors(s) for s in specific)
