import random

import pytest

from ontoquery.analysis import AnalyzedText, Sentence, SyntacticEdge, Token
from ontoquery.assembly import (
    ConnectivityError,
    build_flow_problem,
    choose_winners,
    exhaustive_assignment_oracle,
    insert_hidden,
)
from ontoquery.docgraph import DocumentGraph, MentionKind, Stage
from ontoquery.lexicon import PartOfSpeech
from ontoquery.rdf import Iri, load_turtle


def synthetic_doc(n_tokens, edges=()):
    tokens = [Token(i, 0, f"t{i}", f"t{i}", PartOfSpeech.NOUN) for i in range(n_tokens)]
    syn = [SyntacticEdge(a, b, "adjacent") for a, b in edges]
    at = AnalyzedText("synthetic", tokens, syn, [], [Sentence(0, n_tokens, False)])
    return DocumentGraph(at)


class TestInduceEdges:
    def test_tank_of_unit_gets_is_part_of(self, shared_engine):
        d = shared_engine.build_document("Is tank 3 part of the gas liquefaction unit?")
        pairs = {(type(d.node(e.source)).__name__, e.predicate.local_name()) for e in d.mention_edges}
        assert any(p == "isPartOf" for _, p in pairs)
        tank = next(m for m in d.surviving_mentions() if m.reference.local_name() == "Tank")
        plant = next(m for m in d.surviving_mentions() if m.kind == MentionKind.INDIVIDUAL
                     and "1d8dc36f" in m.reference.value)
        assert any(e.source == tank.id and e.target == plant.id and e.predicate.local_name() == "isPartOf"
                   for e in d.mention_edges)

    def test_person_plus_phone_property_yields_pending_edge(self, shared_engine):
        at = shared_engine.analyze("Which is his phone?")
        # fresh graph: person class mention is absent, so attach via "who" text
        d = shared_engine.build_document("Who is here? Which is his phone?")
        person = next(m for m in d.surviving_mentions() if m.reference.local_name() == "Person")
        phone = next(m for m in d.mentions if m.kind == MentionKind.PROPERTY
                     and m.reference.local_name() == "hasPhone")
        assert any(e.source == person.id and e.target == phone.id and
                   e.predicate.local_name() == "hasPhone" for e in d.mention_edges)

    def test_no_schema_edge_no_semantic_edge(self, shared_engine):
        # fire safety and the plant unit have no direct schema property
        d = shared_engine.build_document("fire safety of the gas liquefaction unit")
        fire = [m.id for m in d.mentions if m.reference.local_name() == "FireSafety"]
        plant = [m.id for m in d.mentions if "1d8dc36f" in m.reference.value]
        for e in d.mention_edges:
            assert not (e.source in fire and e.target in plant and e.provenance.value == "schema-induced")
            assert not (e.source in plant and e.target in fire and e.provenance.value == "schema-induced")


CLS = [Iri(f"http://ex/C{i}") for i in range(4)]


def add_mentions(d, spec):
    """spec: list of (token_indices, weight) for synthetic class mentions."""
    out = []
    for i, (tokens, weight) in enumerate(spec):
        out.append(d.add_mention(Iri(f"http://ex/R{i}"), MentionKind.CLASS, tuple(tokens), weight, "t"))
    d.advance(Stage.PREDICATES_ADDED)
    return out


class TestChooseWinners:
    def test_heavier_mention_wins_contested_token(self):
        d = synthetic_doc(1)
        m_strong, m_weak = add_mentions(d, [((0,), 0.9), ((0,), 0.4)])
        choose_winners(d)
        assert not m_strong.discarded and m_weak.discarded

    def test_token_disjoint_mentions_all_survive(self):
        d = synthetic_doc(3)
        mentions = add_mentions(d, [((0,), 0.5), ((1,), 0.6), ((2,), 0.7)])
        choose_winners(d)
        assert all(not m.discarded for m in mentions)

    def test_survivors_are_token_disjoint(self):
        rng = random.Random(5)
        for _ in range(50):
            d = synthetic_doc(8)
            spec = []
            for _ in range(rng.randint(1, 12)):
                start = rng.randint(0, 7)
                span = tuple(range(start, min(8, start + rng.randint(1, 3))))
                spec.append((span, rng.choice([0.4, 0.6, 0.8, 0.9])))
            add_mentions(d, spec)
            choose_winners(d)
            claimed = set()
            for m in d.surviving_mentions():
                assert not (claimed & set(m.tokens))
                claimed |= set(m.tokens)

    def test_flow_value_equals_covered_tokens(self):
        d = synthetic_doc(5)
        add_mentions(d, [((0, 1), 0.8), ((1, 2), 0.7), ((4,), 0.9)])
        problem = build_flow_problem(d)
        assert problem.max_flow_value == 4  # tokens 0,1,2,4

    def test_scaling_weights_preserves_winners(self):
        # k is a power of two so the float products stay exact
        rng = random.Random(9)
        for _ in range(30):
            spec = []
            for _ in range(rng.randint(2, 8)):
                start = rng.randint(0, 5)
                span = tuple(range(start, min(6, start + rng.randint(1, 3))))
                spec.append((span, rng.choice([0.25, 0.5, 0.75, 1.0])))
            d1 = synthetic_doc(6)
            add_mentions(d1, spec)
            choose_winners(d1)
            for k in (0.5, 0.25):
                d2 = synthetic_doc(6)
                add_mentions(d2, [(tokens, w * k) for tokens, w in spec])
                choose_winners(d2)
                surv1 = [m.tokens for m in d1.surviving_mentions()]
                surv2 = [m.tokens for m in d2.surviving_mentions()]
                assert surv1 == surv2

    def test_matches_exhaustive_assignment_oracle(self):
        rng = random.Random(17)
        checked = 0
        while checked < 60:
            d = synthetic_doc(rng.randint(1, 8))
            n_tokens = len(d.at.tokens)
            spec = []
            for _ in range(rng.randint(1, 12)):
                start = rng.randint(0, n_tokens - 1)
                span = tuple(range(start, min(n_tokens, start + rng.randint(1, 3))))
                spec.append((span, rng.choice([0.3, 0.5, 0.7, 0.9])))
            add_mentions(d, spec)
            oracle = exhaustive_assignment_oracle(d)
            choose_winners(d)
            assert {m.id for m in d.surviving_mentions()} == oracle
            checked += 1


SCHEMA = """
@prefix ex: <http://ex/> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
ex:A a owl:Class . ex:B a owl:Class . ex:C a owl:Class .
ex:ab a owl:ObjectProperty ; rdfs:domain ex:A ; rdfs:range ex:B .
ex:bc a owl:ObjectProperty ; rdfs:domain ex:B ; rdfs:range ex:C .
"""


class TestInsertHidden:
    def test_person_and_plant_bridge_through_org(self, shared_engine, q1):
        d = shared_engine.build_document(q1)
        assert [h.reference.local_name() for h in d.hidden] == ["OrganizationalUnit"]
        hidden = d.hidden[0]
        labels = {(e.source, e.predicate.local_name(), e.target) for e in d.mention_edges}
        person = next(m.id for m in d.surviving_mentions() if m.reference.local_name() == "Person")
        plant = next(m.id for m in d.surviving_mentions() if "1d8dc36f" in m.reference.value)
        assert (person, "memberOf", hidden.id) in labels
        assert (hidden.id, "operates", plant) in labels
        assert len(d.weakly_connected_components()) == 1

    def test_already_connected_graph_unchanged(self):
        kg = load_turtle(SCHEMA)
        d = synthetic_doc(2)
        m1 = d.add_mention(Iri("http://ex/A"), MentionKind.CLASS, (0,), 0.8, "t")
        m2 = d.add_mention(Iri("http://ex/B"), MentionKind.CLASS, (1,), 0.8, "t")
        d.advance(Stage.PREDICATES_ADDED)
        d.add_mention_edge(m1.id, m2.id, Iri("http://ex/ab"))
        choose_winners(d)
        before_edges = list(d.mention_edges)
        insert_hidden(d, kg)
        assert d.hidden == [] and d.mention_edges == before_edges

    def test_connectivity_error_names_fragments(self):
        kg = load_turtle("""
        @prefix ex: <http://ex/> .
        @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
        @prefix owl: <http://www.w3.org/2002/07/owl#> .
        ex:A a owl:Class . ex:Z a owl:Class .
        ex:aa a owl:ObjectProperty ; rdfs:domain ex:A ; rdfs:range ex:A .
        ex:zz a owl:ObjectProperty ; rdfs:domain ex:Z ; rdfs:range ex:Z .
        """)
        d = synthetic_doc(2)
        d.add_mention(Iri("http://ex/A"), MentionKind.CLASS, (0,), 0.8, "t")
        d.add_mention(Iri("http://ex/Z"), MentionKind.CLASS, (1,), 0.8, "t")
        d.advance(Stage.PREDICATES_ADDED)
        choose_winners(d)
        with pytest.raises(ConnectivityError) as err:
            insert_hidden(d, kg)
        assert "A" in str(err.value) and "Z" in str(err.value)

    def test_never_materializes_a_mentioned_class(self):
        kg = load_turtle(SCHEMA)
        d = synthetic_doc(3)
        d.add_mention(Iri("http://ex/A"), MentionKind.CLASS, (0,), 0.8, "t")
        d.add_mention(Iri("http://ex/B"), MentionKind.CLASS, (1,), 0.8, "t")
        d.add_mention(Iri("http://ex/C"), MentionKind.CLASS, (2,), 0.8, "t")
        d.advance(Stage.PREDICATES_ADDED)
        choose_winners(d)
        insert_hidden(d, kg)
        assert d.hidden == []  # B is mentioned: reuse it, no hidden node
        assert len(d.weakly_connected_components()) == 1

    def test_two_component_random_schemas_match_bfs_minimum(self):
        rng = random.Random(23)
        checked = 0
        while checked < 100:
            n = rng.randint(2, 10)
            classes = [f"C{i}" for i in range(n)]
            edges = set()
            for _ in range(rng.randint(1, 2 * n)):
                a, b = rng.sample(classes, 2) if n >= 2 else (None, None)
                edges.add((a, b))
            lines = ["@prefix ex: <http://ex/> .",
                     "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .",
                     "@prefix owl: <http://www.w3.org/2002/07/owl#> ."]
            for c in classes:
                lines.append(f"ex:{c} a owl:Class .")
            for i, (a, b) in enumerate(sorted(edges)):
                lines.append(f"ex:p{i} a owl:ObjectProperty ; rdfs:domain ex:{a} ; rdfs:range ex:{b} .")
            kg = load_turtle("\n".join(lines))
            start, goal = rng.sample(classes, 2)
            # brute-force minimum intermediate count over all simple paths
            adjacency = {}
            for a, b in edges:
                adjacency.setdefault(a, set()).add(b)
                adjacency.setdefault(b, set()).add(a)
            best = [None]

            def walk(node, seen):
                if node == goal:
                    if best[0] is None or len(seen) - 2 < best[0]:
                        best[0] = max(0, len(seen) - 2)
                    return
                for nxt in adjacency.get(node, ()):  # depth-first over simple paths
                    if nxt not in seen:
                        walk(nxt, seen | {nxt})

            walk(start, {start})
            d = synthetic_doc(2)
            d.add_mention(Iri(f"http://ex/{start}"), MentionKind.CLASS, (0,), 0.8, "t")
            d.add_mention(Iri(f"http://ex/{goal}"), MentionKind.CLASS, (1,), 0.8, "t")
            d.advance(Stage.PREDICATES_ADDED)
            choose_winners(d)
            try:
                insert_hidden(d, kg)
                added = len(d.hidden)
                assert best[0] is not None, "bridged components the oracle says are disconnected"
                assert added == best[0]
                assert len(d.weakly_connected_components()) == 1
            except ConnectivityError:
                assert best[0] is None
            checked += 1
