import random
import re

import pytest

from ontoquery.analysis import AnalyzedText, Sentence, Token
from ontoquery.docgraph import (
    DocumentGraph,
    MentionKind,
    Stage,
    StageError,
)
from ontoquery.lexicon import PartOfSpeech
from ontoquery.rdf import Iri

CLS_A = Iri("http://ex/A")
CLS_B = Iri("http://ex/B")
PROP = Iri("http://ex/p")


def make_graph(n_tokens=4) -> DocumentGraph:
    tokens = [Token(i, 0, f"t{i}", f"t{i}", PartOfSpeech.NOUN) for i in range(n_tokens)]
    at = AnalyzedText("synthetic", tokens, [], [], [Sentence(0, n_tokens, False)])
    return DocumentGraph(at)


class TestProjections:
    def test_project_a_degrees(self):
        d = make_graph()
        m1 = d.add_mention(CLS_A, MentionKind.CLASS, (0,), 0.8, "lexicon")
        m2 = d.add_mention(CLS_B, MentionKind.CLASS, (1,), 0.8, "lexicon")
        d.advance(Stage.MENTIONS_ADDED)
        d.add_mention_edge(m1.id, m2.id, PROP)
        d.advance(Stage.PREDICATES_ADDED)
        a = d.project_a()
        assert a.degree(m1.id) == 1 and a.degree(m2.id) == 1

    def test_project_a_without_edges(self):
        d = make_graph()
        m1 = d.add_mention(CLS_A, MentionKind.CLASS, (0,), 0.8, "lexicon")
        m2 = d.add_mention(CLS_B, MentionKind.CLASS, (1,), 0.8, "lexicon")
        d.advance(Stage.PREDICATES_ADDED)
        a = d.project_a()
        assert a.degree(m1.id) == 0 and a.degree(m2.id) == 0

    def test_project_a_requires_stage(self):
        d = make_graph()
        d.add_mention(CLS_A, MentionKind.CLASS, (0,), 0.8, "lexicon")
        with pytest.raises(StageError):
            d.project_a()

    def test_project_b_is_bipartite_and_complete(self):
        d = make_graph()
        m = d.add_mention(CLS_A, MentionKind.CLASS, (0, 2), 0.8, "lexicon")
        d.advance(Stage.MENTIONS_ADDED)
        b = d.project_b()
        assert (m.id, 0) in b.has_token and (m.id, 2) in b.has_token
        assert len(b.has_token) == 2

    def test_stage_never_goes_backwards(self):
        d = make_graph()
        d.advance(Stage.DISAMBIGUATED)
        with pytest.raises(StageError):
            d.advance(Stage.MENTIONS_ADDED)

    def test_fire_safety_mention_has_degree(self, shared_engine, q1):
        d = shared_engine.build_document(q1)
        a = d.project_a()
        fire = next(m for m in d.surviving_mentions()
                    if m.reference.local_name() == "FireSafety")
        assert a.degree(fire.id) >= 1

    def test_projections_cover_tokens_and_surviving_mentions(self, shared_engine, q1):
        d = shared_engine.build_document(q1)
        a, b = d.project_a(), d.project_b()
        assert set(b.tokens) == {t.index for t in d.at.tokens}
        surviving = {m.id for m in d.surviving_mentions()}
        assert surviving <= set(a.nodes)
        assert surviving <= set(b.mentions)
        incidences = {(m.id, t) for m in d.mentions for t in m.tokens}
        assert set(b.has_token) == incidences


def union_find_oracle(nodes, edges):
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    groups = {}
    for n in nodes:
        groups.setdefault(find(n), set()).add(n)
    return sorted(groups.values(), key=min)


class TestComponents:
    def test_connected_layer_is_single_component(self):
        d = make_graph()
        m1 = d.add_mention(CLS_A, MentionKind.CLASS, (0,), 0.8, "lexicon")
        m2 = d.add_mention(CLS_B, MentionKind.CLASS, (1,), 0.8, "lexicon")
        d.advance(Stage.PREDICATES_ADDED)
        d.add_mention_edge(m1.id, m2.id, PROP)
        assert len(d.weakly_connected_components()) == 1

    def test_two_isolated_mentions_two_components(self):
        d = make_graph()
        d.add_mention(CLS_A, MentionKind.CLASS, (0,), 0.8, "lexicon")
        d.add_mention(CLS_B, MentionKind.CLASS, (1,), 0.8, "lexicon")
        d.advance(Stage.PREDICATES_ADDED)
        assert len(d.weakly_connected_components()) == 2

    def test_random_graphs_match_union_find(self):
        rng = random.Random(3)
        for _ in range(50):
            d = make_graph(8)
            mentions = [d.add_mention(CLS_A, MentionKind.CLASS, (i,), 0.8, "x")
                        for i in range(rng.randint(1, 8))]
            d.advance(Stage.PREDICATES_ADDED)
            edges = []
            for _ in range(rng.randint(0, 10)):
                a, b = rng.choice(mentions), rng.choice(mentions)
                if a.id != b.id:
                    d.add_mention_edge(a.id, b.id, PROP)
                    edges.append((a.id, b.id))
            got = d.weakly_connected_components()
            want = union_find_oracle([m.id for m in mentions], edges)
            assert got == want


DOT_NODE = re.compile(r'^\s*[a-z]\d+ \[label="(?:[^"\\]|\\.)*"[^\]]*\];$')
DOT_EDGE = re.compile(r'^\s*[a-z]\d+ -> [a-z]\d+ \[label="(?:[^"\\]|\\.)*"[^\]]*\];$')


def check_dot_grammar(dot: str):
    lines = dot.strip().splitlines()
    assert lines[0] == "digraph document {"
    assert lines[-1] == "}"
    for line in lines[1:-1]:
        if line.strip().startswith("rankdir"):
            continue
        assert DOT_NODE.match(line) or DOT_EDGE.match(line), f"bad DOT line: {line!r}"


class TestDot:
    def test_tokens_only_graph(self, shared_engine):
        at = shared_engine.analyze("Tank.")
        d = DocumentGraph(at)
        dot = d.to_dot()
        check_dot_grammar(dot)
        assert 't0 [label="Tank"' in dot

    def test_ivanov_phone_graph_shows_person_and_phone(self, shared_engine):
        dot = shared_engine.viz("Ivanov's phone")
        check_dot_grammar(dot)
        assert "Person" in dot
        assert "hasPhone" in dot or "phone" in dot

    def test_determinism(self, shared_engine, q1):
        a = shared_engine.build_document(q1).to_dot()
        b = shared_engine.build_document(q1).to_dot()
        assert a == b

    def test_discarded_mentions_are_tombstoned_not_deleted(self, shared_engine, q1):
        d = shared_engine.build_document(q1)
        discarded = [m for m in d.mentions if m.discarded]
        assert discarded  # the losing fire-safety hypothesis stays visible
        dot = d.to_dot()
        assert "dashed" in dot
