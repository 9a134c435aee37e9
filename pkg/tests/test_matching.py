import pytest

from ontoquery.docgraph import MentionKind
from ontoquery.matching import (
    LabelMatcher,
    MatcherConfig,
    TemplateMatcher,
    TemplateRule,
    run_matchers,
)
from ontoquery.rdf import Iri, Literal, XSD_INT, load_turtle

FIRE_SAFETY = Iri("http://example.org/enterprise#FireSafety")
PLANT_IRI = Iri("http://example.org/enterprise#1d8dc36f-909d-4711-a1cd-1ae74b305e9d")
HAS_NUMBER = Iri("http://example.org/enterprise#hasNumber")
HAS_PHONE = Iri("http://example.org/enterprise#hasPhone")
FAMILY_NAME = Iri("http://xmlns.com/foaf/0.1/familyName")


def mentions_for(engine, text):
    at = engine.analyze(text)
    d = run_matchers(at, engine.lexicon, engine.kg, engine.config.matchers)
    return d.mentions


class TestRunMatchers:
    def test_fire_safety_lexicon_mention(self, shared_engine):
        mentions = mentions_for(shared_engine, "fire safety")
        lexicon_hits = [m for m in mentions if m.matcher == "lexicon" and m.reference == FIRE_SAFETY]
        assert lexicon_hits and lexicon_hits[0].kind == MentionKind.INDIVIDUAL

    def test_smith_surname_gazetteer_mention(self, shared_engine):
        mentions = mentions_for(shared_engine, "Smith")
        hits = [m for m in mentions if m.matcher == "gazetteer"]
        assert len(hits) == 1
        assert hits[0].kind == MentionKind.LITERAL_VALUE
        assert hits[0].reference == FAMILY_NAME
        assert hits[0].literal == Literal("Smith")

    def test_unknown_token_yields_no_mentions(self, shared_engine):
        assert mentions_for(shared_engine, "Xyzzy") == []

    def test_output_independent_of_matcher_order(self, shared_engine, q1):
        at = shared_engine.analyze(q1)
        cfg = shared_engine.config.matchers
        reordered = MatcherConfig(
            enabled=list(reversed(cfg.enabled)),
            base_weights=cfg.base_weights,
            active_fields=cfg.active_fields,
            templates=cfg.templates,
            gazetteers=cfg.gazetteers,
            max_phrase_edges=cfg.max_phrase_edges,
        )
        a = run_matchers(at, shared_engine.lexicon, shared_engine.kg, cfg).mentions
        b = run_matchers(at, shared_engine.lexicon, shared_engine.kg, reordered).mentions
        assert [(m.reference, m.tokens, m.weight, m.matcher) for m in a] == \
               [(m.reference, m.tokens, m.weight, m.matcher) for m in b]

    def test_every_appearing_sense_yields_a_mention(self, shared_engine, q1):
        mentions = mentions_for(shared_engine, q1)
        refs = {m.reference for m in mentions}
        for form in ("who", "responsible", "fire safety"):
            for sense in shared_engine.lexicon.senses_for_form(form):
                assert sense.reference in refs

    def test_weight_monotone_in_sense_prior(self, shared_engine):
        kg = shared_engine.kg
        lex_low = """
        @prefix lex: <http://example.org/lexicon#> .
        @prefix base: <http://example.org/enterprise#> .
        lex:w a lex:Word ; lex:canonicalForm "tank" ; lex:partOfSpeech "noun" ; lex:sense lex:s .
        lex:s a lex:LexicalSense ; lex:reference base:Tank ; lex:weight "0.5" .
        """
        lex_high = lex_low.replace('"0.5"', '"0.9"')
        from ontoquery.lexicon import load_lexicon
        from ontoquery.analysis import RuleAnalyzer

        weights = []
        for ttl in (lex_low, lex_high):
            lexicon = load_lexicon(load_turtle(ttl), kg)
            at = RuleAnalyzer(lexicon).analyze("tank")
            d = run_matchers(at, lexicon, kg, shared_engine.config.matchers)
            weights.append(max(m.weight for m in d.mentions if m.matcher == "lexicon"))
        assert weights[1] > weights[0]


class TestLabelMatcher:
    def test_gas_liquefaction_unit_matches_uuid_individual(self, shared_engine):
        at = shared_engine.analyze("gas liquefaction unit")
        seq = list(at.tokens)
        hits = LabelMatcher().match(seq, shared_engine.lexicon, shared_engine.kg,
                                    shared_engine.config.matchers)
        assert [c.reference for c in hits] == [PLANT_IRI]
        assert hits[0].weight == pytest.approx(0.9)

    def test_plural_surface_form_matches_via_lemmas(self, shared_engine):
        mentions = mentions_for(shared_engine, "gas liquefaction units")
        assert any(m.reference == PLANT_IRI and m.matcher == "label" for m in mentions)

    def test_partial_label_overlap_is_no_candidate(self, shared_engine):
        at = shared_engine.analyze("liquefaction unit")
        hits = LabelMatcher().match(list(at.tokens), shared_engine.lexicon,
                                    shared_engine.kg, shared_engine.config.matchers)
        assert hits == []

    def test_shared_label_yields_two_equal_candidates(self, shared_engine):
        kg = load_turtle("""
        @prefix ex: <http://ex/> .
        @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
        @prefix owl: <http://www.w3.org/2002/07/owl#> .
        ex:Pump a owl:Class .
        ex:pump1 a ex:Pump ; rdfs:label "Aux pump" .
        ex:pump2 a ex:Pump ; rdfs:label "Aux pump" .
        """)
        at = shared_engine.analyze("aux pump")
        hits = LabelMatcher().match(list(at.tokens), shared_engine.lexicon, kg,
                                    shared_engine.config.matchers)
        assert len(hits) == 2
        assert hits[0].weight == hits[1].weight


class TestTemplateMatcher:
    def config(self):
        return MatcherConfig(templates=[
            TemplateRule("ordinal", "first|second|third", HAS_NUMBER, "ordinal"),
            TemplateRule("int", r"\d+", HAS_NUMBER, "int"),
            TemplateRule("phone", r"\+?\d[\d-]{5,}\d", HAS_PHONE, "string"),
        ])

    def test_ordinal_third_maps_to_number_three(self, shared_engine):
        at = shared_engine.analyze("third")
        hits = TemplateMatcher().match(list(at.tokens), shared_engine.lexicon,
                                       shared_engine.kg, self.config())
        assert [(c.reference, c.literal) for c in hits] == [(HAS_NUMBER, Literal("3", XSD_INT))]

    def test_phone_number_pattern(self, shared_engine):
        at = shared_engine.analyze("+7-900-123-45-67")
        hits = TemplateMatcher().match(list(at.tokens), shared_engine.lexicon,
                                       shared_engine.kg, self.config())
        assert [(c.reference, c.literal.lexical) for c in hits] == [(HAS_PHONE, "+7-900-123-45-67")]

    def test_non_matching_token(self, shared_engine):
        at = shared_engine.analyze("tank")
        assert TemplateMatcher().match(list(at.tokens), shared_engine.lexicon,
                                       shared_engine.kg, self.config()) == []

    def test_invalid_regex_fails_at_config_time(self):
        with pytest.raises(Exception):
            TemplateRule("bad", "(", HAS_NUMBER)
