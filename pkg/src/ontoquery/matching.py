"""Matchers: scan token sequences and emit weighted mention candidates.

Every matcher is a pure function of (token sequence, lexicon, ontology); the
framework runs all enabled matchers over every syntactic path and every
single token, so overlapping and conflicting candidates coexist until the
disambiguation stage picks winners.  A candidate weight composes the matcher
base weight, the sense prior and how densely the sequence covers its span.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .analysis import AnalyzedText, Token, syntactic_paths
from .docgraph import DocumentGraph, Mention, MentionKind, Stage
from .lexicon import Lexicon, field_filter
from .rdf import Iri, Literal, TripleGraph, XSD_INT, XSD_STRING


@dataclass(frozen=True)
class Candidate:
    reference: Iri
    kind: MentionKind
    weight: float
    literal: Literal | None = None


@dataclass
class TemplateRule:
    name: str
    pattern: str
    property: Iri
    value: str = "string"  # string | int | ordinal

    def __post_init__(self):
        self.regex = re.compile(self.pattern)


@dataclass
class GazetteerEntry:
    property: Iri
    terms: frozenset[str]


@dataclass
class MatcherConfig:
    enabled: list[str] = field(default_factory=lambda: ["label", "lexicon", "template", "gazetteer"])
    base_weights: dict[str, float] = field(
        default_factory=lambda: {"label": 0.9, "lexicon": 0.8, "template": 0.7, "gazetteer": 0.6}
    )
    active_fields: frozenset[Iri] = frozenset()
    templates: list[TemplateRule] = field(default_factory=list)
    gazetteers: list[GazetteerEntry] = field(default_factory=list)
    max_phrase_edges: int = 3

    def base(self, name: str) -> float:
        return self.base_weights.get(name, 0.5)


def reference_kind(ontology: TripleGraph, reference: Iri) -> MentionKind:
    from .rdf import OWL_CLASS

    if ontology.is_property(reference):
        return MentionKind.PROPERTY
    types = ontology.types_of(reference)
    if OWL_CLASS in types:
        return MentionKind.CLASS
    if types:
        return MentionKind.INDIVIDUAL
    return MentionKind.CLASS


class LexiconMatcher:
    """Looks the lemmatised phrase up in the lexicon form index."""

    name = "lexicon"

    def match(self, seq: list[Token], lexicon: Lexicon, ontology: TripleGraph,
              config: MatcherConfig) -> list[Candidate]:
        phrase = " ".join(t.lemma for t in seq)
        senses = field_filter(lexicon.senses_for_form(phrase), set(config.active_fields))
        base = config.base(self.name)
        out = []
        for sense in senses:
            kind = reference_kind(ontology, sense.reference)
            out.append(Candidate(sense.reference, kind, base * sense.prior_weight * _coverage(seq)))
        return out


class LabelMatcher:
    """Case-insensitive full-phrase equality against rdfs:label values.

    The phrase is compared at the lemma level, which is what makes inflected
    surface forms ("units") find entities labelled in the canonical form.
    """

    name = "label"

    def match(self, seq: list[Token], lexicon: Lexicon, ontology: TripleGraph,
              config: MatcherConfig) -> list[Candidate]:
        phrase = " ".join(t.lemma for t in seq)
        base = config.base(self.name)
        out = []
        for entity in ontology.entities_labelled(phrase):
            kind = reference_kind(ontology, entity)
            out.append(Candidate(entity, kind, base * _coverage(seq)))
        return out


class TemplateMatcher:
    """Regex table over single tokens: phones, ordinals, plain integers."""

    name = "template"

    def match(self, seq: list[Token], lexicon: Lexicon, ontology: TripleGraph,
              config: MatcherConfig) -> list[Candidate]:
        if len(seq) != 1:
            return []
        token = seq[0]
        base = config.base(self.name)
        out = []
        for rule in config.templates:
            if not rule.regex.fullmatch(token.text.lower()):
                continue
            literal = _normalize(rule, token)
            if literal is None:
                continue
            out.append(Candidate(rule.property, MentionKind.LITERAL_VALUE, base, literal))
        return out


class GazetteerMatcher:
    """Word-list lookup for named-entity-ish tokens (surnames etc.)."""

    name = "gazetteer"

    def match(self, seq: list[Token], lexicon: Lexicon, ontology: TripleGraph,
              config: MatcherConfig) -> list[Candidate]:
        if len(seq) != 1:
            return []
        token = seq[0]
        base = config.base(self.name)
        out = []
        for gazetteer in config.gazetteers:
            if token.text.lower() in gazetteer.terms:
                literal = Literal(token.text, XSD_STRING)
                out.append(Candidate(gazetteer.property, MentionKind.LITERAL_VALUE, base, literal))
        return out


ALL_MATCHERS = {m.name: m for m in (LabelMatcher(), LexiconMatcher(), TemplateMatcher(), GazetteerMatcher())}


def _coverage(seq: list[Token]) -> float:
    indices = [t.index for t in seq]
    span = max(indices) - min(indices) + 1
    return len(indices) / span


def _normalize(rule: TemplateRule, token: Token) -> Literal | None:
    from .analysis import ORDINALS

    if rule.value == "int":
        return Literal(str(int(token.text)), XSD_INT)
    if rule.value == "ordinal":
        number = ORDINALS.get(token.text.lower())
        return Literal(str(number), XSD_INT) if number is not None else None
    return Literal(token.text, XSD_STRING)


def candidate_sequences(at: AnalyzedText, max_edges: int) -> list[list[Token]]:
    """Single tokens plus every syntactic path, in document order."""
    sequences: list[tuple[int, ...]] = [(t.index,) for t in at.tokens]
    for path in syntactic_paths(at, max_edges):
        ordered = tuple(sorted(path))
        sequences.append(ordered)
    unique = sorted(set(sequences))
    return [[at.token(i) for i in seq] for seq in unique]


def run_matchers(at: AnalyzedText, lexicon: Lexicon, ontology: TripleGraph,
                 config: MatcherConfig, graph: DocumentGraph | None = None) -> DocumentGraph:
    """Populate a document graph with every candidate mention.

    The output is independent of matcher execution order: candidates are
    collected as a set and materialised as mentions in a canonical order.
    """
    graph = graph or DocumentGraph(at)
    collected: set[tuple] = set()
    matchers = [ALL_MATCHERS[name] for name in config.enabled if name in ALL_MATCHERS]
    for seq in candidate_sequences(at, config.max_phrase_edges):
        tokens = tuple(t.index for t in seq)
        for matcher in matchers:
            for candidate in matcher.match(seq, lexicon, ontology, config):
                collected.add((tokens, candidate.reference, candidate.kind, candidate.literal,
                               candidate.weight, matcher.name))
    for tokens, reference, kind, literal, weight, matcher_name in sorted(
        collected, key=lambda c: (c[0], c[1], c[2].value, str(c[3]), -c[4], c[5])
    ):
        graph.add_mention(reference, kind, tokens, weight, matcher_name, literal)
    graph.advance(Stage.MENTIONS_ADDED)
    return graph
