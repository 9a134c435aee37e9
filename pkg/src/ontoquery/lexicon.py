"""Lexical layer linking surface words to ontology entities.

Words carry their inflected forms and a part of speech; each word can have
several senses, and a sense points at one ontology class, property or
individual.  Senses may belong to a semantic field, which narrows ambiguous
words when a deployment activates a field.  The vocabulary is a small flat
Turtle format (lex:Word / lex:LexicalSense / lex:SemanticField).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .rdf import Iri, Literal, TripleGraph, triple_key

LEX_NS = "http://example.org/lexicon#"

LEX_WORD = Iri(LEX_NS + "Word")
LEX_SENSE_CLASS = Iri(LEX_NS + "LexicalSense")
LEX_FIELD_CLASS = Iri(LEX_NS + "SemanticField")
LEX_CANONICAL = Iri(LEX_NS + "canonicalForm")
LEX_OTHER_FORM = Iri(LEX_NS + "otherForm")
LEX_POS = Iri(LEX_NS + "partOfSpeech")
LEX_SENSE = Iri(LEX_NS + "sense")
LEX_REFERENCE = Iri(LEX_NS + "reference")
LEX_IN_FIELD = Iri(LEX_NS + "inField")
LEX_WEIGHT = Iri(LEX_NS + "weight")


class PartOfSpeech(Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"
    PRONOUN = "pronoun"
    INTERROGATIVE = "interrogative"
    PREPOSITION = "preposition"
    DETERMINER = "determiner"
    OTHER = "other"


class LexiconError(ValueError):
    """Raised when the lexicon references entities missing from the ontology."""


@dataclass
class Word:
    iri: Iri
    canonical_form: str
    other_forms: list[str] = field(default_factory=list)
    part_of_speech: PartOfSpeech = PartOfSpeech.OTHER

    def forms(self) -> list[str]:
        return [self.canonical_form, *self.other_forms]


@dataclass
class LexicalSense:
    iri: Iri
    word: Iri
    reference: Iri
    field: Iri | None = None
    prior_weight: float = 1.0


@dataclass
class SemanticField:
    iri: Iri
    members: list[Iri] = field(default_factory=list)


class Lexicon:
    """Index of words by surface form and senses by word and reference."""

    def __init__(self):
        self.words: dict[Iri, Word] = {}
        self.senses: dict[Iri, LexicalSense] = {}
        self.fields: dict[Iri, SemanticField] = {}
        self._by_form: dict[str, list[Word]] = {}
        self._senses_by_word: dict[Iri, list[LexicalSense]] = {}
        self._senses_by_reference: dict[Iri, list[LexicalSense]] = {}

    def add_word(self, word: Word) -> None:
        word.canonical_form = word.canonical_form.lower()
        word.other_forms = [f.lower() for f in word.other_forms]
        self.words[word.iri] = word
        for form in word.forms():
            bucket = self._by_form.setdefault(form, [])
            if word not in bucket:
                bucket.append(word)

    def add_sense(self, sense: LexicalSense) -> None:
        self.senses[sense.iri] = sense
        self._senses_by_word.setdefault(sense.word, []).append(sense)
        self._senses_by_reference.setdefault(sense.reference, []).append(sense)
        if sense.field is not None:
            self.fields.setdefault(sense.field, SemanticField(sense.field)).members.append(sense.iri)

    def words_for_form(self, form: str) -> list[Word]:
        return list(self._by_form.get(form.lower(), []))

    def senses_for_form(self, form: str) -> list[LexicalSense]:
        """All senses of all words carrying this surface form (case-insensitive)."""
        out = []
        for word in self.words_for_form(form):
            out.extend(self._senses_by_word.get(word.iri, []))
        return out

    def senses_of_word(self, word_iri: Iri) -> list[LexicalSense]:
        return list(self._senses_by_word.get(word_iri, []))

    def lemma(self, form: str) -> str | None:
        """Canonical form for a known surface form, None when unknown."""
        words = self.words_for_form(form)
        return words[0].canonical_form if words else None

    def pos(self, form: str) -> PartOfSpeech | None:
        words = self.words_for_form(form)
        return words[0].part_of_speech if words else None


def field_filter(senses: list[LexicalSense], active_fields: set[Iri]) -> list[LexicalSense]:
    """Drop senses outside the active semantic fields.

    Senses without a field are always retained.  When none of a word's senses
    fall inside an active field the word keeps all its senses, so a non-empty
    input never filters down to nothing.  An empty field set is the identity.
    """
    if not active_fields:
        return list(senses)
    by_word: dict[Iri, list[LexicalSense]] = {}
    for s in senses:
        by_word.setdefault(s.word, []).append(s)
    out = []
    for word_senses in by_word.values():
        kept = [s for s in word_senses if s.field is None or s.field in active_fields]
        out.extend(kept if kept else word_senses)
    return [s for s in senses if s in out]


def load_lexicon(lex_graph: TripleGraph, kg: TripleGraph) -> Lexicon:
    """Build the lexicon from its Turtle graph, validating references against `kg`."""
    lexicon = Lexicon()
    for word_iri in lex_graph.instances_of(LEX_WORD):
        canonical = _str_value(lex_graph, word_iri, LEX_CANONICAL)
        if not canonical:
            raise LexiconError(f"word without canonical form: {word_iri.value}")
        other = sorted(_str_values(lex_graph, word_iri, LEX_OTHER_FORM))
        pos_raw = _str_value(lex_graph, word_iri, LEX_POS) or "other"
        try:
            pos = PartOfSpeech(pos_raw)
        except ValueError:
            raise LexiconError(f"unknown part of speech {pos_raw!r} on {word_iri.value}")
        lexicon.add_word(Word(word_iri, canonical, other, pos))

    dangling = []
    for word_iri in lex_graph.instances_of(LEX_WORD):
        for t in sorted(lex_graph.match_pattern(_pattern(word_iri, LEX_SENSE), {}), key=triple_key):
            sense_iri = t.object
            reference = _iri_value(lex_graph, sense_iri, LEX_REFERENCE)
            if reference is None:
                raise LexiconError(f"sense without reference: {sense_iri.value}")
            if not _known_entity(kg, reference):
                dangling.append((sense_iri, reference))
                continue
            fields = lex_graph.match_pattern(_pattern(sense_iri, LEX_IN_FIELD), {})
            if len(fields) > 1:
                raise LexiconError(f"sense in more than one semantic field: {sense_iri.value}")
            in_field = _iri_value(lex_graph, sense_iri, LEX_IN_FIELD)
            weight_raw = _str_value(lex_graph, sense_iri, LEX_WEIGHT)
            weight = float(weight_raw) if weight_raw is not None else 1.0
            if not 0 < weight <= 1:
                raise LexiconError(f"sense weight out of (0, 1]: {sense_iri.value}")
            lexicon.add_sense(LexicalSense(sense_iri, word_iri, reference, in_field, weight))
    if dangling:
        offenders = ", ".join(f"{s.value} -> {r.value}" for s, r in dangling)
        raise LexiconError(f"senses referencing unknown ontology entities: {offenders}")
    return lexicon


def _known_entity(kg: TripleGraph, iri: Iri) -> bool:
    return kg.is_class(iri) or kg.is_property(iri) or bool(kg.types_of(iri))


def _pattern(subject: Iri, predicate: Iri):
    from .rdf import TriplePattern, Var

    return TriplePattern(subject, predicate, Var("o"))


def _str_value(graph: TripleGraph, subject: Iri, predicate: Iri) -> str | None:
    values = _str_values(graph, subject, predicate)
    return values[0] if values else None


def _str_values(graph: TripleGraph, subject: Iri, predicate: Iri) -> list[str]:
    out = []
    for t in sorted(graph.match_pattern(_pattern(subject, predicate), {}), key=triple_key):
        if isinstance(t.object, Literal):
            out.append(t.object.lexical)
    return out


def _iri_value(graph: TripleGraph, subject: Iri, predicate: Iri) -> Iri | None:
    for t in sorted(graph.match_pattern(_pattern(subject, predicate), {}), key=triple_key):
        if isinstance(t.object, Iri):
            return t.object
    return None
