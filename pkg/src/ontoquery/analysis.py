"""Preliminary text analysis: sentences, tokens, syntax edges, coreference.

The default analyzer is deterministic and rule based so the whole pipeline
runs offline and reproducibly.  It covers the controlled English used by the
fixtures: modifier and genitive attachment, possessives, wh-attachment and a
weak adjacency link between content words.  Anything smarter (a neural
tagger, a real dependency parser) can be swapped in behind ``Analyzer``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol

from .lexicon import Lexicon, PartOfSpeech
from .rdf import Iri

FOAF_PERSON = Iri("http://xmlns.com/foaf/0.1/Person")

ORDINALS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
}

PERSON_PRONOUNS = {"he", "him", "his", "she", "her", "hers", "they", "them", "their", "theirs"}
THING_PRONOUNS = {"it", "its"}
POSSESSIVE_PRONOUNS = {"his", "her", "its", "their"}

_SENTENCE_SPLIT_RE = re.compile(r"[.?!]+")
_TOKEN_RE = re.compile(r"\+?\d[\d-]*\d|\d+|[A-Za-z]+|'s|[,;:]")

CONTENT_POS = {
    PartOfSpeech.NOUN,
    PartOfSpeech.VERB,
    PartOfSpeech.ADJECTIVE,
    PartOfSpeech.OTHER,
}


class EmptyTextError(ValueError):
    pass


@dataclass
class Token:
    index: int
    sentence: int
    text: str
    lemma: str
    pos: PartOfSpeech
    features: dict = field(default_factory=dict)

    def is_content(self) -> bool:
        if self.pos in (PartOfSpeech.PRONOUN, PartOfSpeech.INTERROGATIVE,
                        PartOfSpeech.PREPOSITION, PartOfSpeech.DETERMINER):
            return False
        if not self.text[0].isalnum():
            return False
        return self.pos in CONTENT_POS or self.features.get("is_ordinal", False)


@dataclass(frozen=True)
class SyntacticEdge:
    head: int
    dependent: int
    relation: str


@dataclass
class CoreferenceCluster:
    members: list[int]


@dataclass
class Sentence:
    start: int
    end: int  # exclusive token index
    is_question: bool


@dataclass
class AnalyzedText:
    source: str
    tokens: list[Token]
    edges: list[SyntacticEdge]
    clusters: list[CoreferenceCluster]
    sentences: list[Sentence]

    def token(self, index: int) -> Token:
        return self.tokens[index]

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {t.index: set() for t in self.tokens}
        for e in self.edges:
            adj[e.head].add(e.dependent)
            adj[e.dependent].add(e.head)
        return adj

    def cluster_of(self, index: int) -> CoreferenceCluster | None:
        for cluster in self.clusters:
            if index in cluster.members:
                return cluster
        return None


class Analyzer(Protocol):
    def analyze(self, text: str) -> AnalyzedText: ...


@dataclass
class AnalyzerConfig:
    max_path_len: int = 3
    person_class_iris: frozenset[str] = frozenset({FOAF_PERSON.value})


class RuleAnalyzer:
    """Deterministic analyzer driven by the lexicon and a fixed rule set."""

    def __init__(self, lexicon: Lexicon, config: AnalyzerConfig | None = None):
        self.lexicon = lexicon
        self.config = config or AnalyzerConfig()

    def analyze(self, text: str) -> AnalyzedText:
        if not text or not text.strip():
            raise EmptyTextError("cannot analyze empty text")
        tokens, sentences = self._tokenize(text)
        edges = []
        for sentence in sentences:
            edges.extend(self._sentence_edges(tokens, sentence))
        clusters = self._coreference(tokens)
        return AnalyzedText(text, tokens, edges, clusters, sentences)

    # -- tokenization ------------------------------------------------------

    def _tokenize(self, text: str) -> tuple[list[Token], list[Sentence]]:
        tokens: list[Token] = []
        sentences: list[Sentence] = []
        pos_marks = [(m.start(), m.group(0)) for m in _SENTENCE_SPLIT_RE.finditer(text)]
        cursor = 0
        pieces = []
        for start, mark in pos_marks:
            pieces.append((text[cursor:start], "?" in mark))
            cursor = start + len(mark)
        tail = text[cursor:]
        if tail.strip():
            pieces.append((tail, False))
        for s_index, (piece, is_question) in enumerate(p for p in pieces if p[0].strip()):
            start = len(tokens)
            for m in _TOKEN_RE.finditer(piece):
                raw = m.group(0)
                if raw in {",", ";", ":"}:
                    continue
                tokens.append(self._make_token(len(tokens), s_index, raw))
            sentences.append(Sentence(start, len(tokens), is_question))
        if not tokens:
            raise EmptyTextError("no tokens in text")
        return tokens, sentences

    def _make_token(self, index: int, sentence: int, raw: str) -> Token:
        lower = raw.lower()
        lemma = self.lexicon.lemma(lower) or lower
        pos = self.lexicon.pos(lower)
        features: dict = {}
        if lower in ORDINALS:
            pos = pos or PartOfSpeech.ADJECTIVE
            features["is_ordinal"] = True
            features["number"] = ORDINALS[lower]
        elif raw[0].isdigit() or raw.startswith("+"):
            pos = pos or PartOfSpeech.OTHER
            if raw.isdigit():
                features["number"] = int(raw)
        if lower == "'s":
            pos = PartOfSpeech.OTHER
            features["possessive_marker"] = True
        if pos is None:
            pos = PartOfSpeech.OTHER
        if pos == PartOfSpeech.INTERROGATIVE:
            features["is_question_word"] = True
        if pos == PartOfSpeech.PRONOUN and lower in POSSESSIVE_PRONOUNS:
            features["possessive"] = True
        return Token(index, sentence, raw, lemma, pos, features)

    # -- syntax ------------------------------------------------------------

    def _sentence_edges(self, tokens: list[Token], sentence: Sentence) -> list[SyntacticEdge]:
        span = tokens[sentence.start:sentence.end]
        edges: list[SyntacticEdge] = []
        seen: set[tuple[int, int]] = set()

        def link(head: int, dep: int, relation: str):
            if head == dep:
                return
            key = (min(head, dep), max(head, dep))
            if key in seen:
                return
            seen.add(key)
            edges.append(SyntacticEdge(head, dep, relation))

        content = [t for t in span if t.is_content()]

        # modifier: adjective/ordinal immediately before a noun
        for left, right in zip(span, span[1:]):
            left_is_mod = left.pos == PartOfSpeech.ADJECTIVE or left.features.get("is_ordinal")
            if left_is_mod and right.pos == PartOfSpeech.NOUN:
                link(right.index, left.index, "amod")
            if left.pos == PartOfSpeech.NOUN and right.features.get("number") is not None:
                link(left.index, right.index, "num")

        # prepositional attachment: X prep (det)* Y, genitive when prep is "of"
        for i, t in enumerate(span):
            if t.pos != PartOfSpeech.PREPOSITION:
                continue
            left = next((u for u in reversed(span[:i]) if u.is_content()), None)
            right = next((u for u in span[i + 1:] if u.is_content()), None)
            if left is not None and right is not None:
                link(left.index, right.index, "genitive" if t.lemma == "of" else "prep")

        # possessives: X 's Y and possessive pronouns before a noun
        for i, t in enumerate(span):
            if t.features.get("possessive_marker"):
                left = next((u for u in reversed(span[:i]) if u.is_content()), None)
                right = next((u for u in span[i + 1:] if u.is_content()), None)
                if left is not None and right is not None:
                    link(right.index, left.index, "poss")
            elif t.features.get("possessive"):
                right = next((u for u in span[i + 1:] if u.is_content()), None)
                if right is not None:
                    link(right.index, t.index, "poss")

        # wh-word attaches to the nearest following verb
        for i, t in enumerate(span):
            if t.pos == PartOfSpeech.INTERROGATIVE:
                verb = next((u for u in span[i + 1:] if u.pos == PartOfSpeech.VERB), None)
                if verb is not None:
                    link(verb.index, t.index, "wh")

        # weak adjacency between consecutive content words
        for left, right in zip(content, content[1:]):
            link(left.index, right.index, "adjacent")

        return edges

    # -- coreference ---------------------------------------------------------

    def _coreference(self, tokens: list[Token]) -> list[CoreferenceCluster]:
        links: list[tuple[int, int]] = []
        for t in tokens:
            lower = t.text.lower()
            if t.pos != PartOfSpeech.PRONOUN:
                continue
            if lower in PERSON_PRONOUNS:
                antecedent = self._nearest_before(tokens, t.index, person=True)
            elif lower in THING_PRONOUNS:
                antecedent = self._nearest_before(tokens, t.index, person=False)
            else:
                continue
            if antecedent is not None:
                links.append((antecedent, t.index))
        parents: dict[int, int] = {}

        def find(x):
            while parents.get(x, x) != x:
                x = parents[x]
            return x

        for a, b in links:
            parents[find(b)] = find(a)
        groups: dict[int, list[int]] = {}
        for x in {i for pair in links for i in pair}:
            groups.setdefault(find(x), []).append(x)
        return [CoreferenceCluster(sorted(m)) for _, m in sorted(groups.items()) if len(m) >= 2]

    def _nearest_before(self, tokens: list[Token], index: int, person: bool) -> int | None:
        for t in reversed(tokens[:index]):
            if person and self._is_person_denoting(t):
                return t.index
            if not person and t.pos == PartOfSpeech.NOUN and not self._is_person_denoting(t):
                return t.index
        return None

    def _is_person_denoting(self, token: Token) -> bool:
        for sense in self.lexicon.senses_for_form(token.text):
            if sense.reference.value in self.config.person_class_iris:
                return True
        return False


def analyze(text: str, lexicon: Lexicon, config: AnalyzerConfig | None = None) -> AnalyzedText:
    return RuleAnalyzer(lexicon, config).analyze(text)


def syntactic_paths(at: AnalyzedText, max_len: int) -> set[tuple[int, ...]]:
    """All simple paths of 1..max_len edges in the syntax graph.

    Paths are undirected; each is reported once, canonically oriented so the
    smaller endpoint comes first.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    adj = at.adjacency()
    found: set[tuple[int, ...]] = set()

    def walk(path: list[int]):
        if len(path) > 1:
            canon = tuple(path) if path[0] <= path[-1] else tuple(reversed(path))
            found.add(canon)
        if len(path) == max_len + 1:
            return
        for nxt in sorted(adj[path[-1]]):
            if nxt not in path:
                path.append(nxt)
                walk(path)
                path.pop()

    for start in sorted(adj):
        walk([start])
    return found


def path_distance(at: AnalyzedText, sources: set[int], targets: set[int], max_len: int,
                  cluster_hop: bool = False) -> int | None:
    """Shortest syntactic distance between two token sets, None when > max_len.

    With cluster_hop, coreference cluster mates count as distance-0 aliases,
    so a pronoun stands in for its antecedent.
    """
    if sources & targets:
        return 0
    adj = at.adjacency()
    expand = set(sources)
    if cluster_hop:
        for i in list(expand):
            cluster = at.cluster_of(i)
            if cluster:
                expand.update(cluster.members)
    goal = set(targets)
    if cluster_hop:
        for i in list(goal):
            cluster = at.cluster_of(i)
            if cluster:
                goal.update(cluster.members)
    if expand & goal:
        return 0
    frontier = expand
    visited = set(expand)
    for dist in range(1, max_len + 1):
        nxt = set()
        for i in frontier:
            nxt.update(adj[i])
        nxt -= visited
        if cluster_hop:
            for i in list(nxt):
                cluster = at.cluster_of(i)
                if cluster:
                    nxt.update(set(cluster.members) - visited)
        if nxt & goal:
            return dist
        visited.update(nxt)
        frontier = nxt
        if not frontier:
            break
    return None
