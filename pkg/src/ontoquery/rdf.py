"""In-memory RDF graph: Turtle-subset loader, BGP matcher, INSERT, schema paths.

The graph keeps the domain ontology (TBox) and the facts (ABox) together and
maintains the derived indexes the query pipeline relies on: labels, rdf:type,
domain/range schema edges and owl:maxCardinality entries.  The supported
query form is a basic graph pattern (a conjunction of triple patterns), which
is the only thing the query compiler ever emits.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass


RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

BUILTIN_PREFIXES = {
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "owl": OWL_NS,
    "xsd": XSD_NS,
}

_VAR_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True, order=True)
class Iri:
    """An absolute IRI (prefixed names are resolved at parse time)."""

    value: str

    def __post_init__(self):
        if not self.value:
            raise ValueError("IRI must be non-empty")

    def local_name(self) -> str:
        for sep in ("#", "/"):
            if sep in self.value:
                return self.value.rsplit(sep, 1)[1]
        return self.value

    def __repr__(self):
        return f"<{self.value}>"


RDF_TYPE = Iri(RDF_NS + "type")
RDFS_LABEL = Iri(RDFS_NS + "label")
RDFS_DOMAIN = Iri(RDFS_NS + "domain")
RDFS_RANGE = Iri(RDFS_NS + "range")
RDFS_SUBCLASS = Iri(RDFS_NS + "subClassOf")
OWL_CLASS = Iri(OWL_NS + "Class")
OWL_OBJECT_PROPERTY = Iri(OWL_NS + "ObjectProperty")
OWL_DATATYPE_PROPERTY = Iri(OWL_NS + "DatatypeProperty")
OWL_MAX_CARDINALITY = Iri(OWL_NS + "maxCardinality")
XSD_STRING = Iri(XSD_NS + "string")
XSD_INT = Iri(XSD_NS + "int")


@dataclass(frozen=True, order=True)
class Literal:
    """A literal value with a datatype (plain strings default to xsd:string)."""

    lexical: str
    datatype: Iri = XSD_STRING

    def as_int(self) -> int:
        if self.datatype != XSD_INT:
            raise ValueError(f"not an integer literal: {self!r}")
        return int(self.lexical)

    def __repr__(self):
        if self.datatype == XSD_STRING:
            return f'"{self.lexical}"'
        return f'"{self.lexical}"^^<{self.datatype.value}>'


Term = Iri | Literal


@dataclass(frozen=True, order=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term


@dataclass(frozen=True, order=True)
class Var:
    """A named variable inside a triple pattern."""

    name: str

    def __post_init__(self):
        if not _VAR_NAME_RE.match(self.name):
            raise ValueError(f"invalid variable name: {self.name!r}")

    def __repr__(self):
        return f"?{self.name}"


PatternTerm = Iri | Literal | Var


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def variables(self) -> tuple[str, ...]:
        return tuple(t.name for t in (self.subject, self.predicate, self.object) if isinstance(t, Var))

    def __repr__(self):
        return f"{self.subject!r} {self.predicate!r} {self.object!r} ."


class Solution(dict):
    """One BGP solution: variable name -> bound term."""

    def sort_key(self):
        return tuple((name, _term_key(term)) for name, term in sorted(self.items()))


def _term_key(term: Term) -> tuple:
    if isinstance(term, Iri):
        return (0, term.value, "")
    return (1, term.lexical, term.datatype.value)


def triple_key(t: Triple) -> tuple:
    """Sort key usable on triples whose objects mix IRIs and literals."""
    return (_term_key(t.subject), _term_key(t.predicate), _term_key(t.object))


class TurtleSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownPrefixError(TurtleSyntaxError):
    def __init__(self, prefix: str, line: int, column: int):
        super().__init__(f"unknown prefix '{prefix}'", line, column)
        self.prefix = prefix


class NoSchemaPathError(ValueError):
    """Raised when two classes live in different schema components."""


@dataclass(frozen=True)
class SchemaEdge:
    """One domain/range edge of the ontology schema graph."""

    domain: Iri
    property: Iri
    range: Iri


class TripleGraph:
    """A set of triples plus the derived indexes used by the pipeline.

    Thread model: many readers or one writer.  Writers go through
    ``apply_insert`` which takes the internal lock; readers that need a
    stable view across several calls take ``snapshot()``.
    """

    def __init__(self):
        self.triples: set[Triple] = set()
        self.prefixes: dict[str, str] = dict(BUILTIN_PREFIXES)
        self._lock = threading.RLock()
        # indexes
        self._by_spo: dict[tuple, set[Triple]] = {}
        self._by_s: dict[Iri, set[Triple]] = {}
        self._by_p: dict[Iri, set[Triple]] = {}
        self._by_o: dict[Term, set[Triple]] = {}
        self._labels: dict[Iri, list[str]] = {}
        self._label_lookup: dict[str, list[Iri]] = {}
        self._types: dict[Iri, list[Iri]] = {}
        self._instances: dict[Iri, list[Iri]] = {}
        self._schema_edges: list[SchemaEdge] = []
        self._schema_by_class: dict[Iri, list[SchemaEdge]] = {}
        self._property_domain: dict[Iri, Iri] = {}
        self._property_range: dict[Iri, Term] = {}
        self._max_cardinality: dict[Iri, int] = {}

    # -- construction -----------------------------------------------------

    def add(self, triple: Triple) -> bool:
        """Add one triple; returns False when it was already present."""
        if triple in self.triples:
            return False
        self.triples.add(triple)
        self._index(triple)
        return True

    def _index(self, t: Triple) -> None:
        self._by_s.setdefault(t.subject, set()).add(t)
        self._by_p.setdefault(t.predicate, set()).add(t)
        self._by_o.setdefault(t.object, set()).add(t)
        if t.predicate == RDFS_LABEL and isinstance(t.object, Literal):
            self._labels.setdefault(t.subject, []).append(t.object.lexical)
            self._label_lookup.setdefault(t.object.lexical.lower(), []).append(t.subject)
        elif t.predicate == RDF_TYPE and isinstance(t.object, Iri):
            self._types.setdefault(t.subject, []).append(t.object)
            self._instances.setdefault(t.object, []).append(t.subject)
        elif t.predicate == RDFS_DOMAIN and isinstance(t.object, Iri):
            self._property_domain[t.subject] = t.object
            self._refresh_schema_edge(t.subject)
        elif t.predicate == RDFS_RANGE:
            self._property_range[t.subject] = t.object
            self._refresh_schema_edge(t.subject)
        elif t.predicate == OWL_MAX_CARDINALITY and isinstance(t.object, Literal):
            self._max_cardinality[t.subject] = int(t.object.lexical)

    def _refresh_schema_edge(self, prop: Iri) -> None:
        dom = self._property_domain.get(prop)
        rng = self._property_range.get(prop)
        if dom is None or not isinstance(rng, Iri) or rng.value.startswith(XSD_NS):
            return
        edge = SchemaEdge(dom, prop, rng)
        if edge in self._schema_edges:
            return
        self._schema_edges.append(edge)
        self._schema_by_class.setdefault(dom, []).append(edge)
        self._schema_by_class.setdefault(rng, []).append(edge)

    # -- basic lookups -----------------------------------------------------

    def __len__(self):
        return len(self.triples)

    def __contains__(self, triple: Triple):
        return triple in self.triples

    def label(self, iri: Iri) -> str | None:
        labels = self._labels.get(iri)
        return labels[0] if labels else None

    def entities_labelled(self, text: str) -> list[Iri]:
        """All entities whose rdfs:label equals `text` case-insensitively."""
        return sorted(self._label_lookup.get(text.lower(), []))

    def types_of(self, iri: Iri) -> list[Iri]:
        return sorted(self._types.get(iri, []))

    def instances_of(self, cls: Iri) -> list[Iri]:
        return sorted(self._instances.get(cls, []))

    def is_class(self, iri: Iri) -> bool:
        if OWL_CLASS in self._types.get(iri, []):
            return True
        return iri in self._schema_by_class or iri in self._instances

    def is_property(self, iri: Iri) -> bool:
        types = self._types.get(iri, [])
        if OWL_OBJECT_PROPERTY in types or OWL_DATATYPE_PROPERTY in types:
            return True
        return iri in self._property_domain or iri in self._property_range

    def is_datatype_property(self, prop: Iri) -> bool:
        if OWL_DATATYPE_PROPERTY in self._types.get(prop, []):
            return True
        rng = self._property_range.get(prop)
        return isinstance(rng, Iri) and rng.value.startswith(XSD_NS)

    def property_domain(self, prop: Iri) -> Iri | None:
        return self._property_domain.get(prop)

    def property_range(self, prop: Iri) -> Term | None:
        return self._property_range.get(prop)

    def max_cardinality(self, prop: Iri) -> int | None:
        return self._max_cardinality.get(prop)

    def functional_datatype_properties(self, cls: Iri) -> list[Iri]:
        """Datatype properties with maxCardinality 1 whose domain is `cls`."""
        out = [
            p
            for p, card in self._max_cardinality.items()
            if card == 1 and self.is_datatype_property(p) and self._property_domain.get(p) == cls
        ]
        return sorted(out)

    def schema_edges(self) -> list[SchemaEdge]:
        return list(self._schema_edges)

    def schema_classes(self) -> set[Iri]:
        return set(self._schema_by_class)

    def snapshot(self) -> "TripleGraph":
        """A consistent copy for query execution while writers may proceed."""
        with self._lock:
            clone = TripleGraph()
            clone.prefixes = dict(self.prefixes)
            for t in self.triples:
                clone.add(t)
            return clone

    # -- BGP matching ------------------------------------------------------

    def match_pattern(self, pattern: TriplePattern, binding: Solution) -> list[Triple]:
        """Triples matching one pattern under an existing binding."""
        s, p, o = (_resolve(t, binding) for t in (pattern.subject, pattern.predicate, pattern.object))
        candidates: set[Triple] | None = None
        if not isinstance(s, Var):
            candidates = self._by_s.get(s, set())
        if not isinstance(p, Var):
            by_p = self._by_p.get(p, set())
            candidates = by_p if candidates is None else candidates & by_p
        if not isinstance(o, Var):
            by_o = self._by_o.get(o, set())
            candidates = by_o if candidates is None else candidates & by_o
        if candidates is None:
            candidates = self.triples
        out = []
        for t in candidates:
            if not isinstance(s, Var) and t.subject != s:
                continue
            if not isinstance(p, Var) and t.predicate != p:
                continue
            if not isinstance(o, Var) and t.object != o:
                continue
            out.append(t)
        return out

    def match_bgp(self, patterns: list[TriplePattern]) -> list[Solution]:
        """All variable bindings under which every pattern is a graph triple.

        The result is sorted by binding tuples so callers see a stable order.
        An empty pattern list yields the single empty solution.
        """
        solutions = [Solution()]
        for pattern in patterns:
            next_solutions = []
            for binding in solutions:
                for t in self.match_pattern(pattern, binding):
                    extended = _extend(pattern, t, binding)
                    if extended is not None:
                        next_solutions.append(extended)
            solutions = next_solutions
            if not solutions:
                break
        solutions.sort(key=Solution.sort_key)
        return solutions

    def ask(self, patterns: list[TriplePattern]) -> bool:
        return bool(self.match_bgp(patterns))

    # -- updates -----------------------------------------------------------

    def apply_insert(self, triples: list[Triple]) -> int:
        """Add triples; duplicates are not double counted (set semantics)."""
        with self._lock:
            return sum(1 for t in triples if self.add(t))

    # -- schema path search --------------------------------------------------

    def shortest_schema_path(self, start: Iri, goal: Iri) -> list[tuple[Iri, Iri]]:
        """Minimal undirected domain/range path between two schema classes.

        Returns [(class_reached, property_used), ...]; empty for start == goal.
        Ties are broken by lexicographic comparison of the visited IRI strings.
        """
        known = self.schema_classes()
        for c in (start, goal):
            if c not in known:
                raise NoSchemaPathError(f"class not in schema: {c.value}")
        if start == goal:
            return []
        # Dijkstra on (length, iri-sequence) keys gives lexicographic tie-breaks.
        best: dict[Iri, tuple] = {start: (0, (start.value,), [])}
        frontier = [start]
        while frontier:
            frontier.sort(key=lambda c: best[c][:2])
            current = frontier.pop(0)
            length, seq, steps = best[current]
            if current == goal:
                return steps
            for edge in sorted(self._schema_by_class.get(current, []), key=lambda e: (e.property, e.domain, e.range)):
                nxt = edge.range if edge.domain == current else edge.domain
                cand = (length + 1, seq + (edge.property.value, nxt.value), steps + [(nxt, edge.property)])
                if nxt not in best or cand[:2] < best[nxt][:2]:
                    best[nxt] = cand
                    if nxt not in frontier:
                        frontier.append(nxt)
        raise NoSchemaPathError(f"no schema path between {start.value} and {goal.value}")

    # -- Turtle ------------------------------------------------------------

    def resolve_prefixed(self, name: str, line: int = 0, column: int = 0) -> Iri:
        prefix, _, local = name.partition(":")
        if prefix not in self.prefixes:
            raise UnknownPrefixError(prefix, line, column)
        return Iri(self.prefixes[prefix] + local)

    def shrink(self, iri: Iri) -> str:
        """Render an IRI as a prefixed name when a namespace matches."""
        matches = [(ns, p) for p, ns in self.prefixes.items() if iri.value.startswith(ns)]
        if matches:
            ns, p = max(matches)
            return f"{p}:{iri.value[len(ns):]}"
        return f"<{iri.value}>"

    def load_turtle(self, text: str) -> "TripleGraph":
        _TurtleParser(text, self).run()
        return self

    def serialize_turtle(self) -> str:
        """Deterministic Turtle text: sorted prefixes, sorted subjects."""
        lines = []
        for prefix in sorted(self.prefixes):
            lines.append(f"@prefix {prefix}: <{self.prefixes[prefix]}> .")
        lines.append("")
        by_subject: dict[Iri, list[Triple]] = {}
        for t in self.triples:
            by_subject.setdefault(t.subject, []).append(t)
        for subject in sorted(by_subject):
            parts = []
            for t in sorted(by_subject[subject], key=triple_key):
                parts.append(f"{self.shrink(t.predicate)} {self._serialize_term(t.object)}")
            lines.append(f"{self.shrink(subject)} " + " ;\n    ".join(parts) + " .")
        return "\n".join(lines) + "\n"

    def _serialize_term(self, term: Term) -> str:
        if isinstance(term, Iri):
            return self.shrink(term)
        if term.datatype == XSD_STRING:
            return '"' + term.lexical.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if term.datatype == XSD_INT:
            return term.lexical
        return f'"{term.lexical}"^^{self.shrink(term.datatype)}'


def load_turtle(text: str) -> TripleGraph:
    """Parse a Turtle-subset document into a fresh graph."""
    return TripleGraph().load_turtle(text)


def _resolve(term: PatternTerm, binding: Solution) -> PatternTerm:
    if isinstance(term, Var) and term.name in binding:
        return binding[term.name]
    return term


def _extend(pattern: TriplePattern, t: Triple, binding: Solution) -> Solution | None:
    new = Solution(binding)
    for pat_term, value in ((pattern.subject, t.subject), (pattern.predicate, t.predicate), (pattern.object, t.object)):
        if isinstance(pat_term, Var):
            bound = new.get(pat_term.name)
            if bound is None:
                new[pat_term.name] = value
            elif bound != value:
                return None
        elif pat_term != value:
            return None
    return new


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<prefix_decl>@prefix\b)
      | (?P<iri><[^<>\s]*>)
      | (?P<literal>"(?:[^"\\]|\\.)*")
      | (?P<typed>\^\^)
      | (?P<integer>[+-]?[0-9]+)
      | (?P<pname>[A-Za-z][A-Za-z0-9_.-]*)?:(?P<local>[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?
      | (?P<kw_a>\ba\b)
      | (?P<punct>[;,.\[\]])
    """,
    re.VERBOSE,
)


class _TurtleParser:
    """Recursive-descent parser for the supported Turtle subset.

    Supported: @prefix, prefixed names, <iri>, `a`, `;`/`,` abbreviations,
    plain string literals, typed literals via ^^, bare integers (xsd:int).
    """

    def __init__(self, text: str, graph: TripleGraph):
        self.graph = graph
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _tokenize(self, text: str):
        tokens = []
        line, col = 1, 1
        i = 0
        while i < len(text):
            m = _TOKEN_RE.match(text, i)
            if not m or m.end() == i:
                raise TurtleSyntaxError(f"unexpected character {text[i]!r}", line, col)
            kind = m.lastgroup
            raw = m.group(0)
            if kind == "local" or kind is None:
                kind = "pname"  # bare ':' or ':local' matches with no named group
            if kind == "pname" and raw == "a":
                kind = "kw_a"
            if kind not in ("ws", "comment"):
                tokens.append((kind, raw, line, col))
            newlines = raw.count("\n")
            if newlines:
                line += newlines
                col = len(raw) - raw.rfind("\n")
            else:
                col += len(raw)
            i = m.end()
        tokens.append(("eof", "", line, col))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.next()
        if tok[0] != kind:
            raise TurtleSyntaxError(f"expected {kind}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def run(self):
        while self.peek()[0] != "eof":
            if self.peek()[0] == "prefix_decl":
                self._prefix_decl()
            else:
                self._statement()

    def _prefix_decl(self):
        self.next()
        kind, raw, line, col = self.next()
        if kind != "pname" or not raw.endswith(":"):
            raise TurtleSyntaxError("expected prefix name", line, col)
        prefix = raw[:-1]
        iri_tok = self.expect("iri")
        self.graph.prefixes[prefix] = iri_tok[1][1:-1]
        self._expect_punct(".")

    def _statement(self):
        subject = self._term(expect_iri=True)
        while True:
            predicate = self._predicate()
            while True:
                obj = self._term()
                self.graph.add(Triple(subject, predicate, obj))
                if self._punct_is(","):
                    self.next()
                    continue
                break
            if self._punct_is(";"):
                self.next()
                if self._punct_is("."):
                    break
                continue
            break
        self._expect_punct(".")

    def _predicate(self) -> Iri:
        kind, raw, line, col = self.peek()
        if kind == "kw_a":
            self.next()
            return RDF_TYPE
        term = self._term(expect_iri=True)
        return term

    def _term(self, expect_iri: bool = False):
        kind, raw, line, col = self.next()
        if kind == "iri":
            return Iri(raw[1:-1])
        if kind == "pname":
            return self.graph.resolve_prefixed(raw, line, col)
        if expect_iri:
            raise TurtleSyntaxError(f"expected IRI, found {raw!r}", line, col)
        if kind == "literal":
            lexical = _unescape(raw[1:-1])
            if self.peek()[0] == "typed":
                self.next()
                dt = self._term(expect_iri=True)
                return Literal(lexical, dt)
            return Literal(lexical)
        if kind == "integer":
            return Literal(raw, XSD_INT)
        raise TurtleSyntaxError(f"unexpected token {raw!r}", line, col)

    def _punct_is(self, ch: str) -> bool:
        kind, raw, *_ = self.peek()
        return kind == "punct" and raw == ch

    def _expect_punct(self, ch: str):
        kind, raw, line, col = self.next()
        if kind != "punct" or raw != ch:
            raise TurtleSyntaxError(f"expected {ch!r}, found {raw!r}", line, col)


def _unescape(s: str) -> str:
    return (
        s.replace("\\n", "\n")
        .replace("\\t", "\t")
        .replace('\\"', '"')
        .replace("\\\\", "\\")
    )
