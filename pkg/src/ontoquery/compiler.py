"""Compile a resolved document graph into SPARQL, execute it, render answers.

SELECT/ASK/INSERT selection follows the utterance shape: a question word
asks for entities, a bare question checks a fact, a declarative statement
inserts new individuals.  Bound objects appear inline by IRI, unbound ones
become variables with an rdf:type pattern, and every semantic edge, literal
constraint and requested value contributes one triple pattern.  Answers are
rendered as entity cards with the relation chain that proves each row.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from enum import Enum

from .analysis import AnalyzedText
from .docgraph import DocumentGraph, MentionKind, Stage
from .rdf import (
    Iri,
    Literal,
    RDF_TYPE,
    Solution,
    Triple,
    TripleGraph,
    TriplePattern,
    Var,
)


class QueryKind(Enum):
    SELECT = "select"
    ASK = "ask"
    INSERT = "insert"


class EmptyPlanError(RuntimeError):
    """No semantic content survived; the dialogue should ask for more."""


@dataclass
class Classification:
    kind: QueryKind
    target_object_id: int | None = None
    value_property: Iri | None = None


@dataclass
class QueryPlan:
    kind: QueryKind
    patterns: list[TriplePattern] = field(default_factory=list)
    targets: list[str] = field(default_factory=list)
    insert_triples: list[Triple] = field(default_factory=list)
    object_terms: dict[int, Iri | Var] = field(default_factory=dict)
    target_object_id: int | None = None
    value_vars: dict[tuple[int, str], Var] = field(default_factory=dict)


@dataclass
class Card:
    lines: list[str]

    @property
    def text(self) -> str:
        return " / ".join(self.lines)


@dataclass
class ProofEntry:
    pattern: TriplePattern
    triple: Triple


@dataclass
class Answer:
    kind: QueryKind
    rows: list[Card]
    sparql: str
    proof: list[list[ProofEntry]]
    solutions: list[Solution]
    inserted: int = 0

    @property
    def text(self) -> str:
        if self.kind == QueryKind.INSERT:
            return self.rows[0].text if self.rows else ""
        return "\n\n".join(card.text for card in self.rows)


# -- classification ------------------------------------------------------------


def classify(at: AnalyzedText, d: DocumentGraph) -> Classification:
    """Pick the query kind and the answer target from the analyzed utterance."""
    d.require_stage(Stage.RESOLVED)
    wh_tokens = [t for t in at.tokens if t.features.get("is_question_word")]
    if wh_tokens:
        target = _target_from_token(at, d, wh_tokens[-1].index)
        if target is not None:
            return Classification(QueryKind.SELECT, target[0], target[1])
        return Classification(QueryKind.SELECT)
    has_requests = any(o.value_requests for o in d.objects)
    if any(s.is_question for s in at.sentences) and not has_requests:
        return Classification(QueryKind.ASK)
    if has_requests:
        obj = next(o for o in d.objects if o.value_requests)
        return Classification(QueryKind.SELECT, obj.id, obj.value_requests[0])
    return Classification(QueryKind.INSERT)


def _target_from_token(at: AnalyzedText, d: DocumentGraph, start: int) -> tuple[int, Iri | None] | None:
    """Walk the syntax graph from a wh-token to the nearest mentioned object."""
    adj = at.adjacency()
    frontier = [start]
    visited = {start}
    while frontier:
        for token in frontier:
            found = _object_at_token(d, token)
            if found is not None:
                return found
        nxt = []
        for token in frontier:
            cluster = at.cluster_of(token)
            mates = set(cluster.members) if cluster else set()
            for n in sorted(adj[token] | mates):
                if n not in visited:
                    visited.add(n)
                    nxt.append(n)
        frontier = nxt
    return None


def _object_at_token(d: DocumentGraph, token: int) -> tuple[int, Iri | None] | None:
    for m in d.surviving_mentions():
        if token not in m.tokens:
            continue
        if m.kind == MentionKind.PROPERTY:
            for obj in d.objects:
                if m.reference in obj.value_requests:
                    return obj.id, m.reference
            for e in sorted(d.object_edges, key=lambda e: (e.source, e.target)):
                if e.predicate == m.reference:
                    return e.source, None
            continue
        for obj in d.objects:
            if m.id in obj.source_mentions:
                return obj.id, None
    return None


# -- compilation ------------------------------------------------------------


def _variable_name(cls: Iri, taken: set[str]) -> str:
    local = cls.local_name()
    words = _camel_words(local)
    name = "".join(w[0] for w in words).lower() if len(words) > 1 else local.lower()
    candidate = name
    suffix = 2
    while candidate in taken:
        candidate = f"{name}{suffix}"
        suffix += 1
    taken.add(candidate)
    return candidate


def _value_variable_name(prop: Iri, taken: set[str]) -> str:
    local = prop.local_name()
    if local.startswith("has") and len(local) > 3:
        local = local[3:]
    name = local.lower()
    candidate = name
    suffix = 2
    while candidate in taken:
        candidate = f"{name}{suffix}"
        suffix += 1
    taken.add(candidate)
    return candidate


def _camel_words(name: str) -> list[str]:
    words = []
    current = ""
    for ch in name:
        if ch.isupper() and current:
            words.append(current)
            current = ch
        else:
            current += ch
    if current:
        words.append(current)
    return words


def compile_plan(d: DocumentGraph, classification: Classification,
                 base_namespace: str = "http://example.org/enterprise#") -> QueryPlan:
    """Build the triple patterns (or ground triples) for the resolved graph."""
    d.require_stage(Stage.RESOLVED)
    kind = classification.kind
    plan = QueryPlan(kind, target_object_id=classification.target_object_id)
    taken: set[str] = set()

    if kind == QueryKind.INSERT:
        _compile_insert(d, plan, base_namespace)
        return plan

    for obj in d.objects:
        if obj.bound:
            plan.object_terms[obj.id] = obj.individual
        else:
            plan.object_terms[obj.id] = Var(_variable_name(obj.cls, taken))
    for obj in d.objects:
        term = plan.object_terms[obj.id]
        if isinstance(term, Var):
            plan.patterns.append(TriplePattern(term, RDF_TYPE, obj.cls))
        for prop, value in sorted(obj.constraints):
            plan.patterns.append(TriplePattern(term, prop, value))
    for e in sorted(d.object_edges, key=lambda e: (e.source, e.target, e.predicate)):
        plan.patterns.append(
            TriplePattern(plan.object_terms[e.source], e.predicate, plan.object_terms[e.target])
        )
    for obj in d.objects:
        for prop in sorted(obj.value_requests):
            var = Var(_value_variable_name(prop, taken))
            plan.value_vars[(obj.id, prop.value)] = var
            plan.patterns.append(TriplePattern(plan.object_terms[obj.id], prop, var))

    if not plan.patterns:
        raise EmptyPlanError("no semantic content to query")

    if kind == QueryKind.SELECT and classification.value_property is not None:
        key = (classification.target_object_id, classification.value_property.value)
        if key in plan.value_vars:
            plan.targets = [plan.value_vars[key].name]
    return plan


def _compile_insert(d: DocumentGraph, plan: QueryPlan, base_namespace: str) -> None:
    if any(o.value_requests for o in d.objects):
        raise EmptyPlanError("cannot insert facts with unknown requested values")
    ns_uuid = uuid.uuid5(uuid.NAMESPACE_URL, base_namespace)
    for obj in d.objects:
        if obj.bound:
            plan.object_terms[obj.id] = obj.individual
        else:
            signature = obj.cls.value + "|" + ";".join(
                f"{p.value}={v.lexical}" for p, v in sorted(obj.constraints)
            ) + f"|{obj.id}"
            minted = Iri(base_namespace + str(uuid.uuid5(ns_uuid, signature)))
            plan.object_terms[obj.id] = minted
            plan.insert_triples.append(Triple(minted, RDF_TYPE, obj.cls))
    for obj in d.objects:
        subject = plan.object_terms[obj.id]
        for prop, value in sorted(obj.constraints):
            plan.insert_triples.append(Triple(subject, prop, value))
    for e in sorted(d.object_edges, key=lambda e: (e.source, e.target, e.predicate)):
        plan.insert_triples.append(
            Triple(plan.object_terms[e.source], e.predicate, plan.object_terms[e.target])
        )
    if not plan.insert_triples:
        raise EmptyPlanError("nothing to insert")


# -- serialization ------------------------------------------------------------


def to_sparql(plan: QueryPlan, graph: TripleGraph) -> str:
    """Deterministic SPARQL text for the plan."""
    used_terms: list = []
    for p in plan.patterns:
        used_terms.extend([p.subject, p.predicate, p.object])
    for t in plan.insert_triples:
        used_terms.extend([t.subject, t.predicate, t.object])
    prefixes = _used_prefixes(graph, used_terms)
    lines = [f"PREFIX {p}: <{ns}>" for p, ns in prefixes]
    if plan.kind == QueryKind.SELECT:
        head = "SELECT " + (" ".join(f"?{v}" for v in plan.targets) if plan.targets else "*")
        lines.append(head + " WHERE {")
        lines.extend(f"  {_render_pattern(p, graph)}" for p in plan.patterns)
        lines.append("}")
    elif plan.kind == QueryKind.ASK:
        lines.append("ASK {")
        lines.extend(f"  {_render_pattern(p, graph)}" for p in plan.patterns)
        lines.append("}")
    else:
        lines.append("INSERT DATA {")
        lines.extend(f"  {_render_pattern(t, graph)}" for t in plan.insert_triples)
        lines.append("}")
    return "\n".join(lines) + "\n"


def _used_prefixes(graph: TripleGraph, terms: list) -> list[tuple[str, str]]:
    used = set()
    for term in terms:
        if isinstance(term, Iri):
            shrunk = graph.shrink(term)
            if not shrunk.startswith("<"):
                used.add(shrunk.split(":", 1)[0])
        elif isinstance(term, Literal) and term.datatype.value.split("#")[0] != "http://www.w3.org/2001/XMLSchema":
            used.add(graph.shrink(term.datatype).split(":", 1)[0])
    return sorted((p, graph.prefixes[p]) for p in used if p in graph.prefixes)


def _render_term(term, graph: TripleGraph) -> str:
    if isinstance(term, Var):
        return f"?{term.name}"
    if isinstance(term, Iri):
        return graph.shrink(term)
    if isinstance(term, Literal):
        from .rdf import XSD_INT, XSD_STRING

        if term.datatype == XSD_INT:
            return term.lexical
        if term.datatype == XSD_STRING:
            return '"' + term.lexical.replace("\\", "\\\\").replace('"', '\\"') + '"'
        return f'"{term.lexical}"^^{graph.shrink(term.datatype)}'
    raise TypeError(f"cannot render {term!r}")


def _render_pattern(p, graph: TripleGraph) -> str:
    if isinstance(p, Triple):
        return f"{_render_term(p.subject, graph)} {_render_term(p.predicate, graph)} {_render_term(p.object, graph)} ."
    return f"{_render_term(p.subject, graph)} {_render_term(p.predicate, graph)} {_render_term(p.object, graph)} ."


# -- execution and rendering -----------------------------------------------


class RenderTemplates:
    """Property -> phrase templates for the human-readable answer card."""

    def __init__(self, templates: dict[Iri, str]):
        self.templates = templates

    @classmethod
    def from_mapping(cls, mapping: dict[str, str], graph: TripleGraph) -> "RenderTemplates":
        resolved = {}
        for key, phrase in mapping.items():
            iri = graph.resolve_prefixed(key) if ":" in key and not key.startswith("http") else Iri(key)
            resolved[iri] = phrase
        return cls(resolved)

    def get(self, prop: Iri) -> str | None:
        return self.templates.get(prop)


def execute_and_render(plan: QueryPlan, kg: TripleGraph, d: DocumentGraph,
                       templates: RenderTemplates) -> Answer:
    sparql = to_sparql(plan, kg)
    if plan.kind == QueryKind.INSERT:
        count = kg.apply_insert(plan.insert_triples)
        by_class: dict[str, int] = {}
        for t in plan.insert_triples:
            if t.predicate == RDF_TYPE and isinstance(t.object, Iri):
                label = kg.label(t.object) or t.object.local_name()
                by_class[label] = by_class.get(label, 0) + 1
        detail = ", ".join(f"{n} {cls}" for cls, n in sorted(by_class.items()))
        lines = [f"Added {count} new facts." + (f" New individuals: {detail}." if detail and count else "")]
        proof = [[ProofEntry(TriplePattern(t.subject, t.predicate, t.object), t) for t in plan.insert_triples]]
        return Answer(plan.kind, [Card(lines)], sparql, proof, [], inserted=count)

    solutions = kg.match_bgp(plan.patterns)
    if plan.kind == QueryKind.ASK:
        yes = bool(solutions)
        proof = [_ground(plan.patterns, solutions[0], kg)] if yes else []
        return Answer(plan.kind, [Card(["Yes." if yes else "No."])], sparql, proof, solutions)

    rows = []
    proof = []
    for solution in solutions:
        rows.append(_render_card(plan, solution, kg, d, templates))
        proof.append(_ground(plan.patterns, solution, kg))
    return Answer(plan.kind, rows, sparql, proof, solutions)


def _ground(patterns: list[TriplePattern], solution: Solution, kg: TripleGraph) -> list[ProofEntry]:
    entries = []
    for p in patterns:
        s, pr, o = (_substitute(t, solution) for t in (p.subject, p.predicate, p.object))
        triple = Triple(s, pr, o)
        entries.append(ProofEntry(p, triple))
    return entries


def _substitute(term, solution: Solution):
    if isinstance(term, Var):
        return solution[term.name]
    return term


def _render_card(plan: QueryPlan, solution: Solution, kg: TripleGraph,
                 d: DocumentGraph, templates: RenderTemplates) -> Card:
    target_id = plan.target_object_id
    if target_id is None or target_id not in plan.object_terms:
        # no specific target: show the first unbound object
        unbound = [oid for oid, term in plan.object_terms.items() if isinstance(term, Var)]
        target_id = unbound[0] if unbound else next(iter(plan.object_terms), None)
    if target_id is None:
        return Card(["(no result)"])
    term = plan.object_terms[target_id]
    value = solution[term.name] if isinstance(term, Var) else term
    name = kg.label(value) if isinstance(value, Iri) else value.lexical
    name = name or value.local_name()
    obj = next(o for o in d.objects if o.id == target_id)
    cls_label = kg.label(obj.cls) or obj.cls.local_name()
    lines = [name, f"class: {cls_label}"]
    for pattern in plan.patterns:
        if pattern.predicate == RDF_TYPE or not isinstance(pattern.predicate, Iri):
            continue
        template = templates.get(pattern.predicate)
        if template is None:
            continue
        if pattern.subject == term:
            other = pattern.object
        elif pattern.object == term:
            other = pattern.subject
        else:
            continue
        rendered = _render_value(_substitute(other, solution), kg)
        lines.append(template.format(rendered))
    return Card(lines)


def _render_value(value, kg: TripleGraph) -> str:
    if isinstance(value, Iri):
        return kg.label(value) or value.local_name()
    return value.lexical
