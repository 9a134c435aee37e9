"""Collapse surviving mentions into resolved objects and bind individuals.

Two same-class mentions denote the same object unless a functional
(maxCardinality 1) datatype property separates them: mentions carrying
different values of such a property stay distinct, everything else merges.
Coreference clusters also unify mentions, but never against conflicting
functional values.  Objects with identifying constraints are then looked up
in the ABox; the outcome (bound, variable, ambiguous, unmatched) drives the
dialogue behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .analysis import path_distance
from .docgraph import (
    DocumentGraph,
    HiddenNode,
    Mention,
    MentionKind,
    ResolvedObject,
    Stage,
)
from .rdf import Iri, RDF_TYPE, TripleGraph, TriplePattern, Var


class BindingState(Enum):
    BOUND = "bound"
    VARIABLE = "variable"
    AMBIGUOUS = "ambiguous"
    UNMATCHED = "unmatched"


@dataclass
class BindingOutcome:
    object_id: int
    state: BindingState
    iri: Iri | None = None
    count: int = 0
    description: str = ""


def resolve_objects(d: DocumentGraph, ontology: TripleGraph) -> DocumentGraph:
    """Turn the disambiguated mention layer into resolved objects."""
    d.require_stage(Stage.DISAMBIGUATED)
    surviving = d.surviving_mentions()
    class_like = [m for m in surviving if m.kind in (MentionKind.CLASS, MentionKind.INDIVIDUAL)]
    literal_mentions = [m for m in surviving if m.kind == MentionKind.LITERAL_VALUE]
    property_mentions = {m.id: m for m in surviving if m.kind == MentionKind.PROPERTY}

    in_edges: dict[int, list] = {}
    out_edges: dict[int, list] = {}
    for e in d.mention_edges:
        if d.node(e.source).__class__ is Mention and d.node(e.source).discarded:
            continue
        if d.node(e.target).__class__ is Mention and d.node(e.target).discarded:
            continue
        in_edges.setdefault(e.target, []).append(e)
        out_edges.setdefault(e.source, []).append(e)

    # literal mentions attach to the syntactically nearest connected class
    # mention; unattached ones spawn an implicit instance of their domain
    literal_owner: dict[int, int] = {}
    implied: list[tuple[Mention, Iri]] = []
    for lit in literal_mentions:
        class_sources = []
        for e in in_edges.get(lit.id, []):
            node = d.node(e.source)
            if isinstance(node, HiddenNode):
                class_sources.append((0, e.source))
            elif node.kind in (MentionKind.CLASS, MentionKind.INDIVIDUAL):
                dist = path_distance(d.at, set(node.tokens), set(lit.tokens), 10, cluster_hop=True)
                class_sources.append((dist if dist is not None else 99, e.source))
        if class_sources:
            literal_owner[lit.id] = min(class_sources)[1]
        else:
            dom = ontology.property_domain(lit.reference)
            if dom is not None:
                implied.append((lit, dom))

    # group founders: class-like mentions, hidden nodes, implied instances
    groups = _unify(d, ontology, class_like, literal_owner, literal_mentions)

    node_to_object: dict[int, ResolvedObject] = {}
    for group in groups:
        founders = [d.node(n) for n in group.members]
        cls = group.cls
        individual = group.individual
        obj = d.add_object(cls, individual)
        for node in founders:
            if isinstance(node, HiddenNode):
                obj.source_hidden.append(node.id)
            else:
                obj.source_mentions.append(node.id)
            node_to_object[node.id] = obj
        obj.constraints.extend(sorted(group.constraints))
    for lit, dom in implied:
        obj = d.add_object(dom, None)
        obj.constraints.append((lit.reference, lit.literal))
        obj.source_mentions.append(lit.id)
        node_to_object[lit.id] = obj

    # copy semantic edges from mentions to objects, contracting property
    # placeholders: in-edge only -> a value request, through-edges -> direct
    for e in d.mention_edges:
        src = d.node(e.source)
        dst = d.node(e.target)
        if isinstance(src, Mention) and src.discarded:
            continue
        if isinstance(dst, Mention) and dst.discarded:
            continue
        if e.target in property_mentions:
            continue  # handled below
        if isinstance(dst, Mention) and dst.kind == MentionKind.LITERAL_VALUE:
            owner = node_to_object.get(e.source)
            if owner is not None and literal_owner.get(e.target) == e.source:
                constraint = (dst.reference, dst.literal)
                if constraint not in owner.constraints:
                    owner.constraints.append(constraint)
            continue
        source_obj = node_to_object.get(e.source)
        target_obj = node_to_object.get(e.target)
        if source_obj is not None and target_obj is not None and source_obj is not target_obj:
            d.add_object_edge(source_obj.id, target_obj.id, e.predicate)

    for pm_id, pm in sorted(property_mentions.items()):
        subjects = [node_to_object[e.source] for e in in_edges.get(pm_id, [])
                    if e.source in node_to_object]
        objects = [node_to_object[e.target] for e in out_edges.get(pm_id, [])
                   if e.target in node_to_object]
        if subjects and objects:
            for s in subjects:
                for o in objects:
                    if s is not o:
                        d.add_object_edge(s.id, o.id, pm.reference)
        elif subjects:
            for s in subjects:
                if pm.reference not in s.value_requests:
                    s.value_requests.append(pm.reference)
        elif objects:
            dom = ontology.property_domain(pm.reference)
            if dom is not None:
                subject = d.add_object(dom, None)
                subject.source_mentions.append(pm.id)
                for o in objects:
                    d.add_object_edge(subject.id, o.id, pm.reference)
        else:
            dom = ontology.property_domain(pm.reference)
            if dom is not None:
                subject = d.add_object(dom, None)
                subject.source_mentions.append(pm.id)
                subject.value_requests.append(pm.reference)
    d.advance(Stage.RESOLVED)
    return d


@dataclass
class _Group:
    members: list[int]
    cls: Iri
    individual: Iri | None
    constraints: set


def _signature(d: DocumentGraph, ontology: TripleGraph, mention: Mention,
               literal_owner: dict[int, int], literal_mentions: list[Mention]) -> frozenset:
    """Functional datatype values attached to a mention (its identity card)."""
    values = set()
    for lit in literal_mentions:
        if literal_owner.get(lit.id) != mention.id:
            continue
        if ontology.max_cardinality(lit.reference) == 1:
            values.add((lit.reference, lit.literal))
    return frozenset(values)


def _conflicting(sig_a: frozenset, sig_b: frozenset) -> bool:
    by_prop_a = {p: v for p, v in sig_a}
    return any(p in by_prop_a and by_prop_a[p] != v for p, v in sig_b)


def _unify(d: DocumentGraph, ontology: TripleGraph, class_like: list[Mention],
           literal_owner: dict[int, int], literal_mentions: list[Mention]) -> list[_Group]:
    """Partition class-like mentions and hidden nodes into object groups.

    Deterministic and independent of creation order: grouping is keyed on
    (class, bound individual, functional-value signature), then groups
    sharing a coreference cluster merge, then a signature-free group joins
    the single signed group of its class when that leaves no ambiguity.
    """
    entries = []
    for m in class_like:
        cls = m.reference if m.kind == MentionKind.CLASS else _primary_type(ontology, m.reference)
        individual = m.reference if m.kind == MentionKind.INDIVIDUAL else None
        sig = _signature(d, ontology, m, literal_owner, literal_mentions)
        entries.append((m.id, cls, individual, sig))
    for h in d.hidden:
        entries.append((h.id, h.reference, None, frozenset()))

    keyed: dict[tuple, _Group] = {}
    for node_id, cls, individual, sig in sorted(entries):
        key = (cls, individual, sig)
        group = keyed.get(key)
        if group is None:
            keyed[key] = group = _Group([], cls, individual, set())
        group.members.append(node_id)
        group.constraints |= set(sig)
    groups = list(keyed.values())

    # coreference: clusters unify same-class groups unless signatures conflict
    for cluster in d.at.clusters:
        touched = []
        for group in groups:
            if _covers_cluster(d, group, set(cluster.members)):
                touched.append(group)
        merged = None
        for group in touched:
            if merged is None:
                merged = group
                continue
            if merged.cls != group.cls or _conflicting(frozenset(merged.constraints), frozenset(group.constraints)):
                continue
            if merged.individual and group.individual and merged.individual != group.individual:
                continue
            merged.members.extend(group.members)
            merged.constraints |= group.constraints
            merged.individual = merged.individual or group.individual
            groups.remove(group)

    # a signature-free group merges into the unique signed sibling of its class
    by_class: dict[Iri, list[_Group]] = {}
    for group in groups:
        by_class.setdefault(group.cls, []).append(group)
    for cls, siblings in by_class.items():
        plain = [g for g in siblings if not g.constraints and g.individual is None]
        signed = [g for g in siblings if g.constraints or g.individual is not None]
        if len(plain) == 1 and len(signed) == 1:
            signed[0].members.extend(plain[0].members)
            groups.remove(plain[0])
    for group in groups:
        group.members.sort()
    groups.sort(key=lambda g: g.members[0])
    return groups


def _covers_cluster(d: DocumentGraph, group: _Group, cluster: set[int]) -> bool:
    for node_id in group.members:
        node = d.node(node_id)
        if isinstance(node, Mention) and set(node.tokens) & cluster:
            return True
    return False


def _primary_type(ontology: TripleGraph, individual: Iri) -> Iri:
    types = ontology.types_of(individual)
    if not types:
        raise ValueError(f"individual without rdf:type: {individual.value}")
    return types[0]


def bind_individuals(d: DocumentGraph, kg: TripleGraph, labeller=None) -> dict[int, BindingOutcome]:
    """Look up each object in the ABox using its type and literal constraints."""
    d.require_stage(Stage.RESOLVED)
    outcomes: dict[int, BindingOutcome] = {}
    for obj in d.objects:
        if obj.individual is not None:
            outcomes[obj.id] = BindingOutcome(obj.id, BindingState.BOUND, obj.individual,
                                              1, _describe(d, kg, obj))
            continue
        if not obj.constraints:
            outcomes[obj.id] = BindingOutcome(obj.id, BindingState.VARIABLE,
                                              description=_describe(d, kg, obj))
            continue
        patterns = [TriplePattern(Var("x"), RDF_TYPE, obj.cls)]
        for prop, value in sorted(obj.constraints):
            patterns.append(TriplePattern(Var("x"), prop, value))
        hits = sorted({s["x"] for s in kg.match_bgp(patterns)}, key=lambda i: i.value)
        description = _describe(d, kg, obj)
        if len(hits) == 1:
            obj.individual = hits[0]
            outcomes[obj.id] = BindingOutcome(obj.id, BindingState.BOUND, hits[0], 1, description)
        elif not hits:
            outcomes[obj.id] = BindingOutcome(obj.id, BindingState.UNMATCHED, None, 0, description)
        else:
            outcomes[obj.id] = BindingOutcome(obj.id, BindingState.AMBIGUOUS, None, len(hits), description)
    return outcomes


def _describe(d: DocumentGraph, kg: TripleGraph, obj: ResolvedObject) -> str:
    cls = kg.label(obj.cls) or obj.cls.local_name()
    if obj.constraints:
        parts = ", ".join(
            f"{(kg.label(p) or p.local_name())} \"{v.lexical}\"" for p, v in sorted(obj.constraints)
        )
        return f"{cls} with {parts}"
    return cls
