"""Semantic assembly: schema-induced edges, winner choice, hidden nodes.

Edges between mentions come from the ontology schema: when two mentions are
close in the syntax graph and their anchor classes are joined by a
domain/range edge, that property becomes a semantic edge.  Competing
mentions are then settled as a min-cost max-flow over the token/mention
incidence graph; because every token arc has capacity one and no other arc
binds, the network decomposes per token and the optimum assigns each token
to its cheapest covering mention.  Finally, hidden nodes for unmentioned
classes are inserted along shortest schema paths until the semantic layer is
one weakly connected component.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .analysis import path_distance
from .docgraph import (
    DocumentGraph,
    HiddenNode,
    Hypothesis,
    Mention,
    MentionKind,
    Provenance,
    Stage,
)
from .rdf import Iri, NoSchemaPathError, TripleGraph


# -- anchors ---------------------------------------------------------------


def anchor_classes(m: Mention, ontology: TripleGraph) -> list[Iri]:
    """The ontology classes a mention stands for when relating it to others."""
    if m.kind == MentionKind.CLASS:
        return [m.reference]
    if m.kind == MentionKind.INDIVIDUAL:
        return ontology.types_of(m.reference)
    if m.kind == MentionKind.LITERAL_VALUE:
        dom = ontology.property_domain(m.reference)
        return [dom] if dom else []
    if m.kind == MentionKind.PROPERTY:
        dom = ontology.property_domain(m.reference)
        return [dom] if dom else []
    return []


# -- predicate induction -----------------------------------------------------


def induce_edges(d: DocumentGraph, ontology: TripleGraph, max_path_len: int = 3) -> DocumentGraph:
    """Add a semantic edge for every schema-compatible, syntax-close pair."""
    d.require_stage(Stage.MENTIONS_ADDED)
    mentions = d.mentions
    for i, m1 in enumerate(mentions):
        for m2 in mentions[i + 1:]:
            dist = path_distance(d.at, set(m1.tokens), set(m2.tokens), max_path_len, cluster_hop=True)
            if dist is None:
                continue
            _relate(d, m1, m2, ontology)
            _relate(d, m2, m1, ontology)
    d.advance(Stage.PREDICATES_ADDED)
    return d


def _relate(d: DocumentGraph, a: Mention, b: Mention, ontology: TripleGraph) -> None:
    class_like = (MentionKind.CLASS, MentionKind.INDIVIDUAL)
    if a.kind in class_like and b.kind in class_like:
        for edge in ontology.schema_edges():
            if edge.domain in anchor_classes(a, ontology) and edge.range in anchor_classes(b, ontology):
                d.add_mention_edge(a.id, b.id, edge.property)
    elif a.kind in class_like and b.kind == MentionKind.LITERAL_VALUE:
        if ontology.property_domain(b.reference) in anchor_classes(a, ontology):
            d.add_mention_edge(a.id, b.id, b.reference)
    elif a.kind in class_like and b.kind == MentionKind.PROPERTY:
        anchors = anchor_classes(a, ontology)
        if ontology.property_domain(b.reference) in anchors:
            d.add_mention_edge(a.id, b.id, b.reference)
        elif ontology.property_range(b.reference) in anchors:
            d.add_mention_edge(b.id, a.id, b.reference)
    elif a.kind == MentionKind.LITERAL_VALUE and b.kind == MentionKind.PROPERTY:
        if ontology.property_domain(b.reference) in anchor_classes(a, ontology):
            d.add_mention_edge(a.id, b.id, b.reference)


# -- winner choice -----------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    capacity: int
    cost: Fraction


@dataclass
class FlowProblem:
    """Source -> mention -> token -> sink network for mention selection."""

    nodes: list[str]
    arcs: list[Arc]
    mention_cost: dict[int, Fraction]

    @property
    def max_flow_value(self) -> int:
        tokens = {a.target for a in self.arcs if a.target.startswith("t")}
        return len(tokens)


def mention_cost(d: DocumentGraph, m: Mention) -> Fraction:
    """Reciprocal of the matcher weight boosted by the semantic degree."""
    degree = sum(1 for e in d.mention_edges if m.id in (e.source, e.target))
    adjusted = m.weight * (1 + degree)
    return Fraction(1) / Fraction(adjusted)


def build_flow_problem(d: DocumentGraph) -> FlowProblem:
    costs = {m.id: mention_cost(d, m) for m in d.mentions}
    nodes = ["source", "sink"]
    arcs = []
    covered: set[int] = set()
    for m in d.mentions:
        nodes.append(f"m{m.id}")
        arcs.append(Arc("source", f"m{m.id}", len(m.tokens), Fraction(0)))
        for t in m.tokens:
            covered.add(t)
            arcs.append(Arc(f"m{m.id}", f"t{t}", 1, costs[m.id]))
    for t in sorted(covered):
        nodes.append(f"t{t}")
        arcs.append(Arc(f"t{t}", "sink", 1, Fraction(0)))
    return FlowProblem(nodes, arcs, costs)


def choose_winners(d: DocumentGraph, epsilon: float = 0.05) -> DocumentGraph:
    """Tombstone losing mentions via the min-cost max-flow readout.

    The network decomposes per token (the only binding capacities are the
    token arcs), so the minimum-cost maximum flow assigns every covered token
    to its cheapest mention, ties to the lower mention id.  A mention
    survives iff it wins all of its tokens.  Near ties between different
    references are recorded for the dialogue layer to clarify.
    """
    d.require_stage(Stage.PREDICATES_ADDED)
    problem = build_flow_problem(d)
    by_token: dict[int, list[Mention]] = {}
    for m in d.mentions:
        for t in m.tokens:
            by_token.setdefault(t, []).append(m)

    assignment: dict[int, int] = {}
    near_ties: list[tuple[int, int, float]] = []
    for t, claimants in sorted(by_token.items()):
        winner = min(claimants, key=lambda m: (problem.mention_cost[m.id], m.id))
        assignment[t] = winner.id
        w_cost = problem.mention_cost[winner.id]
        for loser in claimants:
            if loser.id == winner.id or loser.reference == winner.reference:
                continue
            l_cost = problem.mention_cost[loser.id]
            gap = float((l_cost - w_cost) / l_cost)
            if gap < epsilon:
                near_ties.append((winner.id, loser.id, gap))

    surviving = []
    total = Fraction(0)
    for m in d.mentions:
        if all(assignment.get(t) == m.id for t in m.tokens):
            surviving.append(m.id)
            total += problem.mention_cost[m.id] * len(m.tokens)
        else:
            m.discarded = True
    d.hypothesis = Hypothesis(surviving, float(total), sorted(set(near_ties)))
    d.advance(Stage.DISAMBIGUATED)
    return d


def exhaustive_assignment_oracle(d: DocumentGraph) -> set[int]:
    """Brute force over token->mention assignments; test oracle for the flow.

    Enumerates every complete assignment of covered tokens to covering
    mentions, scores it by (total arc cost, assignment id vector) and reads
    the winners off the best one.  Independent of the flow shortcut above.
    """
    import itertools

    costs = {m.id: mention_cost(d, m) for m in d.mentions}
    by_token: dict[int, list[Mention]] = {}
    for m in d.mentions:
        for t in m.tokens:
            by_token.setdefault(t, []).append(m)
    tokens = sorted(by_token)
    best_key = None
    best_assignment = None
    for combo in itertools.product(*(by_token[t] for t in tokens)):
        cost = sum((costs[m.id] for m in combo), Fraction(0))
        ids = tuple(m.id for m in combo)
        key = (cost, ids)
        if best_key is None or key < best_key:
            best_key = key
            best_assignment = dict(zip(tokens, ids))
    if best_assignment is None:
        return set()
    return {
        m.id for m in d.mentions
        if all(best_assignment.get(t) == m.id for t in m.tokens)
    }


# -- hidden node insertion ----------------------------------------------------


class ConnectivityError(RuntimeError):
    """Two semantic fragments cannot be related through the schema."""

    def __init__(self, fragments: list[str]):
        super().__init__("cannot connect fragments: " + " | ".join(fragments))
        self.fragments = fragments


@dataclass(frozen=True)
class _Port:
    node_id: int
    cls: Iri
    attach_property: Iri | None  # None: attach directly to the node


def _ports(d: DocumentGraph, node_id: int, ontology: TripleGraph) -> list[_Port]:
    node = d.node(node_id)
    if isinstance(node, HiddenNode):
        return [_Port(node_id, node.reference, None)]
    if node.kind in (MentionKind.CLASS, MentionKind.INDIVIDUAL):
        return [_Port(node_id, c, None) for c in anchor_classes(node, ontology)]
    # literal/property mentions anchor through their own property, but only
    # while unattached: one carrying an owner already must not be re-claimed
    alive = set(d.semantic_nodes())
    if any(e.target == node_id and e.source in alive for e in d.mention_edges):
        return []
    return [_Port(node_id, c, node.reference) for c in anchor_classes(node, ontology)]


def _node_of_class(d: DocumentGraph, cls: Iri, ontology: TripleGraph) -> int | None:
    """An existing semantic-layer node already standing for this class."""
    for m in d.surviving_mentions():
        if m.kind in (MentionKind.CLASS, MentionKind.INDIVIDUAL) and cls in anchor_classes(m, ontology):
            return m.id
    for h in d.hidden:
        if h.reference == cls:
            return h.id
    return None


@dataclass
class _Connection:
    added_nodes: int
    path_len: int
    tie_key: tuple
    port_a: _Port
    port_b: _Port
    steps: list[tuple[Iri, Iri]]


def _nontrivial_path(ontology: TripleGraph, cls: Iri) -> list[tuple[Iri, Iri]]:
    """Shortest schema path from a class back to itself with >= 1 edge.

    Lets two distinct same-class nodes share an implied neighbour, e.g. two
    tanks hanging off one hidden plant unit.
    """
    best: list[tuple[Iri, Iri]] | None = None
    for edge in sorted(ontology.schema_edges(), key=lambda e: (e.property, e.domain, e.range)):
        if cls not in (edge.domain, edge.range):
            continue
        other = edge.range if edge.domain == cls else edge.domain
        if other == cls:
            candidate = [(cls, edge.property)]
        else:
            try:
                rest = ontology.shortest_schema_path(other, cls)
            except NoSchemaPathError:
                continue
            candidate = [(other, edge.property)] + rest
        key = (len(candidate), tuple(p.value for _, p in candidate))
        if best is None or key < (len(best), tuple(p.value for _, p in best)):
            best = candidate
    if best is None:
        raise NoSchemaPathError(f"no nontrivial schema path around {cls.value}")
    return best


def _plan_connection(d: DocumentGraph, a: _Port, b: _Port, ontology: TripleGraph) -> _Connection | None:
    try:
        if a.cls == b.cls and a.attach_property is None and b.attach_property is None:
            steps = _nontrivial_path(ontology, a.cls)
        else:
            steps = ontology.shortest_schema_path(a.cls, b.cls)
    except NoSchemaPathError:
        return None
    if not steps and a.attach_property is None and b.attach_property is None:
        return None  # nothing to add between two direct nodes of the same class
    added = sum(1 for cls, _ in steps[:-1] if _node_of_class(d, cls, ontology) is None)
    ends_shared = not steps and a.attach_property is not None and b.attach_property is not None
    if a.attach_property is not None and _node_of_class(d, a.cls, ontology) is None:
        added += 1
    if b.attach_property is not None and _node_of_class(d, b.cls, ontology) is None and not ends_shared:
        added += 1
    if steps and b.attach_property is not None:
        # the far endpoint class must materialise to carry the attachment
        if _node_of_class(d, steps[-1][0], ontology) is None:
            added += 1
    key = (added, len(steps), tuple(s[1].value for s in steps), a.node_id, b.node_id)
    return _Connection(added, len(steps), key, a, b, steps)


def _attach(d: DocumentGraph, port: _Port, node_id: int) -> None:
    """Edge between a bridge node and the port's own mention."""
    assert port.attach_property is not None
    d.add_mention_edge(node_id, port.node_id, port.attach_property, Provenance.HIDDEN)


def _materialize(d: DocumentGraph, cls: Iri, ontology: TripleGraph) -> int:
    existing = _node_of_class(d, cls, ontology)
    if existing is not None:
        return existing
    return d.add_hidden(cls).id


def _apply_connection(d: DocumentGraph, conn: _Connection, ontology: TripleGraph) -> None:
    a, b = conn.port_a, conn.port_b
    if not conn.steps:
        # same class on both ends: one shared bridge node carries both ports
        if a.attach_property is None:
            bridge = a.node_id
        elif b.attach_property is None:
            bridge = b.node_id
        else:
            bridge = _materialize(d, a.cls, ontology)
        if a.attach_property is not None:
            _attach(d, a, bridge)
        if b.attach_property is not None:
            _attach(d, b, bridge)
        return
    if a.attach_property is None:
        current = a.node_id
    else:
        current = _materialize(d, a.cls, ontology)
        _attach(d, a, current)
    current_cls = a.cls
    for i, (cls, prop) in enumerate(conn.steps):
        last = i == len(conn.steps) - 1
        if last and b.attach_property is None:
            nxt = b.node_id
        else:
            nxt = _materialize(d, cls, ontology)
        _link_step(d, current, current_cls, nxt, cls, prop, ontology)
        current, current_cls = nxt, cls
    if b.attach_property is not None:
        _attach(d, b, current)


def _link_step(d: DocumentGraph, src: int, src_cls: Iri, dst: int, dst_cls: Iri,
               prop: Iri, ontology: TripleGraph) -> None:
    if ontology.property_domain(prop) == src_cls:
        d.add_mention_edge(src, dst, prop, Provenance.HIDDEN)
    else:
        d.add_mention_edge(dst, src, prop, Provenance.HIDDEN)


def insert_hidden(d: DocumentGraph, ontology: TripleGraph) -> DocumentGraph:
    """Bridge weakly connected components through shortest schema paths.

    Greedy pairwise merge: each round connects the component pair whose
    cheapest connection adds the fewest nodes (then shortest path, then
    lexicographic tie-breaks), until one component remains.
    """
    d.require_stage(Stage.DISAMBIGUATED)
    while True:
        components = d.weakly_connected_components()
        if len(components) <= 1:
            break
        best: _Connection | None = None
        for i, c1 in enumerate(components):
            for c2 in components[i + 1:]:
                for node_a in sorted(c1):
                    for node_b in sorted(c2):
                        for port_a in _ports(d, node_a, ontology):
                            for port_b in _ports(d, node_b, ontology):
                                conn = _plan_connection(d, port_a, port_b, ontology)
                                if conn and (best is None or conn.tie_key < best.tie_key):
                                    best = conn
        if best is None:
            labels = []
            for comp in components:
                names = sorted(_describe_node(d, n, ontology) for n in comp)
                labels.append(", ".join(names))
            raise ConnectivityError(labels)
        _apply_connection(d, best, ontology)
    return d


def _describe_node(d: DocumentGraph, node_id: int, ontology: TripleGraph) -> str:
    reference = d.node(node_id).reference
    return ontology.label(reference) or reference.local_name()
