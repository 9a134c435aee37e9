"""The per-utterance document graph: tokens, mentions, hidden nodes, objects.

The graph is enriched stage by stage (mentions, induced predicates,
disambiguation, hidden nodes, resolved objects) and never loses information:
losing mention hypotheses are tombstoned rather than deleted so that the
proof chain and the DOT rendering can show them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

from .analysis import AnalyzedText
from .rdf import Iri, Literal


class Stage(IntEnum):
    ANALYZED = 0
    MENTIONS_ADDED = 1
    PREDICATES_ADDED = 2
    DISAMBIGUATED = 3
    RESOLVED = 4


class MentionKind(Enum):
    CLASS = "class"
    PROPERTY = "property"
    INDIVIDUAL = "individual"
    LITERAL_VALUE = "literal-value"


class Provenance(Enum):
    SCHEMA_INDUCED = "schema-induced"
    HIDDEN = "hidden"
    COPIED = "copied"


class StageError(RuntimeError):
    pass


@dataclass
class Mention:
    """A weighted hypothesis that a token sequence denotes an ontology entity."""

    id: int
    reference: Iri
    kind: MentionKind
    tokens: tuple[int, ...]
    weight: float
    matcher: str
    literal: Literal | None = None  # the captured value for literal-value kind
    discarded: bool = False

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("mention must cover at least one token")
        if not 0 < self.weight <= 1:
            raise ValueError(f"mention weight out of (0, 1]: {self.weight}")


@dataclass
class HiddenNode:
    """A node for an ontology class implied by the text but not mentioned."""

    id: int
    reference: Iri


@dataclass
class ResolvedObject:
    id: int
    cls: Iri
    individual: Iri | None = None
    constraints: list[tuple[Iri, Literal]] = field(default_factory=list)
    value_requests: list[Iri] = field(default_factory=list)
    source_mentions: list[int] = field(default_factory=list)
    source_hidden: list[int] = field(default_factory=list)

    @property
    def bound(self) -> bool:
        return self.individual is not None


@dataclass(frozen=True)
class SemanticEdge:
    source: int
    target: int
    predicate: Iri
    provenance: Provenance = Provenance.SCHEMA_INDUCED


@dataclass
class Hypothesis:
    """Outcome of disambiguation: the winners and how contested they were."""

    surviving: list[int]
    total_cost: float
    near_ties: list[tuple[int, int, float]] = field(default_factory=list)  # (winner, loser, rel gap)


class DocumentGraph:
    def __init__(self, at: AnalyzedText):
        self.at = at
        self.stage = Stage.ANALYZED
        self.mentions: list[Mention] = []
        self.hidden: list[HiddenNode] = []
        self.objects: list[ResolvedObject] = []
        self.mention_edges: list[SemanticEdge] = []
        self.object_edges: list[SemanticEdge] = []
        self.hypothesis: Hypothesis | None = None
        self._next_id = 0
        self._nodes: dict[int, Mention | HiddenNode | ResolvedObject] = {}

    # -- node management -----------------------------------------------------

    def _take_id(self) -> int:
        nid = self._next_id
        self._next_id += 1
        return nid

    def add_mention(self, reference: Iri, kind: MentionKind, tokens: tuple[int, ...],
                    weight: float, matcher: str, literal: Literal | None = None) -> Mention:
        m = Mention(self._take_id(), reference, kind, tokens, weight, matcher, literal)
        self.mentions.append(m)
        self._nodes[m.id] = m
        return m

    def add_hidden(self, reference: Iri) -> HiddenNode:
        h = HiddenNode(self._take_id(), reference)
        self.hidden.append(h)
        self._nodes[h.id] = h
        return h

    def add_object(self, cls: Iri, individual: Iri | None = None) -> ResolvedObject:
        o = ResolvedObject(self._take_id(), cls, individual)
        self.objects.append(o)
        self._nodes[o.id] = o
        return o

    def node(self, node_id: int) -> Mention | HiddenNode | ResolvedObject:
        return self._nodes[node_id]

    def add_mention_edge(self, source: int, target: int, predicate: Iri,
                         provenance: Provenance = Provenance.SCHEMA_INDUCED) -> SemanticEdge | None:
        if source not in self._nodes or target not in self._nodes:
            raise KeyError("semantic edge endpoint does not exist")
        edge = SemanticEdge(source, target, predicate, provenance)
        if any(e.source == source and e.target == target and e.predicate == predicate
               for e in self.mention_edges):
            return None
        self.mention_edges.append(edge)
        return edge

    def add_object_edge(self, source: int, target: int, predicate: Iri,
                        provenance: Provenance = Provenance.COPIED) -> SemanticEdge | None:
        edge = SemanticEdge(source, target, predicate, provenance)
        if any(e.source == source and e.target == target and e.predicate == predicate
               for e in self.object_edges):
            return None
        self.object_edges.append(edge)
        return edge

    def advance(self, stage: Stage) -> None:
        if stage < self.stage:
            raise StageError(f"stage may only advance, not {self.stage.name} -> {stage.name}")
        self.stage = stage

    def require_stage(self, stage: Stage) -> None:
        if self.stage < stage:
            raise StageError(f"operation requires stage >= {stage.name}, graph is at {self.stage.name}")

    # -- views ---------------------------------------------------------------

    def surviving_mentions(self) -> list[Mention]:
        return [m for m in self.mentions if not m.discarded]

    def project_a(self) -> "MentionProjection":
        """Mentions plus the semantic edges between them (degree queryable)."""
        self.require_stage(Stage.PREDICATES_ADDED)
        return MentionProjection(self)

    def project_b(self) -> "BipartiteProjection":
        """The bipartite token/mention incidence graph."""
        self.require_stage(Stage.MENTIONS_ADDED)
        return BipartiteProjection(self)

    def semantic_nodes(self) -> list[int]:
        """Node ids of the semantic layer: surviving mentions and hidden nodes."""
        ids = [m.id for m in self.surviving_mentions()]
        ids.extend(h.id for h in self.hidden)
        return sorted(ids)

    def weakly_connected_components(self) -> list[set[int]]:
        """Partition of the semantic layer ignoring edge direction."""
        self.require_stage(Stage.PREDICATES_ADDED)
        nodes = self.semantic_nodes()
        alive = set(nodes)
        adj: dict[int, set[int]] = {n: set() for n in nodes}
        for e in self.mention_edges:
            if e.source in alive and e.target in alive:
                adj[e.source].add(e.target)
                adj[e.target].add(e.source)
        seen: set[int] = set()
        components = []
        for start in nodes:
            if start in seen:
                continue
            comp = {start}
            frontier = [start]
            while frontier:
                current = frontier.pop()
                for nxt in adj[current]:
                    if nxt not in comp:
                        comp.add(nxt)
                        frontier.append(nxt)
            seen |= comp
            components.append(comp)
        components.sort(key=min)
        return components

    # -- DOT export ------------------------------------------------------------

    def to_dot(self, labeller=None) -> str:
        """Deterministic DOT text; node style keyed by node kind."""
        labeller = labeller or (lambda iri: iri.local_name())
        lines = ["digraph document {", "  rankdir=TB;"]
        for t in self.at.tokens:
            lines.append(f'  t{t.index} [label="{_esc(t.text)}" shape=box style=filled fillcolor="#f2f2f2"];')
        for e in sorted(self.at.edges, key=lambda e: (e.head, e.dependent, e.relation)):
            lines.append(f'  t{e.head} -> t{e.dependent} [label="{_esc(e.relation)}" style=dotted arrowhead=none];')
        for cluster in self.at.clusters:
            first = cluster.members[0]
            for other in cluster.members[1:]:
                lines.append(f'  t{first} -> t{other} [label="coref" style=dotted color=purple arrowhead=none];')
        for m in self.mentions:
            color = "#cccccc" if m.discarded else "#cce5ff"
            extra = " style=dashed" if m.discarded else ' style=filled fillcolor="{}"'.format(color)
            label = f"{m.kind.value}: {labeller(m.reference)}\\nw={m.weight:.2f}"
            lines.append(f'  n{m.id} [label="{_esc_keep(label)}" shape=ellipse{extra}];')
            for t in m.tokens:
                lines.append(f"  n{m.id} -> t{t} [label=\"hasToken\" style=dashed arrowhead=none];")
        for h in self.hidden:
            lines.append(f'  n{h.id} [label="hidden: {_esc(labeller(h.reference))}" shape=diamond style=filled fillcolor="#ffe0b3"];')
        for e in self.mention_edges:
            lines.append(f'  n{e.source} -> n{e.target} [label="{_esc(e.predicate.local_name())}"];')
        for o in self.objects:
            name = o.individual.local_name() if o.individual else "?"
            label = f"object: {labeller(o.cls)}\\n{name}"
            lines.append(f'  n{o.id} [label="{_esc_keep(label)}" shape=box3d style=filled fillcolor="#d5f5d5"];')
            for src in o.source_mentions + o.source_hidden:
                lines.append(f'  n{o.id} -> n{src} [label="denotes" style=dotted arrowhead=none];')
        for e in self.object_edges:
            lines.append(f'  n{e.source} -> n{e.target} [label="{_esc(e.predicate.local_name())}" penwidth=2];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _esc_keep(s: str) -> str:
    # keeps intentional \n line breaks inside DOT labels
    return s.replace('"', '\\"')


class MentionProjection:
    def __init__(self, d: DocumentGraph):
        self.nodes = [m.id for m in d.mentions]
        self.edges = [e for e in d.mention_edges
                      if isinstance(d.node(e.source), Mention) and isinstance(d.node(e.target), Mention)]

    def degree(self, mention_id: int) -> int:
        return sum(1 for e in self.edges if mention_id in (e.source, e.target))


class BipartiteProjection:
    def __init__(self, d: DocumentGraph):
        self.tokens = [t.index for t in d.at.tokens]
        self.mentions = [m.id for m in d.mentions]
        self.has_token: list[tuple[int, int]] = []
        for m in d.mentions:
            for t in m.tokens:
                self.has_token.append((m.id, t))
