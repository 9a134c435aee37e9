"""Finite-state dialogue engine: context retention and clarifying questions.

A session runs each turn through the pipeline, maps the outcome to a
transition condition and lets the scenario state machine decide what happens
next.  Follow-up questions reuse the previous turn: a dangling pronoun makes
the engine re-read both utterances together (so coreference links them),
and an anaphor-free fragment is grafted onto the previous graph through the
cheapest schema-legal connection.
"""

from __future__ import annotations

import itertools
import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum

from .analysis import PERSON_PRONOUNS, THING_PRONOUNS
from .assembly import ConnectivityError
from .compiler import (
    Answer,
    Classification,
    QueryKind,
    QueryPlan,
    classify,
    compile_plan,
    execute_and_render,
    EmptyPlanError,
)
from .docgraph import DocumentGraph, Provenance, ResolvedObject
from .engine import Engine
from .lexicon import PartOfSpeech
from .rdf import Iri, NoSchemaPathError, TripleGraph, Var
from .resolution import BindingOutcome, BindingState


class Condition(Enum):
    USER_MESSAGE = "user-message"
    ANSWERED = "answered"
    EMPTY_RESULT = "empty-result"
    TOO_MANY_RESULTS = "too-many-results"
    AMBIGUOUS_BINDING = "ambiguous-binding"
    DISCONNECTED_GRAPH = "disconnected-graph"
    ALWAYS = "always"


class ReplyKind(Enum):
    ANSWER = "answer"
    CLARIFYING_QUESTION = "clarifying-question"
    EXTRACTION_REPORT = "extraction-report"


class ScenarioError(ValueError):
    pass


@dataclass
class StateMachine:
    initial: str
    states: dict[str, dict[Condition, str]]
    unreachable: list[str] = field(default_factory=list)

    def transition(self, state: str, condition: Condition) -> str | None:
        return self.states.get(state, {}).get(condition)


def load_scenario(text: str) -> StateMachine:
    """Parse and validate the small declarative scenario format."""
    initial: str | None = None
    states: dict[str, dict[Condition, str]] = {}
    current: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("initial "):
            initial = stripped.split(None, 1)[1]
        elif stripped.startswith("state "):
            current = stripped.split(None, 1)[1]
            if current in states:
                raise ScenarioError(f"line {line_no}: duplicate state '{current}'")
            states[current] = {}
        elif "->" in stripped:
            if current is None:
                raise ScenarioError(f"line {line_no}: transition outside a state block")
            cond_raw, _, target = stripped.partition("->")
            cond_raw = cond_raw.strip()
            try:
                condition = Condition(cond_raw)
            except ValueError:
                raise ScenarioError(f"line {line_no}: unknown condition kind '{cond_raw}'")
            if condition in states[current]:
                raise ScenarioError(f"line {line_no}: duplicate transition on '{cond_raw}' in state '{current}'")
            states[current][condition] = target.strip()
        else:
            raise ScenarioError(f"line {line_no}: cannot parse '{stripped}'")
    if initial is None:
        raise ScenarioError("scenario missing initial state")
    if initial not in states:
        raise ScenarioError(f"initial state '{initial}' is not defined")
    for state, rules in states.items():
        for target in rules.values():
            if target not in states:
                raise ScenarioError(f"transition targets unknown state '{target}'")
    reachable = {initial}
    frontier = [initial]
    while frontier:
        for target in states[frontier.pop()].values():
            if target not in reachable:
                reachable.add(target)
                frontier.append(target)
    unreachable = sorted(set(states) - reachable)
    return StateMachine(initial, states, unreachable)


DEFAULT_SCENARIO = """\
initial awaiting-question
state awaiting-question
  user-message -> answering
state answering
  answered -> awaiting-question
  empty-result -> clarifying
  too-many-results -> clarifying
  ambiguous-binding -> clarifying
  disconnected-graph -> clarifying
state clarifying
  always -> awaiting-clarification
state awaiting-clarification
  user-message -> answering
"""


@dataclass
class BotReply:
    kind: ReplyKind
    text: str
    state: str
    condition: Condition
    answer: Answer | None = None
    dot: str | None = None


@dataclass
class Turn:
    utterance: str
    document: DocumentGraph | None
    plan: QueryPlan | None
    answer: Answer | None
    outcomes: dict[int, BindingOutcome]
    classification: Classification | None
    condition: Condition
    reply: BotReply
    augmented: str = "none"  # none | anaphora | schema-connection


class DialogueSession:
    def __init__(self, engine: Engine, machine: StateMachine | None = None,
                 session_id: str | None = None):
        self.engine = engine
        scenario = engine.scenario_text or DEFAULT_SCENARIO
        self.machine = machine or load_scenario(scenario)
        self.id = session_id or str(uuid.uuid4())
        self.state = self.machine.initial
        self.turns: list[Turn] = []
        self._lock = threading.Lock()

    # -- context -----------------------------------------------------------

    def context_turn(self) -> Turn | None:
        """The turn a follow-up refers to.

        While a clarification is pending that is the turn that triggered it;
        otherwise the most recent answered turn within the context depth.
        """
        if not self.turns:
            return None
        if self.state == "awaiting-clarification" or self.turns[-1].condition != Condition.ANSWERED:
            last = self.turns[-1]
            return last if last.document is not None else None
        depth = self.engine.config.context_depth
        answered = [t for t in self.turns if t.condition == Condition.ANSWERED and t.document is not None]
        return answered[-1] if answered and depth > 0 else None

    def _dangling_pronoun(self, text: str) -> str | None:
        try:
            at = self.engine.analyze(text)
        except Exception:
            return None
        clustered = {i for c in at.clusters for i in c.members}
        for t in at.tokens:
            lower = t.text.lower()
            if t.pos == PartOfSpeech.PRONOUN and lower in PERSON_PRONOUNS | THING_PRONOUNS:
                if t.index not in clustered:
                    return t.text
        return None

    # -- main entry ------------------------------------------------------------

    def handle_turn(self, utterance: str) -> BotReply:
        with self._lock:
            next_state = self.machine.transition(self.state, Condition.USER_MESSAGE)
            if next_state is not None:
                self.state = next_state
            turn = self._process(utterance)
            self._advance(turn.condition)
            turn.reply.state = self.state
            self.turns.append(turn)
            return turn.reply

    def _advance(self, condition: Condition) -> None:
        next_state = self.machine.transition(self.state, condition)
        if next_state is not None:
            self.state = next_state
        while True:
            auto = self.machine.transition(self.state, Condition.ALWAYS)
            if auto is None:
                break
            self.state = auto

    # -- turn processing -----------------------------------------------------

    def _process(self, utterance: str) -> Turn:
        kg = self.engine.kg.snapshot()
        context = self.context_turn()
        augmented = "none"
        text = utterance
        pronoun = self._dangling_pronoun(utterance)
        if pronoun is not None and context is not None:
            text = context.utterance.rstrip() + " " + utterance
            augmented = "anaphora"
        elif pronoun is not None:
            return self._clarify_turn(
                utterance, None, Condition.AMBIGUOUS_BINDING,
                f'I am not sure who "{pronoun}" refers to. Could you name them?', augmented)
        try:
            d = self.engine.build_document(text, kg)
        except ConnectivityError as err:
            return self._clarify_turn(utterance, None, Condition.DISCONNECTED_GRAPH,
                                      _disconnected_text(err), augmented)
        outcomes = self.engine.bind(d, kg)

        if d.hypothesis and d.hypothesis.near_ties:
            winner_id, loser_id, _ = d.hypothesis.near_ties[0]
            winner = d.node(winner_id)
            loser = d.node(loser_id)
            phrase = " ".join(d.at.token(t).text for t in winner.tokens)
            a = kg.label(winner.reference) or winner.reference.local_name()
            b = kg.label(loser.reference) or loser.reference.local_name()
            text_out = f'"{phrase}" could mean {a} or {b}. Which one did you mean?'
            return self._clarify_turn(utterance, d, Condition.AMBIGUOUS_BINDING, text_out, augmented)

        classification = classify(d.at, d)
        try:
            plan = compile_plan(d, classification, self.engine.config.base_namespace)
        except EmptyPlanError:
            plan = None

        if plan is None and context is not None and augmented == "none":
            merged = augment_context(self, d, context, kg)
            if merged is not None:
                d, classification = merged
                augmented = "schema-connection"
                outcomes = self.engine.bind(d, kg)
                try:
                    plan = compile_plan(d, classification, self.engine.config.base_namespace)
                except EmptyPlanError:
                    plan = None

        if plan is None:
            return self._clarify_turn(
                utterance, d, Condition.EMPTY_RESULT,
                "I could not find anything to look up in that. Could you say it differently?",
                augmented)

        answer = execute_and_render(plan, kg, d, self.engine.render_templates)
        if plan.kind == QueryKind.INSERT:
            applied = self.engine.kg.apply_insert(plan.insert_triples)
            answer.inserted = applied
            reply = BotReply(ReplyKind.EXTRACTION_REPORT, answer.rows[0].text, self.state,
                             Condition.ANSWERED, answer, d.to_dot(self._labeller()))
            return Turn(utterance, d, plan, answer, outcomes, classification,
                        Condition.ANSWERED, reply, augmented)

        condition = Condition.ANSWERED
        if plan.kind == QueryKind.SELECT:
            # an ambiguously bound object blocks the answer unless the rest of
            # the query discriminates it down to one individual
            for outcome in outcomes.values():
                if outcome.state != BindingState.AMBIGUOUS:
                    continue
                term = plan.object_terms.get(outcome.object_id)
                if not isinstance(term, Var):
                    continue
                distinct = {s[term.name] for s in answer.solutions if term.name in s}
                if len(distinct) >= 2:
                    text_out = (f"I found {len(distinct)} matches for {outcome.description}. "
                                "Which one do you mean? A distinguishing detail (for example the unit) would help.")
                    return self._clarify_turn(utterance, d, Condition.AMBIGUOUS_BINDING, text_out,
                                              augmented, plan, classification, outcomes, answer)
            if not answer.rows:
                unmatched = [o for o in outcomes.values() if o.state == BindingState.UNMATCHED]
                if unmatched:
                    text_out = (f"I could not find any {unmatched[0].description}. "
                                "Could you check the name or add a detail?")
                else:
                    text_out = "I found no results for that. Could you rephrase or relax a detail?"
                return self._clarify_turn(utterance, d, Condition.EMPTY_RESULT, text_out,
                                          augmented, plan, classification, outcomes, answer)
            if len(answer.rows) > self.engine.config.max_results:
                text_out = (f"That matches {len(answer.rows)} results, more than I can usefully list. "
                            "Could you narrow it down?")
                return self._clarify_turn(utterance, d, Condition.TOO_MANY_RESULTS, text_out,
                                          augmented, plan, classification, outcomes, answer)
        reply = BotReply(ReplyKind.ANSWER, answer.text, self.state, condition, answer,
                         d.to_dot(self._labeller()))
        return Turn(utterance, d, plan, answer, outcomes, classification, condition, reply, augmented)

    def _labeller(self):
        kg = self.engine.kg
        return lambda iri: kg.label(iri) or iri.local_name()

    def _clarify_turn(self, utterance: str, d: DocumentGraph | None, condition: Condition,
                      text: str, augmented: str, plan: QueryPlan | None = None,
                      classification: Classification | None = None,
                      outcomes: dict | None = None, answer: Answer | None = None) -> Turn:
        reply = BotReply(ReplyKind.CLARIFYING_QUESTION, text, self.state, condition, answer,
                         d.to_dot(self._labeller()) if d is not None else None)
        return Turn(utterance, d, plan, answer, outcomes or {}, classification,
                    condition, reply, augmented)


def _disconnected_text(err: ConnectivityError) -> str:
    fragments = "; ".join(err.fragments)
    return (f"I could not relate these parts of the question to each other: {fragments}. "
            "Could you rephrase or add the missing link?")


# -- schema-connection fallback -------------------------------------------------


def augment_context(session: DialogueSession, d: DocumentGraph | None, context: Turn,
                    kg: TripleGraph) -> tuple[DocumentGraph, Classification] | None:
    """Graft the current fragment onto the previous turn's graph.

    Enumerates every schema-legal connection between a current object and a
    prior object, keeps the one minimising path length (ties broken
    lexicographically), imports the prior structure reachable from the
    attachment point and inherits the prior answer target.  Connecting over
    a maxCardinality-1 property displaces the previous filler, so "And for
    industrial safety?" swaps the safety aspect rather than piling on a
    second one.
    """
    prior_d = context.document
    if prior_d is None or d is None or not d.objects or not prior_d.objects:
        return None
    best = None
    for oc, op in itertools.product(d.objects, prior_d.objects):
        if oc.bound and op.bound and oc.individual != op.individual and oc.cls == op.cls:
            continue  # distinct individuals of one class cannot unify
        try:
            steps = kg.shortest_schema_path(oc.cls, op.cls)
        except NoSchemaPathError:
            continue
        key = (len(steps), tuple(s[1].value for s in steps), oc.id, op.id)
        if best is None or key < best[0]:
            best = (key, oc, op, steps)
    if best is None:
        return None
    _, oc, op, steps = best

    mapping: dict[int, ResolvedObject] = {}
    for prior_obj in prior_d.objects:
        clone = d.add_object(prior_obj.cls, prior_obj.individual)
        clone.constraints.extend(prior_obj.constraints)
        clone.value_requests.extend(prior_obj.value_requests)
        mapping[prior_obj.id] = clone
    clone_ids = {c.id for c in mapping.values()}
    imported_edges = [
        (mapping[e.source].id, mapping[e.target].id, e.predicate)
        for e in prior_d.object_edges
    ]
    final_map = {pid: clone.id for pid, clone in mapping.items()}

    attach_id = mapping[op.id].id
    new_edges: list[tuple[int, int, Iri]] = []
    displaced: set[tuple[int, int, Iri]] = set()
    if not steps:
        # same class: unify the current object with the prior one
        clone = mapping[op.id]
        _merge_objects(d, oc, clone)
        imported_edges = [
            (oc.id if s == clone.id else s, oc.id if t == clone.id else t, p)
            for s, t, p in imported_edges
        ]
        final_map[op.id] = oc.id
        attach_id = oc.id
    else:
        chain_id, current_cls = oc.id, oc.cls
        for i, (cls, prop) in enumerate(steps):
            last = i == len(steps) - 1
            nxt_id = attach_id if last else d.add_object(cls).id
            if kg.property_domain(prop) == current_cls:
                edge = (chain_id, nxt_id, prop)
            else:
                edge = (nxt_id, chain_id, prop)
            if kg.max_cardinality(prop) == 1:
                displaced |= {
                    (s, t, p) for s, t, p in imported_edges
                    if p == prop and s == edge[0] and t != edge[1]
                }
            new_edges.append(edge)
            chain_id, current_cls = nxt_id, cls
    combined = [e for e in imported_edges if e not in displaced] + new_edges

    # keep only the prior structure still reachable from the current fragment
    adjacency: dict[int, set[int]] = {}
    for s, t, _ in combined:
        adjacency.setdefault(s, set()).add(t)
        adjacency.setdefault(t, set()).add(s)
    seeds = {o.id for o in d.objects if o.id not in clone_ids}
    reachable = set(seeds)
    frontier = list(seeds)
    while frontier:
        for nxt in adjacency.get(frontier.pop(), ()):  # undirected walk
            if nxt not in reachable:
                reachable.add(nxt)
                frontier.append(nxt)
    dropped = clone_ids - reachable
    d.objects = [o for o in d.objects if o.id not in dropped]
    for s, t, p in combined:
        if s in reachable and t in reachable:
            d.add_object_edge(s, t, p, Provenance.COPIED)

    classification = _inherit_classification(d, context, final_map)
    return d, classification


def _merge_objects(d: DocumentGraph, keep: ResolvedObject, absorb: ResolvedObject) -> None:
    keep.constraints.extend(c for c in absorb.constraints if c not in keep.constraints)
    keep.value_requests.extend(v for v in absorb.value_requests if v not in keep.value_requests)
    keep.individual = keep.individual or absorb.individual
    keep.source_mentions.extend(absorb.source_mentions)
    d.objects = [o for o in d.objects if o.id != absorb.id]
    d.object_edges = [
        type(e)(keep.id if e.source == absorb.id else e.source,
                keep.id if e.target == absorb.id else e.target,
                e.predicate, e.provenance)
        for e in d.object_edges
    ]


def _inherit_classification(d: DocumentGraph, context: Turn,
                            final_map: dict[int, int]) -> Classification:
    prior = context.classification
    if prior is not None and prior.target_object_id in final_map:
        target = final_map[prior.target_object_id]
        if any(o.id == target for o in d.objects):
            return Classification(prior.kind, target, prior.value_property)
    return classify(d.at, d)
