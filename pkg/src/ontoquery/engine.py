"""Engine wiring: configuration, fixture loading, and the processing pipeline.

One config file names every fixture (schema, facts, lexicon, gazetteers,
scenario, render templates) and the tunables.  The engine loads them once
and exposes the stage-by-stage pipeline that turns an utterance into a
resolved document graph, a query plan and an answer.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .analysis import AnalyzedText, AnalyzerConfig, RuleAnalyzer
from .assembly import choose_winners, induce_edges, insert_hidden
from .compiler import (
    Answer,
    Classification,
    QueryKind,
    QueryPlan,
    RenderTemplates,
    classify,
    compile_plan,
    execute_and_render,
    to_sparql,
)
from .docgraph import DocumentGraph
from .lexicon import Lexicon, load_lexicon
from .matching import GazetteerEntry, MatcherConfig, TemplateRule, run_matchers
from .rdf import Iri, TripleGraph, load_turtle
from .resolution import BindingOutcome, bind_individuals, resolve_objects

FIXTURES_DIR = Path(__file__).parent / "fixtures"
CONFIG_ENV_VAR = "ONTOQUERY_CONFIG"


class PipelineError(RuntimeError):
    pass


@dataclass
class EngineConfig:
    tbox: Path
    abox: list[Path]
    lexicon: Path
    base_namespace: str
    analyzer_kind: str = "rules"
    analyzer: AnalyzerConfig = field(default_factory=AnalyzerConfig)
    matchers: MatcherConfig = field(default_factory=MatcherConfig)
    templates: dict[str, str] = field(default_factory=dict)
    scenario: Path | None = None
    max_results: int = 5
    ambiguity_epsilon: float = 0.05
    context_depth: int = 1

    @classmethod
    def load(cls, path: str | Path | None = None) -> "EngineConfig":
        """Read the YAML config; falls back to $ONTOQUERY_CONFIG, then fixtures."""
        if path is None:
            path = os.environ.get(CONFIG_ENV_VAR) or FIXTURES_DIR / "config.yaml"
        path = Path(path)
        raw = yaml.safe_load(path.read_text())
        base = path.parent

        kg = raw.get("knowledge_graph", {})
        analysis = raw.get("analysis", {})
        matchers_raw = raw.get("matchers", {})
        rendering = raw.get("rendering", {})
        dialogue = raw.get("dialogue", {})

        templates = []
        for rule in matchers_raw.get("regex_templates", []):
            templates.append(TemplateRule(rule["name"], rule["pattern"],
                                          Iri(rule["property"]), rule.get("value", "string")))
        gazetteers = []
        for g in matchers_raw.get("gazetteers", []):
            terms = frozenset(
                line.strip().lower()
                for line in (base / g["file"]).read_text().splitlines()
                if line.strip()
            )
            gazetteers.append(GazetteerEntry(Iri(g["property"]), terms))
        matcher_config = MatcherConfig(
            enabled=matchers_raw.get("enabled", ["label", "lexicon", "template", "gazetteer"]),
            base_weights=matchers_raw.get("base_weights", MatcherConfig().base_weights),
            active_fields=frozenset(Iri(f) for f in matchers_raw.get("active_fields", [])),
            templates=templates,
            gazetteers=gazetteers,
            max_phrase_edges=analysis.get("max_path_len", 3),
        )
        default_persons = sorted(AnalyzerConfig().person_class_iris)
        analyzer = AnalyzerConfig(
            max_path_len=analysis.get("max_path_len", 3),
            person_class_iris=frozenset(analysis.get("person_classes", default_persons)),
        )
        render_templates = {}
        if rendering.get("templates"):
            render_templates = json.loads((base / rendering["templates"]).read_text()).get("templates", {})
        return cls(
            tbox=base / kg.get("tbox", "ontology.ttl"),
            abox=[base / p for p in kg.get("abox", [])],
            lexicon=base / kg.get("lexicon", "lexicon.ttl"),
            base_namespace=kg.get("base_namespace", "http://example.org/enterprise#"),
            analyzer_kind=raw.get("analyzer", "rules"),
            analyzer=analyzer,
            matchers=matcher_config,
            templates=render_templates,
            scenario=base / dialogue["scenario"] if dialogue.get("scenario") else None,
            max_results=dialogue.get("max_results", 5),
            ambiguity_epsilon=dialogue.get("ambiguity_epsilon", 0.05),
            context_depth=dialogue.get("context_depth", 1),
        )


@dataclass
class PipelineResult:
    document: DocumentGraph
    outcomes: dict[int, BindingOutcome]
    classification: Classification
    plan: QueryPlan
    answer: Answer


class Engine:
    def __init__(self, config: EngineConfig | None = None, extra_abox: list[Path] | None = None):
        self.config = config or EngineConfig.load()
        self.kg = load_turtle(self.config.tbox.read_text())
        for abox in list(self.config.abox) + list(extra_abox or []):
            self.kg.load_turtle(Path(abox).read_text())
        lex_graph = load_turtle(self.config.lexicon.read_text())
        self.lexicon: Lexicon = load_lexicon(lex_graph, self.kg)
        if self.config.analyzer_kind != "rules":
            raise PipelineError(f"unknown analyzer {self.config.analyzer_kind!r}; available: rules")
        self.analyzer = RuleAnalyzer(self.lexicon, self.config.analyzer)
        self.render_templates = RenderTemplates.from_mapping(self.config.templates, self.kg)
        self.scenario_text = self.config.scenario.read_text() if self.config.scenario else None

    # -- pipeline stages -----------------------------------------------------

    def analyze(self, text: str) -> AnalyzedText:
        return self.analyzer.analyze(text)

    def build_document(self, text: str, kg: TripleGraph | None = None) -> DocumentGraph:
        """Analyze and assemble: mentions, predicates, winners, hidden nodes,
        resolved objects.  May raise ConnectivityError."""
        kg = kg or self.kg
        at = self.analyze(text)
        d = run_matchers(at, self.lexicon, kg, self.config.matchers)
        induce_edges(d, kg, self.config.analyzer.max_path_len)
        choose_winners(d, self.config.ambiguity_epsilon)
        insert_hidden(d, kg)
        resolve_objects(d, kg)
        return d

    def bind(self, d: DocumentGraph, kg: TripleGraph | None = None) -> dict[int, BindingOutcome]:
        return bind_individuals(d, kg or self.kg)

    def run(self, text: str, kg: TripleGraph | None = None) -> PipelineResult:
        """The full one-shot pipeline against a KG snapshot (context free)."""
        kg = kg or self.kg
        d = self.build_document(text, kg)
        outcomes = self.bind(d, kg)
        classification = classify(d.at, d)
        plan = compile_plan(d, classification, self.config.base_namespace)
        answer = execute_and_render(plan, kg, d, self.render_templates)
        return PipelineResult(d, outcomes, classification, plan, answer)

    # -- operations ------------------------------------------------------------

    def extract(self, text: str, commit: bool = False) -> Answer:
        """Compile declarative text to INSERT DATA; apply it when commit is set."""
        d = self.build_document(text)
        self.bind(d)
        classification = classify(d.at, d)
        if classification.kind != QueryKind.INSERT:
            raise PipelineError("text does not describe new facts; nothing to extract")
        plan = compile_plan(d, classification, self.config.base_namespace)
        sparql = to_sparql(plan, self.kg)
        if commit:
            return execute_and_render(plan, self.kg, d, self.render_templates)
        from .compiler import Card

        return Answer(plan.kind, [Card([f"Would add {len(plan.insert_triples)} facts."])],
                      sparql, [], [], inserted=0)

    def viz(self, text: str) -> str:
        """DOT rendering of the document graph for an utterance."""
        d = self.build_document(text)
        self.bind(d)
        return d.to_dot(labeller=lambda iri: self.kg.label(iri) or iri.local_name())

    def stats(self) -> dict:
        counts: dict[str, int] = {}
        for cls in sorted(self.kg.schema_classes(), key=lambda c: c.value):
            instances = self.kg.instances_of(cls)
            if instances:
                counts[self.kg.shrink(cls)] = len(instances)
        return {"triples": len(self.kg), "instances_by_class": counts}
