"""Ontology-grounded question answering over an embedded RDF knowledge graph."""

__version__ = "0.1.0"
