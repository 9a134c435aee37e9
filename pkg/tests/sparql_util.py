"""Test-only SPARQL-subset parser: re-reads generated query text.

Only understands what the compiler emits (PREFIX lines, SELECT */named,
ASK, INSERT DATA, one flat pattern block) so round-trip tests stay honest.
"""

from __future__ import annotations

import re

from ontoquery.rdf import Iri, Literal, TriplePattern, Var, XSD_INT, XSD_STRING

_TERM_RE = re.compile(
    r"""\?(?P<var>[A-Za-z_][A-Za-z0-9_]*)
      | <(?P<iri>[^>]*)>
      | "(?P<string>(?:[^"\\]|\\.)*)"(?:\^\^(?P<dtype>\S+))?
      | (?P<int>-?[0-9]+)
      | (?P<pname>[A-Za-z][A-Za-z0-9_.-]*:[A-Za-z0-9_][A-Za-z0-9_.-]*)
    """,
    re.VERBOSE,
)


def parse_sparql(text: str):
    """Returns (kind, patterns, targets) for the generated subset."""
    prefixes = {}
    kind = None
    targets: list[str] = []
    patterns: list[TriplePattern] = []
    in_block = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("PREFIX"):
            _, name, iri = line.split()
            prefixes[name.rstrip(":")] = iri[1:-1]
        elif line.startswith("SELECT"):
            kind = "select"
            head = line[len("SELECT"):].split("WHERE")[0].strip()
            if head != "*":
                targets = [v.lstrip("?") for v in head.split()]
            in_block = True
        elif line.startswith("ASK"):
            kind = "ask"
            in_block = True
        elif line.startswith("INSERT DATA"):
            kind = "insert"
            in_block = True
        elif line == "}":
            in_block = False
        elif in_block:
            assert line.endswith("."), f"pattern line must end with '.': {line!r}"
            terms = _parse_terms(line[:-1].strip(), prefixes)
            assert len(terms) == 3, f"expected 3 terms in {line!r}"
            patterns.append(TriplePattern(*terms))
    assert kind is not None, "no query form found"
    return kind, patterns, targets


def _parse_terms(line: str, prefixes: dict[str, str]):
    terms = []
    pos = 0
    while pos < len(line):
        if line[pos].isspace():
            pos += 1
            continue
        m = _TERM_RE.match(line, pos)
        assert m, f"cannot parse term at {line[pos:]!r}"
        if m.group("var"):
            terms.append(Var(m.group("var")))
        elif m.group("iri") is not None:
            terms.append(Iri(m.group("iri")))
        elif m.group("string") is not None:
            lexical = m.group("string").replace('\\"', '"').replace("\\\\", "\\")
            dtype = m.group("dtype")
            if dtype:
                prefix, local = dtype.split(":", 1)
                terms.append(Literal(lexical, Iri(prefixes[prefix] + local)))
            else:
                terms.append(Literal(lexical, XSD_STRING))
        elif m.group("int") is not None:
            terms.append(Literal(m.group("int"), XSD_INT))
        else:
            prefix, local = m.group("pname").split(":", 1)
            assert prefix in prefixes, f"undeclared prefix {prefix}"
            terms.append(Iri(prefixes[prefix] + local))
        pos = m.end()
    return terms


def pattern_multiset(patterns) -> dict:
    """Patterns as a canonical multiset under a variable bijection.

    Variables are renamed by first occurrence so two plans that differ only
    in variable names normalise identically.
    """
    names: dict[str, str] = {}

    def canon(term):
        if isinstance(term, Var):
            if term.name not in names:
                names[term.name] = f"v{len(names)}"
            return ("var", names[term.name])
        if isinstance(term, Iri):
            return ("iri", term.value)
        return ("lit", term.lexical, term.datatype.value)

    counted: dict = {}
    for p in sorted(patterns, key=lambda p: str(p)):
        key = (canon(p.subject), canon(p.predicate), canon(p.object))
        counted[key] = counted.get(key, 0) + 1
    return counted


def bijection_equal(patterns_a, patterns_b) -> bool:
    """True when two pattern sets are equal under some variable bijection."""
    import itertools

    vars_a = sorted({t.name for p in patterns_a for t in (p.subject, p.predicate, p.object)
                     if isinstance(t, Var)})
    vars_b = sorted({t.name for p in patterns_b for t in (p.subject, p.predicate, p.object)
                     if isinstance(t, Var)})
    if len(vars_a) != len(vars_b) or len(patterns_a) != len(patterns_b):
        return False

    def ground(p, mapping):
        def g(t):
            return Var(mapping[t.name]) if isinstance(t, Var) else t

        return (g(p.subject), g(p.predicate), g(p.object))

    set_b = sorted(str(ground(p, {v: v for v in vars_b})) for p in patterns_b)
    for perm in itertools.permutations(vars_b):
        mapping = dict(zip(vars_a, perm))
        set_a = sorted(str(ground(p, mapping)) for p in patterns_a)
        if set_a == set_b:
            return True
    return False
