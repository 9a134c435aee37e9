import { describe, expect, it } from "vitest";

import { dotToSvg, layoutDot, parseDot } from "../src/dot.js";

const SAMPLE = `digraph document {
  rankdir=TB;
  t0 [label="Ivanov" shape=box style=filled fillcolor="#f2f2f2"];
  t1 [label="'s" shape=box style=filled fillcolor="#f2f2f2"];
  t2 [label="phone" shape=box style=filled fillcolor="#f2f2f2"];
  t2 -> t0 [label="poss" style=dotted arrowhead=none];
  n0 [label="literal-value: family name\\nw=0.60" shape=ellipse style=filled fillcolor="#cce5ff"];
  n0 -> t0 [label="hasToken" style=dashed arrowhead=none];
  n1 [label="property: phone\\nw=0.80" shape=ellipse style=filled fillcolor="#cce5ff"];
  n1 -> t2 [label="hasToken" style=dashed arrowhead=none];
  n0 -> n1 [label="hasPhone"];
  n2 [label="object: Person\\n?" shape=box3d style=filled fillcolor="#d5f5d5"];
  n2 -> n0 [label="denotes" style=dotted arrowhead=none];
}
`;

describe("parseDot", () => {
  it("reads nodes with unescaped multi-line labels", () => {
    const graph = parseDot(SAMPLE);
    expect(graph.nodes).toHaveLength(6);
    const mention = graph.nodes.find((n) => n.id === "n0")!;
    expect(mention.shape).toBe("ellipse");
    expect(mention.label).toBe("literal-value: family name\nw=0.60");
  });

  it("reads edges with style and label", () => {
    const graph = parseDot(SAMPLE);
    const poss = graph.edges.find((e) => e.label === "poss")!;
    expect(poss.from).toBe("t2");
    expect(poss.to).toBe("t0");
    expect(poss.style).toBe("dotted");
  });

  it("rejects lines outside the subset", () => {
    expect(() => parseDot("digraph document {\n  subgraph cluster_0 { }\n}")).toThrow(/cannot parse/);
  });
});

describe("layoutDot", () => {
  it("places tokens above mentions above objects", () => {
    const { placed } = layoutDot(parseDot(SAMPLE));
    const y = (id: string) => placed.find((n) => n.id === id)!.y;
    expect(y("t0")).toBeLessThan(y("n0"));
    expect(y("n0")).toBeLessThan(y("n2"));
  });

  it("orders a layer by numeric id", () => {
    const { placed } = layoutDot(parseDot(SAMPLE));
    const x = (id: string) => placed.find((n) => n.id === id)!.x;
    expect(x("t0")).toBeLessThan(x("t1"));
    expect(x("t1")).toBeLessThan(x("t2"));
  });
});

describe("dotToSvg", () => {
  it("renders one svg element per node and edge", () => {
    const svg = dotToSvg(SAMPLE);
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg.match(/class="node"/g)).toHaveLength(6);
    expect(svg.match(/class="edge"/g)).toHaveLength(5);
    expect(svg).toContain("hasPhone");
    expect(svg).toContain("Ivanov");
  });

  it("is deterministic", () => {
    expect(dotToSvg(SAMPLE)).toBe(dotToSvg(SAMPLE));
  });

  it("escapes markup in labels", () => {
    const hostile = `digraph document {\n  t0 [label="<script>" shape=box];\n}`;
    const svg = dotToSvg(hostile);
    expect(svg).not.toContain("<script>");
    expect(svg).toContain("&lt;script&gt;");
  });
});
