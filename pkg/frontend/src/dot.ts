// Parser and SVG layout for the DOT documents the engine emits.
//
// The server renders the document graph in a small, regular DOT subset
// (one node or edge statement per line, attribute lists in brackets), so a
// line-based parser is enough; no generic graphviz is needed client-side.

export interface DotNode {
  id: string;
  label: string;
  shape: string;
  fill: string | null;
  dashed: boolean;
}

export interface DotEdge {
  from: string;
  to: string;
  label: string;
  style: string | null;
}

export interface DotGraph {
  nodes: DotNode[];
  edges: DotEdge[];
}

const NODE_RE = /^\s*([A-Za-z0-9_]+)\s*\[(.*)\];$/;
const EDGE_RE = /^\s*([A-Za-z0-9_]+)\s*->\s*([A-Za-z0-9_]+)\s*\[(.*)\];$/;
const ATTR_RE = /(\w+)=(?:"((?:[^"\\]|\\.)*)"|([^\s\]]+))/g;

function parseAttrs(raw: string): Record<string, string> {
  const attrs: Record<string, string> = {};
  for (const match of raw.matchAll(ATTR_RE)) {
    attrs[match[1]] = match[2] !== undefined ? match[2].replace(/\\"/g, '"') : match[3];
  }
  return attrs;
}

export function parseDot(text: string): DotGraph {
  const nodes: DotNode[] = [];
  const edges: DotEdge[] = [];
  for (const rawLine of text.split("\n")) {
    const line = rawLine.trim();
    if (!line || line.startsWith("digraph") || line === "}" || line.startsWith("rankdir")) {
      continue;
    }
    const edgeMatch = line.match(EDGE_RE);
    if (edgeMatch) {
      const attrs = parseAttrs(edgeMatch[3]);
      edges.push({
        from: edgeMatch[1],
        to: edgeMatch[2],
        label: attrs.label ?? "",
        style: attrs.style ?? null,
      });
      continue;
    }
    const nodeMatch = line.match(NODE_RE);
    if (nodeMatch) {
      const attrs = parseAttrs(nodeMatch[2]);
      nodes.push({
        id: nodeMatch[1],
        label: (attrs.label ?? nodeMatch[1]).replace(/\\n/g, "\n"),
        shape: attrs.shape ?? "box",
        fill: attrs.fillcolor ?? null,
        dashed: attrs.style === "dashed",
      });
      continue;
    }
    throw new Error(`cannot parse DOT line: ${line}`);
  }
  return { nodes, edges };
}

// Layered layout: tokens on top, then mentions, hidden nodes, objects.
// Position within a layer follows the numeric part of the node id, which
// the server assigns in creation order.

function layer(node: DotNode): number {
  if (node.id.startsWith("t")) return 0;
  if (node.shape === "ellipse") return 1;
  if (node.shape === "diamond") return 2;
  return 3;
}

const CELL_W = 150;
const CELL_H = 110;
const NODE_W = 130;
const NODE_H = 46;

interface Placed extends DotNode {
  x: number;
  y: number;
}

export function layoutDot(graph: DotGraph): { placed: Placed[]; width: number; height: number } {
  const byLayer = new Map<number, DotNode[]>();
  for (const node of graph.nodes) {
    const l = layer(node);
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(node);
  }
  const placed: Placed[] = [];
  let width = 1;
  const layers = [...byLayer.keys()].sort((a, b) => a - b);
  layers.forEach((l, row) => {
    const members = byLayer.get(l)!;
    members.sort((a, b) => Number(a.id.replace(/\D/g, "")) - Number(b.id.replace(/\D/g, "")));
    members.forEach((node, col) => {
      placed.push({ ...node, x: col * CELL_W + CELL_W / 2, y: row * CELL_H + CELL_H / 2 });
    });
    width = Math.max(width, members.length);
  });
  return { placed, width: width * CELL_W, height: layers.length * CELL_H };
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function nodeSvg(node: Placed): string {
  const fill = node.fill ?? "#ffffff";
  const dash = node.dashed ? ' stroke-dasharray="4 3"' : "";
  let shape: string;
  if (node.shape === "ellipse") {
    shape = `<ellipse cx="${node.x}" cy="${node.y}" rx="${NODE_W / 2}" ry="${NODE_H / 2}" fill="${fill}" stroke="#445"${dash}/>`;
  } else if (node.shape === "diamond") {
    const points = [
      `${node.x},${node.y - NODE_H / 2}`,
      `${node.x + NODE_W / 2},${node.y}`,
      `${node.x},${node.y + NODE_H / 2}`,
      `${node.x - NODE_W / 2},${node.y}`,
    ].join(" ");
    shape = `<polygon points="${points}" fill="${fill}" stroke="#445"${dash}/>`;
  } else {
    shape = `<rect x="${node.x - NODE_W / 2}" y="${node.y - NODE_H / 2}" width="${NODE_W}" height="${NODE_H}" rx="6" fill="${fill}" stroke="#445"${dash}/>`;
  }
  const lines = node.label.split("\n");
  const text = lines
    .map(
      (line, i) =>
        `<text x="${node.x}" y="${node.y + (i - (lines.length - 1) / 2) * 13 + 4}" text-anchor="middle" font-size="11">${escapeXml(line)}</text>`,
    )
    .join("");
  return `<g class="node" data-id="${node.id}">${shape}${text}</g>`;
}

export function dotToSvg(text: string): string {
  const graph = parseDot(text);
  const { placed, width, height } = layoutDot(graph);
  const position = new Map(placed.map((n) => [n.id, n]));
  const parts: string[] = [];
  for (const edge of graph.edges) {
    const a = position.get(edge.from);
    const b = position.get(edge.to);
    if (!a || !b) continue;
    const dash = edge.style === "dotted" ? ' stroke-dasharray="2 3"' : edge.style === "dashed" ? ' stroke-dasharray="6 4"' : "";
    parts.push(
      `<g class="edge"><line x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" stroke="#778"${dash}/>` +
        (edge.label
          ? `<text x="${(a.x + b.x) / 2}" y="${(a.y + b.y) / 2 - 3}" text-anchor="middle" font-size="10" fill="#556">${escapeXml(edge.label)}</text>`
          : "") +
        `</g>`,
    );
  }
  for (const node of placed) {
    parts.push(nodeSvg(node));
  }
  return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">${parts.join("")}</svg>`;
}
