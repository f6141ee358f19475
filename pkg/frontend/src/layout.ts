/** Deterministic force-directed 2D layout for molecule graphs.
 *
 * Fixed iteration count and a seeded PRNG make the layout a pure function
 * of (graph, seed), so reloading reproduces the identical picture. */
import type { GraphJson } from "./types.js";

export class GraphSchemaError extends Error {}

export function validateGraph(graph: GraphJson): void {
  if (!Array.isArray(graph.atoms) || graph.atoms.length === 0) {
    throw new GraphSchemaError("graph needs a nonempty atoms array");
  }
  if (!graph.atoms.every((a) => typeof a === "string" && a.length > 0)) {
    throw new GraphSchemaError("atoms must be element symbols");
  }
  if (!Array.isArray(graph.bonds)) {
    throw new GraphSchemaError("graph needs a bonds array");
  }
  const n = graph.atoms.length;
  const seen = new Set<string>();
  for (const bond of graph.bonds) {
    if (!Array.isArray(bond) || bond.length !== 3) {
      throw new GraphSchemaError(`bond ${JSON.stringify(bond)} is not [i, j, order]`);
    }
    const [i, j, order] = bond;
    if (!Number.isInteger(i) || !Number.isInteger(j) || i < 0 || j < 0 || i >= n || j >= n) {
      throw new GraphSchemaError(`bond endpoints (${i}, ${j}) out of range`);
    }
    if (i === j) {
      throw new GraphSchemaError(`self loop on atom ${i}`);
    }
    if (![1, 2, 3].includes(order)) {
      throw new GraphSchemaError(`bond order ${order} not in 1..3`);
    }
    const key = `${Math.min(i, j)}-${Math.max(i, j)}`;
    if (seen.has(key)) {
      throw new GraphSchemaError(`duplicate bond between ${i} and ${j}`);
    }
    seen.add(key);
  }
}

/** Small fast deterministic PRNG (mulberry32). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface Point {
  x: number;
  y: number;
}

const ITERATIONS = 220;
const SPRING_LENGTH = 1.0;
const SPRING_K = 0.08;
const REPULSION = 0.6;
const COOLING = 0.96;

export function layoutGraph(graph: GraphJson, seed = 1): Point[] {
  validateGraph(graph);
  const n = graph.atoms.length;
  const rand = mulberry32(seed);
  const pos: Point[] = Array.from({ length: n }, () => ({
    x: rand() * 2 - 1,
    y: rand() * 2 - 1,
  }));
  if (n === 1) {
    return [{ x: 0, y: 0 }];
  }
  let step = 0.12;
  for (let it = 0; it < ITERATIONS; it++) {
    const force: Point[] = Array.from({ length: n }, () => ({ x: 0, y: 0 }));
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const dx = pos[i].x - pos[j].x;
        const dy = pos[i].y - pos[j].y;
        const d2 = dx * dx + dy * dy + 1e-6;
        const f = REPULSION / d2;
        const d = Math.sqrt(d2);
        force[i].x += (f * dx) / d;
        force[i].y += (f * dy) / d;
        force[j].x -= (f * dx) / d;
        force[j].y -= (f * dy) / d;
      }
    }
    for (const [i, j] of graph.bonds) {
      const dx = pos[j].x - pos[i].x;
      const dy = pos[j].y - pos[i].y;
      const d = Math.sqrt(dx * dx + dy * dy + 1e-9);
      const f = SPRING_K * (d - SPRING_LENGTH);
      force[i].x += (f * dx) / d;
      force[i].y += (f * dy) / d;
      force[j].x -= (f * dx) / d;
      force[j].y -= (f * dy) / d;
    }
    for (let i = 0; i < n; i++) {
      const mag = Math.sqrt(force[i].x ** 2 + force[i].y ** 2) + 1e-9;
      const clip = Math.min(mag, step);
      pos[i].x += (force[i].x / mag) * clip;
      pos[i].y += (force[i].y / mag) * clip;
    }
    step *= COOLING;
  }
  // normalize into the unit box
  const xs = pos.map((p) => p.x);
  const ys = pos.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const span = Math.max(maxX - minX, maxY - minY, 1e-6);
  return pos.map((p) => ({
    x: (p.x - minX) / span,
    y: (p.y - minY) / span,
  }));
}
