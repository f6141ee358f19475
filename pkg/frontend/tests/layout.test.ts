import assert from "node:assert/strict";
import { test } from "node:test";

import { GraphSchemaError, layoutGraph, mulberry32, validateGraph } from "../src/layout.js";
import type { GraphJson } from "../src/types.js";

const ETHANOL: GraphJson = {
  atoms: ["C", "C", "O"],
  bonds: [
    [0, 1, 1],
    [1, 2, 1],
  ],
};

test("layout is deterministic under a fixed seed", () => {
  const a = layoutGraph(ETHANOL, 7);
  const b = layoutGraph(ETHANOL, 7);
  assert.deepEqual(a, b);
  const c = layoutGraph(ETHANOL, 8);
  assert.notDeepEqual(a, c);
});

test("every atom gets a position inside the unit box", () => {
  const graph: GraphJson = {
    atoms: ["C", "O", "N", "C", "C", "F", "C", "C", "O"],
    bonds: [
      [0, 1, 1], [1, 2, 1], [2, 3, 1], [3, 4, 2], [4, 5, 1],
      [0, 6, 1], [6, 7, 1], [7, 8, 1], [0, 8, 1],
    ],
  };
  const pos = layoutGraph(graph, 3);
  assert.equal(pos.length, 9);
  for (const p of pos) {
    assert.ok(p.x >= -1e-9 && p.x <= 1 + 1e-9);
    assert.ok(p.y >= -1e-9 && p.y <= 1 + 1e-9);
  }
});

test("bonded atoms end up closer than the layout diameter", () => {
  const pos = layoutGraph(ETHANOL, 1);
  const d01 = Math.hypot(pos[0].x - pos[1].x, pos[0].y - pos[1].y);
  assert.ok(d01 < 1.0);
});

test("single atom centers", () => {
  assert.deepEqual(layoutGraph({ atoms: ["C"], bonds: [] }, 5), [{ x: 0, y: 0 }]);
});

test("schema validation rejects malformed payloads", () => {
  assert.throws(() => validateGraph({ atoms: [], bonds: [] }), GraphSchemaError);
  assert.throws(
    () => validateGraph({ atoms: ["C", "C"], bonds: [[0, 0, 1]] }),
    GraphSchemaError,
  );
  assert.throws(
    () => validateGraph({ atoms: ["C", "C"], bonds: [[0, 2, 1]] }),
    GraphSchemaError,
  );
  assert.throws(
    () => validateGraph({ atoms: ["C", "C"], bonds: [[0, 1, 4]] }),
    GraphSchemaError,
  );
  assert.throws(
    () =>
      validateGraph({
        atoms: ["C", "C"],
        bonds: [
          [0, 1, 1],
          [1, 0, 2],
        ],
      }),
    GraphSchemaError,
  );
  validateGraph(ETHANOL);
});

test("mulberry32 is deterministic and uniform-ish", () => {
  const a = mulberry32(42);
  const b = mulberry32(42);
  const seqA = Array.from({ length: 5 }, () => a());
  const seqB = Array.from({ length: 5 }, () => b());
  assert.deepEqual(seqA, seqB);
  const rand = mulberry32(7);
  const mean =
    Array.from({ length: 2000 }, () => rand()).reduce((s, v) => s + v, 0) / 2000;
  assert.ok(Math.abs(mean - 0.5) < 0.05);
});
