// Terminal mirror parity: the TypeScript oracle must reproduce the
// reference implementation's final state, canonical string, and hash for
// every fixture scenario (fixtures are generated from the server side).

import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import path from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { TerminalMirror } from "../src/oracle.js";
import type { ModelDoc } from "../src/model.js";
import type { EventDoc } from "../src/protocol.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(readFileSync(
  path.join(here, "..", "..", "test", "fixtures", "terminal_cases.json"),
  "utf-8")) as {
    model: ModelDoc;
    cases: Array<{
      events: EventDoc[];
      expect: {
        state: string;
        cursor: [number, number];
        focused: string | null;
        pressed: boolean;
        dragging: string | null;
        values: Record<string, number | string>;
        committed: Record<string, number>;
        canonical: string;
        hash: string;
      };
    }>;
  };

test("terminal mirror matches the reference oracle on every fixture", async () => {
  for (const [i, c] of fixture.cases.entries()) {
    const mirror = new TerminalMirror(fixture.model);
    for (const e of c.events) mirror.apply(e);
    assert.equal(mirror.state, c.expect.state, `case ${i}: state`);
    assert.deepEqual([mirror.cx, mirror.cy], c.expect.cursor, `case ${i}: cursor`);
    assert.equal(mirror.focused, c.expect.focused, `case ${i}: focus`);
    assert.equal(mirror.pressed, c.expect.pressed, `case ${i}: pressed`);
    assert.equal(mirror.dragging, c.expect.dragging, `case ${i}: dragging`);
    assert.deepEqual(Object.fromEntries(mirror.values), c.expect.values,
                     `case ${i}: values`);
    assert.deepEqual(Object.fromEntries(mirror.committed), c.expect.committed,
                     `case ${i}: committed`);
    assert.equal(mirror.canonicalString(), c.expect.canonical,
                 `case ${i}: canonical string`);
    assert.equal(await mirror.hash(), c.expect.hash, `case ${i}: hash`);
  }
});

test("mirror is deterministic under replay", async () => {
  const c = fixture.cases[fixture.cases.length - 1];
  const a = new TerminalMirror(fixture.model);
  const b = new TerminalMirror(fixture.model);
  for (const e of c.events) {
    a.apply(e);
    b.apply(e);
  }
  assert.equal(await a.hash(), await b.hash());
});
