import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  ScriptDoc,
  exportScript,
  importScript,
  levenshtein,
  normalizedLevenshtein,
  scriptsEqual,
  validateScript,
} from "../src/schema.js";

const CORPUS = join(__dirname, "..", "..", "corpus");

function minimal(): ScriptDoc {
  return {
    name: "minimal",
    actors: ["red"],
    chain: [
      {
        behavior: {
          id: "only", kind: "framing",
          targets: [{ actor: "red", point: [0.5, 0.5], leniency: [0.1, 0.1] }],
        },
        cue: null,
        transition: "medium",
      },
    ],
  };
}

describe("validation mirrors the engine parser", () => {
  it("accepts the minimal script", () => {
    expect(validateScript(minimal())).toEqual([]);
  });

  it("flags unknown actors", () => {
    const doc = minimal();
    (doc.chain[0].behavior as any).targets[0].actor = "ghost";
    const issues = validateScript(doc);
    expect(issues.some((i) => i.kind === "unknown_actor" && i.message.includes("ghost"))).toBe(true);
  });

  it("flags a negative elapsed duration like the parser does", () => {
    const doc = minimal();
    doc.chain[0].cue = { kind: "elapsed", seconds: -1 };
    doc.chain.push({ ...minimal().chain[0], behavior: { id: "b2", kind: "idle" } });
    const issues = validateScript(doc);
    expect(issues.some((i) => i.location === "duration" && i.message === "must be > 0")).toBe(true);
  });

  it("flags colliding speech words (go/go)", () => {
    const doc = minimal();
    doc.chain = [
      { ...doc.chain[0], cue: { kind: "speech", word: "go" } },
      {
        behavior: { id: "b2", kind: "idle" },
        cue: { kind: "speech", word: "go" }, transition: "fast",
      },
      { behavior: { id: "b3", kind: "idle" }, cue: null, transition: "fast" },
    ];
    const issues = validateScript(doc);
    expect(issues.some((i) => i.message.includes("too similar"))).toBe(true);
  });

  it("accepts distant speech words", () => {
    const doc = minimal();
    doc.chain = [
      { ...doc.chain[0], cue: { kind: "speech", word: "action" } },
      {
        behavior: { id: "b2", kind: "idle" },
        cue: { kind: "speech", word: "cut" }, transition: "fast",
      },
      { behavior: { id: "b3", kind: "idle" }, cue: null, transition: "fast" },
    ];
    expect(validateScript(doc)).toEqual([]);
  });

  it("requires cues on all but the final link", () => {
    const doc = minimal();
    doc.chain.push({ behavior: { id: "b2", kind: "idle" }, cue: null, transition: "slow" });
    const issues = validateScript(doc);
    expect(issues.some((i) => i.message.includes("final link"))).toBe(true);
  });

  it("flags duplicate behavior ids and unknown kinds", () => {
    const doc = minimal();
    doc.chain = [
      { ...doc.chain[0], cue: { kind: "elapsed", seconds: 1 } },
      { behavior: { id: "only", kind: "zoom" } as any, cue: null, transition: "slow" },
    ];
    const issues = validateScript(doc);
    expect(issues.some((i) => i.kind === "invalid_parameter" && i.message.includes("duplicate"))).toBe(true);
    expect(issues.some((i) => i.kind === "unknown_behavior_kind")).toBe(true);
  });
});

describe("levenshtein", () => {
  it("matches hand-checked distances", () => {
    expect(levenshtein("pan", "pen")).toBe(1);
    expect(levenshtein("action", "cut")).toBe(5);
    expect(normalizedLevenshtein("pan", "pen")).toBeCloseTo(1 / 3, 12);
    expect(normalizedLevenshtein("go", "go")).toBe(0);
  });
});

describe("corpus round trip", () => {
  const dir = join(CORPUS, "scripts");
  const files = readdirSync(dir).filter((f) => f.endsWith(".json"));

  it("has the full corpus available", () => {
    expect(files.length).toBe(20);
  });

  for (const f of files) {
    it(`round-trips ${f}`, () => {
      const doc = importScript(readFileSync(join(dir, f), "utf-8"));
      expect(validateScript(doc)).toEqual([]);
      const exported = exportScript(doc);
      const again = importScript(exported);
      expect(scriptsEqual(doc, again)).toBe(true);
      // And the exported form is exactly re-exportable (stable fixpoint).
      expect(exportScript(again)).toBe(exported);
    });
  }

  it("rejects every invalid corpus file", () => {
    const bad = join(CORPUS, "invalid");
    for (const f of readdirSync(bad).filter((x) => x.endsWith(".json"))) {
      const text = readFileSync(join(bad, f), "utf-8");
      let issues: unknown[] = [];
      try {
        issues = validateScript(importScript(text));
      } catch {
        issues = [{ kind: "syntax" }];
      }
      expect(issues.length, f).toBeGreaterThan(0);
    }
  });
});
