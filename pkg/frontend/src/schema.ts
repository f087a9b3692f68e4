/**
 * Script document model and validation.
 *
 * Mirrors the engine-side parser rule for rule so the editor can flag
 * problems inline before export; an exported document that validates here
 * round-trips through the engine parser unchanged.
 */

export type TransitionClass = "slow" | "medium" | "fast" | "whip";

export const TRANSITION_SECONDS: Record<TransitionClass, number> = {
  slow: 1.5,
  medium: 0.8,
  fast: 0.35,
  whip: 0.12,
};

export const MIN_LENIENCY_RADIUS = 0.005;
export const MAX_LENIENCY_RADIUS = 0.5;
export const SPEECH_DISTANCE_MIN = 0.4;

export interface FramingTarget {
  actor: string;
  point: [number, number];
  leniency: [number, number];
}

export interface FramingBehavior {
  id: string;
  kind: "framing";
  targets: FramingTarget[];
}

export interface PathBehavior {
  id: string;
  kind: "path";
  actor: string;
  points: [number, number][];
  leniency: [number, number];
}

export interface PanBehavior {
  id: string;
  kind: "pan";
  axis: "yaw" | "pitch";
  direction: 1 | -1;
  speed_deg_s: number;
  range_deg: number;
}

export interface BankingBehavior {
  id: string;
  kind: "banking";
  gain: number;
  smoothing_s: number;
}

export interface IdleBehavior {
  id: string;
  kind: "idle";
}

export type Behavior =
  | FramingBehavior
  | PathBehavior
  | PanBehavior
  | BankingBehavior
  | IdleBehavior;

export type Cue =
  | { kind: "speech"; word: string }
  | { kind: "elapsed"; seconds: number }
  | { kind: "actor_appears" | "actor_disappears"; actor: string; sensitivity_ticks: number }
  | { kind: "landing_zone"; actor: string; rect: [number, number, number, number] }
  | { kind: "relative_size"; actor: string; min_height_fraction: number };

export interface ChainLink {
  behavior: Behavior;
  cue: Cue | null;
  transition: TransitionClass;
}

export interface ScriptDoc {
  name: string;
  actors: string[];
  chain: ChainLink[];
}

export type IssueKind =
  | "syntax"
  | "unknown_actor"
  | "unknown_behavior_kind"
  | "invalid_parameter";

export interface Issue {
  kind: IssueKind;
  location: string;
  message: string;
}

export function levenshtein(a: string, b: string): number {
  if (a === b) return 0;
  if (!a.length) return b.length;
  if (!b.length) return a.length;
  let prev = Array.from({ length: b.length + 1 }, (_, i) => i);
  for (let i = 1; i <= a.length; i++) {
    const cur = [i];
    for (let j = 1; j <= b.length; j++) {
      cur.push(Math.min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] === b[j - 1] ? 0 : 1)));
    }
    prev = cur;
  }
  return prev[b.length];
}

export function normalizedLevenshtein(a: string, b: string): number {
  const m = Math.max(a.length, b.length);
  return m === 0 ? 0 : levenshtein(a, b) / m;
}

function isPoint(p: unknown): p is [number, number] {
  return Array.isArray(p) && p.length === 2 && p.every((v) => typeof v === "number" && isFinite(v));
}

function pointInFrame(p: [number, number]): boolean {
  return p[0] >= 0 && p[0] <= 1 && p[1] >= 0 && p[1] <= 1;
}

/** Full-document validation; returns every issue found (never throws). */
export function validateScript(doc: ScriptDoc): Issue[] {
  const issues: Issue[] = [];
  const bad = (kind: IssueKind, location: string, message: string) =>
    issues.push({ kind, location, message });

  if (!doc.name) bad("syntax", "$.name", "script needs a name");
  if (!Array.isArray(doc.actors) || doc.actors.length === 0) {
    bad("syntax", "$.actors", "at least one actor is required");
  }
  const actorSet = new Set(doc.actors);
  if (actorSet.size !== doc.actors.length) {
    bad("invalid_parameter", "$.actors", "duplicate actor name");
  }
  if (!Array.isArray(doc.chain) || doc.chain.length === 0) {
    bad("syntax", "$.chain", "the chain must hold at least one behavior");
    return issues;
  }

  const ids = new Set<string>();
  const speechWords: { word: string; location: string }[] = [];

  doc.chain.forEach((link, i) => {
    const loc = `chain[${i}]`;
    const b = link.behavior;
    if (!b || !b.id) {
      bad("syntax", `${loc}.behavior`, "behavior needs an id");
      return;
    }
    if (ids.has(b.id)) bad("invalid_parameter", `${loc}.behavior.id`, `duplicate id '${b.id}'`);
    ids.add(b.id);

    switch (b.kind) {
      case "framing": {
        if (!b.targets || b.targets.length === 0) {
          bad("invalid_parameter", `${loc}.targets`, "framing needs at least one target");
          break;
        }
        const seen = new Set<string>();
        b.targets.forEach((t, k) => {
          const tl = `${loc}.targets[${k}]`;
          if (!actorSet.has(t.actor)) bad("unknown_actor", tl, `unknown actor '${t.actor}'`);
          if (seen.has(t.actor)) bad("invalid_parameter", tl, `actor '${t.actor}' framed twice`);
          seen.add(t.actor);
          if (!isPoint(t.point) || !pointInFrame(t.point)) {
            bad("invalid_parameter", `${tl}.point`, "point must lie inside the frame");
          }
          if (!isPoint(t.leniency) || t.leniency.some((r) => r < 0 || r > MAX_LENIENCY_RADIUS)) {
            bad("invalid_parameter", `${tl}.leniency`, `radii must be within [0, ${MAX_LENIENCY_RADIUS}]`);
          }
        });
        break;
      }
      case "path": {
        if (!actorSet.has(b.actor)) bad("unknown_actor", loc, `unknown actor '${b.actor}'`);
        if (!b.points || b.points.length < 2) {
          bad("invalid_parameter", `${loc}.points`, "path needs at least two waypoints");
        } else if (b.points.some((p) => !isPoint(p) || !pointInFrame(p))) {
          bad("invalid_parameter", `${loc}.points`, "waypoints must lie inside the frame");
        }
        break;
      }
      case "pan": {
        if (b.axis !== "yaw" && b.axis !== "pitch") {
          bad("invalid_parameter", `${loc}.axis`, "axis must be yaw or pitch");
        }
        if (b.direction !== 1 && b.direction !== -1) {
          bad("invalid_parameter", `${loc}.direction`, "direction must be 1 or -1");
        }
        if (!(b.speed_deg_s > 0)) bad("invalid_parameter", `${loc}.speed_deg_s`, "must be > 0");
        if (!(b.range_deg > 0)) bad("invalid_parameter", `${loc}.range_deg`, "must be > 0");
        break;
      }
      case "banking": {
        if (!(b.smoothing_s > 0)) bad("invalid_parameter", `${loc}.smoothing_s`, "must be > 0");
        break;
      }
      case "idle":
        break;
      default:
        bad("unknown_behavior_kind", loc, `unknown behavior kind '${(b as Behavior).kind}'`);
    }

    const cue = link.cue;
    if (cue === null || cue === undefined) {
      if (i !== doc.chain.length - 1) {
        bad("invalid_parameter", `${loc}.cue`, "only the final link may omit its cue");
      }
    } else {
      switch (cue.kind) {
        case "speech": {
          const word = cue.word?.trim().toLowerCase() ?? "";
          if (!word) bad("invalid_parameter", `${loc}.cue.word`, "must not be empty");
          else speechWords.push({ word, location: `${loc}.cue.word` });
          break;
        }
        case "elapsed":
          if (!(cue.seconds > 0)) bad("invalid_parameter", "duration", "must be > 0");
          break;
        case "actor_appears":
        case "actor_disappears":
          if (!actorSet.has(cue.actor)) bad("unknown_actor", `${loc}.cue`, `unknown actor '${cue.actor}'`);
          if (!(cue.sensitivity_ticks >= 1)) {
            bad("invalid_parameter", `${loc}.cue.sensitivity_ticks`, "must be >= 1");
          }
          break;
        case "landing_zone": {
          if (!actorSet.has(cue.actor)) bad("unknown_actor", `${loc}.cue`, `unknown actor '${cue.actor}'`);
          const r = cue.rect;
          if (!Array.isArray(r) || r.length !== 4 || !(r[0] < r[2] && r[1] < r[3]) ||
              Math.min(r[0], r[1]) < 0 || Math.max(r[2], r[3]) > 1) {
            bad("invalid_parameter", `${loc}.cue.rect`, "rect must be [x0,y0,x1,y1] inside the frame");
          }
          break;
        }
        case "relative_size":
          if (!actorSet.has(cue.actor)) bad("unknown_actor", `${loc}.cue`, `unknown actor '${cue.actor}'`);
          if (!(cue.min_height_fraction > 0 && cue.min_height_fraction <= 1)) {
            bad("invalid_parameter", `${loc}.cue.min_height_fraction`, "must be in (0, 1]");
          }
          break;
        default:
          bad("invalid_parameter", `${loc}.cue.kind`, "unknown cue kind");
      }
    }

    if (!(link.transition in TRANSITION_SECONDS)) {
      bad("invalid_parameter", `${loc}.transition`, "must be slow|medium|fast|whip");
    }
  });

  for (let i = 0; i < speechWords.length; i++) {
    for (let j = i + 1; j < speechWords.length; j++) {
      const d = normalizedLevenshtein(speechWords[i].word, speechWords[j].word);
      if (d < SPEECH_DISTANCE_MIN) {
        bad("invalid_parameter", speechWords[j].location,
            `trigger words '${speechWords[i].word}' and '${speechWords[j].word}' are too similar`);
      }
    }
  }
  return issues;
}

/** Export with the engine's field layout (radii floored like the parser). */
export function exportScript(doc: ScriptDoc): string {
  const out: ScriptDoc = {
    name: doc.name,
    actors: [...doc.actors],
    chain: doc.chain.map((link) => ({
      behavior: normalizeBehavior(link.behavior),
      cue: link.cue ? { ...link.cue } : null,
      transition: link.transition,
    })),
  };
  return JSON.stringify(out, null, 2);
}

function floorRadii(l: [number, number]): [number, number] {
  return [Math.max(l[0], MIN_LENIENCY_RADIUS), Math.max(l[1], MIN_LENIENCY_RADIUS)];
}

function normalizeBehavior(b: Behavior): Behavior {
  if (b.kind === "framing") {
    return {
      ...b,
      targets: b.targets.map((t) => ({ ...t, point: [...t.point] as [number, number],
                                       leniency: floorRadii(t.leniency) })),
    };
  }
  if (b.kind === "path") {
    return { ...b, points: b.points.map((p) => [...p] as [number, number]),
             leniency: floorRadii(b.leniency ?? [0.05, 0.05]) };
  }
  return { ...b };
}

/** Parse an exported/engine script document. Throws on syntax problems. */
export function importScript(text: string): ScriptDoc {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new Error(`syntax: ${(e as Error).message}`);
  }
  const doc = raw as ScriptDoc;
  if (typeof doc !== "object" || doc === null || !Array.isArray(doc.chain)) {
    throw new Error("syntax: not a script document");
  }
  return {
    name: String(doc.name ?? ""),
    actors: (doc.actors ?? []).map(String),
    chain: doc.chain.map((link) => ({
      behavior: link.behavior,
      cue: link.cue ?? null,
      transition: (link.transition ?? "medium") as TransitionClass,
    })),
  };
}

/** Structural equality on the exported form. */
export function scriptsEqual(a: ScriptDoc, b: ScriptDoc): boolean {
  return exportScript(a) === exportScript(b);
}
