/**
 * Script draft editing: a thin command layer over the document model with
 * inline validation after every edit. Exporting is allowed only while the
 * draft validates cleanly.
 */

import {
  Behavior,
  ChainLink,
  Cue,
  Issue,
  ScriptDoc,
  TransitionClass,
  exportScript,
  importScript,
  scriptsEqual,
  validateScript,
} from "./schema.js";

export interface GridSize {
  width: number;
  height: number;
}

/** Map a click in editor-canvas pixels onto normalized frame coordinates. */
export function gridClickToPoint(px: number, py: number, grid: GridSize): [number, number] {
  const x = Math.min(Math.max(px / grid.width, 0), 1);
  const y = Math.min(Math.max(py / grid.height, 0), 1);
  return [round3(x), round3(y)];
}

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}

export class ScriptDraft {
  doc: ScriptDoc;
  issues: Issue[] = [];
  dirty = false;

  constructor(doc?: ScriptDoc) {
    this.doc = doc ?? { name: "untitled", actors: [], chain: [] };
    this.revalidate();
  }

  static fromJson(text: string): ScriptDraft {
    return new ScriptDraft(importScript(text));
  }

  revalidate(): Issue[] {
    this.issues = validateScript(this.doc);
    return this.issues;
  }

  get valid(): boolean {
    return this.issues.length === 0;
  }

  issuesAt(locationPrefix: string): Issue[] {
    return this.issues.filter((i) => i.location.startsWith(locationPrefix));
  }

  private touch(): void {
    this.dirty = true;
    this.revalidate();
  }

  rename(name: string): void {
    this.doc.name = name;
    this.touch();
  }

  addActor(name: string): void {
    if (!this.doc.actors.includes(name)) this.doc.actors.push(name);
    this.touch();
  }

  removeActor(name: string): void {
    this.doc.actors = this.doc.actors.filter((a) => a !== name);
    this.touch();
  }

  addLink(behavior: Behavior, cue: Cue | null = null,
          transition: TransitionClass = "medium", index?: number): void {
    const link: ChainLink = { behavior, cue, transition };
    if (index === undefined || index >= this.doc.chain.length) {
      this.doc.chain.push(link);
    } else {
      this.doc.chain.splice(index, 0, link);
    }
    this.touch();
  }

  removeLink(index: number): void {
    this.doc.chain.splice(index, 1);
    this.touch();
  }

  moveLink(from: number, to: number): void {
    if (from < 0 || from >= this.doc.chain.length) return;
    const [link] = this.doc.chain.splice(from, 1);
    this.doc.chain.splice(Math.min(Math.max(to, 0), this.doc.chain.length), 0, link);
    this.touch();
  }

  setCue(index: number, cue: Cue | null): void {
    this.doc.chain[index].cue = cue;
    this.touch();
  }

  setTransition(index: number, transition: TransitionClass): void {
    this.doc.chain[index].transition = transition;
    this.touch();
  }

  editBehavior(index: number, patch: Partial<Behavior>): void {
    this.doc.chain[index].behavior = {
      ...this.doc.chain[index].behavior,
      ...patch,
    } as Behavior;
    this.touch();
  }

  /** Place a framing target's required point from a canvas click. */
  placeRequiredPoint(linkIndex: number, targetIndex: number,
                     px: number, py: number, grid: GridSize): void {
    const b = this.doc.chain[linkIndex].behavior;
    if (b.kind !== "framing") return;
    b.targets[targetIndex].point = gridClickToPoint(px, py, grid);
    this.touch();
  }

  placeLeniencyEllipse(linkIndex: number, targetIndex: number,
                       rx: number, ry: number): void {
    const b = this.doc.chain[linkIndex].behavior;
    if (b.kind !== "framing") return;
    b.targets[targetIndex].leniency = [rx, ry];
    this.touch();
  }

  /** Export requires a clean draft; round-trips through importScript. */
  export(): string {
    if (!this.valid) {
      throw new Error(`cannot export: ${this.issues.length} validation issue(s)`);
    }
    this.dirty = false;
    return exportScript(this.doc);
  }

  roundTripsCleanly(): boolean {
    if (!this.valid) return false;
    return scriptsEqual(importScript(exportScript(this.doc)), this.doc);
  }
}
