/**
 * Browser wiring: WebSocket connection, hotkeys, the live canvas, and a
 * form-and-canvas script editor. Hotkeys stand in for the speech channel:
 * space fires the active behavior's trigger word, digits switch scripts,
 * `p` toggles pause, `m` toggles manual mode.
 */

import { ScriptDraft, gridClickToPoint } from "./editor.js";
import { COLORS, LiveView, Surface } from "./liveview.js";
import { CommandChannel, decodeServerMessage, ScriptState } from "./wire.js";

class CanvasSurface implements Surface {
  constructor(private ctx: CanvasRenderingContext2D,
              private w: number, private h: number) {}

  clear(): void {
    this.ctx.fillStyle = "#101418";
    this.ctx.fillRect(0, 0, this.w, this.h);
  }

  circle(x: number, y: number, r: number, color: string, fill: boolean): void {
    this.ctx.beginPath();
    this.ctx.arc(x, y, r, 0, Math.PI * 2);
    if (fill) {
      this.ctx.fillStyle = color;
      this.ctx.fill();
    } else {
      this.ctx.strokeStyle = color;
      this.ctx.stroke();
    }
  }

  ellipse(x: number, y: number, rx: number, ry: number, color: string): void {
    this.ctx.beginPath();
    this.ctx.ellipse(x, y, rx, ry, 0, 0, Math.PI * 2);
    this.ctx.strokeStyle = color;
    this.ctx.stroke();
  }

  rect(x: number, y: number, w: number, h: number, color: string): void {
    this.ctx.strokeStyle = color;
    this.ctx.strokeRect(x, y, w, h);
  }

  text(s: string, x: number, y: number, color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.font = "13px monospace";
    this.ctx.fillText(s, x, y);
  }

  line(x0: number, y0: number, x1: number, y1: number, color: string): void {
    this.ctx.beginPath();
    this.ctx.moveTo(x0, y0);
    this.ctx.lineTo(x1, y1);
    this.ctx.strokeStyle = color;
    this.ctx.stroke();
  }
}

export class App {
  channel = new CommandChannel();
  view = new LiveView();
  draft = new ScriptDraft();
  state: ScriptState | null = null;
  private socket: WebSocket | null = null;
  private canvas!: HTMLCanvasElement;
  private surface!: CanvasSurface;
  private status!: HTMLElement;

  start(): void {
    this.canvas = document.getElementById("frame") as HTMLCanvasElement;
    this.status = document.getElementById("status")!;
    this.surface = new CanvasSurface(this.canvas.getContext("2d")!,
                                     this.canvas.width, this.canvas.height);
    this.connect();
    this.bindHotkeys();
    this.bindEditor();
    const tick = () => {
      this.view.render(this.surface, {
        width: this.canvas.width, height: this.canvas.height,
      }, performance.now() / 1000);
      this.renderAudioLog();
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }

  connect(): void {
    const url = `ws://${location.host}/ws`;
    const socket = new WebSocket(url);
    this.socket = socket;
    socket.addEventListener("open", () => {
      this.status.textContent = "connected";
      this.channel.attach({
        get open() { return socket.readyState === WebSocket.OPEN; },
        send: (t) => socket.send(t),
      });
    });
    socket.addEventListener("close", () => {
      this.status.textContent =
        `disconnected (${this.channel.pending} queued) - retrying`;
      this.channel.detach();
      setTimeout(() => this.connect(), 1000);
    });
    socket.addEventListener("message", (ev) => {
      const msg = decodeServerMessage(String(ev.data));
      if (!msg) return;
      if (msg.type === "telemetry_frame") {
        this.view.ingest(msg.frame, performance.now() / 1000);
      } else if (msg.type === "script_state") {
        this.state = msg;
        this.renderState();
      } else if (msg.type === "audio_feedback") {
        this.view.audioLog.push(msg.text);
      } else if (msg.type === "error") {
        this.status.textContent = `server error: ${msg.reason}`;
      }
    });
  }

  /** The speech word the active link is waiting for, if any. */
  primaryCueWord(): string | null {
    const idx = this.state?.chain_index ?? 0;
    const link = this.draft.doc.chain[idx];
    if (link && link.cue && link.cue.kind === "speech") return link.cue.word;
    for (const l of this.draft.doc.chain) {
      if (l.cue?.kind === "speech") return l.cue.word;
    }
    return null;
  }

  bindHotkeys(): void {
    window.addEventListener("keydown", (ev) => {
      if ((ev.target as HTMLElement)?.tagName === "INPUT" ||
          (ev.target as HTMLElement)?.tagName === "TEXTAREA") return;
      if (ev.code === "Space") {
        const word = this.primaryCueWord();
        if (word) this.channel.send({ type: "speech_word", word });
        ev.preventDefault();
      } else if (ev.key >= "1" && ev.key <= "9") {
        const names = this.state?.scripts ?? [];
        const name = names[Number(ev.key) - 1];
        if (name) this.channel.send({ type: "switch_script", script: name });
      } else if (ev.key === "p") {
        this.channel.send({ type: this.state?.paused ? "resume" : "pause" });
        this.channel.send({ type: "snapshot" });
      } else if (ev.key === "m") {
        this.channel.send({ type: "mode_toggle" });
      } else if (ev.key === "s") {
        this.channel.send({ type: "snapshot" });
      }
    });
  }

  bindEditor(): void {
    const importBox = document.getElementById("script-json") as HTMLTextAreaElement;
    const importBtn = document.getElementById("import-btn")!;
    const exportBtn = document.getElementById("export-btn")!;
    const issues = document.getElementById("issues")!;
    const grid = document.getElementById("grid") as HTMLCanvasElement;

    const refresh = () => {
      issues.innerHTML = "";
      for (const issue of this.draft.issues) {
        const li = document.createElement("li");
        li.textContent = `${issue.kind} at ${issue.location}: ${issue.message}`;
        issues.appendChild(li);
      }
      this.drawGrid(grid);
      this.view.leniency = {};
      for (const link of this.draft.doc.chain) {
        if (link.behavior.kind === "framing") {
          for (const t of link.behavior.targets) {
            this.view.leniency[t.actor] = t.leniency;
          }
        }
      }
    };

    importBtn.addEventListener("click", () => {
      try {
        this.draft = ScriptDraft.fromJson(importBox.value);
      } catch (e) {
        issues.innerHTML = `<li>${(e as Error).message}</li>`;
        return;
      }
      refresh();
    });
    exportBtn.addEventListener("click", () => {
      if (!this.draft.valid) {
        this.status.textContent = "fix validation issues before exporting";
        return;
      }
      importBox.value = this.draft.export();
    });
    grid.addEventListener("click", (ev) => {
      const rect = grid.getBoundingClientRect();
      const [x, y] = gridClickToPoint(ev.clientX - rect.left, ev.clientY - rect.top,
                                      { width: rect.width, height: rect.height });
      const idx = this.state?.chain_index ?? 0;
      const link = this.draft.doc.chain[idx];
      if (link && link.behavior.kind === "framing" && link.behavior.targets.length) {
        this.draft.placeRequiredPoint(idx, 0, x * rect.width, y * rect.height,
                                      { width: rect.width, height: rect.height });
        refresh();
      }
    });
    refresh();
  }

  drawGrid(grid: HTMLCanvasElement): void {
    const ctx = grid.getContext("2d")!;
    ctx.fillStyle = "#15202b";
    ctx.fillRect(0, 0, grid.width, grid.height);
    ctx.strokeStyle = "#2c3e50";
    for (let i = 1; i < 10; i++) {
      ctx.beginPath();
      ctx.moveTo((grid.width / 10) * i, 0);
      ctx.lineTo((grid.width / 10) * i, grid.height);
      ctx.stroke();
      ctx.beginPath();
      ctx.moveTo(0, (grid.height / 10) * i);
      ctx.lineTo(grid.width, (grid.height / 10) * i);
      ctx.stroke();
    }
    for (const link of this.draft.doc.chain) {
      if (link.behavior.kind !== "framing") continue;
      for (const t of link.behavior.targets) {
        const x = t.point[0] * grid.width;
        const y = t.point[1] * grid.height;
        ctx.fillStyle = COLORS.required;
        ctx.beginPath();
        ctx.arc(x, y, 5, 0, Math.PI * 2);
        ctx.fill();
        ctx.strokeStyle = COLORS.leniency;
        ctx.beginPath();
        ctx.ellipse(x, y, t.leniency[0] * grid.width, t.leniency[1] * grid.height,
                    0, 0, Math.PI * 2);
        ctx.stroke();
      }
    }
  }

  renderState(): void {
    const el = document.getElementById("script-state")!;
    if (!this.state) return;
    el.textContent =
      `${this.state.script} @ link ${this.state.chain_index} ` +
      `(${this.state.behavior}) | ${this.state.mode}` +
      `${this.state.paused ? " | PAUSED" : ""} | tick ${this.state.tick}`;
  }

  renderAudioLog(): void {
    const el = document.getElementById("audio-log");
    if (!el) return;
    el.textContent = this.view.audioLog.slice(-12).join("\n");
  }
}
