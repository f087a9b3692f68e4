/**
 * Live frame rendering: maps telemetry's normalized screen coordinates
 * into canvas pixels and draws the standard overlay vocabulary (tracked
 * dots, augmented dots, required dots with leniency ellipses, zones).
 *
 * Drawing goes through a minimal 2D-context surface so the mapping logic
 * is testable without a browser canvas.
 */

import { TelemetryFrame } from "./wire.js";

export interface CanvasSize {
  width: number;
  height: number;
}

export function toPixels(p: [number, number], size: CanvasSize): [number, number] {
  return [p[0] * size.width, p[1] * size.height];
}

export const STALE_AFTER_S = 1.0;

export interface Surface {
  clear(): void;
  circle(x: number, y: number, r: number, color: string, fill: boolean): void;
  ellipse(x: number, y: number, rx: number, ry: number, color: string): void;
  rect(x: number, y: number, w: number, h: number, color: string): void;
  text(s: string, x: number, y: number, color: string): void;
  line(x0: number, y0: number, x1: number, y1: number, color: string): void;
}

export const COLORS = {
  tracked: "#4cc9f0",
  augmented: "#f7b32b",
  required: "#ffd60a",
  leniency: "#e63946",
  zone: "#80ed99",
  banner: "#e8e8e8",
  stale: "#e63946",
  hud: "#9aa0a6",
};

export interface DotPositions {
  tracked: Record<string, [number, number]>;
  augmented: Record<string, [number, number]>;
  required: Record<string, [number, number]>;
}

/** Pixel positions of every dot the overlay will draw for one frame. */
export function dotPositions(frame: TelemetryFrame, size: CanvasSize): DotPositions {
  const out: DotPositions = { tracked: {}, augmented: {}, required: {} };
  for (const [actor, st] of Object.entries(frame.actors)) {
    if (st.p_t) out.tracked[actor] = toPixels(st.p_t, size);
    out.augmented[actor] = toPixels(st.p_a, size);
    if (st.p_r) out.required[actor] = toPixels(st.p_r, size);
  }
  return out;
}

export function isStale(frameTimeS: number, nowS: number): boolean {
  return nowS - frameTimeS > STALE_AFTER_S;
}

export class LiveView {
  lastFrame: TelemetryFrame | null = null;
  lastReceivedAtS = 0;
  audioLog: string[] = [];
  // Leniency radii per actor (normalized), provided by the loaded script.
  leniency: Record<string, [number, number]> = {};

  ingest(frame: TelemetryFrame, nowS: number): void {
    this.lastFrame = frame;
    this.lastReceivedAtS = nowS;
    for (const line of frame.audio) {
      this.audioLog.push(`[${frame.time_s.toFixed(2)}s] ${line}`);
    }
    if (this.audioLog.length > 200) {
      this.audioLog = this.audioLog.slice(-200);
    }
  }

  render(surface: Surface, size: CanvasSize, nowS: number): void {
    surface.clear();
    const frame = this.lastFrame;
    if (!frame) {
      surface.text("waiting for telemetry...", 12, 20, COLORS.hud);
      return;
    }
    const dots = dotPositions(frame, size);

    for (const [actor, st] of Object.entries(frame.actors)) {
      if (st.p_r) {
        const [rx, ry] = dots.required[actor];
        surface.circle(rx, ry, 5, COLORS.required, true);
        const len = this.leniency[actor];
        if (len) {
          surface.ellipse(rx, ry, len[0] * size.width, len[1] * size.height,
                          COLORS.leniency);
        }
      }
      const [ax, ay] = dots.augmented[actor];
      surface.circle(ax, ay, 4, COLORS.augmented, true);
      if (st.p_t) {
        const [tx, ty] = dots.tracked[actor];
        surface.circle(tx, ty, 6, COLORS.tracked, false);
        surface.line(tx, ty, ax, ay, COLORS.hud);
        surface.text(`${actor} (${st.phase}, w=${st.w.toFixed(2)})`,
                     tx + 8, ty - 8, COLORS.banner);
      }
    }

    surface.text(
      `script ${frame.script} | behavior ${frame.behavior} ` +
      `[${frame.chain_index}] | ${frame.mode} | tick ${frame.tick}`,
      12, 20, COLORS.banner);
    surface.text(
      `rates y/p/r: ${frame.rates.map((r) => r.toFixed(2)).join(" / ")} deg/s` +
      (frame.hold ? "  HOLD" : ""),
      12, 40, COLORS.hud);
    if (isStale(this.lastReceivedAtS, nowS)) {
      surface.text("STALE FRAME", size.width - 140, 20, COLORS.stale);
      surface.rect(0, 0, size.width, size.height, COLORS.stale);
    }
  }
}
