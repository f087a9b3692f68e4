/**
 * WebSocket wire protocol: message shapes and a small client that queues
 * commands while disconnected and flushes them on reconnect.
 */

export interface ActorState {
  p_t: [number, number] | null;
  p_a: [number, number];
  p_r: [number, number] | null;
  w: number;
  h: [number, number];
  phase: string;
}

export interface TelemetryFrame {
  tick: number;
  time_s: number;
  script: string;
  behavior: string;
  chain_index: number;
  mode: string;
  t_c: [number, number];
  hold: boolean;
  rates: [number, number, number];
  gimbal: [number, number, number];
  actors: Record<string, ActorState>;
  cue_fired: string | null;
  audio: string[];
  notes: string[];
}

export interface ScriptState {
  script: string;
  scripts: string[];
  chain_index: number;
  behavior: string;
  mode: string;
  tick: number;
  paused: boolean;
  actors: Record<string, string>;
}

export type ServerMessage =
  | { type: "telemetry_frame"; v: number; seq: number; frame: TelemetryFrame }
  | { type: "audio_feedback"; v: number; seq: number; text: string }
  | ({ type: "script_state"; v: number; seq: number } & ScriptState)
  | { type: "error"; v: number; seq: number; reason: string };

export type ClientCommand =
  | { type: "speech_word"; word: string }
  | { type: "switch_script"; script: string }
  | { type: "mode_toggle" }
  | { type: "enroll"; actor: string }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "set_speed"; speed: number }
  | { type: "step" }
  | { type: "snapshot" };

export function encodeCommand(cmd: ClientCommand): string {
  return JSON.stringify(cmd);
}

export function decodeServerMessage(text: string): ServerMessage | null {
  try {
    const msg = JSON.parse(text);
    if (msg && typeof msg.type === "string") return msg as ServerMessage;
  } catch {
    /* fall through */
  }
  return null;
}

/** Minimal transport surface so the client is testable without sockets. */
export interface Transport {
  readonly open: boolean;
  send(text: string): void;
}

/**
 * Command channel with offline queueing: while the transport is down,
 * commands accumulate locally (visible to the UI as pending) and flush in
 * order once the connection returns.
 */
export class CommandChannel {
  private queue: ClientCommand[] = [];
  private transport: Transport | null = null;

  attach(transport: Transport): void {
    this.transport = transport;
    this.flush();
  }

  detach(): void {
    this.transport = null;
  }

  get pending(): number {
    return this.queue.length;
  }

  send(cmd: ClientCommand): boolean {
    if (this.transport && this.transport.open) {
      this.transport.send(encodeCommand(cmd));
      return true;
    }
    this.queue.push(cmd);
    return false;
  }

  flush(): number {
    if (!this.transport || !this.transport.open) return 0;
    let n = 0;
    while (this.queue.length) {
      this.transport.send(encodeCommand(this.queue.shift()!));
      n++;
    }
    return n;
  }
}
