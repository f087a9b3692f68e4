"""Live-steering bridge: the running simulation behind a WebSocket.

Clients connect to /ws and exchange JSON messages. Client commands are
queued and consumed by the very next engine tick (commands enqueued before
tick n are visible to tick n); telemetry is broadcast at a throttled rate
while the full-rate stream goes to disk.

Client -> engine message types:
    speech_word, switch_script, mode_toggle, enroll, pause, resume,
    set_speed, step (advance one tick while paused), snapshot
Engine -> client message types:
    telemetry_frame, audio_feedback, script_state, error

Every outbound message carries a schema version `v` and a per-connection
strictly increasing `seq`. Unknown or malformed input is answered with an
error message, never dropped silently.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .engine import EngineConfig, ExternalEvent
from .runner import SimulationRun
from .script import Script
from .sim import SceneSpec
from .tracking import TrackerConfig

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

CLIENT_KINDS = {"speech_word", "switch_script", "mode_toggle", "enroll",
                "pause", "resume", "set_speed", "step", "snapshot"}


class _Client:
    def __init__(self):
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=256)
        self.seq = 0

    def envelope(self, kind: str, payload: dict) -> dict:
        self.seq += 1
        return {"type": kind, "v": SCHEMA_VERSION, "seq": self.seq, **payload}


class SimulationServer:
    """Owns the closed loop and fans telemetry out to connected clients."""

    def __init__(self, scene: SceneSpec, scripts: dict[str, Script] | Script,
                 seed: int = 0, engine_cfg: EngineConfig | None = None,
                 tracker_cfg: TrackerConfig | None = None,
                 telemetry_every: int = 2, realtime: bool = True,
                 telemetry_path: str | None = "telemetry.jsonl",
                 static_dir: str | None = None, start_paused: bool = False):
        self.run = SimulationRun(scene, scripts, seed=seed, engine_cfg=engine_cfg,
                                 tracker_cfg=tracker_cfg)
        self.scripts = self.run.engine.scripts
        self.telemetry_every = telemetry_every
        self.realtime = realtime
        self.speed = 1.0
        self.paused = start_paused
        self.pending: list[ExternalEvent] = []
        self.clients: set[_Client] = set()
        self._telemetry_file = open(telemetry_path, "w", encoding="utf-8") \
            if telemetry_path else None
        self._task: asyncio.Task | None = None
        self.last_frame = None
        self.app = self._build_app(static_dir)

    # -- engine loop --------------------------------------------------------

    async def _loop(self):
        dt = self.run.scene.spec.dt
        try:
            while not self.run.done:
                if self.paused:
                    await asyncio.sleep(0.02)
                    continue
                self._tick_once()
                if self.realtime:
                    await asyncio.sleep(dt / self.speed)
                else:
                    await asyncio.sleep(0)
        finally:
            if self._telemetry_file:
                self._telemetry_file.close()
                self._telemetry_file = None

    def _tick_once(self):
        events, self.pending = self.pending, []
        frame = self.run.step(events)
        self.last_frame = frame
        doc = frame.to_dict()
        if self._telemetry_file:
            self._telemetry_file.write(json.dumps(doc) + "\n")
        throttled = frame.tick % self.telemetry_every == 0
        for client in list(self.clients):
            if throttled:
                self._offer(client, client.envelope("telemetry_frame", {"frame": doc}))
            for line in doc["audio"]:
                self._offer(client, client.envelope("audio_feedback", {"text": line}))

    @staticmethod
    def _offer(client: _Client, msg: dict):
        try:
            client.queue.put_nowait(msg)
        except asyncio.QueueFull:
            pass  # slow consumer: drop broadcast frames rather than stall the loop

    def snapshot(self) -> dict:
        engine = self.run.engine
        actors = {}
        if self.last_frame is not None:
            actors = {a: t.phase for a, t in self.last_frame.actors.items()}
        return {
            "script": engine.script.name,
            "scripts": sorted(self.scripts),
            "chain_index": engine.chain_index,
            "behavior": engine.active_behavior.id,
            "mode": engine.mode,
            "tick": self.run.tick,
            "paused": self.paused,
            "actors": actors,
        }

    # -- message handling ----------------------------------------------------

    def handle(self, msg: dict, client: _Client) -> dict | None:
        kind = msg.get("type")
        if kind not in CLIENT_KINDS:
            return client.envelope("error", {"reason": f"unknown type {kind!r}"})
        if kind == "speech_word":
            word = str(msg.get("word", "")).strip().lower()
            if not word:
                return client.envelope("error", {"reason": "speech_word needs a word"})
            self.pending.append(ExternalEvent.speech(word))
        elif kind == "switch_script":
            self.pending.append(ExternalEvent(kind="switch_script",
                                              script=str(msg.get("script", ""))))
        elif kind == "mode_toggle":
            self.pending.append(ExternalEvent(kind="mode_toggle"))
        elif kind == "enroll":
            self.pending.append(ExternalEvent(kind="enroll",
                                              actor=str(msg.get("actor", ""))))
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "set_speed":
            try:
                speed = float(msg.get("speed", 1.0))
            except (TypeError, ValueError):
                return client.envelope("error", {"reason": "bad speed"})
            self.speed = min(max(speed, 0.05), 20.0)
        elif kind == "step":
            if not self.paused:
                return client.envelope("error", {"reason": "step requires pause"})
            if not self.run.done:
                self._tick_once()
        elif kind == "snapshot":
            return client.envelope("script_state", self.snapshot())
        return None

    # -- app ----------------------------------------------------------------

    def _build_app(self, static_dir: str | None) -> FastAPI:
        server = self

        from contextlib import asynccontextmanager

        @asynccontextmanager
        async def lifespan(_app: FastAPI):
            server._task = asyncio.create_task(server._loop())
            yield
            if server._task:
                server._task.cancel()

        app = FastAPI(title="framepilot service", lifespan=lifespan)

        @app.websocket("/ws")
        async def ws_endpoint(websocket: WebSocket):
            await websocket.accept()
            client = _Client()
            server.clients.add(client)
            await websocket.send_json(client.envelope("script_state", server.snapshot()))

            async def reader():
                while True:
                    text = await websocket.receive_text()
                    try:
                        msg = json.loads(text)
                        if not isinstance(msg, dict):
                            raise ValueError("not an object")
                    except ValueError:
                        await websocket.send_json(
                            client.envelope("error", {"reason": "parse"}))
                        continue
                    reply = server.handle(msg, client)
                    if reply is not None:
                        await websocket.send_json(reply)

            async def writer():
                while True:
                    msg = await client.queue.get()
                    await websocket.send_json(msg)

            tasks = [asyncio.create_task(reader()), asyncio.create_task(writer())]
            try:
                await asyncio.wait(tasks, return_when=asyncio.FIRST_EXCEPTION)
            except WebSocketDisconnect:
                pass
            finally:
                for t in tasks:
                    t.cancel()
                server.clients.discard(client)

        @app.get("/healthz")
        async def health():
            return {"ok": True, "tick": server.run.tick}

        if static_dir and Path(static_dir).is_dir():
            app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
        return app


def default_static_dir() -> str | None:
    """The operator console root, when the frontend has been compiled."""
    root = Path(__file__).resolve().parents[2] / "frontend"
    if (root / "index.html").is_file() and (root / "dist").is_dir():
        return str(root)
    return None


def serve(scene: SceneSpec, scripts: dict[str, Script] | Script, seed: int = 0,
          port: int = 8765, host: str = "127.0.0.1",
          telemetry_path: str | None = "telemetry.jsonl"):
    """Run the live service until interrupted."""
    import uvicorn

    server = SimulationServer(scene, scripts, seed=seed,
                              telemetry_path=telemetry_path,
                              static_dir=default_static_dir())
    uvicorn.run(server.app, host=host, port=port, log_level="warning")
