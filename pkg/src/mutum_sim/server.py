"""Teleoperation transport: WebSocket session plus read-only HTTP endpoints.

One asyncio task owns the simulation and advances it in real time; socket
handlers only exchange messages with it.  The first connected client is
the controller; later connections observe.  Snapshot fan-out never blocks
physics: a slow client's frames are dropped and counted in the next frame
it does receive.
"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import replace

from aiohttp import WSMsgType, web

from .scene import list_bundled_scenes
from .teleop import MalformedCommandError, Session, SessionRecorder

SNAPSHOT_QUEUE_LIMIT = 8


class _Client:
    def __init__(self, ws: web.WebSocketResponse, controller: bool):
        self.ws = ws
        self.controller = controller
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=SNAPSHOT_QUEUE_LIMIT)
        self.dropped_since_last = 0


class TeleopServer:
    def __init__(self, scene: str = "phantom_rat", design: str = "tp",
                 record_path: str | None = None, realtime: bool = True):
        self.session = Session(scene_name=scene, design=design)
        self.recorder = (SessionRecorder(self.session, record_path)
                         if record_path else None)
        self.realtime = realtime
        self.clients: list[_Client] = []
        self.latest_snapshot_json: str = self.session.snapshot().to_json()
        self._sim_task: asyncio.Task | None = None

    # --- simulation loop ----------------------------------------------------

    async def _sim_loop(self) -> None:
        dt = self.session.dt
        next_wall = time.monotonic() + dt
        while True:
            if self.realtime:
                delay = next_wall - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                next_wall += dt
            else:
                await asyncio.sleep(0)
            self.session.advance()
            if self.session.should_emit_snapshot():
                self._broadcast()

    def _broadcast(self) -> None:
        base = self.session.snapshot()
        self.latest_snapshot_json = base.to_json()
        if self.recorder is not None:
            self.recorder.record_snapshot(base)
        for client in self.clients:
            snap = base if client.dropped_since_last == 0 else \
                replace(base, dropped=client.dropped_since_last)
            try:
                client.queue.put_nowait(snap.to_json())
                client.dropped_since_last = 0
            except asyncio.QueueFull:
                client.dropped_since_last += 1

    # --- handlers -------------------------------------------------------

    async def handle_session(self, request: web.Request) -> web.WebSocketResponse:
        ws = web.WebSocketResponse(heartbeat=30.0)
        await ws.prepare(request)
        client = _Client(ws, controller=not any(c.controller for c in self.clients))
        self.clients.append(client)
        sender = asyncio.create_task(self._send_loop(client))
        try:
            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                await self._handle_command_line(client, msg.data)
        finally:
            sender.cancel()
            self.clients.remove(client)
        return ws

    async def _handle_command_line(self, client: _Client, line: str) -> None:
        try:
            data = json.loads(line)
        except json.JSONDecodeError:
            await client.ws.send_str(json.dumps(
                {"error": "malformed command: not valid JSON"}))
            return
        if not client.controller:
            await client.ws.send_str(json.dumps(
                {"error": "observer connections cannot issue commands"}))
            return
        try:
            self.session.apply_command(data)
            if self.recorder is not None:
                self.recorder.record_command(self.session.tick, data)
        except MalformedCommandError as exc:
            await client.ws.send_str(json.dumps({"error": str(exc)}))

    async def _send_loop(self, client: _Client) -> None:
        while True:
            payload = await client.queue.get()
            await client.ws.send_str(payload)

    async def handle_state(self, request: web.Request) -> web.Response:
        return web.Response(text=self.latest_snapshot_json,
                            content_type="application/json")

    async def handle_scenes(self, request: web.Request) -> web.Response:
        return web.json_response(list_bundled_scenes())

    # --- lifecycle ------------------------------------------------------

    def build_app(self) -> web.Application:
        app = web.Application()
        app.router.add_get("/session", self.handle_session)
        app.router.add_get("/state", self.handle_state)
        app.router.add_get("/scenes", self.handle_scenes)
        app.on_startup.append(self._on_startup)
        app.on_cleanup.append(self._on_cleanup)
        return app

    async def _on_startup(self, app: web.Application) -> None:
        self._sim_task = asyncio.create_task(self._sim_loop())

    async def _on_cleanup(self, app: web.Application) -> None:
        if self._sim_task is not None:
            self._sim_task.cancel()
        if self.recorder is not None:
            self.recorder.close()


def serve(port: int = 8750, scene: str = "phantom_rat", design: str = "tp",
          record_path: str | None = None) -> None:
    """Run the teleoperation service until interrupted."""
    server = TeleopServer(scene=scene, design=design, record_path=record_path)
    web.run_app(server.build_app(), port=port, print=None)
