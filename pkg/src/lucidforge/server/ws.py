"""WebSocket front door: one Session per connection, JSON text messages,
wall-clock ticking, and episode files flushed to a record directory.

Protocol (one JSON object per message, discriminated by "type"):
inbound  hand_frame / select_site / reset / record_start / record_stop;
outbound hello (on connect), state (each tick), error. Poses travel as
{"p": [x, y, z], "q": [w, x, y, z]}.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
from pathlib import Path

from websockets.asyncio.server import serve

from ..kinematics import RetargetMap
from ..episodes import save
from .session import Session, TickConfig

log = logging.getLogger("lucidforge.server")


class SessionServer:
    def __init__(
        self,
        model_xml: str,
        cfg: TickConfig | None = None,
        host: str = "127.0.0.1",
        port: int = 8765,
        record_dir: str | None = None,
        retarget_map: RetargetMap | None = None,
    ):
        self.model_xml = model_xml
        self.cfg = cfg or TickConfig()
        self.host = host
        self.port = port
        self.record_dir = Path(record_dir) if record_dir else None
        self.retarget_map = retarget_map
        self._ids = itertools.count()
        self._episode_counter = itertools.count()
        if self.record_dir:
            self.record_dir.mkdir(parents=True, exist_ok=True)

    def _flush(self, session: Session):
        """Finish any active recording and write all pending episode files."""
        if session.recording is not None and session.recording.frames:
            session.finished.append(session.recording)
            session.recording = None
        self._flush_finished(session)

    async def _handle(self, ws):
        session = Session.from_xml(f"s{next(self._ids)}", self.model_xml, retarget_map=self.retarget_map)
        log.info("session %s connected", session.id)
        await ws.send(
            json.dumps(
                {"type": "hello", "model_hash": session.model_hash, "rate_hz": self.cfg.record_rate_hz}
            )
        )
        stop = asyncio.Event()

        async def reader():
            try:
                async for raw in ws:
                    try:
                        msg = json.loads(raw)
                    except json.JSONDecodeError as e:
                        await ws.send(json.dumps({"type": "error", "code": "bad_json", "detail": str(e)}))
                        continue
                    for m in session.handle_message(msg):
                        await ws.send(json.dumps(m))
            finally:
                stop.set()

        async def ticker():
            loop = asyncio.get_running_loop()
            period = 1.0 / self.cfg.input_rate_hz
            next_t = loop.time() + period
            while not stop.is_set():
                delay = next_t - loop.time()
                if delay > 0:
                    try:
                        await asyncio.wait_for(stop.wait(), timeout=delay)
                        break
                    except asyncio.TimeoutError:
                        pass
                else:
                    # running behind: drop missed ticks, let other tasks run
                    next_t = loop.time()
                    await asyncio.sleep(0)
                    if stop.is_set():
                        break
                next_t += period
                for m in session.tick(self.cfg):
                    await ws.send(json.dumps(m))
                self._flush_finished(session)

        try:
            await asyncio.gather(reader(), ticker())
        except Exception:  # connection closed mid-send, client bugs, ...
            log.debug("session %s terminated", session.id, exc_info=True)
        finally:
            self._flush(session)
            log.info("session %s closed", session.id)

    def _flush_finished(self, session: Session):
        if session.finished:
            done, session.finished = session.finished, []
            for ep in done:
                if self.record_dir is None:
                    continue
                path = self.record_dir / f"episode_{session.id}_{next(self._episode_counter):03d}.jsonl"
                path.write_bytes(save(ep))
                log.info("wrote %s (%d frames)", path, len(ep))

    async def run(self, ready: asyncio.Event | None = None):
        async with serve(self._handle, self.host, self.port) as server:
            if ready is not None:
                ready.set()
            await server.serve_forever()

    def run_forever(self):
        try:
            asyncio.run(self.run())
        except KeyboardInterrupt:
            pass
