"""HTTP query/control service over a telemetry store.

The simulation loop runs on one background thread and is the store's
only writer. HTTP readers (queries, snapshots, the WebSocket stream)
never block that writer; control commands are queued and drained by the
loop at event boundaries, so steering can never corrupt event ordering.

Live mode paces event processing at a simulated-to-real-time ratio so a
dashboard can watch messages fly; queries are never paced. Replay mode
serves a previously recorded stream with the same read API and rejects
control commands.
"""

from __future__ import annotations

import asyncio
import logging
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from consensus_lens.config import ConfigError, SimConfig
from consensus_lens.engine import SimulationEngine
from consensus_lens.overlay import kernels
from consensus_lens.telemetry import QueryFilter, TelemetryEvent, TelemetryStore

logger = logging.getLogger("consensus_lens.service")

DEFAULT_SPEED = 0.5  # simulated ms per real ms: one 1000 ms slot per 2 s

CONTROL_COMMANDS = (
    "pause", "resume", "step_slot",
    "kill_node", "revive_node", "set_latency_scale", "speed",
)


@dataclass
class _ControlRequest:
    cmd: str
    target: int | None = None
    value: float | None = None
    done: threading.Event = field(default_factory=threading.Event)
    result: dict | None = None


class LiveRunner:
    """Drives a SimulationEngine on its own thread, paced by ``speed``.

    All engine access happens on the runner thread; the HTTP layer talks
    to it only through the control queue and the snapshot produced by
    ``state()``.
    """

    mode = "live"

    def __init__(self, engine: SimulationEngine, store: TelemetryStore,
                 speed: float = DEFAULT_SPEED, paused: bool = False):
        if speed <= 0:
            raise ValueError("speed must be positive")
        self.engine = engine
        self.store = store
        self._cv = threading.Condition()
        self._pending: list[_ControlRequest] = []
        self._paused = paused
        self._speed = speed
        self._step_target: int | None = None
        self._stop = False
        self._finished = False
        self._real_anchor = time.perf_counter()
        self._sim_anchor = engine.now_ms
        self._thread = threading.Thread(target=self._loop, name="sim-loop", daemon=True)

    # -- lifecycle ------------------------------------------------------

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        with self._cv:
            self._stop = True
            self._cv.notify_all()
        self._thread.join(timeout=5)

    def wait_finished(self, timeout: float | None = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cv:
            while not self._finished:
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return False
                self._cv.wait(timeout=remaining)
            return True

    def finished(self) -> bool:
        with self._cv:
            return self._finished

    # -- public state ----------------------------------------------------

    def state(self) -> dict:
        with self._cv:
            return {
                "paused": self._paused,
                "speed": self._speed,
                "finished": self._finished,
                "current_slot": self.engine.current_slot,
                "now_ms": self.engine.now_ms,
                "stats": self.engine.stats(),
            }

    def config_echo(self) -> dict | None:
        return self.engine.config.echo()

    def control(self, cmd: str, target: int | None, value: float | None) -> dict:
        """Queue one command and wait for the loop to acknowledge it."""
        req = _ControlRequest(cmd=cmd, target=target, value=value)
        with self._cv:
            self._pending.append(req)
            self._cv.notify_all()
        if not req.done.wait(timeout=10):  # pragma: no cover - loop wedged
            raise HTTPException(status_code=504, detail="control command timed out")
        return req.result

    # -- simulation loop ---------------------------------------------------

    def _loop(self) -> None:
        with self._cv:
            while True:
                if self._stop:
                    return
                while self._pending:
                    req = self._pending.pop(0)
                    req.result = self._apply(req)
                    req.done.set()
                if self.engine.done:
                    if not self._finished:
                        self._finished = True
                        self._cv.notify_all()
                        logger.info("simulation finished at t=%d ms", self.engine.now_ms)
                    self._cv.wait()
                    continue
                if self._paused and self._step_target is None:
                    self._cv.wait()
                    continue
                if self._step_target is None:
                    # pace the next event against the wall clock
                    next_time = self.engine.next_time()
                    due = self._real_anchor + (next_time - self._sim_anchor) / (self._speed * 1000.0)
                    lag = due - time.perf_counter()
                    if lag > 0:
                        self._cv.wait(timeout=min(lag, 0.25))
                        continue
                events = self.engine.pump()
                if events:
                    self.store.extend(events)
                if self._step_target is not None and self.engine.current_slot >= self._step_target:
                    self._step_target = None
                    self._paused = True

    def _rebase_clock(self) -> None:
        self._real_anchor = time.perf_counter()
        self._sim_anchor = self.engine.now_ms

    def _apply(self, req: _ControlRequest) -> dict:
        """Runs on the loop thread with the lock held."""
        ack = {"ok": True, "cmd": req.cmd, "effective_ms": self.engine.now_ms}
        if self._finished and req.cmd not in ("pause", "resume", "speed"):
            return {"ok": False, "cmd": req.cmd, "error": "simulation finished",
                    "effective_ms": self.engine.now_ms}
        if req.cmd == "pause":
            if self._paused:
                ack["note"] = "already paused"
            self._paused = True
            self._step_target = None
        elif req.cmd == "resume":
            if not self._paused:
                ack["note"] = "already running"
            self._paused = False
            self._step_target = None
            self._rebase_clock()
        elif req.cmd == "step_slot":
            # run unpaced until the next SlotStart has been processed
            self._step_target = self.engine.current_slot + 1
            self._paused = False
        elif req.cmd == "speed":
            if req.value is None or req.value <= 0:
                return {"ok": False, "cmd": req.cmd, "error": "speed needs a positive value"}
            self._speed = float(req.value)
            self._rebase_clock()
            ack["speed"] = self._speed
        else:
            action = req.cmd
            scale = float(req.value) if action == "set_latency_scale" and req.value is not None else None
            try:
                fault = self.engine.inject_fault(action, target=req.target, scale=scale)
            except ConfigError as exc:
                return {"ok": False, "cmd": req.cmd, "error": str(exc)}
            ack["at_ms"] = fault.at_ms
        return ack


class ReplayRunner:
    """Read-only runner over a previously recorded stream."""

    mode = "replay"

    def __init__(self, store: TelemetryStore):
        self.store = store
        events = store.events(QueryFilter())
        self._last_ts = events[-1].ts_ms if events else 0
        self._last_slot = max(
            (ev.body["slot"] for ev in events if ev.kind == "role_assignment"),
            default=-1,
        )

    def start(self) -> None:
        pass

    def stop(self) -> None:
        pass

    def finished(self) -> bool:
        return True

    def state(self) -> dict:
        return {
            "paused": True,
            "speed": None,
            "finished": True,
            "current_slot": self._last_slot,
            "now_ms": self._last_ts,
            "stats": None,
        }

    def config_echo(self) -> dict | None:
        return None

    def control(self, cmd: str, target: int | None, value: float | None) -> dict:
        raise HTTPException(status_code=409, detail="no attached simulation (replay mode)")


def create_app(runner: LiveRunner | ReplayRunner) -> FastAPI:
    """Build the query/control API over one runner instance."""
    app = FastAPI(title="consensus-lens", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = runner.store
    app.state.runner = runner

    @app.get("/api/v1/events")
    def get_events(
        from_ms: int | None = None,
        to_ms: int | None = None,
        kinds: str | None = None,
        slot: int | None = None,
        node: int | None = None,
        after_seq: int | None = None,
    ):
        kind_set = frozenset(k for k in kinds.split(",") if k) if kinds else None
        flt = QueryFilter(from_ms=from_ms, to_ms=to_ms, kinds=kind_set,
                          slot=slot, node=node)
        try:
            flt.validate()
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        events = store.events(flt)
        if after_seq is not None:
            events = [ev for ev in events if ev.seq > after_seq]
        return JSONResponse([_as_dict(ev) for ev in events])

    @app.get("/api/v1/snapshot/{slot}")
    def get_snapshot(slot: int):
        try:
            return JSONResponse(store.snapshot(slot))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"slot {slot} has not started")

    @app.get("/api/v1/meta")
    def get_meta():
        # sample runner state before the store: if "finished" reads true,
        # every event has already been stored, so the counts are complete
        state = runner.state()
        return JSONResponse({
            "mode": runner.mode,
            "config": runner.config_echo(),
            "kernel_backend": kernels.backend_name(),
            "last_seq": store.last_seq(),
            "event_count": len(store),
            **state,
        })

    @app.post("/api/v1/control")
    def post_control(payload: dict):
        cmd = payload.get("cmd")
        if cmd not in CONTROL_COMMANDS:
            raise HTTPException(
                status_code=400,
                detail=f"unknown cmd {cmd!r}; expected one of {list(CONTROL_COMMANDS)}",
            )
        target = payload.get("target")
        value = payload.get("value")
        if target is not None and not isinstance(target, int):
            raise HTTPException(status_code=400, detail="target must be a node index")
        if value is not None and not isinstance(value, (int, float)):
            raise HTTPException(status_code=400, detail="value must be a number")
        result = runner.control(cmd, target, value)
        status = 200 if result.get("ok") else 400
        return JSONResponse(result, status_code=status)

    @app.websocket("/api/v1/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        try:
            cursor = int(ws.query_params.get("after_seq", -1))
        except (TypeError, ValueError):
            cursor = -1
        try:
            while True:
                events = store.events_after(cursor)
                if events:
                    for ev in events:
                        await ws.send_text(ev.to_json_line())
                    cursor = events[-1].seq
                    continue
                if runner.finished():
                    break
                await asyncio.sleep(0.05)
            await ws.close()
        except (WebSocketDisconnect, RuntimeError):
            pass  # client went away

    return app


def _as_dict(ev: TelemetryEvent) -> dict:
    return {"ts_ms": ev.ts_ms, "seq": ev.seq, "kind": ev.kind, "body": ev.body}


def serve(runner: LiveRunner | ReplayRunner, host: str, port: int) -> None:
    """Run the service until interrupted; owns runner start/stop."""
    import uvicorn

    app = create_app(runner)
    runner.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        runner.stop()
