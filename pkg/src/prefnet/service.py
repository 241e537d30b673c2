"""Interactive episode server: one trained agent + dataset hosted behind
REST session management and a WebSocket telemetry/control stream.

Protocol (all frames carry "version": 1):

    POST    /sessions          {"alpha"?, "beta"?, "split"?, "start"?,
                                "tick_ms"?, "steps"?} -> session state
    GET     /sessions          list of session states
    GET     /sessions/{id}     session state
    DELETE  /sessions/{id}     end the session
    WS      /session/{id}      client -> control messages
                               server -> ack / error / telemetry / end frames

Control messages: {"kind": "set_preference", "alpha"?: x, "beta"?: y}
                  {"kind": "node_down" | "node_up", "node": id}
                  {"kind": "pause" | "resume"}
                  {"kind": "reset", "start"?: record index}

Telemetry:        {"type": "telemetry", "version": 1, "tick": k, "alpha": a,
                   ["beta": b,] "slav": v, "vnf_total": n, "power_total": w,
                   "per_node": [{"id", "status", "instance_counts", "power"}]}

Acks:             {"type": "ack", "version": 1, "kind": ..., "applies_at_tick": k}
                  -- the control is reflected in the action that produces
                  frame k (controls drain at tick boundaries; sessions start
                  paused at tick 0, so pre-resume controls apply to frame 0).

Sessions are isolated: each owns its environment copy; the agent is shared
read-only. A session is a single-writer loop; each connection gets a single
writer task, so acks and telemetry never interleave mid-message.
"""
from __future__ import annotations

import asyncio
import math
import uuid
from collections import deque

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from prefnet.evaluate import GreedyStepper
from prefnet.prefdist import PreferenceDistribution
from prefnet.sim.env import NetworkEnv

VERSION = 1


class Session:
    def __init__(self, sid, agent, dataset, *, split, start, alpha, beta,
                 tick_s, steps):
        records = dataset.slice(split)
        if not records:
            raise ValueError(f"split '{split}' holds no records")
        if not (0 <= start < len(records)):
            raise ValueError(f"start index {start} out of range for '{split}'")
        self.id = sid
        self.task = agent.meta.task
        self.env = NetworkEnv(dataset.topology, records, dataset.meta.sla_ms)
        self.env.reset(start)
        self.stepper = GreedyStepper(agent, self.env, alpha, beta)
        self._initial = (start, alpha, beta)
        self.tick = 0
        self.running = False
        self.closed = False
        self.ended = False
        self.tick_s = tick_s
        self.steps_cap = steps
        self.controls = deque()
        self.subscribers = set()
        self.loop_task = None

    # -- state for REST --

    def state(self):
        out = {"id": self.id, "version": VERSION, "tick": self.tick,
               "running": self.running, "alpha": self.stepper.alpha,
               "task": self.task, "ended": self.ended}
        if self.task == "pm":
            out["beta"] = self.stepper.beta
        return out

    # -- control intake (runs in the request/WS handlers) --

    def submit(self, msg):
        """Validate a control; queue it for the next tick boundary and return
        the ack frame, or return an error frame without queueing."""
        if self.closed or self.ended:
            return _error("session has ended")
        if not isinstance(msg, dict) or "kind" not in msg:
            return _error("control must be an object with a 'kind'")
        kind = msg["kind"]
        if kind == "set_preference":
            if "alpha" not in msg and "beta" not in msg:
                return _error("set_preference needs alpha and/or beta")
            for key in ("alpha", "beta"):
                if key in msg and not _valid_pref(msg[key]):
                    return _error(f"{key} must be a finite number >= 0")
            if "beta" in msg and self.task != "pm":
                return _error("beta only applies to power-management sessions")
        elif kind in ("node_down", "node_up"):
            node = msg.get("node")
            if not isinstance(node, int) or not (0 <= node < self.env.topology.n_nodes):
                return _error(f"unknown node {node!r}")
        elif kind == "reset":
            start = msg.get("start", self._initial[0])
            if not isinstance(start, int) or not (0 <= start < len(self.env.records)):
                return _error(f"bad start index {start!r}")
        elif kind not in ("pause", "resume"):
            return _error(f"unknown control kind '{kind}'")
        self.controls.append(msg)
        return {"type": "ack", "version": VERSION, "kind": kind,
                "applies_at_tick": self.tick}

    # -- tick loop (single writer) --

    def _drain(self):
        while self.controls:
            msg = self.controls.popleft()
            kind = msg["kind"]
            if kind == "set_preference":
                if "alpha" in msg:
                    self.stepper.set_alpha(msg["alpha"])
                if "beta" in msg:
                    self.stepper.set_beta(msg["beta"])
            elif kind == "node_down":
                self.stepper.node_down(msg["node"])
            elif kind == "node_up":
                self.stepper.node_up(msg["node"])
            elif kind == "pause":
                self.running = False
            elif kind == "resume":
                self.running = True
            elif kind == "reset":
                start, alpha, beta = self._initial
                start = msg.get("start", start)
                self.env.reset(start)
                self.stepper.set_alpha(alpha)
                if beta is not None:
                    self.stepper.set_beta(beta)
                self.tick = 0
                self.running = False

    def _telemetry(self):
        row, metrics = self.stepper.step()
        frame = {"type": "telemetry", "version": VERSION, "tick": self.tick,
                 "alpha": row["alpha"], "slav": row["slav"],
                 "vnf_total": row["vnf_total"],
                 "power_total": row["power_total"],
                 "per_node": [
                     {"id": n,
                      "status": "up" if self.env.topology.is_up(n) else "down",
                      "instance_counts": self.env.deployment.counts[n].tolist(),
                      "power": metrics.node_watts[n]}
                     for n in range(self.env.topology.n_nodes)]}
        if self.task == "pm":
            frame["beta"] = row["beta"]
        return frame

    def _broadcast(self, frame):
        for q in list(self.subscribers):
            q.put_nowait(frame)

    def _finish(self, frame=None):
        if frame:
            self._broadcast(frame)
        self.ended = True
        self.running = False

    async def run(self):
        try:
            while not self.closed:
                await asyncio.sleep(self.tick_s)
                self._drain()
                if not self.running or self.ended:
                    continue
                if self.env.exhausted() or (self.steps_cap is not None
                                            and self.tick >= self.steps_cap):
                    self._finish({"type": "end", "version": VERSION,
                                  "tick": self.tick, "reason": "exhausted"})
                    continue
                try:
                    frame = self._telemetry()
                except Exception as exc:  # environment fault: terminal frame
                    self._finish({"type": "error", "version": VERSION,
                                  "tick": self.tick, "message": str(exc),
                                  "terminal": True})
                    continue
                self._broadcast(frame)
                self.tick += 1
        except asyncio.CancelledError:
            pass

    def close(self):
        self.closed = True
        self.running = False
        if self.loop_task is not None:
            self.loop_task.cancel()
        self._broadcast({"type": "end", "version": VERSION, "tick": self.tick,
                         "reason": "closed"})


def _valid_pref(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) \
        and math.isfinite(x) and x >= 0


def _error(message):
    return {"type": "error", "version": VERSION, "message": message}


def _default_preference(agent):
    """Mean of the training distributions, used when a create request does
    not pin the starting preference."""
    alpha = beta = None
    if agent.meta.alpha_dist:
        alpha = PreferenceDistribution.parse(agent.meta.alpha_dist).mean()
    if agent.meta.beta_dist:
        beta = PreferenceDistribution.parse(agent.meta.beta_dist).mean()
    return alpha, beta


def create_app(agent, dataset, *, default_tick_ms=500):
    app = FastAPI(title="prefnet steer service")
    sessions = {}
    app.state.sessions = sessions
    app.state.agent = agent
    app.state.dataset = dataset

    @app.post("/sessions")
    async def create_session(body: dict | None = None):
        body = body or {}
        d_alpha, d_beta = _default_preference(agent)
        alpha = body.get("alpha", d_alpha)
        beta = body.get("beta", d_beta if agent.meta.task == "pm" else None)
        if not _valid_pref(alpha):
            return JSONResponse(_error("alpha must be a finite number >= 0"),
                                status_code=400)
        if agent.meta.task == "pm" and not _valid_pref(beta):
            return JSONResponse(_error("beta must be a finite number >= 0"),
                                status_code=400)
        tick_ms = body.get("tick_ms", default_tick_ms)
        if not isinstance(tick_ms, (int, float)) or tick_ms <= 0:
            return JSONResponse(_error("tick_ms must be positive"),
                                status_code=400)
        sid = uuid.uuid4().hex[:12]
        try:
            session = Session(
                sid, agent, dataset,
                split=body.get("split", "test"),
                start=body.get("start", 0),
                alpha=float(alpha),
                beta=float(beta) if agent.meta.task == "pm" else None,
                tick_s=float(tick_ms) / 1000.0,
                steps=body.get("steps"))
        except (ValueError, KeyError) as exc:
            return JSONResponse(_error(str(exc)), status_code=400)
        sessions[sid] = session
        session.loop_task = asyncio.create_task(session.run())
        return session.state()

    @app.get("/sessions")
    async def list_sessions():
        return [s.state() for s in sessions.values()]

    @app.get("/sessions/{sid}")
    async def get_session(sid: str):
        if sid not in sessions:
            return JSONResponse(_error("no such session"), status_code=404)
        return sessions[sid].state()

    @app.delete("/sessions/{sid}")
    async def delete_session(sid: str):
        session = sessions.pop(sid, None)
        if session is None:
            return JSONResponse(_error("no such session"), status_code=404)
        session.close()
        return {"ok": True, "id": sid}

    @app.websocket("/session/{sid}")
    async def session_socket(websocket: WebSocket, sid: str):
        session = sessions.get(sid)
        if session is None:
            # accept first so the close code reaches the client instead of a
            # 403 handshake rejection
            await websocket.accept()
            await websocket.close(code=4404)
            return
        await websocket.accept()
        out = asyncio.Queue()
        session.subscribers.add(out)

        async def writer():
            while True:
                frame = await out.get()
                await websocket.send_json(frame)

        writer_task = asyncio.create_task(writer())
        try:
            while True:
                try:
                    raw = await websocket.receive_json()
                except WebSocketDisconnect:
                    break
                except ValueError:
                    # malformed JSON: report it, keep the connection alive
                    out.put_nowait(_error("malformed control message"))
                    continue
                out.put_nowait(session.submit(raw))
        finally:
            session.subscribers.discard(out)
            writer_task.cancel()

    return app
