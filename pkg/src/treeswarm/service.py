"""Live teleoperation bridge: WebSocket state streaming + bounded force
commands for the informed slave.

One background thread owns the simulation and advances it in real time,
reading the latest commanded force once per step (zero-order hold, clamped
to the scenario's force bound). Frames are published at a fixed rate from
immutable snapshots; slow subscribers lose frames but never stall the
integration loop or receive frames out of order.
"""

import asyncio
import contextlib
import dataclasses
import itertools
import json
import logging
import threading
import time

import os

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from . import backend as backend_mod
from .controller import design_gains
from .errors import LinkBroken
from .scenario import ForceProfile, scenario_hash
from .simulator import pack_kernel_args, step

log = logging.getLogger("treeswarm.service")


class LiveSession:
    """Owns the live swarm state and the command mailbox.

    Thread-safe: the simulation thread advances the state; WebSocket
    handlers call apply_command/session_control/snapshot concurrently.
    """

    def __init__(self, scenario, backend=None, rate_hz=30.0):
        if scenario.force.kind != "external-live":
            scenario = dataclasses.replace(
                scenario, force=ForceProfile(kind="external-live")
            )
        self.scenario = scenario
        self.rate_hz = float(rate_hz)
        self._backend = backend_mod.get_backend(backend)
        self.design, self.params = design_gains(scenario)
        self._kernel_args = pack_kernel_args(scenario, self.design, self.params)
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread = None
        self._frame_seq = itertools.count()
        self._client_seq = {}
        self.reset()

    # -- state transitions ------------------------------------------------

    def reset(self):
        """Restore the initial state and re-run the design pipeline."""
        with self._lock:
            self.design, self.params = design_gains(self.scenario)
            self._kernel_args = pack_kernel_args(self.scenario, self.design, self.params)
            self._pos = self.scenario.x0.copy()
            self._vel = self.scenario.v0.copy()
            self._t = 0.0
            self._force = np.zeros(2)
            self._paused = False
            self._broken = False
        return self.status()

    def pause(self):
        with self._lock:
            self._paused = True
        return self.status()

    def resume(self):
        with self._lock:
            if not self._broken:
                self._paused = False
        return self.status()

    def session_control(self, action):
        if action == "pause":
            return self.pause()
        if action == "resume":
            return self.resume()
        if action == "reset":
            return self.reset()
        raise ValueError(f"unknown control action {action!r}")

    def status(self):
        with self._lock:
            return {
                "paused": self._paused,
                "broken": self._broken,
                "t": self._t,
            }

    # -- operator commands -------------------------------------------------

    def apply_command(self, fx, fy, seq, client_id):
        """Clamp and install a force command; stale sequence numbers per
        client are ignored. Returns the force actually applied."""
        last = self._client_seq.get(client_id)
        if last is not None and seq <= last:
            with self._lock:
                return self._force.copy()
        self._client_seq[client_id] = seq
        f = np.array([fx, fy], dtype=float)
        norm = float(np.linalg.norm(f))
        f_bar = self.scenario.f_bar
        if norm > f_bar:
            f *= f_bar / norm
        with self._lock:
            self._force = f
        return f.copy()

    # -- integration -------------------------------------------------------

    def _advance_one(self):
        with self._lock:
            if self._paused or self._broken:
                return False
            pos, vel, t = self._pos, self._vel, self._t
            force = self._force.copy()
        try:
            pos, vel = step(
                (pos, vel),
                t,
                self.scenario.dt,
                self.scenario,
                self.design,
                self.params,
                live_force=force,
            )
        except LinkBroken:
            log.error("link reached the communication radius; pausing session")
            with self._lock:
                self._broken = True
                self._paused = True
            return False
        with self._lock:
            self._pos, self._vel = pos, vel
            self._t = t + self.scenario.dt
        return True

    def _sim_loop(self):
        dt = self.scenario.dt
        target = time.monotonic()
        while not self._stop.is_set():
            if self.status()["paused"]:
                time.sleep(0.02)
                target = time.monotonic()
                continue
            self._advance_one()
            target += dt
            lag = target - time.monotonic()
            if lag > 0:
                time.sleep(lag)
            elif lag < -0.25:
                # fell badly behind real time (slow backend); drop the debt
                target = time.monotonic()

    def start(self):
        if self._thread is None:
            self._thread = threading.Thread(target=self._sim_loop, daemon=True)
            self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None

    # -- snapshots -----------------------------------------------------------

    def snapshot(self):
        """Consistent frame of the current state with derived quantities
        (controls, gains, per-edge stress, energies) from a zero-step
        kernel evaluation."""
        with self._lock:
            pos = self._pos.copy()
            vel = self._vel.copy()
            t = self._t
            force = self._force.copy()
            paused, broken = self._paused, self._broken
        n = self.scenario.n_robots
        e = self.scenario.tree.n_edges
        outs = {
            "pos_out": np.empty((1, n, 2)),
            "vel_out": np.empty((1, n, 2)),
            "u_out": np.empty((1, n, 2)),
            "k_out": np.empty((1, n)),
            "edge_out": np.empty((1, e)),
            "vp_out": np.empty(1),
            "v_out": np.empty(1),
        }
        self._backend.integrate_swarm(
            pos0=pos,
            vel0=vel,
            f_half=force[None, :],
            dt=self.scenario.dt,
            steps=0,
            freeze_k=False,
            **self._kernel_args,
            **outs,
        )
        psi_max = self.params.psi_max
        r2 = self.params.r**2
        dists = outs["edge_out"][0]
        stress = (
            self.params.P * dists**2 / (r2 - dists**2 + self.params.Q)
        ) / psi_max
        return {
            "type": "frame",
            "seq": next(self._frame_seq),
            "t": t,
            "paused": paused,
            "broken": broken,
            "robots": [
                {
                    "x": [pos[i, 0], pos[i, 1]],
                    "v": [vel[i, 0], vel[i, 1]],
                    "K": outs["k_out"][0, i],
                }
                for i in range(n)
            ],
            "edges": [
                {
                    "i": a,
                    "j": b,
                    "dist": dists[k],
                    "stress": stress[k],
                }
                for k, (a, b) in enumerate(self.scenario.tree.edges)
            ],
            "f": [force[0], force[1]],
            "V": outs["v_out"][0],
            "V_p": outs["vp_out"][0],
        }

    def scenario_summary(self):
        sc = self.scenario
        return {
            "name": sc.name,
            "hash": scenario_hash(sc),
            "n_robots": sc.n_robots,
            "edges": [list(e) for e in sc.tree.edges],
            "kinds": [m.kind for m in sc.models],
            "r": sc.r,
            "epsilon": sc.epsilon,
            "f_bar": sc.f_bar,
            "dt": sc.dt,
            "rate_hz": self.rate_hz,
            "design": self.design.to_dict(),
            "psi_max": self.params.psi_max,
        }


def create_app(scenario, backend=None, rate_hz=30.0, static_dir=None):
    """FastAPI app hosting /ws (frames + commands) and GET /scenario; when
    static_dir exists it is mounted at / so the browser console is served
    from the same origin it connects back to."""
    session = LiveSession(scenario, backend=backend, rate_hz=rate_hz)
    subscribers = set()
    client_counter = itertools.count(1)

    async def publish_loop():
        interval = 1.0 / session.rate_hz
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while True:
            next_tick += interval
            delay = next_tick - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_tick = loop.time()
            if not subscribers:
                continue
            frame = json.dumps(session.snapshot(), default=float)
            for queue in list(subscribers):
                if queue.full():
                    try:
                        queue.get_nowait()  # drop the oldest frame, keep order
                    except asyncio.QueueEmpty:
                        pass
                queue.put_nowait(frame)

    @contextlib.asynccontextmanager
    async def lifespan(app):
        session.start()
        publisher = asyncio.create_task(publish_loop())
        try:
            yield
        finally:
            publisher.cancel()
            session.stop()

    app = FastAPI(title="treeswarm teleop service", lifespan=lifespan)
    app.state.session = session

    @app.get("/scenario")
    async def get_scenario():
        return session.scenario_summary()

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        client_id = next(client_counter)
        await websocket.send_json(
            {"type": "hello", "client_id": client_id, "scenario": session.scenario_summary()}
        )
        queue = asyncio.Queue(maxsize=8)
        subscribers.add(queue)

        async def pump():
            while True:
                await websocket.send_text(await queue.get())

        sender = asyncio.create_task(pump())
        try:
            while True:
                msg = await websocket.receive_json()
                kind = msg.get("type")
                if kind == "force":
                    applied = session.apply_command(
                        float(msg.get("fx", 0.0)),
                        float(msg.get("fy", 0.0)),
                        int(msg.get("seq", 0)),
                        client_id,
                    )
                    await websocket.send_json(
                        {
                            "type": "force_ack",
                            "fx": applied[0],
                            "fy": applied[1],
                            "seq": int(msg.get("seq", 0)),
                        }
                    )
                elif kind == "control":
                    try:
                        status = session.session_control(msg.get("action"))
                    except ValueError as exc:
                        await websocket.send_json({"type": "error", "message": str(exc)})
                        continue
                    status = dict(status)
                    status.update({"type": "status", "action": msg.get("action")})
                    await websocket.send_json(status)
                else:
                    await websocket.send_json(
                        {"type": "error", "message": f"unknown message type {kind!r}"}
                    )
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            subscribers.discard(queue)

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app


def default_console_dir():
    """frontend/ next to the source tree (present in editable checkouts)."""
    repo = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    candidate = os.path.join(repo, "frontend")
    return candidate if os.path.isfile(os.path.join(candidate, "index.html")) else None


def serve(scenario, host="127.0.0.1", port=8700, backend=None, rate_hz=30.0, static_dir=None):
    """Blocking entry point used by the CLI."""
    import uvicorn

    if static_dir is None:
        static_dir = default_console_dir()
    app = create_app(scenario, backend=backend, rate_hz=rate_hz, static_dir=static_dir)
    log.info("serving %s on %s:%d (console: %s)", scenario.name, host, port, static_dir)
    uvicorn.run(app, host=host, port=port, ws="websockets", log_level="warning")
