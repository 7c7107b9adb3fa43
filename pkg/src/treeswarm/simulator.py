"""Deterministic closed-loop simulation of the teleoperated swarm.

run() designs gains when needed, integrates the swarm under the scripted
user force with fixed-step RK4 (controls and gains re-evaluated at every
stage), and returns a SimTrace sampled at every step. Traces serialize to a
CSV file plus a JSON metadata sidecar.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import backend as backend_mod
from .controller import GainDesign, design_gains
from .dynamics import POINT_MASS
from .errors import LinkBroken, ScenarioError
from .potential import PotentialParams
from .scenario import Scenario, parse_scenario, scenario_hash

TRACE_CSV = "trace.csv"
TRACE_META = "meta.json"


@dataclass
class SimTrace:
    """Uniformly sampled record of one run.

    Arrays share the leading sample axis; broken marks a run aborted when a
    link reached the communication radius (arrays are truncated at the last
    valid sample).
    """

    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    u: np.ndarray
    gains: np.ndarray
    f: np.ndarray
    edge_dist: np.ndarray
    vp: np.ndarray
    v: np.ndarray
    scenario: Scenario
    design: GainDesign
    params: PotentialParams
    broken: bool
    broken_step: int
    backend: str

    @property
    def n_samples(self):
        return self.t.shape[0]

    @property
    def n_robots(self):
        return self.pos.shape[1]

    def phi(self):
        """Stacked swarm state per sample: all velocities followed by the
        oriented per-edge position differences."""
        tails, heads = self.scenario.tree.edge_arrays()
        vel_flat = self.vel.reshape(self.n_samples, -1)
        xt = (self.pos[:, heads, :] - self.pos[:, tails, :]).reshape(self.n_samples, -1)
        return np.concatenate([vel_flat, xt], axis=1)

    def column_names(self):
        n, e = self.n_robots, self.edge_dist.shape[1]
        cols = ["t"]
        cols += [f"x{i}_{c}" for i in range(1, n + 1) for c in (1, 2)]
        cols += [f"v{i}_{c}" for i in range(1, n + 1) for c in (1, 2)]
        cols += [f"u{i}_{c}" for i in range(1, n + 1) for c in (1, 2)]
        cols += [f"K{i}" for i in range(1, n + 1)]
        cols += ["f_1", "f_2"]
        cols += [f"d{a}_{b}" for a, b in self.scenario.tree.edges[:e]]
        cols += ["V_p", "V"]
        return cols

    def to_matrix(self):
        m = self.n_samples
        return np.hstack(
            [
                self.t[:, None],
                self.pos.reshape(m, -1),
                self.vel.reshape(m, -1),
                self.u.reshape(m, -1),
                self.gains,
                self.f,
                self.edge_dist,
                self.vp[:, None],
                self.v[:, None],
            ]
        )

    def save(self, outdir):
        """Write trace.csv (documented stable column order) and meta.json."""
        os.makedirs(outdir, exist_ok=True)
        cols = self.column_names()
        path = os.path.join(outdir, TRACE_CSV)
        np.savetxt(
            path,
            self.to_matrix(),
            delimiter=",",
            header=",".join(cols),
            comments="",
            fmt="%.17g",
        )
        meta = {
            "schema": 1,
            "scenario": self.scenario.doc,
            "scenario_hash": scenario_hash(self.scenario),
            "design": self.design.to_dict(),
            "params": {
                "P": self.params.P,
                "Q": self.params.Q,
                "r": self.params.r,
                "epsilon": self.params.epsilon,
                "psi_max": self.params.psi_max,
            },
            "backend": self.backend,
            "broken": bool(self.broken),
            "broken_step": int(self.broken_step),
            "columns": cols,
            "n_samples": int(self.n_samples),
        }
        with open(os.path.join(outdir, TRACE_META), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
        return path

    @classmethod
    def load(cls, indir):
        try:
            with open(os.path.join(indir, TRACE_META), encoding="utf-8") as fh:
                meta = json.load(fh)
            data = np.loadtxt(os.path.join(indir, TRACE_CSV), delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot load trace from {indir}: {exc}") from exc
        sc = parse_scenario(meta["scenario"])
        n = sc.tree.n_vertices
        e = sc.tree.n_edges
        expected = 1 + 6 * n + n + 2 + e + 2
        if data.shape[1] != expected:
            raise ScenarioError(
                f"trace has {data.shape[1]} columns, expected {expected}"
            )
        m = data.shape[0]
        if m != meta.get("n_samples", m):
            raise ScenarioError("trace row count disagrees with metadata")
        pars = meta["params"]
        idx = 1
        pos = data[:, idx : idx + 2 * n].reshape(m, n, 2)
        idx += 2 * n
        vel = data[:, idx : idx + 2 * n].reshape(m, n, 2)
        idx += 2 * n
        u = data[:, idx : idx + 2 * n].reshape(m, n, 2)
        idx += 2 * n
        gains = data[:, idx : idx + n]
        idx += n
        f = data[:, idx : idx + 2]
        idx += 2
        edge_dist = data[:, idx : idx + e]
        idx += e
        return cls(
            t=data[:, 0],
            pos=pos,
            vel=vel,
            u=u,
            gains=gains,
            f=f,
            edge_dist=edge_dist,
            vp=data[:, idx],
            v=data[:, idx + 1],
            scenario=sc,
            design=GainDesign.from_dict(meta["design"]),
            params=PotentialParams(
                P=pars["P"], Q=pars["Q"], r=pars["r"], epsilon=pars["epsilon"]
            ),
            broken=bool(meta["broken"]),
            broken_step=int(meta["broken_step"]),
            backend=meta.get("backend", "unknown"),
        )


def force_at(profile, t, f_bar, live_force=None):
    """Sample the user force at time t; the norm never exceeds f_bar unless
    the profile is explicitly marked unchecked (negative controls).

    bounded-random holds a uniformly random direction and magnitude for
    `hold` seconds per segment, keyed purely on (seed, segment), so samples
    are deterministic and order-independent. external-live applies a
    zero-order hold of the latest commanded force, clamped to f_bar.
    """
    if profile.kind == "zero":
        return np.zeros(2)
    if profile.kind == "external-live":
        f = np.zeros(2) if live_force is None else np.asarray(live_force, dtype=float)
        norm = float(np.linalg.norm(f))
        if norm > f_bar:
            f = f * (f_bar / norm)
        return f
    mag = f_bar if profile.magnitude is None else profile.magnitude
    if not profile.unchecked:
        mag = min(mag, f_bar)
    if profile.kind == "step":
        return mag * np.asarray(profile.direction, dtype=float)
    if profile.kind == "sinusoid":
        wave = np.sin(2.0 * np.pi * profile.frequency_hz * t + profile.phase)
        return mag * wave * np.asarray(profile.direction, dtype=float)
    if profile.kind == "bounded-random":
        seg = int(np.floor(t / profile.hold + 1e-9))
        rng = np.random.default_rng([profile.seed, seg])
        ang = rng.uniform(0.0, 2.0 * np.pi)
        m = rng.uniform(0.0, mag)
        return m * np.array([np.cos(ang), np.sin(ang)])
    raise ScenarioError(f"unknown force profile {profile.kind!r}")


def _force_half_grid(profile, f_bar, dt, steps, live_force=None):
    """Force at every half-step time; vectorized per profile kind but equal
    to force_at pointwise."""
    ts = 0.5 * dt * np.arange(2 * steps + 1)
    if profile.kind == "zero":
        return np.zeros((ts.size, 2))
    if profile.kind == "external-live":
        return np.tile(force_at(profile, 0.0, f_bar, live_force), (ts.size, 1))
    mag = f_bar if profile.magnitude is None else profile.magnitude
    if not profile.unchecked:
        mag = min(mag, f_bar)
    if profile.kind == "step":
        return np.tile(mag * np.asarray(profile.direction), (ts.size, 1))
    if profile.kind == "sinusoid":
        wave = mag * np.sin(2.0 * np.pi * profile.frequency_hz * ts + profile.phase)
        return wave[:, None] * np.asarray(profile.direction)[None, :]
    if profile.kind == "bounded-random":
        segs = np.floor(ts / profile.hold + 1e-9).astype(int)
        out = np.empty((ts.size, 2))
        cache = {}
        for row, seg in enumerate(segs):
            if seg not in cache:
                rng = np.random.default_rng([profile.seed, int(seg)])
                ang = rng.uniform(0.0, 2.0 * np.pi)
                m = rng.uniform(0.0, mag)
                cache[seg] = m * np.array([np.cos(ang), np.sin(ang)])
            out[row] = cache[seg]
        return out
    raise ScenarioError(f"unknown force profile {profile.kind!r}")


def pack_kernel_args(scenario, design, params):
    """Flatten scenario/design/params into the kernel's array arguments."""
    models = scenario.models
    n = len(models)
    kind = np.array([0 if m.kind == POINT_MASS else 1 for m in models], dtype=np.int64)
    mpar = np.zeros((n, 3))
    for i, m in enumerate(models):
        if m.kind == POINT_MASS:
            mpar[i, 0] = m.params[0]
        else:
            mpar[i] = m.params
    tails, heads = scenario.tree.edge_arrays()
    return {
        "kind": kind,
        "mpar": mpar,
        "lam2": np.array([m.lambda2 for m in models]),
        "cor_c": np.array([m.c for m in models]),
        "eta": np.asarray(design.eta, dtype=float),
        "gam": np.asarray(design.gamma, dtype=float),
        "zet": np.asarray(design.zeta, dtype=float),
        "big_b": np.asarray(design.B, dtype=float),
        "big_d": np.asarray(design.D, dtype=float),
        "rho": design.rho,
        "sigma": design.sigma,
        "gamma_term": design.informed_gain_term(),
        "big_p": params.P,
        "big_q": params.Q,
        "r2": params.r * params.r,
        "tails": tails,
        "heads": heads,
    }


def _allocate_outputs(steps, n, e):
    return {
        "pos_out": np.empty((steps + 1, n, 2)),
        "vel_out": np.empty((steps + 1, n, 2)),
        "u_out": np.empty((steps + 1, n, 2)),
        "k_out": np.empty((steps + 1, n)),
        "edge_out": np.empty((steps + 1, e)),
        "vp_out": np.empty(steps + 1),
        "v_out": np.empty(steps + 1),
    }


def run(scenario, design=None, params=None, backend=None):
    """Simulate a scenario end to end; deterministic for identical inputs.

    Designs gains first when not supplied. A link reaching the communication
    radius stops the run early and sets the broken flag (it does not raise;
    the CLI maps it to a failure exit code).
    """
    if scenario.force.kind == "external-live":
        raise ScenarioError("external-live scenarios must run under the teleop service")
    margins = scenario.initial_margin_slack()
    if np.any(margins <= 0.0):
        worst = int(np.argmin(margins))
        a, b = scenario.tree.edges[worst]
        raise ScenarioError(
            f"initial-margin assumption violated: edge ({a},{b}) has length "
            f"{scenario.initial_edge_lengths()[worst]:.6g}, needs < r - epsilon = "
            f"{scenario.r - scenario.epsilon:.6g}"
        )
    if design is None or params is None:
        design, params = design_gains(scenario)

    steps = int(round(scenario.duration / scenario.dt))
    mod = backend_mod.get_backend(backend)
    args = pack_kernel_args(scenario, design, params)
    f_half = _force_half_grid(scenario.force, scenario.f_bar, scenario.dt, steps)
    outs = _allocate_outputs(steps, scenario.n_robots, scenario.tree.n_edges)

    completed = mod.integrate_swarm(
        pos0=np.ascontiguousarray(scenario.x0),
        vel0=np.ascontiguousarray(scenario.v0),
        f_half=f_half,
        dt=scenario.dt,
        steps=steps,
        freeze_k=scenario.freeze_gain_schedule,
        **args,
        **outs,
    )
    if completed < 0:
        raise ScenarioError("initial state is outside the potential domain")

    rows = completed + 1
    return SimTrace(
        t=scenario.dt * np.arange(rows),
        pos=outs["pos_out"][:rows],
        vel=outs["vel_out"][:rows],
        u=outs["u_out"][:rows],
        gains=outs["k_out"][:rows],
        f=f_half[::2][:rows],
        edge_dist=outs["edge_out"][:rows],
        vp=outs["vp_out"][:rows],
        v=outs["v_out"][:rows],
        scenario=scenario,
        design=design,
        params=params,
        broken=completed < steps,
        broken_step=completed if completed < steps else -1,
        backend=backend_mod.backend_name(mod),
    )


def step(state, t, dt, scenario, design, params, backend=None, live_force=None):
    """Advance one RK4 step from (positions, velocities) at time t.

    Controls and the state-dependent gains are re-evaluated at every stage;
    the user force goes to robot 1 only. Raises LinkBroken when any stage
    leaves the potential domain.
    """
    pos, vel = state
    mod = backend_mod.get_backend(backend)
    args = pack_kernel_args(scenario, design, params)
    f_half = np.stack(
        [
            force_at(scenario.force, t, scenario.f_bar, live_force),
            force_at(scenario.force, t + 0.5 * dt, scenario.f_bar, live_force),
            force_at(scenario.force, t + dt, scenario.f_bar, live_force),
        ]
    )
    outs = _allocate_outputs(1, scenario.n_robots, scenario.tree.n_edges)
    completed = mod.integrate_swarm(
        pos0=np.ascontiguousarray(pos),
        vel0=np.ascontiguousarray(vel),
        f_half=f_half,
        dt=dt,
        steps=1,
        freeze_k=scenario.freeze_gain_schedule,
        **args,
        **outs,
    )
    if completed < 1:
        raise LinkBroken(f"link reached the communication radius during step at t={t:.6g}")
    return outs["pos_out"][1].copy(), outs["vel_out"][1].copy()
