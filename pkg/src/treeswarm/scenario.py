"""Scenario files: schema validation, parsing, and seeded random generation.

A scenario is a JSON document (schema version 1) fixing the tree topology,
per-robot models, initial state, communication radius and margin, the user
force profile and bound, integration settings, and optional design-heuristic
overrides. Unknown keys are rejected.
"""

import hashlib
import heapq
import json
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .dynamics import point_mass, two_link
from .errors import ScenarioError
from .graph import build_tree

FORCE_PROFILES = ("zero", "step", "sinusoid", "bounded-random", "external-live")

_NUM = {"type": "number"}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": [
        "schema",
        "name",
        "n_vertices",
        "edges",
        "robots",
        "initial",
        "r",
        "epsilon",
        "f_bar",
        "force",
        "dt",
        "duration",
    ],
    "properties": {
        "schema": {"const": 1},
        "name": {"type": "string"},
        "n_vertices": {"type": "integer", "minimum": 2},
        "edges": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "integer", "minimum": 1},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "robots": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["kind", "mass"],
                        "properties": {"kind": {"const": "point-mass"}, "mass": _POS_NUM},
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["kind", "m1", "m2", "l1", "l2"],
                        "properties": {
                            "kind": {"const": "two-link"},
                            "m1": _POS_NUM,
                            "m2": _POS_NUM,
                            "l1": _POS_NUM,
                            "l2": _POS_NUM,
                            "lc1": _POS_NUM,
                            "lc2": _POS_NUM,
                            "I1": _POS_NUM,
                            "I2": _POS_NUM,
                        },
                    },
                ]
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["positions"],
            "properties": {
                "positions": {"type": "array", "items": {"type": "array", "items": _NUM}},
                "velocities": {"type": "array", "items": {"type": "array", "items": _NUM}},
            },
        },
        "r": _POS_NUM,
        "epsilon": _POS_NUM,
        "f_bar": {"type": "number", "minimum": 0},
        "force": {
            "type": "object",
            "additionalProperties": False,
            "required": ["profile"],
            "properties": {
                "profile": {"enum": list(FORCE_PROFILES)},
                "magnitude": {"type": "number", "minimum": 0},
                "direction": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "frequency_hz": _POS_NUM,
                "phase": _NUM,
                "seed": {"type": "integer", "minimum": 0},
                "hold": _POS_NUM,
                "unchecked": {"type": "boolean"},
            },
        },
        "dt": _POS_NUM,
        "duration": _POS_NUM,
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                name: {
                    "oneOf": [_POS_NUM, {"type": "array", "items": _POS_NUM}]
                }
                for name in ("rho", "sigma", "eta", "gamma", "zeta", "Gamma", "B")
            },
        },
        "freeze_gain_schedule": {"type": "boolean"},
    },
}


@dataclass(frozen=True)
class ForceProfile:
    """Scripted (or live) user command applied to the informed slave."""

    kind: str
    magnitude: float = None
    direction: tuple = (1.0, 0.0)
    frequency_hz: float = 0.5
    phase: float = 0.0
    seed: int = 0
    hold: float = 0.25
    unchecked: bool = False


@dataclass(frozen=True)
class Scenario:
    """Parsed, validated scenario ready for design and simulation."""

    name: str
    tree: object
    models: tuple
    x0: np.ndarray
    v0: np.ndarray
    r: float
    epsilon: float
    f_bar: float
    force: ForceProfile
    dt: float
    duration: float
    design_overrides: dict = field(default_factory=dict)
    freeze_gain_schedule: bool = False
    doc: dict = field(default_factory=dict, repr=False)

    @property
    def n_robots(self):
        return self.tree.n_vertices

    def initial_edge_lengths(self):
        tails, heads = self.tree.edge_arrays()
        return np.linalg.norm(self.x0[heads] - self.x0[tails], axis=1)

    def initial_margin_slack(self):
        """Per-edge slack (r - epsilon) - ||x_ij(0)||; all must be positive."""
        return (self.r - self.epsilon) - self.initial_edge_lengths()


def _build_model(doc):
    if doc["kind"] == "point-mass":
        return point_mass(doc["mass"])
    kwargs = {k: doc[k] for k in ("lc1", "lc2", "I1", "I2") if k in doc}
    return two_link(doc["m1"], doc["m2"], doc["l1"], doc["l2"], **kwargs)


def parse_scenario(doc):
    """Validate a scenario document and build the runtime objects.

    Raises ScenarioError for schema violations and semantic inconsistencies
    (wrong array shapes, epsilon >= r is deferred to the design stage, force
    magnitude above f_bar unless explicitly marked unchecked).
    """
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"scenario schema violation: {exc.message}") from exc

    n = doc["n_vertices"]
    if len(doc["robots"]) != n:
        raise ScenarioError(f"expected {n} robot entries, got {len(doc['robots'])}")
    try:
        tree = build_tree(n, doc["edges"])
    except Exception as exc:
        raise ScenarioError(f"bad topology: {exc}") from exc

    x0 = np.asarray(doc["initial"]["positions"], dtype=float)
    v0 = np.asarray(doc["initial"].get("velocities", np.zeros_like(x0)), dtype=float)
    if x0.shape != (n, 2) or v0.shape != (n, 2):
        raise ScenarioError(f"initial positions/velocities must be {n}x2 arrays")
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(v0))):
        raise ScenarioError("initial state must be finite")

    fdoc = dict(doc["force"])
    kind = fdoc.pop("profile")
    if "direction" in fdoc:
        d = np.asarray(fdoc["direction"], dtype=float)
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise ScenarioError("force direction must be nonzero")
        fdoc["direction"] = tuple(d / norm)
    force = ForceProfile(kind=kind, **fdoc)
    if (
        force.magnitude is not None
        and force.magnitude > doc["f_bar"]
        and not force.unchecked
    ):
        raise ScenarioError(
            f"force magnitude {force.magnitude} exceeds f_bar {doc['f_bar']}; "
            "set force.unchecked to run a deliberate violation"
        )

    return Scenario(
        name=doc["name"],
        tree=tree,
        models=tuple(_build_model(r) for r in doc["robots"]),
        x0=x0,
        v0=v0,
        r=float(doc["r"]),
        epsilon=float(doc["epsilon"]),
        f_bar=float(doc["f_bar"]),
        force=force,
        dt=float(doc["dt"]),
        duration=float(doc["duration"]),
        design_overrides=dict(doc.get("design", {})),
        freeze_gain_schedule=bool(doc.get("freeze_gain_schedule", False)),
        doc=json.loads(json.dumps(doc)),
    )


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(doc)


def scenario_hash(scenario):
    """Stable content hash of the canonical scenario document."""
    blob = json.dumps(scenario.doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _prufer_edges(seq, n):
    deg = [1] * (n + 1)
    for v in seq:
        deg[v] += 1
    leaves = [v for v in range(1, n + 1) if deg[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        u = heapq.heappop(leaves)
        edges.append([u, int(v)])
        deg[v] -= 1
        if deg[v] == 1:
            heapq.heappush(leaves, int(v))
    edges.append([heapq.heappop(leaves), heapq.heappop(leaves)])
    return edges


def random_scenario(
    seed,
    n_vertices=5,
    topology="path",
    kinds="mixed",
    r=1.0,
    epsilon=0.2,
    f_bar=1.0,
    force_profile="bounded-random",
    dt=1e-3,
    duration=30.0,
    edge_span=(0.30, 0.55),
    speed=0.0,
    design=None,
    name=None,
):
    """Generate a schema-valid random scenario.

    Edges of the embedded tree are drawn with lengths in
    edge_span * (r - epsilon), so the initial-margin assumption holds by
    construction. speed > 0 adds random initial velocities (used by the
    synchronization scenarios, which need a perturbed start).
    """
    rng = np.random.default_rng(seed)
    n = int(n_vertices)
    if topology == "path":
        edges = [[i, i + 1] for i in range(1, n)]
    elif topology == "random":
        if n == 2:
            edges = [[1, 2]]
        else:
            edges = _prufer_edges(rng.integers(1, n + 1, size=n - 2), n)
    else:
        raise ValueError(f"unknown topology {topology!r}")

    robots = []
    for _ in range(n):
        if kinds == "mixed":
            pick = "point-mass" if rng.random() < 0.5 else "two-link"
        else:
            pick = kinds
        if pick == "point-mass":
            robots.append({"kind": "point-mass", "mass": round(float(rng.uniform(0.8, 1.6)), 4)})
        else:
            robots.append(
                {
                    "kind": "two-link",
                    "m1": round(float(rng.uniform(0.8, 1.2)), 4),
                    "m2": round(float(rng.uniform(0.8, 1.2)), 4),
                    "l1": 0.6,
                    "l2": 0.6,
                }
            )

    adj = {i: [] for i in range(1, n + 1)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    pos = np.zeros((n, 2))
    placed = {1}
    queue = [1]
    while queue:
        v = queue.pop(0)
        for w in adj[v]:
            if w not in placed:
                ang = rng.uniform(0.0, 2.0 * np.pi)
                length = rng.uniform(*edge_span) * (r - epsilon)
                pos[w - 1] = pos[v - 1] + length * np.array([np.cos(ang), np.sin(ang)])
                placed.add(w)
                queue.append(w)
    vel = np.zeros((n, 2))
    if speed > 0.0:
        ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
        mag = rng.uniform(0.5, 1.0, size=n) * speed
        vel = mag[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)

    force = {"profile": force_profile}
    if force_profile == "bounded-random":
        force["seed"] = int(rng.integers(0, 2**31))
    elif force_profile in ("step", "sinusoid"):
        ang = rng.uniform(0.0, 2.0 * np.pi)
        force["direction"] = [float(np.cos(ang)), float(np.sin(ang))]

    doc = {
        "schema": 1,
        "name": name or f"random-{topology}-{seed}",
        "n_vertices": n,
        "edges": edges,
        "robots": robots,
        "initial": {
            "positions": [[float(a) for a in row] for row in pos],
            "velocities": [[float(a) for a in row] for row in vel],
        },
        "r": float(r),
        "epsilon": float(epsilon),
        "f_bar": float(f_bar),
        "force": force,
        "dt": float(dt),
        "duration": float(duration),
    }
    if design:
        doc["design"] = design
    return parse_scenario(doc)
