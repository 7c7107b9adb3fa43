"""Command-line entry point: design, simulate, verify, serve.

Exit codes: 0 success, 2 schema/usage error, 3 design infeasible,
4 verification failure, 5 link broken. Log verbosity comes from the
SWARM_LOG environment variable (DEBUG/INFO/WARNING/ERROR).
"""

import argparse
import json
import logging
import os
import sys

from .controller import design_gains
from .errors import DesignInfeasible, ScenarioError, TreeswarmError
from .scenario import parse_scenario, scenario_hash
from .simulator import SimTrace, run
from .verifier import check_design, verify_trace

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4
EXIT_BROKEN = 5


def build_parser():
    parser = argparse.ArgumentParser(
        prog="treeswarm",
        description="Connectivity-preserving swarm teleoperation workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="run the gain design pipeline and report margins")
    p_design.add_argument("--scenario", required=True, help="scenario JSON path")
    p_design.add_argument("--out", help="directory for design.json")

    p_sim = sub.add_parser("simulate", help="design gains and run a scenario to a trace")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON path")
    p_sim.add_argument("--out", required=True, help="output directory for trace.csv + meta.json")
    p_sim.add_argument("--seed", type=int, help="override the force-profile seed")
    p_sim.add_argument("--dt", type=float, help="override the integration step (seconds)")
    p_sim.add_argument("--duration", type=float, help="override the run length (seconds)")

    p_verify = sub.add_parser("verify", help="certify a saved trace")
    p_verify.add_argument("--out", required=True, help="trace directory (from simulate)")

    p_serve = sub.add_parser("serve", help="run the live teleoperation service")
    p_serve.add_argument("--scenario", required=True, help="scenario JSON path")
    p_serve.add_argument("--bind", default="127.0.0.1:8700", help="ADDR:PORT to listen on")
    return parser


def _load_doc(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "seed":
            doc.setdefault("force", {})["seed"] = int(value)
        else:
            doc[key] = value
    return parse_scenario(doc)


def _design_payload(scenario, design, params, report):
    return {
        "scenario": scenario.name,
        "scenario_hash": scenario_hash(scenario),
        "design": design.to_dict(),
        "params": {
            "P": params.P,
            "Q": params.Q,
            "r": params.r,
            "epsilon": params.epsilon,
            "psi_max": params.psi_max,
        },
        "conditions": report.to_dict(),
    }


def cmd_design(args):
    scenario = _load_doc(args.scenario)
    design, params = design_gains(scenario)
    report = check_design(scenario, design, params)
    payload = _design_payload(scenario, design, params, report)
    print(f"scenario: {scenario.name}  (hash {payload['scenario_hash'][:12]})")
    print(
        f"potential: P={params.P:.6g} Q={params.Q:.6g} r={params.r:.6g} "
        f"epsilon={params.epsilon:.6g} psi_max={params.psi_max:.6g}"
    )
    print(
        f"gains: rho={design.rho:.6g} sigma={design.sigma:.6g} Gamma={design.Gamma:.6g} "
        f"Delta={design.Delta:.6g} f_bar={design.f_bar:.6g}"
    )
    print(f"B={list(design.B)}")
    print(f"D={[round(d, 6) for d in design.D]}")
    print(report.to_text())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "design.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        print(f"wrote {path}")
    return EXIT_OK if report.passed else EXIT_INFEASIBLE


def cmd_simulate(args):
    overrides = {"seed": args.seed, "dt": args.dt, "duration": args.duration}
    scenario = _load_doc(args.scenario, overrides)
    trace = run(scenario)
    path = trace.save(args.out)
    print(f"wrote {path} ({trace.n_samples} samples, backend {trace.backend})")
    if trace.broken:
        print(
            f"LINK BROKEN at step {trace.broken_step} "
            f"(t={trace.broken_step * scenario.dt:.4g} s)",
            file=sys.stderr,
        )
        return EXIT_BROKEN
    print(f"max edge distance {trace.edge_dist.max():.6g} vs r {scenario.r:.6g}")
    return EXIT_OK


def cmd_verify(args):
    trace = SimTrace.load(args.out)
    report = verify_trace(trace)
    text = report.to_text()
    print(text)
    with open(os.path.join(args.out, "certificate.txt"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    with open(os.path.join(args.out, "certificate.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_serve(args):
    from . import service

    scenario = _load_doc(args.scenario)
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise ScenarioError(f"--bind must be ADDR:PORT, got {args.bind!r}")
    service.serve(scenario, host=host, port=int(port))
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(
        level=getattr(logging, os.environ.get("SWARM_LOG", "WARNING").upper(), logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "design": cmd_design,
        "simulate": cmd_simulate,
        "verify": cmd_verify,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except DesignInfeasible as exc:
        print(f"design infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except TreeswarmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
