"""Benchmark the compiled integration kernel against the NumPy fallback.

Runs the same seeded scenarios on both backends and reports wall time per
simulated second plus the speedup. Usage:

    python benchmarks/compare_backends.py [--duration 5.0] [--repeat 3]
"""

import argparse
import time

import numpy as np

from treeswarm.backend import available_backends
from treeswarm.controller import design_gains
from treeswarm.scenario import random_scenario
from treeswarm.simulator import run


def time_backend(scenario, design, params, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = run(scenario, design, params, backend=backend)
        best = min(best, time.perf_counter() - t0)
        assert not trace.broken
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--duration", type=float, default=5.0, help="simulated seconds per case")
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions (best-of)")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; only timing the python backend")

    # larger swarms use a wider initial margin and point masses: that keeps
    # the scheduled gains inside RK4's stability region at the default 1 kHz
    # step (see the dt note in the README)
    cases = [
        ("path N=3 point-mass", dict(n_vertices=3, topology="path", kinds="point-mass")),
        ("path N=5 mixed", dict(n_vertices=5, topology="path", kinds="mixed")),
        ("random N=8 mixed", dict(n_vertices=8, topology="random", kinds="mixed", epsilon=0.65)),
        (
            "random N=16 point-mass",
            dict(n_vertices=16, topology="random", kinds="point-mass", epsilon=0.8),
        ),
    ]

    header = f"{'case':<24}{'steps':>8}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, kw in cases:
        scenario = random_scenario(seed=8080, duration=args.duration, **kw)
        design, params = design_gains(scenario)
        times = {b: time_backend(scenario, design, params, b, args.repeat) for b in backends}
        steps = int(round(scenario.duration / scenario.dt))
        row = f"{name:<24}{steps:>8}" + "".join(f"{times[b]:>13.4f}s" for b in backends)
        if len(backends) == 2:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)

    # agreement spot check at full tolerance
    if len(backends) == 2:
        scenario = random_scenario(seed=8080, duration=1.0, n_vertices=5, kinds="mixed")
        design, params = design_gains(scenario)
        a = run(scenario, design, params, backend="compiled")
        b = run(scenario, design, params, backend="python")
        err = max(
            float(np.max(np.abs(a.pos - b.pos))),
            float(np.max(np.abs(a.vel - b.vel))),
        )
        print(f"\nbackend agreement over 1 s: max |state diff| = {err:.3e}")


if __name__ == "__main__":
    main()
