"""Compare the two conic engines on representative subproblems.

Usage: python benchmarks/bench_solvers.py [--trials N]

Times the compiled engine (when installed) against the pure-Python one on the
conformance suite and on transmit/reflection subproblems taken from real
pipeline states at several sizes, and checks that their objectives agree.
"""

import argparse
import sys
import time

import numpy as np

sys.path.insert(0, "tests")  # reuse the conformance factories

from conic_suite import CONFORMANCE  # noqa: E402

from riswipt import ao  # noqa: E402
from riswipt.bf_stage import build_bf  # noqa: E402
from riswipt.channel import synth_channels  # noqa: E402
from riswipt.conic import solve  # noqa: E402
from riswipt.conic.clarabel_backend import AVAILABLE as HAS_CLARABEL  # noqa: E402
from riswipt.fp import stationary_aux  # noqa: E402
from riswipt.ris_stage import build_ris  # noqa: E402
from riswipt.scenario import default_scenario, split_budget  # noqa: E402

ENGINES = ("clarabel", "native") if HAS_CLARABEL else ("native",)


def pipeline_programs(n_elements, seed=0):
    """One transmit and one reflection program from a mid-run state."""
    import riswipt.bf_stage as bf_mod
    import riswipt.ris_stage as ris_mod
    from riswipt.conic import ConicProgram

    s = default_scenario().replace(n_elements=n_elements)
    cs = synth_channels(s, seed=seed)
    s, cs = ao.noise_normalized(s, cs)
    budget = split_budget(s)
    design, reflect = ao.initialize(s, cs, budget, np.random.default_rng(seed))

    grabbed = []
    original = solve

    def grabbing(prog, **kwargs):
        grabbed.append(prog)
        return original(prog, **kwargs)

    bf_mod.solve = grabbing
    ris_mod.solve = grabbing
    try:
        ao._ao_step(s, cs, budget, design, reflect, None)
    finally:
        bf_mod.solve = original
        ris_mod.solve = original
    return [p for p in grabbed if isinstance(p, ConicProgram)]


def bench(name, prog, trials):
    results = {}
    for engine in ENGINES:
        best = np.inf
        sol = None
        for _ in range(trials):
            tic = time.perf_counter()
            sol = solve(prog, tol=1e-7, engine=engine)
            best = min(best, time.perf_counter() - tic)
        results[engine] = (best, sol)
    line = f"{name:28s}"
    for engine in ENGINES:
        dt, sol = results[engine]
        line += f"  {engine}: {dt * 1e3:8.2f} ms [{sol.status}]"
    if len(ENGINES) == 2:
        a = results["clarabel"][1]
        b = results["native"][1]
        if a.status == b.status == "optimal":
            diff = abs(a.objective - b.objective) / max(1.0, abs(a.objective))
            line += f"  obj agree {diff:.1e}"
    print(line)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=3)
    args = parser.parse_args()
    print(f"engines: {', '.join(ENGINES)}")

    print("\nconformance suite:")
    for name in sorted(CONFORMANCE):
        factory, expected = CONFORMANCE[name]
        prog = factory()[0] if expected == "optimal" else factory()[0]
        bench(name, prog, args.trials)

    print("\npipeline subproblems:")
    for n_elements in (10, 20, 40, 80):
        progs = pipeline_programs(n_elements)
        for prog in progs:
            kind = "reflection" if "phi" in prog.blocks else "transmit"
            bench(f"{kind} L={n_elements} ({prog.n_vars}x{prog.n_rows})",
                  prog, args.trials)


if __name__ == "__main__":
    main()
