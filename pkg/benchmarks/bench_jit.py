#!/usr/bin/env python3
"""Time the compiled kernels against the interpreted fallback.

Runs the same workload in two fresh interpreters, once as shipped and once
with ``EVENTSHAP_DISABLE_JIT=1``, then prints wall times, speedups, and the
largest relative disagreement between the two paths' exact scores.  Each
worker warms its kernels on a throwaway round first, so the numbers include
neither import nor compile cost.

Usage:  python3 benchmarks/bench_jit.py [--samples M] [--repeat R]
"""

import argparse
import json
import os
import subprocess
import sys
import time

EXACT_SHAPE = (3, 4)    # 12 slots -> 4096 replays per exact solve
SAMPLE_SHAPE = (4, 5)   # the sampler workload runs on 20 slots
SCENARIOS = ("econ", "market", "social")


def workload(n_samples: int, repeat: int) -> dict:
    from eventshap import (ReplayGame, exact_shapley, mc_shapley,
                           simulate_horizon, make_environment)
    from eventshap._jit import JIT_ENABLED

    out = {"jit": JIT_ENABLED, "rows": {}, "phi": {}}
    for name in SCENARIOS:
        env = make_environment(name, {"n_agents": EXACT_SHAPE[0]})
        game = ReplayGame(env, simulate_horizon(env, 0, EXACT_SHAPE[1]))
        exact_shapley(game)  # warm: compile (or trace) every kernel once

        best_exact = float("inf")
        for _ in range(repeat):
            env = make_environment(name, {"n_agents": EXACT_SHAPE[0]})
            game = ReplayGame(env, simulate_horizon(env, 0, EXACT_SHAPE[1]))
            t0 = time.perf_counter()
            res = exact_shapley(game)
            best_exact = min(best_exact, time.perf_counter() - t0)
        out["phi"][name] = [float(v) for v in res.values.reshape(-1)]

        best_mc = float("inf")
        for _ in range(repeat):
            env = make_environment(name, {"n_agents": SAMPLE_SHAPE[0]})
            game = ReplayGame(env, simulate_horizon(env, 0, SAMPLE_SHAPE[1]))
            t0 = time.perf_counter()
            mc_shapley(game, n_samples, seed=1)
            best_mc = min(best_mc, time.perf_counter() - t0)
        out["rows"][name] = {"exact_s": best_exact, "mc_s": best_mc}
    return out


def run_worker(disable_jit: bool, args) -> dict:
    env = dict(os.environ)
    if disable_jit:
        env["EVENTSHAP_DISABLE_JIT"] = "1"
    else:
        env.pop("EVENTSHAP_DISABLE_JIT", None)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--samples", str(args.samples), "--repeat", str(args.repeat)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200,
                    help="permutations per sampler solve (default 200)")
    ap.add_argument("--repeat", type=int, default=3,
                    help="timed repetitions, best-of (default 3)")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        json.dump(workload(args.samples, args.repeat), sys.stdout)
        return 0

    fast = run_worker(disable_jit=False, args=args)
    slow = run_worker(disable_jit=True, args=args)
    if not fast["jit"] or slow["jit"]:
        print("error: workers did not land on opposite paths", file=sys.stderr)
        return 1

    n, t = EXACT_SHAPE
    ns, ts = SAMPLE_SHAPE
    print(f"exact solve on {n}x{t} slots ({2 ** (n * t)} replays); "
          f"sampler on {ns}x{ts} slots, M={args.samples} "
          f"(best of {args.repeat})\n")
    header = (f"{'scenario':<10} {'exact jit':>10} {'exact plain':>12} "
              f"{'speedup':>8} {'mc jit':>10} {'mc plain':>10} {'speedup':>8} "
              f"{'max rel diff':>13}")
    print(header)
    print("-" * len(header))
    for name in SCENARIOS:
        f, s = fast["rows"][name], slow["rows"][name]
        worst = 0.0
        for a, b in zip(fast["phi"][name], slow["phi"][name]):
            scale = max(abs(a), abs(b), 1e-300)
            worst = max(worst, abs(a - b) / scale)
        print(f"{name:<10} {f['exact_s']:>9.3f}s {s['exact_s']:>11.3f}s "
              f"{s['exact_s'] / f['exact_s']:>7.1f}x "
              f"{f['mc_s']:>9.3f}s {s['mc_s']:>9.3f}s "
              f"{s['mc_s'] / f['mc_s']:>7.1f}x {worst:>13.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
