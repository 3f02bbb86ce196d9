"""The interpreted fallback path must agree with the compiled kernels."""

import json
import os
import subprocess
import sys

import pytest

SCRIPT = r"""
import json
import sys

from eventshap import (ReplayGame, exact_shapley, make_environment,
                       mc_shapley, simulate_horizon)
from eventshap._jit import JIT_ENABLED

out = {"jit": JIT_ENABLED, "risk": {}, "phi": {}, "mc": {}}
for scenario in ("econ", "market", "social"):
    env = make_environment(scenario, {"n_agents": 3})
    traj = simulate_horizon(env, seed=4, horizon=4)
    out["risk"][scenario] = [float(x) for x in traj.risk_series]
    game = ReplayGame(env, traj)
    out["phi"][scenario] = exact_shapley(game).values.reshape(-1).tolist()
    out["mc"][scenario] = mc_shapley(
        game, 40, seed=1).values.reshape(-1).tolist()
print(json.dumps(out))
"""


def run_case(disable_jit):
    env = dict(os.environ)
    env["EVENTSHAP_DISABLE_JIT"] = "1" if disable_jit else "0"
    proc = subprocess.run([sys.executable, "-c", SCRIPT], env=env,
                          capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


def test_fallback_matches_compiled_kernels():
    jit = run_case(disable_jit=False)
    plain = run_case(disable_jit=True)
    assert jit["jit"] is True
    assert plain["jit"] is False
    for scenario in ("econ", "market", "social"):
        for field in ("risk", "phi", "mc"):
            a = jit[field][scenario]
            b = plain[field][scenario]
            assert len(a) == len(b)
            for x, y in zip(a, b):
                # both paths run the same source; transcendental calls may
                # differ by about an ulp between numba's libm and the
                # system's
                assert x == pytest.approx(y, rel=1e-12, abs=1e-18), \
                    (scenario, field)
