"""Characteristic function, exact Shapley solver, and the permutation
Monte Carlo estimator.

The characteristic is kept in deviation form, v(S) = R_T(tau^S) − R_T(tau^0),
so v of the empty coalition is zero by construction and the attribution
values sum to the deviation of the recorded event from the baseline replay.
Raw-risk views add the baseline back.

Budget accounting: ``Game.eval_count`` counts characteristic evaluations
before caching. Building a ReplayGame performs (and counts) the one
baseline replay, so after a fresh game runs through mc_shapley the counter
reads M*(N*T) + 1 and after leave-one-out it reads N*T + 1.

Determinism: permutation m depends only on (seed, m), never on the worker
split; per-sample marginal rows are assembled into one (M, NT) matrix and
reduced by position, so any worker count produces byte-identical output.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import rng
from ._jit import njit
from .core import (AttributionMatrix, CoalitionMask, DimensionMismatchError,
                   ExactSizeError, UndefinedMetricError)
from .scenarios import make_environment, params_dict

EXACT_SLOT_CAP = 22


class Game:
    """A coalition game over the N*T action-slot grid.

    Slot j maps to (agent j // T, step offset j % T): agent-major, the
    ravel order of the (N, T) mask grid.
    """

    n_agents: int
    horizon: int

    def __init__(self, n_agents: int, horizon: int):
        self.n_agents = n_agents
        self.horizon = horizon
        self.eval_count = 0
        self.replay_count = 0

    @property
    def n_slots(self) -> int:
        return self.n_agents * self.horizon

    def value(self, mask: CoalitionMask) -> float:
        raise NotImplementedError

    def full_value(self) -> float:
        return self.value(CoalitionMask.full(self.n_agents, self.horizon))


class ReplayGame(Game):
    """Characteristic function backed by counterfactual replays of one
    recorded trajectory, with a mask-keyed cache.

    Cache entries are immutable once written; both the empty and the full
    coalition are seeded at construction (the full value comes from the
    recorded series, which a full-preservation replay reproduces exactly).
    """

    def __init__(self, env, traj, cache_path: str = None):
        super().__init__(traj.n_agents, traj.horizon)
        self.env = env
        self.traj = traj
        self.pack = env.replay_pack(traj)
        self.cache_path = cache_path
        zeros = np.zeros((self.n_agents, self.horizon), dtype=np.uint8)
        self.baseline_risk = float(env.replay_risk(self.pack, zeros)[-1])
        self.eval_count = 1
        self.replay_count = 1
        self.total_deviation = float(traj.risk_series[-1]) - self.baseline_risk
        self._cache = {
            CoalitionMask.empty(self.n_agents, self.horizon).key(): 0.0,
            CoalitionMask.full(self.n_agents, self.horizon).key():
                self.total_deviation,
        }
        if cache_path and os.path.exists(cache_path):
            with open(cache_path, encoding="utf-8") as fh:
                stored = json.load(fh)
            for hexkey, val in stored.items():
                self._cache.setdefault(bytes.fromhex(hexkey), float(val))

    def value(self, mask: CoalitionMask) -> float:
        self.eval_count += 1
        key = mask.key()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        u8 = np.ascontiguousarray(mask.bits, dtype=np.uint8)
        raw = float(self.env.replay_risk(self.pack, u8)[-1])
        self.replay_count += 1
        val = raw - self.baseline_risk
        self._cache[key] = val
        return val

    def save_cache(self, path: str = None) -> None:
        path = path or self.cache_path
        if not path:
            raise ValueError("no cache path configured")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({k.hex(): v for k, v in self._cache.items()}, fh)

    def cache_size(self) -> int:
        return len(self._cache)


class SyntheticGame(Game):
    """Characteristic given directly as a function of the mask grid; used
    for closed-form games in tests and axiom checks."""

    def __init__(self, n_agents: int, horizon: int, fn):
        super().__init__(n_agents, horizon)
        # estimators telescope from zero, so the empty coalition must be 0
        if fn(np.zeros((n_agents, horizon), dtype=np.bool_)) != 0.0:
            raise ValueError("characteristic must map the empty mask to 0")
        self._fn = fn

    @classmethod
    def additive(cls, weights: np.ndarray) -> "SyntheticGame":
        w = np.asarray(weights, dtype=np.float64)
        return cls(w.shape[0], w.shape[1],
                   lambda bits: float((w * bits).sum()))

    def value(self, mask: CoalitionMask) -> float:
        self.eval_count += 1
        return float(self._fn(mask.bits))


def shapley_weights(n_slots: int) -> np.ndarray:
    """w[s] = 1 / (n * C(n-1, s)): the weight of a subset of size s in the
    marginal-contribution sum. Exact binomials, then one rounding each."""
    return np.array([1.0 / (n_slots * math.comb(n_slots - 1, s))
                     for s in range(n_slots)], dtype=np.float64)


def popcount_table(n_slots: int) -> np.ndarray:
    size = 1 << n_slots
    pc = np.zeros(size, dtype=np.uint8)
    for m in range(1, size):
        pc[m] = pc[m >> 1] + (m & 1)
    return pc


@njit(cache=True)
def _combine_exact(vtab, weights, pc, n_slots):  # pragma: no cover - jitted
    # Kahan-compensated: plain accumulation over 2^(n-1) terms can drift
    # past the 1e-9 efficiency tolerance near the slot cap.
    phi = np.zeros(n_slots)
    comp = np.zeros(n_slots)
    size = vtab.shape[0]
    # size - 1: the full mask leaves no slot to add, and weights[] has no
    # entry for subsets of size n_slots
    for m in range(size - 1):
        vm = vtab[m]
        wm = weights[pc[m]]
        for j in range(n_slots):
            bit = 1 << j
            if m & bit:
                continue
            term = wm * (vtab[m | bit] - vm)
            y = term - comp[j]
            t = phi[j] + y
            comp[j] = (t - phi[j]) - y
            phi[j] = t
    return phi


def _mask_from_int(m: int, n_agents: int, horizon: int) -> CoalitionMask:
    bits = np.zeros((n_agents, horizon), dtype=np.bool_)
    flat = bits.reshape(-1)
    for j in range(n_agents * horizon):
        if (m >> j) & 1:
            flat[j] = True
    return CoalitionMask(bits)


def _vtable_from_game(game: Game) -> np.ndarray:
    size = 1 << game.n_slots
    vtab = np.empty(size, dtype=np.float64)
    for m in range(size):
        vtab[m] = game.value(_mask_from_int(m, game.n_agents, game.horizon))
    return vtab


def exact_shapley(game: Game, cap: int = EXACT_SLOT_CAP) -> AttributionMatrix:
    """Exact Shapley values by full subset enumeration, O(2^(N*T)).

    Refuses grids above ``cap`` slots; raise the cap explicitly to go
    bigger. ReplayGame instances take a vectorized path that evaluates the
    whole subset lattice in one kernel sweep.
    """
    ns = game.n_slots
    if ns > cap:
        raise ExactSizeError(
            f"exact solver needs 2^{ns} replays for {game.n_agents}x"
            f"{game.horizon} slots; over the cap of {cap}. Pass cap={ns} "
            f"to force it, or use the Monte Carlo estimator.")
    if isinstance(game, ReplayGame) and hasattr(game.env, "vtable_raw"):
        raw = game.env.vtable_raw(game.pack)
        vtab = raw - raw[0]
        game.eval_count += raw.shape[0]
    else:
        vtab = _vtable_from_game(game)
    weights = shapley_weights(ns)
    pc = popcount_table(ns)
    phi = _combine_exact(vtab, weights, pc, ns)
    total = float(vtab[-1] - vtab[0])
    params = {"cap": cap}
    if isinstance(game, ReplayGame):
        params["baseline_risk"] = game.baseline_risk
    return AttributionMatrix(
        values=phi.reshape(game.n_agents, game.horizon),
        estimator="exact",
        total_risk=total,
        estimator_params=params,
    )


def _run_chains(game: Game, seed: int, lo: int, hi: int) -> np.ndarray:
    """Permutation chains for sample indices [lo, hi): one telescoping pass
    per permutation, marginals keyed by slot."""
    ns = game.n_slots
    out = np.empty((hi - lo, ns), dtype=np.float64)
    for m in range(lo, hi):
        perm = rng.permutation(ns, seed, m)
        bits = np.zeros((game.n_agents, game.horizon), dtype=np.bool_)
        flat = bits.reshape(-1)
        v_prev = 0.0
        for k in range(ns):
            j = int(perm[k])
            flat[j] = True
            v_cur = game.value(CoalitionMask(bits.copy()))
            out[m - lo, j] = v_cur - v_prev
            v_prev = v_cur
    return out


def _mc_worker(args):
    (scenario, params, pack, baseline_risk, n_agents, horizon,
     seed, lo, hi) = args
    env = make_environment(scenario, params)
    game = _WorkerGame(env, pack, baseline_risk, n_agents, horizon)
    rows = _run_chains(game, seed, lo, hi)
    return rows, game.eval_count, game.replay_count


class _WorkerGame(Game):
    """Replay evaluator rebuilt inside a worker process: same pack, same
    baseline, private cache. No construction-time replay (the parent
    already counted it)."""

    def __init__(self, env, pack, baseline_risk, n_agents, horizon):
        super().__init__(n_agents, horizon)
        self.env = env
        self.pack = pack
        self.baseline_risk = baseline_risk
        self._cache = {CoalitionMask.empty(n_agents, horizon).key(): 0.0}

    def value(self, mask: CoalitionMask) -> float:
        self.eval_count += 1
        key = mask.key()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        u8 = np.ascontiguousarray(mask.bits, dtype=np.uint8)
        raw = float(self.env.replay_risk(self.pack, u8)[-1])
        self.replay_count += 1
        val = raw - self.baseline_risk
        self._cache[key] = val
        return val


def mc_shapley(game: Game, n_samples: int, seed: int,
               workers: int = 1) -> AttributionMatrix:
    """Monte Carlo Shapley: average marginal contributions over M uniform
    slot permutations.

    Each permutation walks the empty-to-full chain once; marginals
    telescope, so every sample row sums to v of the full coalition and the
    estimate inherits efficiency up to floating point. Output is invariant
    to ``workers``: permutations are keyed (seed, sample index) and the
    reduction runs over the assembled sample matrix in index order.
    """
    if n_samples < 1:
        raise ValueError("need at least one permutation sample")
    ns = game.n_slots
    marg = np.empty((n_samples, ns), dtype=np.float64)
    if workers <= 1 or n_samples == 1:
        marg[:] = _run_chains(game, seed, 0, n_samples)
    else:
        if not isinstance(game, ReplayGame):
            raise ValueError(
                "parallel sampling needs a ReplayGame (workers rebuild the "
                "evaluator from its replay pack)")
        workers = min(workers, n_samples)
        bounds = np.linspace(0, n_samples, workers + 1).astype(np.int64)
        jobs = [(game.env.name, params_dict(game.env), game.pack,
                 game.baseline_risk, game.n_agents, game.horizon,
                 seed, int(bounds[w]), int(bounds[w + 1]))
                for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for w, (rows, evals, replays) in enumerate(
                    pool.map(_mc_worker, jobs)):
                marg[bounds[w]:bounds[w + 1]] = rows
                game.eval_count += evals
                game.replay_count += replays
    phi = marg.mean(axis=0)
    params = {"M": n_samples, "seed": seed}
    if isinstance(game, ReplayGame):
        params["baseline_risk"] = game.baseline_risk
        total = game.total_deviation
    else:
        total = game.full_value()
        game.eval_count -= 1  # bookkeeping peek, not part of the budget
    return AttributionMatrix(
        values=phi.reshape(game.n_agents, game.horizon),
        estimator="monte_carlo",
        total_risk=float(total),
        estimator_params=params,
    )


def cosine_similarity(a, b) -> float:
    """Cosine of the two vectorized grids; undefined for a zero vector."""
    va = (a.values if isinstance(a, AttributionMatrix) else
          np.asarray(a, dtype=np.float64)).reshape(-1)
    vb = (b.values if isinstance(b, AttributionMatrix) else
          np.asarray(b, dtype=np.float64)).reshape(-1)
    if va.shape != vb.shape:
        raise DimensionMismatchError(
            f"grids {va.shape} vs {vb.shape} cannot be compared")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise UndefinedMetricError(
            "cosine similarity undefined for a zero attribution grid")
    return float(np.dot(va, vb) / (na * nb))
