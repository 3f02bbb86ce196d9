"""Macroeconomic scenario: labor/consumption agents, multiplicative
excess-demand price dynamics, EWMA inflation-volatility risk.

Actions are (works, consumption_rate). The behavior taxonomy has 8 classes:
work choice x consumption quartile, classes 0-3 = not-work with quartiles
ascending, 4-7 = work with quartiles ascending.

Dynamics per step: workers earn the wage, every agent spends
rate * wealth, demand D = total spending / P, supply Q = workers *
productivity, then P' = P * (1 + kappa * (D - Q) / max(Q, eps)) and
pi = ln P' - ln P. Risk is the RiskMetrics EWMA of naive-forecast errors:
e_1 = 0, e_t = pi_t - pi_{t-1}, h_t = lam * h_{t-1} + (1 - lam) * e_{t-1}^2.

With the defaults (P = W = productivity = 1, initial wealth 0.25) the
baseline action (work, rate 0.8) is an exact equilibrium: wealth cycles
0.25 -> 1.25 -> 0.25, D = Q, and the all-baseline trajectory has risk 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .._jit import njit
from .. import rng

PURPOSE_PERSONA = 10
PURPOSE_WORK = 11
PURPOSE_CONSUME = 12

BASELINE_WORKS = True
BASELINE_RATE = 0.8


@dataclass(frozen=True)
class EconAction:
    works: bool
    rate: float  # consumption rate in [0, 1]


@dataclass
class EconParams:
    n_agents: int = 10
    kappa: float = 0.2
    lam: float = 0.94
    wage: float = 1.0
    productivity: float = 1.0
    initial_price: float = 1.0
    initial_wealth: float = 0.25
    epsilon: float = 1e-9
    # p99 of per-step risk over 20 shock-free 40-step runs (seeds 0..19)
    rho: float = 0.0004061243985946575
    shock_fraction: float = 0.3
    # persona draws: (lo, hi) uniform ranges
    normal_work_prob: tuple = (0.85, 1.0)
    normal_rate_mean: tuple = (0.7, 0.9)
    normal_rate_vol: tuple = (0.02, 0.08)
    shock_work_prob: tuple = (0.3, 0.7)
    shock_rate_mean: tuple = (0.5, 1.0)
    shock_rate_vol: tuple = (0.25, 0.45)


@dataclass
class EconState:
    wealth: np.ndarray
    income: np.ndarray
    price: float
    pi_prev: float
    e_prev: float
    h_prev: float
    step: int


@njit(cache=True)
def econ_step(wealth, income, works_t, rates_t, price, pi_prev, e_prev,
              h_prev, wage, productivity, kappa, eps, lam, t):
    """One joint-action transition. Mutates wealth/income in place; returns
    (new_price, pi, e, h) for step t (1-indexed)."""
    n = wealth.shape[0]
    spend_total = 0.0
    workers = 0.0
    for i in range(n):
        if works_t[i] == 1:
            wealth[i] += wage
            income[i] = wage
            workers += 1.0
        else:
            income[i] = 0.0
        spend = rates_t[i] * wealth[i]
        wealth[i] -= spend
        spend_total += spend
    demand = spend_total / price
    supply = workers * productivity
    denom = supply if supply > eps else eps
    new_price = price * (1.0 + kappa * (demand - supply) / denom)
    pi = np.log(new_price) - np.log(price)
    e = 0.0 if t == 1 else pi - pi_prev
    # square first: keeps this bit-identical to the reference recurrence
    h = lam * h_prev + (1.0 - lam) * (e_prev * e_prev)
    return new_price, pi, e, h


@njit(cache=True)
def econ_replay_into(works, rates, base_works, base_rates, mask, wealth0,
                     price0, wage, productivity, kappa, eps, lam,
                     risk_out, record, price_out, pi_out, wealth_out):
    """Replay the full horizon with masked action substitution.

    mask[i, t] == 1 keeps the recorded action, 0 substitutes the baseline.
    Fills risk_out[T]; when record == 1 also fills the state outputs.
    """
    n, horizon = works.shape
    wealth = wealth0.copy()
    income = np.zeros(n)
    eff_w = np.empty(n, np.uint8)
    eff_r = np.empty(n, np.float64)
    price = price0
    pi_prev = 0.0
    e_prev = 0.0
    h_prev = 0.0
    for tt in range(horizon):
        for i in range(n):
            if mask[i, tt] == 1:
                eff_w[i] = works[i, tt]
                eff_r[i] = rates[i, tt]
            else:
                eff_w[i] = base_works[i, tt]
                eff_r[i] = base_rates[i, tt]
        price, pi, e, h = econ_step(wealth, income, eff_w, eff_r, price,
                                    pi_prev, e_prev, h_prev, wage,
                                    productivity, kappa, eps, lam, tt + 1)
        pi_prev, e_prev, h_prev = pi, e, h
        risk_out[tt] = h
        if record == 1:
            price_out[tt] = price
            pi_out[tt] = pi
            for i in range(n):
                wealth_out[tt, i] = wealth[i]


@njit(cache=True)
def econ_vtable_raw(works, rates, base_works, base_rates, wealth0, price0,
                    wage, productivity, kappa, eps, lam):
    """Final raw risk for every coalition, indexed by mask integer.

    Slot j maps to (agent j // T, step j % T); bit j set keeps the action.
    """
    n, horizon = works.shape
    n_slots = n * horizon
    size = 1 << n_slots
    out = np.empty(size)
    mask = np.empty((n, horizon), np.uint8)
    risk = np.empty(horizon)
    dummy_p = np.empty(1)
    dummy_pi = np.empty(1)
    dummy_w = np.empty((1, 1))
    for m in range(size):
        for j in range(n_slots):
            mask[j // horizon, j % horizon] = (m >> j) & 1
        econ_replay_into(works, rates, base_works, base_rates, mask, wealth0,
                         price0, wage, productivity, kappa, eps, lam,
                         risk, 0, dummy_p, dummy_pi, dummy_w)
        out[m] = risk[horizon - 1]
    return out


def sample_persona(params: EconParams, seed: int, agent: int):
    """Deterministic persona draw: (work_prob, rate_mean, rate_vol)."""
    shock = agent < round(params.shock_fraction * params.n_agents)
    wp = params.shock_work_prob if shock else params.normal_work_prob
    rm = params.shock_rate_mean if shock else params.normal_rate_mean
    rv = params.shock_rate_vol if shock else params.normal_rate_vol
    return (
        rng.uniform(wp[0], wp[1], seed, 0, agent, PURPOSE_PERSONA, 0),
        rng.uniform(rm[0], rm[1], seed, 0, agent, PURPOSE_PERSONA, 1),
        rng.uniform(rv[0], rv[1], seed, 0, agent, PURPOSE_PERSONA, 2),
    )


def classify(action: EconAction) -> int:
    """8-class taxonomy: 4 * works + consumption quartile (rate 1.0 maps to
    the top quartile)."""
    quartile = min(int(action.rate * 4.0), 3)
    return (4 if action.works else 0) + quartile


class EconEnvironment:
    name = "econ"
    behavior_count = 8

    def __init__(self, params: Optional[EconParams] = None):
        self.params = params or EconParams()

    @property
    def n_agents(self) -> int:
        return self.params.n_agents

    # ---- simulation contract ----

    def reset(self, seed: int) -> EconState:
        p = self.params
        n = p.n_agents
        return EconState(
            wealth=np.full(n, p.initial_wealth, dtype=np.float64),
            income=np.zeros(n, dtype=np.float64),
            price=p.initial_price,
            pi_prev=0.0,
            e_prev=0.0,
            h_prev=0.0,
            step=0,
        )

    def policy(self, agent: int, state: EconState, step: int, seed: int) -> EconAction:
        work_prob, rate_mean, rate_vol = sample_persona(self.params, seed, agent)
        works = rng.unit(seed, step, agent, PURPOSE_WORK) < work_prob
        rate = rate_mean + rate_vol * rng.normal(seed, step, agent, PURPOSE_CONSUME)
        return EconAction(works=bool(works), rate=min(1.0, max(0.0, rate)))

    def step_state(self, state: EconState, payloads, step: int) -> float:
        p = self.params
        n = p.n_agents
        works_t = np.fromiter((1 if a.works else 0 for a in payloads),
                              dtype=np.uint8, count=n)
        rates_t = np.fromiter((a.rate for a in payloads),
                              dtype=np.float64, count=n)
        price, pi, e, h = econ_step(state.wealth, state.income, works_t,
                                    rates_t, state.price, state.pi_prev,
                                    state.e_prev, state.h_prev, p.wage,
                                    p.productivity, p.kappa, p.epsilon,
                                    p.lam, step)
        state.price, state.pi_prev, state.e_prev, state.h_prev = price, pi, e, h
        state.step = step
        return float(h)

    def snapshot(self, state: EconState) -> dict:
        return {
            "price": float(state.price),
            "inflation": float(state.pi_prev),
            "ewma_h": float(state.h_prev),
            "wealth": [float(x) for x in state.wealth],
            "income": [float(x) for x in state.income],
        }

    def observe(self, agent: int, state: EconState, step: int) -> dict:
        return {
            "wealth": float(state.wealth[agent]),
            "wage": self.params.wage,
            "price": float(state.price),
            "inflation": float(state.pi_prev),
        }

    # ---- actions ----

    def baseline_action(self, agent: int, step: int) -> EconAction:
        return EconAction(works=BASELINE_WORKS, rate=BASELINE_RATE)

    def classify_behavior(self, payload: EconAction):
        return [(classify(payload), 1.0)]

    def primary_class(self, payload: EconAction) -> int:
        return classify(payload)

    def summarize_action(self, payload: EconAction) -> str:
        return f"{'work' if payload.works else 'idle'},consume={payload.rate:.3f}"

    def payload_to_json(self, payload: EconAction) -> dict:
        return {"works": payload.works, "rate": payload.rate}

    def payload_from_json(self, obj: dict) -> EconAction:
        return EconAction(works=bool(obj["works"]), rate=float(obj["rate"]))

    def payload_from_wire(self, obj: dict) -> EconAction:
        if not isinstance(obj, dict) or "works" not in obj or "rate" not in obj:
            raise ValueError("econ action payload needs works and rate")
        rate = float(obj["rate"])
        if not 0.0 <= rate <= 1.0:
            raise ValueError("consumption rate outside [0, 1]")
        return EconAction(works=bool(obj["works"]), rate=rate)

    # ---- replay bridge ----

    def encode_actions(self, grid) -> tuple:
        """N x T payload grid -> (works u8, rates f8) arrays."""
        n = len(grid)
        horizon = len(grid[0])
        works = np.empty((n, horizon), dtype=np.uint8)
        rates = np.empty((n, horizon), dtype=np.float64)
        for i in range(n):
            for t in range(horizon):
                a = grid[i][t]
                if not 0.0 <= a.rate <= 1.0:
                    raise ValueError(
                        f"spend rate {a.rate} at ({i},{t + 1}) outside "
                        f"[0, 1]")
                works[i, t] = 1 if a.works else 0
                rates[i, t] = a.rate
        return works, rates

    def baseline_arrays(self, n: int, horizon: int) -> tuple:
        works = np.full((n, horizon), 1 if BASELINE_WORKS else 0, dtype=np.uint8)
        rates = np.full((n, horizon), BASELINE_RATE, dtype=np.float64)
        return works, rates

    def replay_pack(self, traj) -> tuple:
        works, rates = self.encode_actions(
            [[rec.payload for rec in row] for row in traj.actions])
        bw, br = self.baseline_arrays(traj.n_agents, traj.horizon)
        p = self.params
        wealth0 = np.full(traj.n_agents, p.initial_wealth, dtype=np.float64)
        return (works, rates, bw, br, wealth0)

    def replay_risk(self, pack, mask_u8: np.ndarray) -> np.ndarray:
        works, rates, bw, br, wealth0 = pack
        p = self.params
        horizon = works.shape[1]
        risk = np.empty(horizon)
        dummy_p = np.empty(1)
        dummy_pi = np.empty(1)
        dummy_w = np.empty((1, 1))
        econ_replay_into(works, rates, bw, br, mask_u8, wealth0,
                         p.initial_price, p.wage, p.productivity, p.kappa,
                         p.epsilon, p.lam, risk, 0, dummy_p, dummy_pi, dummy_w)
        return risk

    def replay_full(self, pack, mask_u8: np.ndarray):
        """Risk series plus per-step state snapshots for the counterfactual."""
        works, rates, bw, br, wealth0 = pack
        p = self.params
        n, horizon = works.shape
        risk = np.empty(horizon)
        price_out = np.empty(horizon)
        pi_out = np.empty(horizon)
        wealth_out = np.empty((horizon, n))
        econ_replay_into(works, rates, bw, br, mask_u8, wealth0,
                         p.initial_price, p.wage, p.productivity, p.kappa,
                         p.epsilon, p.lam, risk, 1, price_out, pi_out, wealth_out)
        states = []
        for tt in range(horizon):
            states.append({
                "price": float(price_out[tt]),
                "inflation": float(pi_out[tt]),
                "ewma_h": float(risk[tt]),
                "wealth": [float(x) for x in wealth_out[tt]],
            })
        return risk, states

    def vtable_raw(self, pack) -> np.ndarray:
        works, rates, bw, br, wealth0 = pack
        p = self.params
        return econ_vtable_raw(works, rates, bw, br, wealth0, p.initial_price,
                               p.wage, p.productivity, p.kappa, p.epsilon, p.lam)
