"""Financial-market scenario: ten tradable indices, buy/sell/hold actions,
order-flow price impact, composite-index EWMA return-volatility risk.

Per index and step each agent submits one of hold, buy(qty, limit), or
sell (full liquidation). Net flow F moves the price multiplicatively,
P' = P * exp(eta * F / max(depth, 1)); trades then execute at the updated
price — all sells first, then buys agent-major in index order, each buy
clipped to remaining cash and skipped when the updated price exceeds its
limit. Risk is the shared EWMA chain over log returns of the equal-weighted
composite price.

Behavior taxonomy: class = traded index (buy or sell), holds carry no
behavior instance; an extended 20-class variant adds direction
(buys 0-9, sells 10-19).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .._jit import njit
from .. import rng

PURPOSE_PERSONA = 20
PURPOSE_TRADE_GATE = 21
PURPOSE_PICK_INDEX = 22
PURPOSE_QTY = 23

N_INDICES = 10
INDEX_NAMES = ("TLEI", "MEI", "CPEI", "IEEI", "REEI",
               "TSEI", "CGEI", "TTEI", "EREI", "FSEI")

HOLD, BUY, SELL = 0, 1, 2


@dataclass(frozen=True)
class MarketAction:
    """Per-index decisions: dirs[k] in {HOLD, BUY, SELL}; qty/limit are
    meaningful only where dirs[k] == BUY."""

    dirs: tuple
    qtys: tuple
    limits: tuple

    def traded_indices(self):
        return [k for k in range(N_INDICES) if self.dirs[k] != HOLD]


def hold_action() -> MarketAction:
    return MarketAction(dirs=(HOLD,) * N_INDICES,
                        qtys=(0.0,) * N_INDICES,
                        limits=(0.0,) * N_INDICES)


@dataclass
class MarketParams:
    n_agents: int = 10
    eta: float = 0.05
    depth: float = 100.0
    lam: float = 0.94
    initial_price: float = 100.0
    initial_cash: float = 1e4
    # p99 of per-step risk over 20 short-free 40-step runs (seeds 0..19)
    rho: float = 8.073965663876064e-06
    short_fraction: float = 0.5
    extended_taxonomy: bool = False
    # short-term personas: frequent momentum trades
    short_trade_prob: tuple = (0.6, 0.95)
    short_qty: tuple = (20.0, 80.0)
    # long-term personas: rare rebalancing
    long_period: tuple = (4, 9)
    long_qty: float = 20.0


@dataclass
class MarketState:
    prices: np.ndarray          # (10,)
    holdings: np.ndarray        # (N, 10)
    cash: np.ndarray            # (N,)
    last_returns: np.ndarray    # (10,) per-index log returns of last step
    comp_prev: float
    pi_prev: float
    e_prev: float
    h_prev: float
    step: int


@njit(cache=True)
def market_step(prices, holdings, cash, last_returns, dirs_t, qtys_t,
                limits_t, comp_prev, pi_prev, e_prev, h_prev, eta, depth,
                lam, t):
    """One joint-action transition. Mutates prices/holdings/cash/last_returns
    in place; returns (comp, pi, e, h) for step t (1-indexed)."""
    n = dirs_t.shape[0]
    n_idx = prices.shape[0]
    denom = depth if depth > 1.0 else 1.0
    for k in range(n_idx):
        flow = 0.0
        for i in range(n):
            d = dirs_t[i, k]
            if d == 1:
                flow += qtys_t[i, k]
            elif d == 2:
                flow -= holdings[i, k]
        new_price = prices[k] * np.exp(eta * flow / denom)
        last_returns[k] = np.log(new_price) - np.log(prices[k])
        prices[k] = new_price
    # execution at updated prices: sells first, then buys
    for i in range(n):
        for k in range(n_idx):
            if dirs_t[i, k] == 2:
                cash[i] += holdings[i, k] * prices[k]
                holdings[i, k] = 0.0
    for i in range(n):
        for k in range(n_idx):
            if dirs_t[i, k] == 1 and prices[k] <= limits_t[i, k]:
                qty = qtys_t[i, k]
                afford = cash[i] / prices[k]
                fill = qty if qty < afford else afford
                cash[i] -= fill * prices[k]
                holdings[i, k] += fill
    comp = 0.0
    for k in range(n_idx):
        comp += prices[k]
    comp = comp / n_idx
    pi = np.log(comp) - np.log(comp_prev)
    e = 0.0 if t == 1 else pi - pi_prev
    # square first: keeps this bit-identical to the reference recurrence
    h = lam * h_prev + (1.0 - lam) * (e_prev * e_prev)
    return comp, pi, e, h


@njit(cache=True)
def market_replay_into(dirs, qtys, limits, base_dirs, base_qtys, base_limits,
                       mask, price0, cash0, eta, depth, lam, risk_out,
                       record, comp_out, prices_out, cash_out):
    """Replay with masked action substitution; fills risk_out[T]."""
    n, horizon = mask.shape
    n_idx = dirs.shape[2]
    prices = np.full(n_idx, price0)
    holdings = np.zeros((n, n_idx))
    cash = np.full(n, cash0)
    last_returns = np.zeros(n_idx)
    eff_d = np.empty((n, n_idx), np.uint8)
    eff_q = np.empty((n, n_idx), np.float64)
    eff_l = np.empty((n, n_idx), np.float64)
    comp_prev = price0
    pi_prev = 0.0
    e_prev = 0.0
    h_prev = 0.0
    for tt in range(horizon):
        for i in range(n):
            if mask[i, tt] == 1:
                for k in range(n_idx):
                    eff_d[i, k] = dirs[i, tt, k]
                    eff_q[i, k] = qtys[i, tt, k]
                    eff_l[i, k] = limits[i, tt, k]
            else:
                for k in range(n_idx):
                    eff_d[i, k] = base_dirs[i, tt, k]
                    eff_q[i, k] = base_qtys[i, tt, k]
                    eff_l[i, k] = base_limits[i, tt, k]
        comp, pi, e, h = market_step(prices, holdings, cash, last_returns,
                                     eff_d, eff_q, eff_l, comp_prev, pi_prev,
                                     e_prev, h_prev, eta, depth, lam, tt + 1)
        comp_prev, pi_prev, e_prev, h_prev = comp, pi, e, h
        risk_out[tt] = h
        if record == 1:
            comp_out[tt] = comp
            for k in range(n_idx):
                prices_out[tt, k] = prices[k]
            for i in range(n):
                cash_out[tt, i] = cash[i]


@njit(cache=True)
def market_vtable_raw(dirs, qtys, limits, base_dirs, base_qtys, base_limits,
                      price0, cash0, eta, depth, lam, n, horizon):
    """Final raw risk per coalition mask integer; slot j = (j // T, j % T)."""
    n_slots = n * horizon
    size = 1 << n_slots
    out = np.empty(size)
    mask = np.empty((n, horizon), np.uint8)
    risk = np.empty(horizon)
    dummy_c = np.empty(1)
    dummy_p = np.empty((1, 1))
    dummy_cash = np.empty((1, 1))
    for m in range(size):
        for j in range(n_slots):
            mask[j // horizon, j % horizon] = (m >> j) & 1
        market_replay_into(dirs, qtys, limits, base_dirs, base_qtys,
                           base_limits, mask, price0, cash0, eta, depth, lam,
                           risk, 0, dummy_c, dummy_p, dummy_cash)
        out[m] = risk[horizon - 1]
    return out


def sample_persona(params: MarketParams, seed: int, agent: int):
    """(is_short, trade_prob, qty_lo, qty_hi, period, phase)."""
    is_short = agent < round(params.short_fraction * params.n_agents)
    if is_short:
        tp = rng.uniform(*params.short_trade_prob, seed, 0, agent,
                         PURPOSE_PERSONA, 0)
        return True, tp, params.short_qty[0], params.short_qty[1], 0, 0
    lo, hi = params.long_period
    period = lo + int(rng.unit(seed, 0, agent, PURPOSE_PERSONA, 1)
                      * (hi - lo + 1))
    phase = int(rng.unit(seed, 0, agent, PURPOSE_PERSONA, 2) * period)
    return False, 0.0, 0.0, 0.0, period, phase


class MarketEnvironment:
    name = "market"

    def __init__(self, params: Optional[MarketParams] = None):
        self.params = params or MarketParams()

    @property
    def n_agents(self) -> int:
        return self.params.n_agents

    @property
    def behavior_count(self) -> int:
        return 2 * N_INDICES if self.params.extended_taxonomy else N_INDICES

    # ---- simulation contract ----

    def reset(self, seed: int) -> MarketState:
        p = self.params
        n = p.n_agents
        return MarketState(
            prices=np.full(N_INDICES, p.initial_price, dtype=np.float64),
            holdings=np.zeros((n, N_INDICES), dtype=np.float64),
            cash=np.full(n, p.initial_cash, dtype=np.float64),
            last_returns=np.zeros(N_INDICES, dtype=np.float64),
            comp_prev=p.initial_price,
            pi_prev=0.0,
            e_prev=0.0,
            h_prev=0.0,
            step=0,
        )

    def policy(self, agent: int, state: MarketState, step: int,
               seed: int) -> MarketAction:
        p = self.params
        is_short, trade_prob, qlo, qhi, period, phase = sample_persona(
            p, seed, agent)
        dirs = [HOLD] * N_INDICES
        qtys = [0.0] * N_INDICES
        limits = [0.0] * N_INDICES
        if is_short:
            if rng.unit(seed, step, agent, PURPOSE_TRADE_GATE) < trade_prob:
                k = int(rng.unit(seed, step, agent, PURPOSE_PICK_INDEX)
                        * N_INDICES)
                momentum = float(state.last_returns[k])
                if momentum >= 0.0 or state.holdings[agent, k] <= 0.0:
                    dirs[k] = BUY
                    qtys[k] = qlo + (qhi - qlo) * rng.unit(
                        seed, step, agent, PURPOSE_QTY)
                    limits[k] = float(state.prices[k]) * 1.5
                else:
                    dirs[k] = SELL
        else:
            if period > 0 and (step + phase) % period == 0:
                k = int(np.argmin(state.holdings[agent]))
                dirs[k] = BUY
                qtys[k] = p.long_qty
                limits[k] = float(state.prices[k]) * 1.5
        return MarketAction(dirs=tuple(dirs), qtys=tuple(qtys),
                            limits=tuple(limits))

    def step_state(self, state: MarketState, payloads, step: int) -> float:
        p = self.params
        n = p.n_agents
        dirs_t = np.empty((n, N_INDICES), dtype=np.uint8)
        qtys_t = np.empty((n, N_INDICES), dtype=np.float64)
        limits_t = np.empty((n, N_INDICES), dtype=np.float64)
        for i, a in enumerate(payloads):
            dirs_t[i] = a.dirs
            qtys_t[i] = a.qtys
            limits_t[i] = a.limits
        comp, pi, e, h = market_step(state.prices, state.holdings, state.cash,
                                     state.last_returns, dirs_t, qtys_t,
                                     limits_t, state.comp_prev, state.pi_prev,
                                     state.e_prev, state.h_prev, p.eta,
                                     p.depth, p.lam, step)
        state.comp_prev, state.pi_prev = comp, pi
        state.e_prev, state.h_prev = e, h
        state.step = step
        return float(h)

    def snapshot(self, state: MarketState) -> dict:
        return {
            "prices": [float(x) for x in state.prices],
            "composite": float(state.comp_prev),
            "return": float(state.pi_prev),
            "ewma_h": float(state.h_prev),
            "cash": [float(x) for x in state.cash],
            "holdings": [[float(x) for x in row] for row in state.holdings],
        }

    def observe(self, agent: int, state: MarketState, step: int) -> dict:
        return {
            "prices": [float(x) for x in state.prices],
            "last_returns": [float(x) for x in state.last_returns],
            "cash": float(state.cash[agent]),
            "holdings": [float(x) for x in state.holdings[agent]],
        }

    # ---- actions ----

    def baseline_action(self, agent: int, step: int) -> MarketAction:
        return hold_action()

    def classify_behavior(self, payload: MarketAction):
        traded = payload.traded_indices()
        if not traded:
            return []
        w = 1.0 / len(traded)
        if self.params.extended_taxonomy:
            return [(k + (N_INDICES if payload.dirs[k] == SELL else 0), w)
                    for k in traded]
        return [(k, w) for k in traded]

    def primary_class(self, payload: MarketAction) -> int:
        classes = self.classify_behavior(payload)
        return classes[0][0] if classes else -1

    def summarize_action(self, payload: MarketAction) -> str:
        parts = []
        for k in payload.traded_indices():
            if payload.dirs[k] == BUY:
                parts.append(f"buy {INDEX_NAMES[k]} x{payload.qtys[k]:.1f}"
                             f"@<={payload.limits[k]:.2f}")
            else:
                parts.append(f"sell {INDEX_NAMES[k]}")
        return "; ".join(parts) if parts else "hold"

    def payload_to_json(self, payload: MarketAction) -> dict:
        return {"dirs": list(payload.dirs), "qtys": list(payload.qtys),
                "limits": list(payload.limits)}

    def payload_from_json(self, obj: dict) -> MarketAction:
        return MarketAction(dirs=tuple(int(d) for d in obj["dirs"]),
                            qtys=tuple(float(x) for x in obj["qtys"]),
                            limits=tuple(float(x) for x in obj["limits"]))

    def payload_from_wire(self, obj: dict) -> MarketAction:
        if not isinstance(obj, dict) or "dirs" not in obj:
            raise ValueError("market action payload needs dirs/qtys/limits")
        dirs = tuple(int(d) for d in obj["dirs"])
        qtys = tuple(float(x) for x in obj.get("qtys", [0.0] * N_INDICES))
        limits = tuple(float(x) for x in obj.get("limits", [0.0] * N_INDICES))
        if len(dirs) != N_INDICES or len(qtys) != N_INDICES \
                or len(limits) != N_INDICES:
            raise ValueError(f"market action needs {N_INDICES} per-index entries")
        for k in range(N_INDICES):
            if dirs[k] not in (HOLD, BUY, SELL):
                raise ValueError(f"bad direction {dirs[k]} at index {k}")
            if dirs[k] == BUY and (qtys[k] <= 0.0 or limits[k] <= 0.0):
                raise ValueError(f"buy at index {k} needs positive qty and limit")
        return MarketAction(dirs=dirs, qtys=qtys, limits=limits)

    # ---- replay bridge ----

    def encode_actions(self, grid) -> tuple:
        n = len(grid)
        horizon = len(grid[0])
        dirs = np.empty((n, horizon, N_INDICES), dtype=np.uint8)
        qtys = np.empty((n, horizon, N_INDICES), dtype=np.float64)
        limits = np.empty((n, horizon, N_INDICES), dtype=np.float64)
        for i in range(n):
            for t in range(horizon):
                a = grid[i][t]
                dirs[i, t] = a.dirs
                qtys[i, t] = a.qtys
                limits[i, t] = a.limits
        return dirs, qtys, limits

    def baseline_arrays(self, n: int, horizon: int) -> tuple:
        dirs = np.zeros((n, horizon, N_INDICES), dtype=np.uint8)
        qtys = np.zeros((n, horizon, N_INDICES), dtype=np.float64)
        limits = np.zeros((n, horizon, N_INDICES), dtype=np.float64)
        return dirs, qtys, limits

    def replay_pack(self, traj) -> tuple:
        dirs, qtys, limits = self.encode_actions(
            [[rec.payload for rec in row] for row in traj.actions])
        bd, bq, bl = self.baseline_arrays(traj.n_agents, traj.horizon)
        return (dirs, qtys, limits, bd, bq, bl)

    def replay_risk(self, pack, mask_u8: np.ndarray) -> np.ndarray:
        dirs, qtys, limits, bd, bq, bl = pack
        p = self.params
        horizon = dirs.shape[1]
        risk = np.empty(horizon)
        dummy_c = np.empty(1)
        dummy_p = np.empty((1, 1))
        dummy_cash = np.empty((1, 1))
        market_replay_into(dirs, qtys, limits, bd, bq, bl, mask_u8,
                           p.initial_price, p.initial_cash, p.eta, p.depth,
                           p.lam, risk, 0, dummy_c, dummy_p, dummy_cash)
        return risk

    def replay_full(self, pack, mask_u8: np.ndarray):
        dirs, qtys, limits, bd, bq, bl = pack
        p = self.params
        n, horizon = mask_u8.shape
        risk = np.empty(horizon)
        comp_out = np.empty(horizon)
        prices_out = np.empty((horizon, N_INDICES))
        cash_out = np.empty((horizon, n))
        market_replay_into(dirs, qtys, limits, bd, bq, bl, mask_u8,
                           p.initial_price, p.initial_cash, p.eta, p.depth,
                           p.lam, risk, 1, comp_out, prices_out, cash_out)
        states = []
        for tt in range(horizon):
            states.append({
                "prices": [float(x) for x in prices_out[tt]],
                "composite": float(comp_out[tt]),
                "ewma_h": float(risk[tt]),
                "cash": [float(x) for x in cash_out[tt]],
            })
        return risk, states

    def vtable_raw(self, pack) -> np.ndarray:
        dirs, qtys, limits, bd, bq, bl = pack
        p = self.params
        n, horizon = dirs.shape[0], dirs.shape[1]
        return market_vtable_raw(dirs, qtys, limits, bd, bq, bl,
                                 p.initial_price, p.initial_cash, p.eta,
                                 p.depth, p.lam, n, horizon)
