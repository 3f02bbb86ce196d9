"""Social-network polarization scenario with fully specified belief dynamics.

Each agent i holds a belief b_i in [-1, 1]. Per step, in fixed order:

1. Posting: each agent decides whether to post; a post carries the author's
   belief value b_p at posting time (a snapshot, unaffected by later
   within-step updates).
2. Interactions: every agent views every post made this step (complete feed,
   no self-view). A viewer may react with like or dislike; the belief updates
   by magnitude delta * s_i * |b_p - b_i| toward b_p on like and away from it
   on dislike, where the sensitivity s_i = s_base * (1 - alpha * |b_i|)
   (floored at 0) is recomputed from the viewer's current belief before each
   update. Updates apply sequentially: viewers in agent-index order, posts in
   author-index order; each result is clamped to [-1, 1].
3. Feedback: each author's belief is reinforced by its post's reception,
   b := b * (1 + ((L - D) / V) * reinf) with V = N - 1 views, clamped;
   an agent with no views (did not post, or N = 1) is unchanged.
4. Preferences: posting and interaction propensities refresh as
   p_i = p_base + beta * |b_i| and q_i = q_base + gamma * |b_i|,
   clamped to [0, 1].

Risk is the population variance of beliefs after the step.

Behavior taxonomy (6 classes): 0-2 = not-post x {like, none, dislike},
3-5 = post x {like, none, dislike}. An action with several reactions splits
its attribution weight proportionally across matched classes by reaction
multiplicity; the baseline action is a no-op (no post, no reactions).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .._jit import njit
from .. import rng

PURPOSE_INIT_BELIEF = 30
PURPOSE_POST = 31
PURPOSE_REACT_GATE = 32

REACT_NONE, REACT_LIKE, REACT_DISLIKE = 0, 1, 2


@dataclass(frozen=True)
class SocialAction:
    """posts flag plus reactions keyed by author index, values 'like' or
    'dislike'; absent authors mean no reaction."""

    posts: bool
    reactions: tuple  # sorted tuple of (author, 'like'|'dislike')


NOOP_ACTION = SocialAction(posts=False, reactions=())


@dataclass
class SocialParams:
    n_agents: int = 20
    delta: float = 0.15
    s_base: float = 1.0
    alpha: float = 0.5
    reinf: float = 0.2
    p_base: float = 0.3
    q_base: float = 0.5
    beta: float = 0.4
    gamma: float = 0.3
    # p99 of per-step risk over 20 quiet 20-step runs (seeds 0..19);
    # short window on purpose: polarization is self-exciting, longer
    # quiet pools pick up saturated tails
    rho: float = 0.4529210183851347
    belief_range: tuple = (-0.3, 0.3)
    like_band: float = 0.4  # react like iff |b_p - b_i| <= band, else dislike
    init_beliefs: Optional[tuple] = None  # explicit override for fixtures


@dataclass
class SocialState:
    beliefs: np.ndarray
    step: int


def sensitivity(b: float, s_base: float, alpha: float) -> float:
    """s = s_base * (1 - alpha * |b|), floored at 0."""
    s = s_base * (1.0 - alpha * abs(b))
    return s if s > 0.0 else 0.0


def interaction_update(b_i: float, b_p: float, reaction: int, delta: float,
                       s_i: float) -> float:
    """Four-case belief move: like attracts toward b_p, dislike repels,
    equal beliefs never move. Clamped to [-1, 1]."""
    step = delta * s_i * abs(b_p - b_i)
    if reaction == REACT_LIKE:
        if b_p > b_i:
            b = b_i + step
        elif b_p < b_i:
            b = b_i - step
        else:
            b = b_i
    else:
        if b_p > b_i:
            b = b_i - step
        elif b_p < b_i:
            b = b_i + step
        else:
            b = b_i
    return max(-1.0, min(1.0, b))


def feedback_update(b: float, likes: int, dislikes: int, views: int,
                    reinf: float) -> float:
    """Author reinforcement from reception; unchanged when views == 0."""
    if views == 0:
        return b
    out = b * (1.0 + ((likes - dislikes) / views) * reinf)
    return max(-1.0, min(1.0, out))


def preference_update(b: float, p_base: float, q_base: float, beta: float,
                      gamma: float) -> tuple:
    """(p_i, q_i) affine in |b|, clamped to [0, 1]."""
    p = p_base + beta * abs(b)
    q = q_base + gamma * abs(b)
    return (max(0.0, min(1.0, p)), max(0.0, min(1.0, q)))


@njit(cache=True)
def social_step(beliefs, post_t, react_t, bp_buf, likes_buf, dislikes_buf,
                delta, s_base, alpha, reinf):
    """One joint-action transition, phases 1-3 (preferences are derived from
    beliefs on demand). Mutates beliefs in place; returns the step variance.

    post_t[j] == 1 means author j posts; react_t[viewer, author] in
    {0 none, 1 like, 2 dislike} applies only where post_t[author] == 1.
    """
    n = beliefs.shape[0]
    for j in range(n):
        if post_t[j] == 1:
            bp_buf[j] = beliefs[j]
        likes_buf[j] = 0
        dislikes_buf[j] = 0
    for viewer in range(n):
        for author in range(n):
            if author == viewer or post_t[author] == 0:
                continue
            r = react_t[viewer, author]
            if r == 0:
                continue
            b_i = beliefs[viewer]
            b_p = bp_buf[author]
            s = s_base * (1.0 - alpha * abs(b_i))
            if s < 0.0:
                s = 0.0
            move = delta * s * abs(b_p - b_i)
            if r == 1:
                if b_p > b_i:
                    nb = b_i + move
                elif b_p < b_i:
                    nb = b_i - move
                else:
                    nb = b_i
                likes_buf[author] += 1
            else:
                if b_p > b_i:
                    nb = b_i - move
                elif b_p < b_i:
                    nb = b_i + move
                else:
                    nb = b_i
                dislikes_buf[author] += 1
            if nb > 1.0:
                nb = 1.0
            elif nb < -1.0:
                nb = -1.0
            beliefs[viewer] = nb
    views = n - 1
    if views > 0:
        for author in range(n):
            if post_t[author] == 1:
                fac = 1.0 + ((likes_buf[author] - dislikes_buf[author])
                             / views) * reinf
                nb = beliefs[author] * fac
                if nb > 1.0:
                    nb = 1.0
                elif nb < -1.0:
                    nb = -1.0
                beliefs[author] = nb
    mean = 0.0
    for i in range(n):
        mean += beliefs[i]
    mean = mean / n
    var = 0.0
    for i in range(n):
        d = beliefs[i] - mean
        var += d * d
    return var / n


@njit(cache=True)
def social_replay_into(posts, reacts, mask, beliefs0, delta, s_base, alpha,
                       reinf, risk_out, record, beliefs_out):
    """Replay with masked action substitution (baseline = no-op).

    posts: (N, T) u8; reacts: (N, T, N) u8 indexed (viewer, step, author).
    A masked-out slot neither posts nor reacts; reactions of preserved
    viewers toward non-posting authors are inert by the post_t gate.
    """
    n, horizon = posts.shape
    beliefs = beliefs0.copy()
    post_t = np.empty(n, np.uint8)
    react_t = np.empty((n, n), np.uint8)
    bp_buf = np.empty(n)
    likes_buf = np.empty(n, np.int64)
    dislikes_buf = np.empty(n, np.int64)
    for tt in range(horizon):
        for i in range(n):
            if mask[i, tt] == 1:
                post_t[i] = posts[i, tt]
                for j in range(n):
                    react_t[i, j] = reacts[i, tt, j]
            else:
                post_t[i] = 0
                for j in range(n):
                    react_t[i, j] = 0
        var = social_step(beliefs, post_t, react_t, bp_buf, likes_buf,
                          dislikes_buf, delta, s_base, alpha, reinf)
        risk_out[tt] = var
        if record == 1:
            for i in range(n):
                beliefs_out[tt, i] = beliefs[i]


@njit(cache=True)
def social_vtable_raw(posts, reacts, beliefs0, delta, s_base, alpha, reinf):
    """Final raw risk per coalition mask integer; slot j = (j // T, j % T)."""
    n, horizon = posts.shape
    n_slots = n * horizon
    size = 1 << n_slots
    out = np.empty(size)
    mask = np.empty((n, horizon), np.uint8)
    risk = np.empty(horizon)
    dummy_b = np.empty((1, 1))
    for m in range(size):
        for j in range(n_slots):
            mask[j // horizon, j % horizon] = (m >> j) & 1
        social_replay_into(posts, reacts, mask, beliefs0, delta, s_base,
                           alpha, reinf, risk, 0, dummy_b)
        out[m] = risk[horizon - 1]
    return out


class SocialEnvironment:
    name = "social"
    behavior_count = 6

    def __init__(self, params: Optional[SocialParams] = None):
        self.params = params or SocialParams()

    @property
    def n_agents(self) -> int:
        return self.params.n_agents

    # ---- simulation contract ----

    def initial_beliefs(self, seed: int) -> np.ndarray:
        p = self.params
        if p.init_beliefs is not None:
            if len(p.init_beliefs) != p.n_agents:
                raise ValueError("init_beliefs length differs from n_agents")
            return np.asarray(p.init_beliefs, dtype=np.float64).copy()
        lo, hi = p.belief_range
        return np.fromiter(
            (rng.uniform(lo, hi, seed, 0, i, PURPOSE_INIT_BELIEF)
             for i in range(p.n_agents)),
            dtype=np.float64, count=p.n_agents)

    def reset(self, seed: int) -> SocialState:
        return SocialState(beliefs=self.initial_beliefs(seed), step=0)

    def _post_flags(self, state: SocialState, step: int, seed: int):
        """Post decisions for every agent this step; deterministic in
        (seed, step, beliefs), so any agent's policy can reconstruct the
        full post set when choosing its reactions."""
        p = self.params
        flags = []
        for j in range(p.n_agents):
            pj, _ = preference_update(float(state.beliefs[j]), p.p_base,
                                      p.q_base, p.beta, p.gamma)
            flags.append(rng.unit(seed, step, j, PURPOSE_POST) < pj)
        return flags

    def policy(self, agent: int, state: SocialState, step: int,
               seed: int) -> SocialAction:
        p = self.params
        flags = self._post_flags(state, step, seed)
        b_i = float(state.beliefs[agent])
        _, q_i = preference_update(b_i, p.p_base, p.q_base, p.beta, p.gamma)
        reactions = []
        for author in range(p.n_agents):
            if author == agent or not flags[author]:
                continue
            if rng.unit(seed, step, agent, PURPOSE_REACT_GATE,
                        lane=author) < q_i:
                b_p = float(state.beliefs[author])
                kind = "like" if abs(b_p - b_i) <= p.like_band else "dislike"
                reactions.append((author, kind))
        return SocialAction(posts=flags[agent], reactions=tuple(reactions))

    def step_state(self, state: SocialState, payloads, step: int) -> float:
        p = self.params
        n = p.n_agents
        post_t = np.zeros(n, dtype=np.uint8)
        react_t = np.zeros((n, n), dtype=np.uint8)
        for i, a in enumerate(payloads):
            post_t[i] = 1 if a.posts else 0
            for author, kind in a.reactions:
                react_t[i, author] = (REACT_LIKE if kind == "like"
                                      else REACT_DISLIKE)
        var = social_step(state.beliefs, post_t, react_t, np.empty(n),
                          np.empty(n, np.int64), np.empty(n, np.int64),
                          p.delta, p.s_base, p.alpha, p.reinf)
        state.step = step
        return float(var)

    def snapshot(self, state: SocialState) -> dict:
        p = self.params
        prefs = [preference_update(float(b), p.p_base, p.q_base, p.beta,
                                   p.gamma) for b in state.beliefs]
        return {
            "beliefs": [float(b) for b in state.beliefs],
            "posting_pref": [pr[0] for pr in prefs],
            "interaction_pref": [pr[1] for pr in prefs],
        }

    def observe(self, agent: int, state: SocialState, step: int) -> dict:
        p = self.params
        b = float(state.beliefs[agent])
        pi, qi = preference_update(b, p.p_base, p.q_base, p.beta, p.gamma)
        return {
            "belief": b,
            "posting_pref": pi,
            "interaction_pref": qi,
            "beliefs_all": [float(x) for x in state.beliefs],
        }

    # ---- actions ----

    def baseline_action(self, agent: int, step: int) -> SocialAction:
        return NOOP_ACTION

    def classify_behavior(self, payload: SocialAction):
        """Classes 0-2 not-post x {like, none, dislike}, 3-5 post x same;
        weight split by reaction multiplicity."""
        base = 3 if payload.posts else 0
        likes = sum(1 for _, kind in payload.reactions if kind == "like")
        dislikes = len(payload.reactions) - likes
        if likes + dislikes == 0:
            return [(base + 1, 1.0)]
        total = likes + dislikes
        out = []
        if likes:
            out.append((base + 0, likes / total))
        if dislikes:
            out.append((base + 2, dislikes / total))
        return out

    def primary_class(self, payload: SocialAction) -> int:
        return self.classify_behavior(payload)[0][0]

    def summarize_action(self, payload: SocialAction) -> str:
        parts = ["post" if payload.posts else "no-post"]
        for author, kind in payload.reactions:
            parts.append(f"{kind}@{author}")
        return ",".join(parts)

    def payload_to_json(self, payload: SocialAction) -> dict:
        return {"posts": payload.posts,
                "reactions": [[a, k] for a, k in payload.reactions]}

    def payload_from_json(self, obj: dict) -> SocialAction:
        return SocialAction(
            posts=bool(obj["posts"]),
            reactions=tuple((int(a), str(k)) for a, k in obj["reactions"]))

    def payload_from_wire(self, obj: dict) -> SocialAction:
        if not isinstance(obj, dict) or "posts" not in obj:
            raise ValueError("social action payload needs posts/reactions")
        raw = obj.get("reactions", [])
        reactions = []
        for item in raw:
            author, kind = int(item[0]), str(item[1])
            if kind not in ("like", "dislike"):
                raise ValueError(f"bad reaction kind {kind!r}")
            if not 0 <= author < self.params.n_agents:
                raise ValueError(f"reaction author {author} out of range")
            reactions.append((author, kind))
        return SocialAction(posts=bool(obj["posts"]),
                            reactions=tuple(sorted(reactions)))

    # ---- replay bridge ----

    def encode_actions(self, grid) -> tuple:
        n = len(grid)
        horizon = len(grid[0])
        posts = np.zeros((n, horizon), dtype=np.uint8)
        reacts = np.zeros((n, horizon, n), dtype=np.uint8)
        for i in range(n):
            for t in range(horizon):
                a = grid[i][t]
                posts[i, t] = 1 if a.posts else 0
                for author, kind in a.reactions:
                    reacts[i, t, author] = (REACT_LIKE if kind == "like"
                                            else REACT_DISLIKE)
        return posts, reacts

    def replay_pack(self, traj) -> tuple:
        posts, reacts = self.encode_actions(
            [[rec.payload for rec in row] for row in traj.actions])
        beliefs0 = self.initial_beliefs(traj.seed)
        return (posts, reacts, beliefs0)

    def replay_risk(self, pack, mask_u8: np.ndarray) -> np.ndarray:
        posts, reacts, beliefs0 = pack
        p = self.params
        horizon = posts.shape[1]
        risk = np.empty(horizon)
        dummy_b = np.empty((1, 1))
        social_replay_into(posts, reacts, mask_u8, beliefs0, p.delta,
                           p.s_base, p.alpha, p.reinf, risk, 0, dummy_b)
        return risk

    def replay_full(self, pack, mask_u8: np.ndarray):
        posts, reacts, beliefs0 = pack
        p = self.params
        n, horizon = posts.shape
        risk = np.empty(horizon)
        beliefs_out = np.empty((horizon, n))
        social_replay_into(posts, reacts, mask_u8, beliefs0, p.delta,
                           p.s_base, p.alpha, p.reinf, risk, 1, beliefs_out)
        states = []
        for tt in range(horizon):
            prefs = [preference_update(float(b), p.p_base, p.q_base, p.beta,
                                       p.gamma) for b in beliefs_out[tt]]
            states.append({
                "beliefs": [float(b) for b in beliefs_out[tt]],
                "posting_pref": [pr[0] for pr in prefs],
                "interaction_pref": [pr[1] for pr in prefs],
            })
        return risk, states

    def vtable_raw(self, pack) -> np.ndarray:
        posts, reacts, beliefs0 = pack
        p = self.params
        return social_vtable_raw(posts, reacts, beliefs0, p.delta, p.s_base,
                                 p.alpha, p.reinf)
