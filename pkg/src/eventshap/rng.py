"""Counter-based random streams for reproducible simulation.

Every draw is a pure function of ``(seed, step, agent, purpose, lane)``:
there is no mutable generator state. This gives common random numbers
across counterfactual replays for free — a replay that pins actions consumes
exactly the same draws as the original run — and makes results independent
of evaluation order and worker count.

The mixing function is the splitmix64 finalizer chain; draws are u64s mapped
to (0,1) doubles, normals via Box-Muller, permutations via Fisher-Yates.
"""

import math

_MASK64 = (1 << 64) - 1

# framework-reserved purpose codes; scenarios define their own >= 10
PURPOSE_PERM = 1
PURPOSE_RANDOM_SCORES = 2


def _mix(z: int) -> int:
    """splitmix64 finalizer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def raw(seed: int, step: int, agent: int, purpose: int, lane: int = 0) -> int:
    """64-bit value keyed on the full counter tuple."""
    z = _mix(seed & _MASK64)
    z = _mix(z ^ (step & _MASK64))
    z = _mix(z ^ (agent & _MASK64))
    z = _mix(z ^ (purpose & _MASK64))
    z = _mix(z ^ (lane & _MASK64))
    return z


def unit(seed: int, step: int, agent: int, purpose: int, lane: int = 0) -> float:
    """Uniform double strictly inside (0, 1)."""
    return ((raw(seed, step, agent, purpose, lane) >> 11) + 0.5) * 2.0 ** -53


def uniform(lo: float, hi: float, seed: int, step: int, agent: int,
            purpose: int, lane: int = 0) -> float:
    return lo + (hi - lo) * unit(seed, step, agent, purpose, lane)


def normal(seed: int, step: int, agent: int, purpose: int, lane: int = 0) -> float:
    """Standard normal; consumes lanes (2*lane, 2*lane + 1)."""
    u1 = unit(seed, step, agent, purpose, 2 * lane)
    u2 = unit(seed, step, agent, purpose, 2 * lane + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def permutation(n: int, seed: int, sample_index: int) -> list:
    """Uniform permutation of range(n) for Monte Carlo sample ``sample_index``.

    Keyed only on (seed, sample_index), never on how samples are batched
    across workers.
    """
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(unit(seed, sample_index, i, PURPOSE_PERM) * (i + 1))
        if j > i:  # guard the open-interval edge, cannot occur in practice
            j = i
        perm[i], perm[j] = perm[j], perm[i]
    return perm
