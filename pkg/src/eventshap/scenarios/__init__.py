"""Scenario registry: name -> (environment class, params class)."""

from .econ import EconEnvironment, EconParams, EconAction
from .market import MarketEnvironment, MarketParams, MarketAction, hold_action
from .social import SocialEnvironment, SocialParams, SocialAction, NOOP_ACTION

_REGISTRY = {
    "econ": (EconEnvironment, EconParams),
    "market": (MarketEnvironment, MarketParams),
    "social": (SocialEnvironment, SocialParams),
}

SCENARIO_NAMES = tuple(_REGISTRY)


def make_environment(name: str, params=None, **overrides):
    """Instantiate a scenario environment by name.

    ``params`` may be the scenario's params dataclass or a plain dict;
    keyword overrides are applied on top.
    """
    if name not in _REGISTRY:
        raise KeyError(f"unknown scenario {name!r}; choose from {SCENARIO_NAMES}")
    env_cls, params_cls = _REGISTRY[name]
    if params is None:
        params = params_cls(**overrides)
    elif isinstance(params, dict):
        merged = dict(params)
        merged.update(overrides)
        merged = {k: (tuple(v) if isinstance(v, list) else v)
                  for k, v in merged.items()}
        params = params_cls(**merged)
    elif overrides:
        raise ValueError("pass either a params object or keyword overrides")
    return env_cls(params)


def params_dict(env) -> dict:
    """Plain-dict view of an environment's parameters for serialization."""
    from dataclasses import asdict

    d = asdict(env.params)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


__all__ = [
    "EconEnvironment", "EconParams", "EconAction",
    "MarketEnvironment", "MarketParams", "MarketAction", "hold_action",
    "SocialEnvironment", "SocialParams", "SocialAction", "NOOP_ACTION",
    "make_environment", "params_dict", "SCENARIO_NAMES",
]
