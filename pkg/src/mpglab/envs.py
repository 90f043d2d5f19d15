"""Experiment environments, each shipped with its potential values.

Raw rewards are affinely rescaled into [0, 1] with one shared scale across
agents and states (a per-agent shift is allowed); the potential gets the
same scale so unilateral-deviation differences are preserved.  The applied
map is recorded in the game's meta dict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import GameError, JointActionIndex, PotentialSpec, TabularGame

DESK_JOINT_ACTION_BUDGET = 1_000_000


@dataclass(frozen=True)
class CongestionConfig:
    """Two-state facility-congestion game configuration."""

    n: int = 8
    facilities: int = 4
    weights_safe: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    weights_distancing: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    distancing_penalty: float = 2.0
    gamma: float = 0.99
    threshold: float = 0.5  # majority fraction that triggers distancing

    def __post_init__(self):
        for w in (self.weights_safe, self.weights_distancing):
            if len(w) != self.facilities:
                raise GameError("weights must have one entry per facility")
            if any(b <= a for a, b in zip(w, w[1:])):
                raise GameError("facility weights must be strictly increasing")
        if self.n < 1 or self.facilities < 1:
            raise GameError("n and facilities must be >= 1")


def _static_game(
    reward: np.ndarray,
    action_counts: tuple[int, ...],
    gamma: float,
    meta: dict | None = None,
) -> tuple[TabularGame, PotentialSpec]:
    """Fully cooperative single-state game with shared reward = potential."""
    n = len(action_counts)
    A = int(np.prod(action_counts))
    flat = reward.reshape(A)
    game = TabularGame(
        n=n,
        state_count=1,
        action_counts=action_counts,
        transition=np.ones((1, A, 1)),
        rewards=np.broadcast_to(flat, (n, 1, A)).copy(),
        gamma=gamma,
        rho=np.ones(1),
        meta=meta,
    )
    spec = PotentialSpec(phi=flat[None, :].copy(), phi_max=float(flat.max()))
    return game, spec


def make_synthetic(
    n: int = 3,
    action_counts: tuple[int, ...] = (3, 4, 5),
    seed: int = 0,
    gamma: float = 0.99,
) -> tuple[TabularGame, PotentialSpec]:
    """Single-state cooperative game with a uniformly random shared reward tensor."""
    if n != len(action_counts):
        raise GameError("n must match len(action_counts)")
    rng = np.random.default_rng(seed)
    reward = rng.random(tuple(action_counts))
    return _static_game(reward, tuple(int(c) for c in action_counts), gamma,
                        meta={"kind": "synthetic", "seed": seed, "exact_mpg": True})


def make_delta_matrix(
    delta_star: float, gamma: float = 0.99
) -> tuple[TabularGame, PotentialSpec]:
    """2x2 common-payoff matrix game with tunable margin at the equilibrium.

    Raw payoffs [[1, 2], [3 + delta_star, 3]], rescaled into [0, 1] by the
    top payoff; the pure profile (row 1, col 0) is a Nash point.
    """
    if delta_star <= 0:
        raise GameError("delta_star must be > 0")
    top = 3.0 + delta_star
    reward = np.array([[1.0, 2.0], [top, 3.0]]) / top
    return _static_game(
        reward, (2, 2), gamma,
        meta={"kind": "delta_matrix", "delta_star": delta_star, "scale": 1.0 / top,
              "exact_mpg": True},
    )


def make_random_mpg(
    n: int,
    action_counts: tuple[int, ...],
    state_count: int,
    seed: int,
    gamma: float = 0.9,
) -> tuple[TabularGame, PotentialSpec]:
    """Random dense-transition cooperative game (shared reward = potential)."""
    counts = tuple(int(c) for c in action_counts)
    A = int(np.prod(counts))
    if A * state_count > DESK_JOINT_ACTION_BUDGET:
        raise GameError("game exceeds the desk-scale joint-action budget")
    rng = np.random.default_rng(seed)
    reward = rng.random((state_count, A))
    trans = rng.random((state_count, A, state_count)) + 1e-2
    trans = trans / trans.sum(axis=2, keepdims=True)
    game = TabularGame(
        n=n,
        state_count=state_count,
        action_counts=counts,
        transition=trans,
        rewards=np.broadcast_to(reward, (n, state_count, A)).copy(),
        gamma=gamma,
        rho=np.full(state_count, 1.0 / state_count),
        meta={"kind": "random_mpg", "seed": seed, "exact_mpg": True},
    )
    spec = PotentialSpec(phi=reward.copy(), phi_max=float(reward.max()))
    return game, spec


def make_congestion(cfg: CongestionConfig) -> tuple[TabularGame, PotentialSpec]:
    """Two-state congestion game: agents earn facility weight times the number
    of other agents on the same facility, a flat penalty applies in the
    distancing state, and the crowding pattern drives deterministic state
    switches (majority on one facility -> distancing, even spread -> safe,
    anything else keeps the current state).

    The shipped potential satisfies the one-shot identity exactly in every
    state: a unilateral action change moves each agent's reward by exactly
    the potential difference.  The discounted-value version of that identity
    does not carry over, because the state switches depend on the joint
    action; verify_potential reports the size of that gap rather than a
    rounding-level residual, and meta["exact_mpg"] is False accordingly.
    Discounted ascent of the potential's value is still what the shipped
    learners exhibit on this game; see the experiment tests.
    """
    S = 2  # 0 = safe, 1 = distancing
    counts = (cfg.facilities,) * cfg.n
    index = JointActionIndex.from_counts(counts)
    A = index.size
    if A * S > DESK_JOINT_ACTION_BUDGET:
        raise GameError("congestion game exceeds the desk-scale joint-action budget")
    acts = index.decode_all()  # (A, n)
    loads = np.stack([(acts == k).sum(axis=1) for k in range(cfg.facilities)], axis=1)
    own_load = loads[np.arange(A)[:, None], acts].T  # (n, A)

    weights = np.array([cfg.weights_safe, cfg.weights_distancing])  # (S, facilities)
    raw_r = np.empty((cfg.n, S, A))
    raw_phi = np.empty((S, A))
    for s in range(S):
        pen = cfg.distancing_penalty if s == 1 else 0.0
        raw_r[:, s, :] = weights[s][acts].T * (own_load - 1) - pen
        raw_phi[s] = (weights[s] * loads * (loads - 1) / 2.0).sum(axis=1) - pen

    max_load = loads.max(axis=1)
    to_distancing = max_load > cfg.n * cfg.threshold
    to_safe = max_load <= math.ceil(cfg.n / cfg.facilities)
    transition = np.zeros((S, A, S))
    for s in range(S):
        nxt = np.where(to_distancing, 1, np.where(to_safe, 0, s))
        transition[s, np.arange(A), nxt] = 1.0

    r_lo, r_hi = float(raw_r.min()), float(raw_r.max())
    scale = 1.0 / (r_hi - r_lo)
    rewards = (raw_r - r_lo) * scale
    phi_lo = float(raw_phi.min())
    phi = (raw_phi - phi_lo) * scale
    game = TabularGame(
        n=cfg.n,
        state_count=S,
        action_counts=counts,
        transition=transition,
        rewards=rewards,
        gamma=cfg.gamma,
        rho=np.array([0.5, 0.5]),
        meta={
            "kind": "congestion",
            "exact_mpg": False,
            "reward_scale": scale,
            "reward_shift": -r_lo * scale,
            "phi_shift": -phi_lo * scale,
        },
    )
    spec = PotentialSpec(phi=phi, phi_max=float(phi.max()))
    return game, spec
