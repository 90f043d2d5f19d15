"""Stochastic-game data model: dense game tensors, product policies, joint-action indexing.

Joint actions are stored flat in mixed-radix order (agent 0 is the
slowest-varying digit), which makes a flat vector over joint actions
reshape directly into an ``action_counts``-shaped tensor in C order.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Tolerance for probability-type inputs at construction time.  Derived
# quantities (linear solves etc.) get the looser 1e-8 checked in tests.
PROB_ATOL = 1e-12


class GameError(ValueError):
    """Domain error: malformed game, policy, or index arguments."""


class NumericError(ArithmeticError):
    """Numerical failure (singular solve, non-finite intermediate)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JointActionIndex:
    """Mixed-radix encoder between per-agent action tuples and flat indices."""

    action_counts: tuple[int, ...]
    strides: tuple[int, ...]

    @classmethod
    def from_counts(cls, action_counts: Sequence[int]) -> "JointActionIndex":
        counts = tuple(int(c) for c in action_counts)
        if any(c < 1 for c in counts):
            raise GameError(f"action counts must be >= 1, got {counts}")
        strides = []
        acc = 1
        for c in reversed(counts):
            strides.append(acc)
            acc *= c
        return cls(counts, tuple(reversed(strides)))

    @property
    def size(self) -> int:
        return int(np.prod(self.action_counts, dtype=np.int64))

    def encode(self, actions: Sequence[int]) -> int:
        if len(actions) != len(self.action_counts):
            raise GameError("joint action has wrong arity")
        idx = 0
        for a, c, stride in zip(actions, self.action_counts, self.strides):
            a = int(a)
            if not 0 <= a < c:
                raise GameError(f"action {a} out of range [0, {c})")
            idx += a * stride
        return idx

    def decode(self, idx: int) -> tuple[int, ...]:
        if not 0 <= idx < self.size:
            raise GameError(f"joint index {idx} out of range [0, {self.size})")
        out = []
        for stride, c in zip(self.strides, self.action_counts):
            out.append((idx // stride) % c)
        return tuple(out)

    def decode_all(self) -> np.ndarray:
        """(size, n) table of per-agent actions for every flat index."""
        grids = np.unravel_index(np.arange(self.size), self.action_counts)
        return np.stack(grids, axis=1)


@dataclass(frozen=True)
class TabularGame:
    """Finite stochastic game as dense tensors.

    transition: (S, A, S) with A the flat joint-action count,
    rewards: (n, S, A) with entries in [0, 1], rho: (S,) initial distribution.
    """

    n: int
    state_count: int
    action_counts: tuple[int, ...]
    transition: np.ndarray
    rewards: np.ndarray
    gamma: float
    rho: np.ndarray
    index: JointActionIndex = field(init=False)
    meta: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "action_counts", tuple(int(c) for c in self.action_counts))
        if self.n != len(self.action_counts):
            raise GameError("n must match len(action_counts)")
        idx = JointActionIndex.from_counts(self.action_counts)
        object.__setattr__(self, "index", idx)
        S, A = self.state_count, idx.size
        P = _readonly(self.transition)
        r = _readonly(self.rewards)
        rho = _readonly(self.rho)
        if P.shape != (S, A, S):
            raise GameError(f"transition shape {P.shape} != {(S, A, S)}")
        if r.shape != (self.n, S, A):
            raise GameError(f"rewards shape {r.shape} != {(self.n, S, A)}")
        if rho.shape != (S,):
            raise GameError(f"rho shape {rho.shape} != {(S,)}")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > PROB_ATOL:
            raise GameError("transition rows must be distributions (sum 1, entries >= 0)")
        if np.any(r < -PROB_ATOL) or np.any(r > 1.0 + PROB_ATOL):
            raise GameError("reward entries must lie in [0, 1]")
        if np.any(rho < 0) or abs(rho.sum() - 1.0) > PROB_ATOL:
            raise GameError("rho must be a distribution over states")
        if not 0.0 < self.gamma < 1.0:
            raise GameError(f"gamma must be in (0, 1), got {self.gamma}")
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "rho", rho)

    @property
    def joint_action_count(self) -> int:
        return self.index.size

    @property
    def is_static(self) -> bool:
        return self.state_count == 1


@dataclass(frozen=True)
class PotentialSpec:
    """Per-state-action potential values and their upper bound."""

    phi: np.ndarray
    phi_max: float

    def __post_init__(self):
        phi = _readonly(self.phi)
        if phi.ndim != 2:
            raise GameError("phi must be (state, joint-action)")
        if np.any(phi < -PROB_ATOL) or np.any(phi > self.phi_max + 1e-9):
            raise GameError("phi entries must lie in [0, phi_max]")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi_max", float(self.phi_max))

    def check_shape(self, game: TabularGame) -> None:
        if self.phi.shape != (game.state_count, game.joint_action_count):
            raise GameError(
                f"phi shape {self.phi.shape} incompatible with game "
                f"{(game.state_count, game.joint_action_count)}"
            )


@dataclass(frozen=True)
class PolicyProfile:
    """Per-agent per-state simplex rows; logits kept when softmax-parameterized."""

    dists: tuple[np.ndarray, ...]
    logits: Optional[tuple[np.ndarray, ...]] = None

    def __post_init__(self):
        dists = tuple(_readonly(d) for d in self.dists)
        for d in dists:
            if d.ndim != 2:
                raise GameError("each policy must be (states, actions)")
            if np.any(d < 0) or np.max(np.abs(d.sum(axis=1) - 1.0)) > PROB_ATOL:
                raise GameError("policy rows must be distributions")
        object.__setattr__(self, "dists", dists)
        if self.logits is not None:
            logits = tuple(_readonly(t) for t in self.logits)
            if len(logits) != len(dists):
                raise GameError("logits/dists agent count mismatch")
            for t, d in zip(logits, dists):
                if t.shape != d.shape:
                    raise GameError("logits shape mismatch")
                if np.max(np.abs(_softmax_rows(t) - d)) > PROB_ATOL:
                    raise GameError("dists must equal row-softmax of logits")
            object.__setattr__(self, "logits", logits)

    @property
    def n(self) -> int:
        return len(self.dists)

    @property
    def state_count(self) -> int:
        return self.dists[0].shape[0]

    @classmethod
    def uniform(cls, game: TabularGame, with_logits: bool = False) -> "PolicyProfile":
        dists = tuple(
            np.full((game.state_count, c), 1.0 / c) for c in game.action_counts
        )
        if with_logits:
            logits = tuple(np.zeros_like(d) for d in dists)
            return cls(dists, logits)
        return cls(dists)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_project(logits: Sequence[np.ndarray]) -> PolicyProfile:
    """Row-softmax every agent's logits into a PolicyProfile (max-shifted)."""
    mats = [np.asarray(t, dtype=np.float64) for t in logits]
    for t in mats:
        if not np.all(np.isfinite(t)):
            raise GameError("logits must be finite")
    dists = tuple(_softmax_rows(t) for t in mats)
    return PolicyProfile(dists, tuple(mats))


def joint_policy_prob(profile: PolicyProfile, s: int, a: Sequence[int]) -> float:
    """Probability the product policy assigns to joint action a in state s."""
    if not 0 <= s < profile.state_count:
        raise GameError(f"state {s} out of range")
    if len(a) != profile.n:
        raise GameError("joint action has wrong arity")
    p = 1.0
    for i, ai in enumerate(a):
        d = profile.dists[i]
        if not 0 <= int(ai) < d.shape[1]:
            raise GameError(f"action {ai} out of range for agent {i}")
        p *= d[s, int(ai)]
    return float(p)


def joint_action_distribution(profile: PolicyProfile, s: int) -> np.ndarray:
    """Flat distribution over all joint actions in state s (mixed-radix order)."""
    out = np.ones(1)
    for d in profile.dists:
        out = np.multiply.outer(out, d[s]).ravel()
    return out


def marginalize_over_opponents(
    flat: np.ndarray, profile: PolicyProfile, s: int, i: int
) -> np.ndarray:
    """Average a flat joint-action vector over all agents' policies except agent i.

    Also accepts a (A, k) matrix of per-joint-action rows; the trailing axis is
    preserved.  Returns shape (|A_i|,) or (|A_i|, k).
    """
    counts = tuple(d.shape[1] for d in profile.dists)
    extra = flat.shape[1:]
    t = flat.reshape(counts + extra)
    for j in reversed(range(profile.n)):
        if j == i:
            continue
        t = np.tensordot(t, profile.dists[j][s], axes=([j], [0]))
    return t


@dataclass(frozen=True)
class PotentialReport:
    max_violation: float
    is_static_check: bool
    trials: int


def verify_potential(
    game: TabularGame,
    spec: PotentialSpec,
    trials: int = 100,
    seed: int = 0,
    per_state: bool = True,
) -> PotentialReport:
    """Numerically check the unilateral-deviation identity of the potential.

    Draws random tuples (agent, policy, deviation policy, opponents) and
    compares the exact change in that agent's value against the exact change
    in the potential value, per start state and under rho.  Single-state
    games additionally get the reward-level identity checked exhaustively.
    """
    from . import oracle  # local import: oracle depends on this module

    spec.check_shape(game)
    rng = np.random.default_rng(seed)
    S = game.state_count

    def random_policy(c: int) -> np.ndarray:
        x = rng.random((S, c)) + 1e-3
        return x / x.sum(axis=1, keepdims=True)

    worst = 0.0
    for _ in range(trials):
        i = int(rng.integers(game.n))
        dists = [random_policy(c) for c in game.action_counts]
        base = PolicyProfile(tuple(dists))
        dev_dists = list(dists)
        dev_dists[i] = random_policy(game.action_counts[i])
        dev = PolicyProfile(tuple(dev_dists))
        vals = oracle.state_values(game, base, extra_rewards=spec.phi[None])
        vals_dev = oracle.state_values(game, dev, extra_rewards=spec.phi[None])
        dv = vals_dev[i] - vals[i]
        dphi = vals_dev[game.n] - vals[game.n]
        resid = dv - dphi
        if per_state:
            worst = max(worst, float(np.max(np.abs(resid))))
        worst = max(worst, abs(float(game.rho @ resid)))

    is_static = game.is_static
    if is_static:
        # reward-level identity, exhaustive over unilateral deviations
        counts = game.action_counts
        for i in range(game.n):
            r_moved = np.moveaxis(game.rewards[i, 0].reshape(counts), i, 0)
            p_moved = np.moveaxis(spec.phi[0].reshape(counts), i, 0)
            diff = (r_moved[:, None] - r_moved[None, :]) - (
                p_moved[:, None] - p_moved[None, :]
            )
            worst = max(worst, float(np.max(np.abs(diff))))
    return PotentialReport(worst, is_static, trials)


# --- serialization ---------------------------------------------------------

def game_to_dict(game: TabularGame, spec: Optional[PotentialSpec] = None) -> dict:
    out = {
        "n": game.n,
        "states": game.state_count,
        "action_counts": list(game.action_counts),
        "transition": game.transition.ravel().tolist(),
        "rewards": game.rewards.ravel().tolist(),
        "gamma": game.gamma,
        "rho": game.rho.tolist(),
    }
    if spec is not None:
        out["phi"] = spec.phi.ravel().tolist()
        out["phi_max"] = spec.phi_max
    return out


def game_from_dict(data: dict) -> tuple[TabularGame, Optional[PotentialSpec]]:
    n = int(data["n"])
    S = int(data["states"])
    counts = [int(c) for c in data["action_counts"]]
    A = int(np.prod(counts))
    game = TabularGame(
        n=n,
        state_count=S,
        action_counts=tuple(counts),
        transition=np.asarray(data["transition"]).reshape(S, A, S),
        rewards=np.asarray(data["rewards"]).reshape(n, S, A),
        gamma=float(data["gamma"]),
        rho=np.asarray(data["rho"]),
    )
    spec = None
    if "phi" in data and data["phi"] is not None:
        spec = PotentialSpec(
            phi=np.asarray(data["phi"]).reshape(S, A), phi_max=float(data["phi_max"])
        )
    return game, spec


def save_game(path: str, game: TabularGame, spec: Optional[PotentialSpec] = None) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(game_to_dict(game, spec), fh)
    os.replace(tmp, path)


def load_game(path: str) -> tuple[TabularGame, Optional[PotentialSpec]]:
    with open(path) as fh:
        return game_from_dict(json.load(fh))
