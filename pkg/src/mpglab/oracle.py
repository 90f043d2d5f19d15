"""Exact policy evaluation plus a Monte Carlo cross-check estimator.

Values come from dense linear solves of the Bellman system, so downstream
inequality tests see solver-precision numbers rather than iteration error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .game import (
    GameError,
    NumericError,
    PolicyProfile,
    PotentialSpec,
    TabularGame,
    joint_action_distribution,
    marginalize_over_opponents,
)


@dataclass(frozen=True)
class EvaluationBundle:
    """All evaluation outputs for one policy profile.

    v: (n, S) per-agent state values; v_rho: (n,); q: (n, S, A) over joint
    actions (None for sample-based bundles); qbar/abar: per-agent (S, |A_i|)
    marginalized Q and advantage rows; d_rho: (S,) discounted visitation;
    phi_v/phi_value: potential values when a PotentialSpec was attached.
    """

    v: np.ndarray
    v_rho: np.ndarray
    q: Optional[np.ndarray]
    qbar: tuple[np.ndarray, ...]
    abar: tuple[np.ndarray, ...]
    d_rho: np.ndarray
    phi_v: Optional[np.ndarray] = None
    phi_value: Optional[float] = None


def induced_transition(game: TabularGame, profile: PolicyProfile) -> np.ndarray:
    """State-to-state transition matrix under the product policy, (S, S)."""
    S = game.state_count
    joint = np.stack([joint_action_distribution(profile, s) for s in range(S)])
    return np.einsum("sa,sat->st", joint, game.transition)


def _solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # cannot occur for gamma < 1
        raise NumericError(f"singular Bellman system: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite solution of Bellman system")
    return x


def state_values(
    game: TabularGame,
    profile: PolicyProfile,
    extra_rewards: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Exact V(s) for every agent's reward (plus optional extra (m, S, A) rewards).

    Returns (n [+ m], S).  One linear solve with batched right-hand sides.
    """
    S = game.state_count
    joint = np.stack([joint_action_distribution(profile, s) for s in range(S)])
    p_pi = np.einsum("sa,sat->st", joint, game.transition)
    rewards = game.rewards
    if extra_rewards is not None:
        rewards = np.concatenate([rewards, extra_rewards], axis=0)
    r_pi = np.einsum("isa,sa->si", rewards, joint)
    return _solve(np.eye(S) - game.gamma * p_pi, r_pi).T


def evaluate(
    game: TabularGame,
    profile: PolicyProfile,
    spec: Optional[PotentialSpec] = None,
) -> EvaluationBundle:
    """Exact values, marginalized Q/advantages, and visitation for one profile."""
    S, n = game.state_count, game.n
    joint = np.stack([joint_action_distribution(profile, s) for s in range(S)])
    p_pi = np.einsum("sa,sat->st", joint, game.transition)
    a_mat = np.eye(S) - game.gamma * p_pi

    rewards = game.rewards
    if spec is not None:
        spec.check_shape(game)
        rewards = np.concatenate([rewards, spec.phi[None]], axis=0)
    r_pi = np.einsum("isa,sa->si", rewards, joint)
    vals = _solve(a_mat, r_pi).T  # (n[+1], S)
    v = vals[:n]
    phi_v = vals[n] if spec is not None else None

    q = game.rewards + game.gamma * np.einsum("sat,it->isa", game.transition, v)
    qbar = []
    abar = []
    for i in range(n):
        qb = np.stack(
            [marginalize_over_opponents(q[i, s], profile, s, i) for s in range(S)]
        )
        qbar.append(qb)
        abar.append(qb - v[i][:, None])

    d_rho = _solve(a_mat.T, (1.0 - game.gamma) * game.rho)
    return EvaluationBundle(
        v=v,
        v_rho=v @ game.rho,
        q=q,
        qbar=tuple(qbar),
        abar=tuple(abar),
        d_rho=d_rho,
        phi_v=phi_v,
        phi_value=None if phi_v is None else float(game.rho @ phi_v),
    )


def value_iteration_values(
    game: TabularGame,
    profile: PolicyProfile,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> np.ndarray:
    """Fixed-policy value iteration, (n, S).  Cross-check for the linear solve."""
    S = game.state_count
    joint = np.stack([joint_action_distribution(profile, s) for s in range(S)])
    p_pi = np.einsum("sa,sat->st", joint, game.transition)
    r_pi = np.einsum("isa,sa->is", game.rewards, joint)
    v = np.zeros((game.n, S))
    for _ in range(max_iter):
        v_next = r_pi + game.gamma * v @ p_pi.T
        if np.max(np.abs(v_next - v)) < tol * (1.0 - game.gamma):
            return v_next
        v = v_next
    return v


def marginalized_reward(game: TabularGame, profile: PolicyProfile, i: int) -> np.ndarray:
    """Agent i's reward averaged over opponents' policies; static games only."""
    if not game.is_static:
        raise GameError("marginalized_reward requires a single-state game")
    if not 0 <= i < game.n:
        raise GameError(f"agent {i} out of range")
    return marginalize_over_opponents(game.rewards[i, 0], profile, 0, i)


def mismatch_coefficient(
    game: TabularGame, profiles: Sequence[PolicyProfile]
) -> float:
    """max over profiles of max_s 1/d_rho(s); inf when some state is unreachable.

    A lower estimate of the true supremum over all policies.
    """
    if len(profiles) == 0:
        raise GameError("need at least one profile")
    worst = 0.0
    for profile in profiles:
        bundle = evaluate(game, profile)
        worst = max(worst, mismatch_from_visitation(bundle.d_rho))
    return worst


def mismatch_from_visitation(d_rho: np.ndarray, zero_tol: float = 1e-300) -> float:
    dmin = float(np.min(d_rho))
    if dmin <= zero_tol:
        return float("inf")
    return 1.0 / dmin


@dataclass(frozen=True)
class McEstimate:
    """Sample estimates with standard errors from truncated rollouts."""

    v_rho: np.ndarray
    v_rho_se: np.ndarray
    qbar: tuple[np.ndarray, ...]
    qbar_se: tuple[np.ndarray, ...]
    d_rho: np.ndarray
    phi_value: Optional[float]
    episodes: int
    horizon: int


def default_mc_horizon(gamma: float, tail: float = 1e-4) -> int:
    """Horizon at which the discarded tail weight drops below `tail`."""
    return int(np.ceil(np.log(tail * (1.0 - gamma)) / np.log(gamma)))


def _sample_categorical(rng, cdf_rows: np.ndarray, rows: np.ndarray) -> np.ndarray:
    u = rng.random(rows.shape[0])
    return (u[:, None] > cdf_rows[rows]).sum(axis=1)


def mc_estimate(
    game: TabularGame,
    profile: PolicyProfile,
    episodes: int,
    horizon: int,
    seed: int,
    spec: Optional[PotentialSpec] = None,
) -> McEstimate:
    """Monte Carlo value / marginalized-Q / visitation estimates.

    Uses a counter-based Philox stream so results depend only on
    (seed, episodes, horizon).  Unbiased up to horizon truncation; the
    marginalized Q estimate averages forward returns over every visit.
    """
    if episodes < 1 or horizon < 1:
        raise GameError("episodes and horizon must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    S, n, E, H = game.state_count, game.n, episodes, horizon
    strides = np.asarray(game.index.strides)
    pol_cdf = [np.cumsum(d, axis=1) for d in profile.dists]
    trans_cdf = np.cumsum(game.transition, axis=2).reshape(S * game.index.size, S)

    states = np.empty((E, H), dtype=np.int64)
    acts = np.empty((n, E, H), dtype=np.int64)
    rew = np.empty((n, E, H))
    phi_rew = np.empty((E, H)) if spec is not None else None

    s = _sample_categorical(rng, np.cumsum(game.rho)[None, :], np.zeros(E, dtype=np.int64))
    for t in range(H):
        states[:, t] = s
        flat = np.zeros(E, dtype=np.int64)
        for i in range(n):
            a_i = _sample_categorical(rng, pol_cdf[i], s)
            acts[i, :, t] = a_i
            flat += a_i * strides[i]
        for i in range(n):
            rew[i, :, t] = game.rewards[i, s, flat]
        if phi_rew is not None:
            phi_rew[:, t] = spec.phi[s, flat]
        s = _sample_categorical(rng, trans_cdf, s * game.index.size + flat)

    # discounted forward returns G[:, t]
    disc = game.gamma ** np.arange(H)
    g = np.zeros((n, E, H))
    g[:, :, H - 1] = rew[:, :, H - 1]
    for t in range(H - 2, -1, -1):
        g[:, :, t] = rew[:, :, t] + game.gamma * g[:, :, t + 1]

    v_rho = g[:, :, 0].mean(axis=1)
    v_rho_se = g[:, :, 0].std(axis=1, ddof=1) / np.sqrt(E) if E > 1 else np.zeros(n)

    d_counts = np.zeros(S)
    np.add.at(d_counts, states.ravel(), np.broadcast_to(disc, (E, H)).ravel())
    d_rho = (1.0 - game.gamma) * d_counts / E

    qbar, qbar_se = [], []
    for i in range(n):
        c = game.action_counts[i]
        cell = states.ravel() * c + acts[i].ravel()
        gi = g[i].ravel()
        cnt = np.bincount(cell, minlength=S * c).astype(float)
        tot = np.bincount(cell, weights=gi, minlength=S * c)
        tot2 = np.bincount(cell, weights=gi * gi, minlength=S * c)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = tot / cnt
            var = np.maximum(tot2 / cnt - mean**2, 0.0)
            se = np.sqrt(var / np.maximum(cnt - 1.0, 1.0))
        qbar.append(mean.reshape(S, c))
        qbar_se.append(se.reshape(S, c))

    phi_value = None
    if phi_rew is not None:
        phi_value = float((phi_rew @ disc).mean())

    return McEstimate(
        v_rho=v_rho,
        v_rho_se=v_rho_se,
        qbar=tuple(qbar),
        qbar_se=tuple(qbar_se),
        d_rho=d_rho,
        phi_value=phi_value,
        episodes=E,
        horizon=H,
    )


def bundle_from_mc(game: TabularGame, profile: PolicyProfile, est: McEstimate) -> EvaluationBundle:
    """Approximate EvaluationBundle built from sample estimates.

    V(s) is recovered as the policy-weighted average of the estimated
    marginalized Q row, which also centers the advantage estimate.
    """
    qbar = tuple(np.nan_to_num(qb, nan=0.0) for qb in est.qbar)
    v = np.stack(
        [np.einsum("sa,sa->s", profile.dists[i], qbar[i]) for i in range(game.n)]
    )
    abar = tuple(qbar[i] - v[i][:, None] for i in range(game.n))
    return EvaluationBundle(
        v=v,
        v_rho=est.v_rho,
        q=None,
        qbar=qbar,
        abar=abar,
        d_rho=est.d_rho,
        phi_v=None,
        phi_value=est.phi_value,
    )
