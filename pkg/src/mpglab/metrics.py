"""Equilibrium diagnostics: best responses, NE-gap, argmax-mass/margin
statistics, the tilted-improvement function, and bound evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .game import (
    GameError,
    PolicyProfile,
    TabularGame,
    marginalize_over_opponents,
)
from .oracle import EvaluationBundle, evaluate, marginalized_reward, state_values


@dataclass(frozen=True)
class IterationRecord:
    """Metrics snapshot for one learner iteration."""

    k: int
    ne_gap: float
    phi_value: float
    c_k: float
    delta_k: float
    l1_to_ref: Optional[float] = None
    wall_ns: Optional[int] = None


@dataclass(frozen=True)
class BoundReport:
    """Ergodic NE-gap average against the closed-form convergence bound."""

    lhs: float
    rhs: float
    inputs: dict
    satisfied: bool
    applicable: bool


@dataclass(frozen=True)
class BestResponse:
    policy: np.ndarray  # (S, |A_i|), deterministic one-hot rows
    value_rho: float
    values: np.ndarray  # (S,)


def marginalized_mdp(
    game: TabularGame, profile: PolicyProfile, i: int
) -> tuple[np.ndarray, np.ndarray]:
    """Single-agent MDP for agent i against fixed opponents.

    Returns rewards (S, |A_i|) and transitions (S, |A_i|, S).
    """
    S = game.state_count
    rbar = np.stack(
        [marginalize_over_opponents(game.rewards[i, s], profile, s, i) for s in range(S)]
    )
    pbar = np.stack(
        [marginalize_over_opponents(game.transition[s], profile, s, i) for s in range(S)]
    )
    return rbar, pbar


def best_response(
    game: TabularGame, profile: PolicyProfile, i: int, tol: float = 1e-10
) -> BestResponse:
    """Exact optimal deterministic policy for agent i against profile's opponents.

    Policy iteration with exact per-policy solves; an action switch happens
    only on a Q improvement above tol, and ties break to the lowest index.
    """
    if tol <= 0:
        raise GameError("tol must be > 0")
    S = game.state_count
    c = game.action_counts[i]
    rbar, pbar = marginalized_mdp(game, profile, i)
    pol = np.argmax(rbar, axis=1)
    eye = np.eye(S)
    sidx = np.arange(S)
    for _ in range(c**S + S * c + 10):
        v = np.linalg.solve(eye - game.gamma * pbar[sidx, pol], rbar[sidx, pol])
        q = rbar + game.gamma * pbar @ v
        greedy = np.argmax(q, axis=1)
        improves = q[sidx, greedy] > q[sidx, pol] + tol
        if not np.any(improves):
            break
        pol = np.where(improves, greedy, pol)
    one_hot = np.zeros((S, c))
    one_hot[sidx, pol] = 1.0
    return BestResponse(one_hot, float(game.rho @ v), v)


@dataclass(frozen=True)
class NeGapReport:
    gap: float
    per_agent: np.ndarray


def ne_gap(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: Optional[EvaluationBundle] = None,
    tol: float = 1e-10,
) -> NeGapReport:
    """Largest unilateral best-response improvement over the current profile."""
    if bundle is None:
        v_rho = state_values(game, profile) @ game.rho
    else:
        v_rho = bundle.v_rho
    gaps = np.array(
        [best_response(game, profile, i, tol).value_rho - v_rho[i] for i in range(game.n)]
    )
    return NeGapReport(float(gaps.max()), gaps)


def gap_diagnostics(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
    tie_tol: float = 1e-9,
) -> tuple[float, float]:
    """(c_k, delta_k): worst-case mass on the argmax set of the marginalized
    advantage, and worst-case margin between the argmax set and the rest.

    (i, s) pairs whose actions are all tied are skipped for the margin; if
    every pair is tied everywhere, delta_k is +inf.
    """
    if tie_tol < 0:
        raise GameError("tie_tol must be >= 0")
    c_k = np.inf
    delta_k = np.inf
    for i in range(game.n):
        adv = bundle.abar[i]
        dist = profile.dists[i]
        for s in range(game.state_count):
            row = adv[s]
            top = row.max()
            in_set = row >= top - tie_tol
            c_k = min(c_k, float(dist[s, in_set].sum()))
            if not np.all(in_set):
                delta_k = min(delta_k, float(top - row[~in_set].max()))
    return float(c_k), float(delta_k)


def f_alpha(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
    s: Optional[int],
    alpha: float,
) -> float:
    """Improvement of the alpha-tilted policies against the current gradient.

    s=None evaluates the static form on the marginalized one-shot reward
    (single-state games only); otherwise the per-state form on the
    marginalized advantage with the discounted exponent.
    """
    if alpha < 0:
        raise GameError("alpha must be >= 0")
    total = 0.0
    for i in range(game.n):
        if s is None:
            if not game.is_static:
                raise GameError("static form requires a single-state game")
            g = marginalized_reward(game, profile, i)
            dist = profile.dists[i][0]
            expo = alpha * g
        else:
            g = bundle.abar[i][s]
            dist = profile.dists[i][s]
            expo = alpha * g / (1.0 - game.gamma)
        with np.errstate(divide="ignore"):
            z = np.log(dist) + expo
        z = z - z.max()
        tilted = np.exp(z)
        tilted = tilted / tilted.sum()
        total += float((tilted - dist) @ g)
    return total


def f_alpha_limit(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
    s: Optional[int],
) -> float:
    """Limit of f_alpha as alpha grows: summed best-vs-current gradient gap."""
    total = 0.0
    for i in range(game.n):
        if s is None:
            g = marginalized_reward(game, profile, i)
            dist = profile.dists[i][0]
        else:
            g = bundle.abar[i][s]
            dist = profile.dists[i][s]
        support = dist > 0
        total += float(g[support].max() - dist @ g)
    return total


def theorem_bound(
    records: Sequence[IterationRecord],
    n: int,
    phi_max: float,
    gamma: float,
    m_hat: float,
    kind: str,
    slack: float = 1e-9,
) -> BoundReport:
    """Compare the running-average NE-gap against the closed-form rate bound.

    Uses the empirical worst-case (c, delta) over the supplied records; these
    are surrogates for the true infima, so the report also carries its inputs.
    """
    if kind not in ("static", "markov"):
        raise GameError(f"unknown bound kind {kind!r}")
    if len(records) == 0:
        raise GameError("need at least one record")
    K = len(records)
    c = min(r.c_k for r in records)
    delta = min(r.delta_k for r in records)
    lhs = float(np.mean([r.ne_gap for r in records]))
    inputs = {
        "K": K,
        "n": n,
        "phi_max": phi_max,
        "gamma": gamma,
        "c": c,
        "delta_K": delta,
        "m_hat": m_hat,
        "kind": kind,
    }
    applicable = np.isfinite(delta) and delta > 0 and c > 0
    if kind == "markov":
        applicable = applicable and np.isfinite(m_hat)
    if not applicable:
        return BoundReport(lhs, float("nan"), inputs, False, False)
    root_n = np.sqrt(n)
    if kind == "static":
        rhs = (2.0 * phi_max / K) * (1.0 + 2.0 * root_n / (c * delta))
    else:
        rhs = (2.0 * m_hat * phi_max / (K * (1.0 - gamma))) * (
            1.0 + 2.0 * root_n * phi_max / (c * delta * (1.0 - gamma))
        )
    return BoundReport(lhs, float(rhs), inputs, bool(lhs <= rhs + slack), True)


def delta_star_estimate(records: Sequence[IterationRecord]) -> float:
    """Mean margin over the final 10% of iterations (run-level limit estimate)."""
    finite = [r.delta_k for r in records if np.isfinite(r.delta_k)]
    if not finite:
        return float("inf")
    tail = finite[-max(1, len(finite) // 10):]
    return float(np.mean(tail))


def k_prime_estimate(records: Sequence[IterationRecord]) -> int:
    """First iteration after which the margin stays >= half the limit estimate."""
    target = delta_star_estimate(records) / 2.0
    k_prime = 0
    for r in records:
        if not (r.delta_k >= target):
            k_prime = r.k + 1
    return k_prime


def l1_distance(profile: PolicyProfile, reference: PolicyProfile) -> float:
    """Sum over agents and states of the L1 gap between policy rows."""
    if profile.n != reference.n:
        raise GameError("agent count mismatch")
    total = 0.0
    for a, b in zip(profile.dists, reference.dists):
        if a.shape != b.shape:
            raise GameError("policy shape mismatch")
        total += float(np.abs(a - b).sum())
    return total


def best_response_dynamics(
    game: TabularGame,
    profile: PolicyProfile,
    max_rounds: int = 200,
    tol: float = 1e-10,
) -> PolicyProfile:
    """Iterated exact best responses until no agent switches; a deterministic
    reference equilibrium for distance curves."""
    current = profile
    for _ in range(max_rounds):
        changed = False
        for i in range(game.n):
            br = best_response(game, current, i, tol)
            if np.abs(br.policy - current.dists[i]).max() > 1e-12:
                dists = list(current.dists)
                dists[i] = br.policy
                current = PolicyProfile(tuple(dists))
                changed = True
        if not changed:
            return current
    return current
