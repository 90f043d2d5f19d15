"""Independent policy-update rules.

All steps are pure functions (game, profile, bundle, step size) -> profile.
Multiplicative updates work in log space with a per-row max shift, so large
step sizes or advantages never overflow and zero-probability actions stay
at zero probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (
    GameError,
    NumericError,
    PolicyProfile,
    TabularGame,
    softmax_project,
)
from .oracle import EvaluationBundle

LEARNER_KINDS = ("npg", "pg_softmax", "projected_q", "npg_log_barrier", "npg_entropy")


@dataclass(frozen=True)
class LearnerConfig:
    kind: str
    eta: float
    lam: float = 0.0  # log-barrier weight
    tau: float = 0.0  # entropy weight

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise GameError(f"unknown learner kind {self.kind!r}")
        if not self.eta > 0:
            raise GameError("eta must be > 0")
        if self.lam < 0 or self.tau < 0:
            raise GameError("regularization weights must be >= 0")


def local_gradients(game: TabularGame, bundle: EvaluationBundle) -> list[np.ndarray]:
    """Per-agent (S, |A_i|) update directions: the marginalized advantages.

    Single-state games are treated as one-state Markov games.  There the
    advantage row differs from the marginalized one-shot reward only by a
    per-row constant, which a normalized multiplicative update ignores, so
    the discounted update coincides with the one-shot multiplicative-weights
    rule at step size eta / (1 - gamma).
    """
    return [np.asarray(a) for a in bundle.abar]


def exponent_scale(game: TabularGame) -> float:
    """Multiplier on the gradient inside the update exponent."""
    return 1.0 / (1.0 - game.gamma)


def _multiplicative(dist: np.ndarray, exponent: np.ndarray) -> np.ndarray:
    """rows <- dist * exp(exponent), renormalized; max-shifted; keeps support."""
    if not np.any(exponent):
        return dist
    with np.errstate(divide="ignore"):
        z = np.log(dist) + exponent
    z = z - z.max(axis=1, keepdims=True)
    p = np.exp(z)
    total = p.sum(axis=1, keepdims=True)
    if not np.all(np.isfinite(total)) or np.any(total <= 0):
        raise NumericError("degenerate multiplicative update")
    return p / total


def npg_step(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
    eta: float,
) -> PolicyProfile:
    """Independent natural-gradient (multiplicative-weights) update."""
    grads = local_gradients(game, bundle)
    scale = exponent_scale(game)
    new = []
    for i in range(game.n):
        g = grads[i]
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite advantage")
        new.append(_multiplicative(profile.dists[i], eta * scale * g))
    return PolicyProfile(tuple(new))


def static_npg_step(
    game: TabularGame,
    profile: PolicyProfile,
    eta: float,
) -> PolicyProfile:
    """One-shot multiplicative-weights update for single-state games.

    Uses the marginalized instantaneous reward with no discount scaling:
    pi_i'(a) ~ pi_i(a) * exp(eta * rbar_i(a)).  Output matches npg_step run
    at step size eta * (1 - gamma); kept separate so the undiscounted rate
    theory can be exercised at its literal step sizes.
    """
    from .oracle import marginalized_reward

    if not game.is_static:
        raise GameError("static_npg_step requires a single-state game")
    new = []
    for i in range(game.n):
        r = marginalized_reward(game, profile, i)
        if not np.all(np.isfinite(r)):
            raise NumericError("non-finite marginalized reward")
        new.append(_multiplicative(profile.dists[i], eta * r[None, :]))
    return PolicyProfile(tuple(new))


def pg_softmax_step(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
    eta: float,
) -> PolicyProfile:
    """Vanilla policy gradient on softmax logits.

    Gradient of V_i(rho) in each logit is
    d_rho(s) * pi_i(a|s) * abar_i(s, a) / (1 - gamma).
    """
    if profile.logits is None:
        raise GameError("pg_softmax_step requires a softmax-parameterized profile")
    denom = 1.0 - game.gamma
    new_logits = []
    for i in range(game.n):
        grad = bundle.d_rho[:, None] * profile.dists[i] * bundle.abar[i] / denom
        new_logits.append(profile.logits[i] + eta * grad)
    return softmax_project(new_logits)


def project_rows_to_simplex(rows: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex (sort-based)."""
    rows = np.asarray(rows, dtype=np.float64)
    m = rows.shape[1]
    srt = np.sort(rows, axis=1)[:, ::-1]
    cssv = np.cumsum(srt, axis=1) - 1.0
    ar = np.arange(1, m + 1)
    cond = srt - cssv / ar > 0
    rho_idx = m - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = cssv[np.arange(rows.shape[0]), rho_idx] / (rho_idx + 1)
    return np.maximum(rows - theta[:, None], 0.0)


def projected_q_step(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
    eta: float,
) -> PolicyProfile:
    """Direct-parameterization ascent on the marginalized Q row, then projection."""
    new = []
    for i in range(game.n):
        stepped = profile.dists[i] + eta * bundle.qbar[i]
        proj = project_rows_to_simplex(stepped)
        proj = proj / proj.sum(axis=1, keepdims=True)
        new.append(proj)
    return PolicyProfile(tuple(new))


def regularized_npg_step(
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
    eta: float,
    kind: str,
    weight: float,
) -> PolicyProfile:
    """NPG with log-barrier or entropy regularization; weight 0 is plain NPG.

    log_barrier adds the mean-centered barrier derivative
    weight * (1/(|A_i| pi) - 1) to the update direction.  entropy uses the
    closed form rows ~ pi^(1 - eta*tau*scale) * exp(eta*scale*grad).
    """
    if weight < 0:
        raise GameError("weight must be >= 0")
    if kind not in ("log_barrier", "entropy"):
        raise GameError(f"unknown regularization kind {kind!r}")
    grads = local_gradients(game, bundle)
    scale = exponent_scale(game)
    new = []
    for i in range(game.n):
        dist = profile.dists[i]
        g = grads[i]
        if kind == "log_barrier":
            if weight > 0 and np.any(dist <= 0):
                raise NumericError("log barrier undefined at the simplex boundary")
            if weight > 0:
                g = g + weight * (1.0 / (dist.shape[1] * dist) - 1.0)
            new.append(_multiplicative(dist, eta * scale * g))
        else:
            with np.errstate(divide="ignore"):
                z = (1.0 - eta * weight * scale) * np.log(dist) + eta * scale * g
            z = z - z.max(axis=1, keepdims=True)
            p = np.exp(z)
            new.append(p / p.sum(axis=1, keepdims=True))
    return PolicyProfile(tuple(new))


def apply_step(
    cfg: LearnerConfig,
    game: TabularGame,
    profile: PolicyProfile,
    bundle: EvaluationBundle,
) -> PolicyProfile:
    if cfg.kind == "npg":
        return npg_step(game, profile, bundle, cfg.eta)
    if cfg.kind == "pg_softmax":
        return pg_softmax_step(game, profile, bundle, cfg.eta)
    if cfg.kind == "projected_q":
        return projected_q_step(game, profile, bundle, cfg.eta)
    if cfg.kind == "npg_log_barrier":
        return regularized_npg_step(game, profile, bundle, cfg.eta, "log_barrier", cfg.lam)
    return regularized_npg_step(game, profile, bundle, cfg.eta, "entropy", cfg.tau)


def theorem_safe_eta(game: TabularGame, phi_max: float) -> float:
    """Step size under which one-step potential ascent is guaranteed."""
    return (1.0 - game.gamma) ** 2 / (2.0 * np.sqrt(game.n) * phi_max)


def static_safe_eta(game: TabularGame) -> float:
    """Ascent-safe step size for static_npg_step on single-state games."""
    return 1.0 / (2.0 * np.sqrt(game.n))
