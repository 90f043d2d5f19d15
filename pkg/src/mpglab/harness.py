"""Experiment runner: iterate evaluate / record / step, write CSV traces
and JSON summaries, and run multi-learner comparisons and margin sweeps.

Exact-oracle mode is fully deterministic, so repeated runs of the same
(config, seed) produce byte-identical CSV files.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .game import GameError, PolicyProfile, PotentialSpec, TabularGame, load_game
from .learners import LearnerConfig, apply_step
from .metrics import (
    BoundReport,
    IterationRecord,
    best_response_dynamics,
    delta_star_estimate,
    gap_diagnostics,
    k_prime_estimate,
    l1_distance,
    ne_gap,
    theorem_bound,
)
from .oracle import (
    bundle_from_mc,
    evaluate,
    mc_estimate,
    mismatch_from_visitation,
)
from . import envs

CSV_HEADER = "k,ne_gap,phi,c_k,delta_k,l1,seed,learner,eta"

ENV_KINDS = ("synthetic", "congestion", "delta_matrix", "random_mpg")


@dataclass(frozen=True)
class EnvConfig:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise GameError(f"unknown environment kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    env: EnvConfig
    learner: LearnerConfig
    iterations: int
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    tie_tol: float = 1e-9
    record_every: int = 1
    compute_bound: bool = False
    compute_gap: bool = True
    estimator: str = "exact"  # or "mc"
    mc_episodes: int = 20
    mc_horizon: int = 20
    reference_nash: Optional[str] = None  # "auto" or path to a saved game profile
    output: Optional[str] = None

    def __post_init__(self):
        if self.iterations < 1:
            raise GameError("iterations must be >= 1")
        if len(self.seeds) == 0:
            raise GameError("seeds must be nonempty")
        if self.record_every < 1:
            raise GameError("record_every must be >= 1")
        if self.estimator not in ("exact", "mc"):
            raise GameError(f"unknown estimator {self.estimator!r}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


def build_env(cfg: EnvConfig, seed: int) -> tuple[TabularGame, PotentialSpec]:
    """Instantiate the environment; randomized families draw from the run seed
    unless the params pin their own."""
    p = dict(cfg.params)
    if cfg.kind == "synthetic":
        p.setdefault("seed", seed)
        if "action_counts" in p:
            p["action_counts"] = tuple(p["action_counts"])
            p.setdefault("n", len(p["action_counts"]))
        return envs.make_synthetic(**p)
    if cfg.kind == "random_mpg":
        p.setdefault("seed", seed)
        p["action_counts"] = tuple(p["action_counts"])
        return envs.make_random_mpg(**p)
    if cfg.kind == "delta_matrix":
        return envs.make_delta_matrix(**p)
    for key in ("weights_safe", "weights_distancing"):
        if key in p:
            p[key] = tuple(p[key])
    return envs.make_congestion(envs.CongestionConfig(**p))


@dataclass
class RunResult:
    seed: int
    records: list[IterationRecord]
    final_profile: PolicyProfile
    game: TabularGame
    spec: PotentialSpec
    bound: Optional[BoundReport] = None
    m_hat: Optional[float] = None


def _reference_profile(cfg: RunConfig, game: TabularGame, start: PolicyProfile):
    if cfg.reference_nash is None:
        return None
    if cfg.reference_nash == "auto":
        return best_response_dynamics(game, start)
    data = json.load(open(cfg.reference_nash))
    dists = tuple(np.asarray(d) for d in data["dists"])
    return PolicyProfile(dists)


def run_single(cfg: RunConfig, seed: int) -> RunResult:
    """One learner trajectory from the uniform profile."""
    game, spec = build_env(cfg.env, seed)
    needs_logits = cfg.learner.kind == "pg_softmax"
    profile = PolicyProfile.uniform(game, with_logits=needs_logits)
    reference = _reference_profile(cfg, game, profile)

    records: list[IterationRecord] = []
    inv_d_max = 0.0
    for k in range(cfg.iterations):
        t0 = time.perf_counter_ns()
        if cfg.estimator == "exact":
            bundle = evaluate(game, profile, spec)
        else:
            mc_seed = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
            est = mc_estimate(
                game, profile, cfg.mc_episodes, cfg.mc_horizon,
                seed=mc_seed, spec=spec,
            )
            bundle = bundle_from_mc(game, profile, est)
        inv_d_max = max(inv_d_max, mismatch_from_visitation(bundle.d_rho))
        if k % cfg.record_every == 0 or k == cfg.iterations - 1:
            gap = ne_gap(game, profile, bundle).gap if cfg.compute_gap else float("nan")
            c_k, delta_k = gap_diagnostics(game, profile, bundle, cfg.tie_tol)
            l1 = l1_distance(profile, reference) if reference is not None else None
            records.append(
                IterationRecord(
                    k=k,
                    ne_gap=gap,
                    phi_value=bundle.phi_value if bundle.phi_value is not None else float("nan"),
                    c_k=c_k,
                    delta_k=delta_k,
                    l1_to_ref=l1,
                    wall_ns=time.perf_counter_ns() - t0,
                )
            )
        profile = apply_step(cfg.learner, game, profile, bundle)

    bound = None
    m_hat = None
    if cfg.compute_bound:
        # include the final iterate's visitation in the mismatch estimate:
        # the per-step inequality references the next iterate's distribution
        final_bundle = evaluate(game, profile, spec)
        inv_d_max = max(inv_d_max, mismatch_from_visitation(final_bundle.d_rho))
        m_hat = inv_d_max
        bound = theorem_bound(
            records, game.n, spec.phi_max, game.gamma, m_hat, "markov"
        )
    return RunResult(seed, records, profile, game, spec, bound, m_hat)


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


def records_to_csv(records: Sequence[IterationRecord], seed: int, learner: LearnerConfig) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.k),
                    _fmt(r.ne_gap),
                    _fmt(r.phi_value),
                    _fmt(r.c_k),
                    _fmt(r.delta_k),
                    _fmt(r.l1_to_ref),
                    str(seed),
                    learner.kind,
                    _fmt(learner.eta),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _bound_dict(bound: Optional[BoundReport]) -> Optional[dict]:
    if bound is None:
        return None
    return {
        "lhs": bound.lhs,
        "rhs": bound.rhs,
        "inputs": bound.inputs,
        "satisfied": bound.satisfied,
        "applicable": bound.applicable,
    }


def running_average(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return np.cumsum(arr) / np.arange(1, len(arr) + 1)


def run(cfg: RunConfig) -> dict:
    """Run all seeds, write one CSV per seed plus an aggregate summary."""
    out_dir = cfg.output or os.environ.get("MPGLAB_OUTPUT", ".")
    os.makedirs(out_dir, exist_ok=True)
    results = [run_single(cfg, seed) for seed in cfg.seeds]
    per_seed = {}
    for res in results:
        csv_path = os.path.join(out_dir, f"{cfg.learner.kind}_seed{res.seed}.csv")
        _atomic_write(csv_path, records_to_csv(res.records, res.seed, cfg.learner))
        gaps = [r.ne_gap for r in res.records]
        per_seed[str(res.seed)] = {
            "csv": os.path.basename(csv_path),
            "final_ne_gap": res.records[-1].ne_gap,
            "final_phi": res.records[-1].phi_value,
            "final_l1": res.records[-1].l1_to_ref,
            "ergodic_ne_gap": running_average(gaps).tolist(),
            "delta_star_hat": delta_star_estimate(res.records),
            "k_prime_hat": k_prime_estimate(res.records),
            "m_hat": res.m_hat,
            "bound": _bound_dict(res.bound),
        }
    summary = {
        "env": {"kind": cfg.env.kind, "params": cfg.env.params},
        "learner": dataclasses.asdict(cfg.learner),
        "iterations": cfg.iterations,
        "seeds": list(cfg.seeds),
        "estimator": cfg.estimator,
        "per_seed": per_seed,
    }
    _atomic_write(
        os.path.join(out_dir, f"{cfg.learner.kind}_summary.json"),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )
    return summary


def compare(cfgs: Sequence[RunConfig]) -> dict:
    """Run several learners on one environment and rank them.

    Ranking uses area under the median curve: NE-gap when gaps are computed,
    otherwise distance-to-reference.
    """
    if len(cfgs) == 0:
        raise GameError("need at least one config")
    first = cfgs[0]
    for c in cfgs[1:]:
        if c.env != first.env:
            raise GameError("compare requires a shared environment")
        if c.seeds != first.seeds:
            raise GameError("compare requires shared seeds")
    out_dir = first.output or os.environ.get("MPGLAB_OUTPUT", ".")
    entries = {}
    for cfg in cfgs:
        summary = run(cfg)
        curves = []
        metric = "ne_gap" if cfg.compute_gap else "l1"
        for seed in cfg.seeds:
            res_csv = os.path.join(out_dir, f"{cfg.learner.kind}_seed{seed}.csv")
            rows = np.genfromtxt(res_csv, delimiter=",", names=True)
            rows = np.atleast_1d(rows)
            curves.append(rows[metric])
        curves = np.asarray(curves, dtype=float)
        median = np.median(curves, axis=0)
        entries[cfg.learner.kind] = {
            "metric": metric,
            "median_curve": median.tolist(),
            "band_low": np.min(curves, axis=0).tolist(),
            "band_high": np.max(curves, axis=0).tolist(),
            "median_final": float(median[-1]),
            "auc": float(np.nansum(median)),
            "summary": summary,
        }
    ordering = sorted(entries, key=lambda k: entries[k]["auc"])
    report = {"env": {"kind": first.env.kind, "params": first.env.params},
              "ordering": ordering, "learners": entries}
    _atomic_write(
        os.path.join(out_dir, "comparison.json"),
        json.dumps(report, indent=2, sort_keys=True, default=float) + "\n",
    )
    return report


def sweep_delta(
    deltas: Sequence[float],
    eta: float = 1.0,
    iterations: int = 3000,
    gap_threshold: float = 1e-3,
    output: Optional[str] = None,
    gamma: float = 0.99,
) -> dict:
    """Run NPG on the 2x2 margin-sweep matrix game from a shared uniform init
    and record iterations until the NE-gap stays under the threshold."""
    out_dir = output or os.environ.get("MPGLAB_OUTPUT", ".")
    os.makedirs(out_dir, exist_ok=True)
    results = {}
    for d in deltas:
        cfg = RunConfig(
            env=EnvConfig("delta_matrix", {"delta_star": d, "gamma": gamma}),
            learner=LearnerConfig("npg", eta=eta),
            iterations=iterations,
            seeds=(0,),
            output=out_dir,
        )
        res = run_single(cfg, 0)
        csv_path = os.path.join(out_dir, f"delta_{d:g}.csv")
        _atomic_write(csv_path, records_to_csv(res.records, 0, cfg.learner))
        hit = next((r.k for r in res.records if r.ne_gap <= gap_threshold), None)
        results[f"{d:g}"] = {
            "iterations_to_threshold": hit,
            "final_ne_gap": res.records[-1].ne_gap,
            "csv": os.path.basename(csv_path),
        }
    report = {
        "eta": eta,
        "gap_threshold": gap_threshold,
        "iterations": iterations,
        "deltas": results,
    }
    _atomic_write(
        os.path.join(out_dir, "delta_sweep.json"),
        json.dumps(report, indent=2, sort_keys=True) + "\n",
    )
    return report


def config_from_dict(data: dict) -> RunConfig:
    env = EnvConfig(data["env"]["kind"], dict(data["env"].get("params", {})))
    ln = data["learner"]
    learner = LearnerConfig(
        kind=ln["kind"],
        eta=float(ln["eta"]),
        lam=float(ln.get("lam", 0.0)),
        tau=float(ln.get("tau", 0.0)),
    )
    kwargs = {
        k: data[k]
        for k in (
            "iterations", "tie_tol", "record_every", "compute_bound", "compute_gap",
            "estimator", "mc_episodes", "mc_horizon", "reference_nash", "output",
        )
        if k in data
    }
    if "seeds" in data:
        kwargs["seeds"] = tuple(data["seeds"])
    return RunConfig(env=env, learner=learner, **kwargs)


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
