"""Exact evaluation oracle against independent solvers and sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mpglab
from mpglab.game import GameError, PolicyProfile
from mpglab.oracle import (
    bundle_from_mc,
    default_mc_horizon,
    evaluate,
    induced_transition,
    marginalized_reward,
    mc_estimate,
    mismatch_coefficient,
    mismatch_from_visitation,
    state_values,
    value_iteration_values,
)

from game_builders import dummy_term_mpg, random_game, random_profile


class TestExactValues:
    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_bellman_fixed_point(self, seed):
        rng = np.random.default_rng(seed)
        g = random_game(rng)
        prof = random_profile(g, rng)
        b = evaluate(g, prof)
        p_pi = induced_transition(g, prof)
        for i in range(g.n):
            # V = r_pi + gamma * P_pi V, checked directly
            r_pi = np.array([
                np.dot(mpglab.game.joint_action_distribution(prof, s), g.rewards[i, s])
                for s in range(g.state_count)
            ])
            resid = b.v[i] - (r_pi + g.gamma * p_pi @ b.v[i])
            assert np.max(np.abs(resid)) < 1e-10

    def test_matches_value_iteration(self, rng):
        for trial in range(10):
            g = random_game(rng)
            prof = random_profile(g, rng)
            v_solve = evaluate(g, prof).v
            v_iter = value_iteration_values(g, prof)
            assert np.max(np.abs(v_solve - v_iter)) < 1e-8

    def test_qbar_consistency(self, rng):
        g = random_game(rng, n=2)
        prof = random_profile(g, rng)
        b = evaluate(g, prof)
        for i in range(g.n):
            # policy-weighted Qbar recovers V; Abar is centered the same way
            v_back = np.einsum("sa,sa->s", prof.dists[i], b.qbar[i])
            np.testing.assert_allclose(v_back, b.v[i], atol=1e-10)
            np.testing.assert_allclose(b.abar[i], b.qbar[i] - b.v[i][:, None])

    def test_extra_rewards_batched_solve(self, rng):
        g, spec = dummy_term_mpg(rng, n=2, state_count=2)
        prof = random_profile(g, rng)
        vals = state_values(g, prof, extra_rewards=spec.phi[None])
        assert vals.shape == (g.n + 1, g.state_count)
        b = evaluate(g, prof, spec)
        np.testing.assert_allclose(vals[: g.n], b.v, atol=1e-12)
        np.testing.assert_allclose(vals[g.n], b.phi_v, atol=1e-12)


class TestVisitation:
    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_d_rho_is_distribution(self, seed):
        rng = np.random.default_rng(seed)
        g = random_game(rng)
        prof = random_profile(g, rng)
        d = evaluate(g, prof).d_rho
        assert np.all(d >= -1e-12)
        assert d.sum() == pytest.approx(1.0, abs=1e-10)

    def test_d_rho_matches_power_series(self, rng):
        g = random_game(rng, state_count=3)
        prof = random_profile(g, rng)
        d = evaluate(g, prof).d_rho
        p_pi = induced_transition(g, prof)
        acc = np.zeros(g.state_count)
        occ = np.array(g.rho)
        for t in range(2000):
            acc += (g.gamma**t) * occ
            occ = occ @ p_pi
        np.testing.assert_allclose(d, (1.0 - g.gamma) * acc, atol=1e-8)

    def test_mismatch_coefficient(self, rng):
        g = random_game(rng, state_count=2)
        profs = [random_profile(g, rng) for _ in range(3)]
        m = mismatch_coefficient(g, profs)
        assert m >= g.state_count - 1e-9  # min d <= 1/S
        assert mismatch_from_visitation(np.array([0.0, 1.0])) == np.inf


class TestMarginalizedReward:
    def test_requires_static(self, rng):
        g = random_game(rng, state_count=2)
        prof = random_profile(g, rng)
        with pytest.raises(GameError):
            marginalized_reward(g, prof, 0)

    def test_matches_enumeration(self, rng):
        g = random_game(rng, n=3, state_count=1)
        prof = random_profile(g, rng)
        for i in range(g.n):
            want = np.zeros(g.action_counts[i])
            for flat in range(g.joint_action_count):
                a = g.index.decode(flat)
                w = np.prod([
                    prof.dists[j][0, aj] for j, aj in enumerate(a) if j != i
                ])
                want[a[i]] += w * g.rewards[i, 0, flat]
            np.testing.assert_allclose(marginalized_reward(g, prof, i), want,
                                       atol=1e-12)


class TestMonteCarlo:
    def test_deterministic_static_game_is_exact(self):
        # one state, deterministic profile: every rollout is identical
        g, _ = mpglab.make_synthetic(n=2, action_counts=(2, 2), seed=3, gamma=0.5)
        dists = (np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
        prof = PolicyProfile(dists)
        H = default_mc_horizon(g.gamma, tail=1e-12)
        est = mc_estimate(g, prof, episodes=4, horizon=H, seed=0)
        exact = evaluate(g, prof)
        np.testing.assert_allclose(est.v_rho, exact.v_rho, atol=1e-10)
        assert np.all(est.v_rho_se < 1e-12)

    def test_estimates_within_three_standard_errors(self, rng):
        g = random_game(rng, n=2, state_count=2, gamma=0.9)
        prof = random_profile(g, rng)
        exact = evaluate(g, prof)
        H = default_mc_horizon(g.gamma)
        est = mc_estimate(g, prof, episodes=3000, horizon=H, seed=11)
        trunc = g.gamma**H / (1.0 - g.gamma)
        for i in range(g.n):
            err = abs(est.v_rho[i] - exact.v_rho[i])
            assert err <= 3.0 * est.v_rho_se[i] + trunc

    def test_reproducible_for_fixed_seed(self, rng):
        g = random_game(rng, n=2, state_count=2)
        prof = random_profile(g, rng)
        a = mc_estimate(g, prof, episodes=50, horizon=30, seed=5)
        b = mc_estimate(g, prof, episodes=50, horizon=30, seed=5)
        np.testing.assert_array_equal(a.v_rho, b.v_rho)
        np.testing.assert_array_equal(a.d_rho, b.d_rho)
        for qa, qb in zip(a.qbar, b.qbar):
            np.testing.assert_array_equal(qa, qb)

    def test_bundle_from_mc_centers_advantage(self, rng):
        g = random_game(rng, n=2, state_count=2)
        prof = random_profile(g, rng)
        est = mc_estimate(g, prof, episodes=200, horizon=50, seed=7)
        bundle = bundle_from_mc(g, prof, est)
        for i in range(g.n):
            centered = np.einsum("sa,sa->s", prof.dists[i], bundle.abar[i])
            np.testing.assert_allclose(centered, 0.0, atol=1e-10)

    def test_rejects_bad_sizes(self, rng):
        g = random_game(rng)
        prof = random_profile(g, rng)
        with pytest.raises(GameError):
            mc_estimate(g, prof, episodes=0, horizon=10, seed=0)


class TestOpponentCouplingBound:
    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=100, deadline=None)
    def test_marginal_reward_shift_bounded_by_total_variation(self, seed):
        # static games: changing opponents moves rbar_i by at most twice the
        # total variation between the joint opponent products
        rng = np.random.default_rng(seed)
        g = random_game(rng, state_count=1)
        prof_a = random_profile(g, rng)
        prof_b = random_profile(g, rng)
        for i in range(g.n):
            shift = np.max(np.abs(
                marginalized_reward(g, prof_a, i) - marginalized_reward(g, prof_b, i)
            ))
            opp_a = np.ones(1)
            opp_b = np.ones(1)
            for j in range(g.n):
                if j == i:
                    continue
                opp_a = np.multiply.outer(opp_a, prof_a.dists[j][0]).ravel()
                opp_b = np.multiply.outer(opp_b, prof_b.dists[j][0]).ravel()
            tv = 0.5 * np.abs(opp_a - opp_b).sum()
            assert shift <= 2.0 * tv + 1e-12
