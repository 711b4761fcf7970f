import math

import numpy as np
import pytest

from coopsim.games import Action, NAMED_GAMES, expected_values, game_by_name
from coopsim.learners import (
    RunningBaseline,
    SigmoidLearner,
    apply_update,
    coop_prob,
    exact_value_grad,
    exact_value_grads_table,
    grad_log_policy,
    logit,
    mle_opponent_theta,
    sampled_grad,
)
from coopsim.planner import PlannerPolicy, Trajectory, TrajectoryStep

PD = game_by_name("pd")


def total_value(g, i, thetas, planner=None):
    """Analytic V_i + V_i^p used as the finite-difference target."""
    p = coop_prob(thetas[0]), coop_prob(thetas[1])
    v = expected_values(g, p[0], p[1])[i]
    if planner is not None:
        probs = np.array([
            p[0] * p[1], p[0] * (1 - p[1]), (1 - p[0]) * p[1], (1 - p[0]) * (1 - p[1])
        ])
        v += float(probs @ planner.reward_table()[i])
    return v


class TestCoopProb:
    def test_zero_is_half(self):
        assert coop_prob(0.0) == 0.5

    def test_quarter_start(self):
        assert coop_prob(math.log(1 / 3)) == pytest.approx(0.25, abs=1e-15)

    def test_saturation(self):
        assert coop_prob(30.0) == pytest.approx(1.0, abs=1e-12)
        assert coop_prob(-30.0) == pytest.approx(0.0, abs=1e-12)

    def test_monotone(self):
        thetas = np.linspace(-6, 6, 200)
        probs = [coop_prob(t) for t in thetas]
        assert all(a < b for a, b in zip(probs, probs[1:]))

    def test_logit_round_trip(self):
        for p in (0.01, 0.25, 0.5, 0.9):
            assert coop_prob(logit(p)) == pytest.approx(p, abs=1e-15)


class TestExactValueGrad:
    def test_symmetric_pd_gradient(self):
        # dV1/dtheta1 = p(1-p) * (q*3 + (1-q)*0 - q*4 - (1-q)*1) at p=q=1/2
        got = exact_value_grad(PD, 0, (0.0, 0.0))
        assert got == pytest.approx(-0.25, abs=1e-12)

    def test_reward_for_cooperating(self):
        # A payout of 1 whenever player 1 cooperates makes V_1^p = p.
        rewards = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
        thetas = np.zeros(2)
        with_extra = exact_value_grads_table(PD.payoff_table(), thetas, rewards)
        base = exact_value_grads_table(PD.payoff_table(), thetas)
        assert with_extra[0] - base[0] == pytest.approx(0.25, abs=1e-12)

    def test_saturated_learner_gradient_vanishes(self):
        got = exact_value_grad(PD, 0, (30.0, 0.0))
        assert abs(got) < 1e-10

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        h = 1e-5
        for g in NAMED_GAMES.values():
            for _ in range(12):
                thetas = rng.uniform(-3, 3, size=2)
                pp = PlannerPolicy(W=rng.normal(0, 0.7, (2, 4)), b=rng.normal(0, 0.4, 2))
                for planner in (None, pp):
                    for i in (0, 1):
                        got = exact_value_grad(g, i, tuple(thetas), planner)
                        bumped = thetas.copy()
                        bumped[i] += h
                        hi = total_value(g, i, bumped, planner)
                        bumped[i] -= 2 * h
                        lo = total_value(g, i, bumped, planner)
                        fd = (hi - lo) / (2 * h)
                        assert got == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_rejects_bad_player_index(self):
        with pytest.raises(ValueError):
            exact_value_grad(PD, 2, (0.0, 0.0))


def single_step_traj(action, p, base_reward, planner_reward=0.0):
    step = TrajectoryStep(
        outcome=0 if action == Action.C else 3,
        actions=(int(action), int(action)),
        coop_probs=(p, p),
        base_rewards=(base_reward, base_reward),
        planner_rewards=(planner_reward, planner_reward),
    )
    return Trajectory(steps=(step,))


class TestSampledGrad:
    def test_cooperate_above_baseline(self):
        traj = single_step_traj(Action.C, 0.5, 2.0)
        assert sampled_grad(0, traj, baseline=0.0) == pytest.approx(1.0)

    def test_centered_return_is_zero(self):
        traj = single_step_traj(Action.C, 0.3, 1.7)
        assert sampled_grad(0, traj, baseline=1.7) == 0.0

    def test_defect_gradient(self):
        traj = single_step_traj(Action.D, 0.25, 1.0)
        assert sampled_grad(0, traj, baseline=0.0) == pytest.approx(-0.25)

    def test_expectation_matches_exact_gradient(self):
        # 100k sampled episodes at fixed policies, zero baseline.
        rng = np.random.default_rng(7)
        thetas = (logit(0.35), logit(0.6))
        p = np.array([coop_prob(t) for t in thetas])
        pp = PlannerPolicy(W=rng.normal(0, 0.5, (2, 4)), b=np.zeros(2))
        rewards = pp.reward_table()
        table = PD.payoff_table()
        n = 100_000
        draws = rng.random((n, 2))
        acts = (draws >= p).astype(int)
        outcome = 2 * acts[:, 0] + acts[:, 1]
        for i in (0, 1):
            glp = np.where(acts[:, i] == 0, 1 - p[i], -p[i])
            r_tot = table[i, outcome] + rewards[i, outcome]
            samples = glp * r_tot
            exact = exact_value_grad(PD, i, thetas, pp)
            se = samples.std(ddof=1) / math.sqrt(n)
            assert abs(samples.mean() - exact) < 3 * se


class TestApplyUpdate:
    def test_step_arithmetic(self):
        learner = SigmoidLearner(theta=0.0, eta=0.01)
        assert apply_update(learner, -0.25).theta == pytest.approx(-0.0025, abs=1e-15)

    def test_zero_grad_fixed_point(self):
        learner = SigmoidLearner(theta=1.23, eta=0.01)
        once = apply_update(learner, 0.0)
        twice = apply_update(once, 0.0)
        assert once.theta == learner.theta
        assert twice.theta == learner.theta


class TestMleOpponentTheta:
    def test_balanced_sequence(self):
        assert mle_opponent_theta([Action.C, Action.D, Action.C, Action.D]) == 0.0

    def test_three_quarters(self):
        got = mle_opponent_theta([Action.C, Action.C, Action.C, Action.D])
        assert got == pytest.approx(math.log(3), abs=1e-12)

    def test_degenerate_all_defect_clamped(self):
        got = mle_opponent_theta([Action.D, Action.D])
        assert got == pytest.approx(math.log(0.5 / 1.5), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mle_opponent_theta([])

    def test_recovers_clamped_frequency(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            acts = [Action.C if rng.random() < 0.5 else Action.D for _ in range(n)]
            k = sum(1 for a in acts if a == Action.C)
            k_clamped = min(max(k, 0.5), n - 0.5)
            assert coop_prob(mle_opponent_theta(acts)) == pytest.approx(
                k_clamped / n, abs=1e-12
            )


class TestGradientAscentContract:
    def test_pd_defection_without_planner(self):
        # 4000 exact-gradient steps from P(C)=0.25 under plain ascent.
        learners = [SigmoidLearner(logit(0.25), 0.01) for _ in range(2)]
        for _ in range(4000):
            grads = [
                exact_value_grad(PD, i, (learners[0].theta, learners[1].theta))
                for i in (0, 1)
            ]
            learners = [apply_update(ln, g) for ln, g in zip(learners, grads)]
        joint = learners[0].coop_prob() * learners[1].coop_prob()
        assert joint < 1e-3


class TestRunningBaseline:
    def test_initializes_on_first_observation(self):
        b = RunningBaseline()
        assert b.current() == 0.0
        b.update(3.0)
        assert b.value == 3.0

    def test_decay(self):
        b = RunningBaseline(decay=0.9)
        b.update(1.0)
        b.update(2.0)
        assert b.value == pytest.approx(0.9 * 1.0 + 0.1 * 2.0)


def test_grad_log_policy_signs():
    assert grad_log_policy(0.3, Action.C) == pytest.approx(0.7)
    assert grad_log_policy(0.3, Action.D) == pytest.approx(-0.3)
