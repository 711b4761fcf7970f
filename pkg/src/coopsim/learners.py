"""Sigmoid-policy learners: exact and sampled gradient updates, opponent MLE.

Each learner holds a single policy parameter theta with P(C) = sigmoid(theta)
and climbs its total value (base game plus planner rewards) by gradient
ascent. The sampled variant uses likelihood-ratio gradients against a
per-player running-mean baseline; the exact variant uses the closed-form
gradient of the expected total reward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import _outcomes
from .games import Action, GamePayoffs

if TYPE_CHECKING:  # pragma: no cover - import cycle guard for type hints only
    from .planner import PlannerPolicy, Trajectory

#: Half-count smoothing applied to degenerate all-C / all-D observations.
MLE_CLAMP = 0.5


def coop_prob(theta: float) -> float:
    """Logistic map from the policy parameter to P(C), numerically stable."""
    if theta >= 0:
        return 1.0 / (1.0 + math.exp(-theta))
    z = math.exp(theta)
    return z / (1.0 + z)


def logit(p: float) -> float:
    """Inverse of coop_prob on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"logit requires p in (0,1), got {p}")
    return math.log(p / (1.0 - p))


def grad_log_policy(p: float, action: Action) -> float:
    """d log pi(action) / d theta for the sigmoid policy: 1-p for C, -p for D."""
    return 1.0 - p if Action(action) == Action.C else -p


@dataclass(frozen=True)
class SigmoidLearner:
    """Single-parameter policy with learning step size eta."""

    theta: float
    eta: float = 0.01

    def coop_prob(self) -> float:
        return coop_prob(self.theta)


@dataclass
class RunningBaseline:
    """Per-player running mean of total rewards, used as the sampled-mode critic.

    Initialized on the first observation to avoid a cold-start bias.
    """

    decay: float = 0.99
    value: float | None = None

    def update(self, reward: float) -> float:
        if self.value is None:
            self.value = reward
        else:
            self.value = self.decay * self.value + (1.0 - self.decay) * reward
        return self.value

    def current(self) -> float:
        return 0.0 if self.value is None else self.value


def apply_update(learner: SigmoidLearner, grad: float) -> SigmoidLearner:
    """Gradient-ascent step: theta <- theta + eta * grad."""
    return replace(learner, theta=learner.theta + learner.eta * grad)


def exact_value_grad(
    g: GamePayoffs,
    i: int,
    thetas: Sequence[float],
    planner: "PlannerPolicy | None" = None,
) -> float:
    """Closed-form d/dtheta_i of player i's expected total reward.

    Covers the base game value plus, when a planner is given, the expected
    planner reward under its current per-outcome payout.
    """
    if i not in (0, 1):
        raise ValueError(f"player index must be 0 or 1, got {i}")
    table = g.payoff_table()
    if planner is not None:
        table = table + planner.reward_table()
    p = np.array([coop_prob(t) for t in thetas])
    bits = _outcomes.outcome_bits(2)
    probs = _outcomes.outcome_probs(p, bits)
    scores = _outcomes.outcome_scores(p, bits)
    return float(np.sum(probs * scores[i] * table[i]))


def exact_value_grads_table(
    payoff_table: np.ndarray,
    thetas: np.ndarray,
    planner_rewards: np.ndarray | None = None,
) -> np.ndarray:
    """d/dtheta_i of each player's expected total reward for an N-player table.

    ``payoff_table`` has shape (n, 2**n); ``planner_rewards`` the same when
    given. Exact enumeration over joint outcomes.
    """
    n = payoff_table.shape[0]
    total = payoff_table if planner_rewards is None else payoff_table + planner_rewards
    p = np.array([coop_prob(t) for t in thetas])
    bits = _outcomes.outcome_bits(n)
    probs = _outcomes.outcome_probs(p, bits)
    scores = _outcomes.outcome_scores(p, bits)
    return (probs[None, :] * scores * total).sum(axis=1)


def sampled_grad(i: int, trajectory: "Trajectory", baseline: float) -> float:
    """Likelihood-ratio gradient estimate for player i from one trajectory.

    grad = sum_t d log pi_i(a_t) / d theta * (R_i^tot - baseline), where
    R_i^tot discounts base plus planner rewards.
    """
    ret = trajectory.total_return(i)
    glp = 0.0
    for step in trajectory.steps:
        glp += grad_log_policy(step.coop_probs[i], step.actions[i])
    return glp * (ret - baseline)


def mle_opponent_theta(actions: Sequence[Action]) -> float:
    """Maximum-likelihood sigmoid parameter from an observed action sequence.

    theta_hat = ln(k / (n-k)) with the cooperation count k clamped to
    [0.5, n-0.5] so degenerate all-C / all-D sequences stay finite.
    """
    n = len(actions)
    if n == 0:
        raise ValueError("cannot estimate from an empty action sequence")
    k = sum(1 for a in actions if Action(a) == Action.C)
    k = min(max(float(k), MLE_CLAMP), n - MLE_CLAMP)
    return math.log(k / (n - k))
