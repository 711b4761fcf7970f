"""The planning agent: bounded per-outcome extra rewards trained by look-ahead.

The planner observes the players' joint action and hands each player an
extra reward r_i^p = c * tanh(W @ onehot(outcome) + b)_i, optionally
projected to sum to zero (revenue-neutral). Its parameters are trained by
differentiating next-step social welfare through the learners' anticipated
gradient-ascent updates (exact mode), or by a double likelihood-ratio rule
from sampled trajectories (estimated mode). A cost on the norm of expected
payouts discourages unnecessary intervention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import _outcomes
from .games import GamePayoffs
from .learners import SigmoidLearner, coop_prob

_NORM_GUARD = 1e-12


class PlannerGrad(NamedTuple):
    """Gradient of the planner objective with respect to (W, b)."""

    w: np.ndarray
    b: np.ndarray

    def scaled(self, factor: float) -> "PlannerGrad":
        return PlannerGrad(self.w * factor, self.b * factor)

    def minus(self, other: "PlannerGrad", factor: float = 1.0) -> "PlannerGrad":
        return PlannerGrad(self.w - factor * other.w, self.b - factor * other.b)

    def norm(self) -> float:
        return math.sqrt(float((self.w ** 2).sum() + (self.b ** 2).sum()))


@dataclass
class PlannerPolicy:
    """Single-layer reward policy over one-hot joint outcomes.

    W has shape (n_players, n_outcomes) and b shape (n_players,); the payout
    for an outcome is c * tanh(W[:, outcome] + b), so |r_i^p| <= c always.
    With revenue_neutral the payout is additionally mean-subtracted so it
    sums to zero exactly.
    """

    W: np.ndarray
    b: np.ndarray
    c: float = 3.0
    eta_p: float = 0.01
    sigma: float = 0.1
    revenue_neutral: bool = False
    cost_alpha: float = 0.0002
    mode: str = "exact"  # "exact" | "estimated"
    grad_clip: float | None = None

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(
                f"W must be (n_players, n_outcomes) with matching b, got {self.W.shape} / {self.b.shape}"
            )
        if self.mode not in ("exact", "estimated"):
            raise ValueError(f"mode must be 'exact' or 'estimated', got {self.mode!r}")
        if self.revenue_neutral and self.W.shape[0] != 2:
            # Mean subtraction keeps |r| <= c only for two players; the
            # redistribution experiments are two-player only.
            raise NotImplementedError("revenue-neutral payouts are supported for 2 players")

    @property
    def n_players(self) -> int:
        return self.W.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.W.shape[1]

    @classmethod
    def zeros(cls, n_players: int = 2, n_outcomes: int | None = None, **kwargs) -> "PlannerPolicy":
        if n_outcomes is None:
            n_outcomes = 2 ** n_players
        return cls(W=np.zeros((n_players, n_outcomes)), b=np.zeros(n_players), **kwargs)

    def preactivations(self) -> np.ndarray:
        """z[i, outcome] = W[i, outcome] + b[i], shape (n_players, n_outcomes)."""
        return self.W + self.b[:, None]

    def reward_table(self) -> np.ndarray:
        """Deterministic payout for every outcome, shape (n_players, n_outcomes)."""
        raw = self.c * np.tanh(self.preactivations())
        return project_revenue_neutral(raw) if self.revenue_neutral else raw


def project_revenue_neutral(rewards: np.ndarray) -> np.ndarray:
    """Mean-subtraction projection onto the sum-to-zero hyperplane (axis 0)."""
    return rewards - rewards.mean(axis=0, keepdims=True)


def planner_rewards(pp: PlannerPolicy, outcome: int) -> np.ndarray:
    """Per-player extra rewards for one joint outcome."""
    if not 0 <= outcome < pp.n_outcomes:
        raise ValueError(f"outcome index {outcome} out of range ({pp.n_outcomes} outcomes)")
    return pp.reward_table()[:, outcome].copy()


def sample_planner_action(
    pp: PlannerPolicy, outcome: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Stochastic payout for estimated mode: Gaussian jitter on preactivations.

    Returns (zeta, rewards) where zeta ~ N(z[:, outcome], sigma^2) and the
    emitted rewards are c * tanh(zeta), projected if revenue-neutral. The
    tanh keeps even explored payouts inside the reward bound.
    """
    if pp.sigma <= 0:
        raise ValueError("estimated mode requires a positive exploration spread sigma")
    z = pp.preactivations()[:, outcome]
    zeta = z + pp.sigma * rng.standard_normal(pp.n_players)
    rewards = pp.c * np.tanh(zeta)
    if pp.revenue_neutral:
        rewards = rewards - rewards.mean()
    return zeta, rewards


@dataclass(frozen=True)
class TrajectoryStep:
    """One step of play: the joint outcome with rewards as experienced."""

    outcome: int
    actions: tuple[int, ...]
    coop_probs: tuple[float, ...]
    base_rewards: tuple[float, ...]
    planner_rewards: tuple[float, ...]
    zeta: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Trajectory:
    """A finite-horizon rollout; matrix-game episodes have a single step."""

    steps: tuple[TrajectoryStep, ...]
    gamma: float = 1.0

    def base_return(self, i: int) -> float:
        return sum(s.base_rewards[i] * self.gamma ** t for t, s in enumerate(self.steps))

    def planner_return(self, i: int) -> float:
        return sum(s.planner_rewards[i] * self.gamma ** t for t, s in enumerate(self.steps))

    def total_return(self, i: int) -> float:
        return self.base_return(i) + self.planner_return(i)

    def welfare_return(self) -> float:
        n = len(self.steps[0].base_rewards)
        return sum(self.base_return(i) for i in range(n))


def _value_pieces(
    payoffs: GamePayoffs | np.ndarray,
    learners: Sequence[SigmoidLearner],
    pp: PlannerPolicy,
):
    """Shared precomputation over the joint-outcome space."""
    table = payoffs.payoff_table() if isinstance(payoffs, GamePayoffs) else np.asarray(payoffs, float)
    n = table.shape[0]
    if len(learners) != n or pp.W.shape != table.shape:
        raise ValueError("payoff table, learners and planner shapes disagree")
    thetas = np.array([ln.theta for ln in learners])
    etas = np.array([ln.eta for ln in learners])
    p = np.array([coop_prob(t) for t in thetas])
    bits = _outcomes.outcome_bits(n)
    probs = _outcomes.outcome_probs(p, bits)
    scores = _outcomes.outcome_scores(p, bits)
    z = pp.preactivations()
    tanh_z = np.tanh(z)
    rewards = pp.c * tanh_z
    if pp.revenue_neutral:
        rewards = project_revenue_neutral(rewards)
    dr_dz = pp.c * (1.0 - tanh_z ** 2)
    return table, n, thetas, etas, bits, probs, scores, rewards, dr_dz


def exact_planner_grad(
    payoffs: GamePayoffs | np.ndarray,
    learners: Sequence[SigmoidLearner],
    pp: PlannerPolicy,
) -> PlannerGrad:
    """Gradient of look-ahead welfare through the learners' anticipated updates.

    Computes each learner's anticipated step delta_i = eta_i * dV_i^tot/dtheta_i
    in closed form, then the gradient of V(theta + delta) with respect to the
    planner parameters; the welfare slope is evaluated at the looked-ahead
    parameters so the result is the exact gradient of the composed objective.
    When cost_alpha > 0 the payout-norm penalty gradient is subtracted.
    """
    if pp.mode != "exact":
        raise ValueError(f"exact_planner_grad requires a planner in exact mode, got {pp.mode!r}")
    table, n, thetas, etas, bits, probs, scores, rewards, dr_dz = _value_pieces(
        payoffs, learners, pp
    )
    welfare = table.sum(axis=0)

    # Anticipated learner updates from the exact total-value gradients.
    g_vi = (probs[None, :] * scores * table).sum(axis=1)
    g_vip = (probs[None, :] * scores * rewards).sum(axis=1)
    ahead = thetas + etas * (g_vi + g_vip)

    p2 = np.array([coop_prob(t) for t in ahead])
    probs2 = _outcomes.outcome_probs(p2, bits)
    scores2 = _outcomes.outcome_scores(p2, bits)
    g_welfare_ahead = (probs2[None, :] * scores2 * welfare[None, :]).sum(axis=1)

    coef = (etas * g_welfare_ahead)[:, None] * scores  # (n, K)
    if pp.revenue_neutral:
        coef = coef - coef.mean(axis=0, keepdims=True)
    gw = dr_dz * probs[None, :] * coef
    grad = PlannerGrad(gw, gw.sum(axis=1))

    if pp.cost_alpha > 0:
        grad = grad.minus(cost_grad(pp, learners, payoffs), factor=pp.cost_alpha)
    return grad


def cost_grad(
    pp: PlannerPolicy,
    learners: Sequence[SigmoidLearner],
    payoffs: GamePayoffs | np.ndarray,
) -> PlannerGrad:
    """Gradient of ||V^p||_2, the norm of expected per-player payouts.

    Returns zeros when the norm is below the subgradient guard, so the cost
    term is well defined at the kink.
    """
    _, n, _, _, _, probs, _, rewards, dr_dz = _value_pieces(payoffs, learners, pp)
    v_p = (rewards * probs[None, :]).sum(axis=1)
    norm = float(np.sqrt((v_p ** 2).sum()))
    if norm < _NORM_GUARD:
        return PlannerGrad(np.zeros_like(pp.W), np.zeros_like(pp.b))
    coef = (v_p / norm)[:, None] * np.ones_like(probs)[None, :]
    if pp.revenue_neutral:
        coef = coef - coef.mean(axis=0, keepdims=True)
    gw = dr_dz * probs[None, :] * coef
    return PlannerGrad(gw, gw.sum(axis=1))


def pg_partial_sums(
    batch: Sequence[Trajectory], pp: PlannerPolicy
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Un-normalized sums behind the estimated-mode expectations.

    Returns (a_w, a_b, b, count) where a_w[i] sums grad_p log pi_p (W part)
    * grad_i log pi_i * planner return of i over the batch, a_b[i] the bias
    part, and b[i] sums grad_i log pi_i * welfare return. Sums over disjoint
    batches add, so large batches may be accumulated in chunks.
    """
    n, k = pp.W.shape
    z = pp.preactivations()
    inv_var = 1.0 / pp.sigma ** 2
    a_w = np.zeros((n, n, k))
    a_b = np.zeros((n, n))
    b = np.zeros(n)

    single_step = all(len(t.steps) == 1 for t in batch)
    if single_step:
        outcomes = np.fromiter((t.steps[0].outcome for t in batch), dtype=int, count=len(batch))
        zetas = np.array([t.steps[0].zeta for t in batch], dtype=float)
        probs = np.array([t.steps[0].coop_probs for t in batch], dtype=float)
        actions = np.array([t.steps[0].actions for t in batch], dtype=int)
        base = np.array([t.steps[0].base_rewards for t in batch], dtype=float)
        handed = np.array([t.steps[0].planner_rewards for t in batch], dtype=float)
        noise = (zetas - z[:, outcomes].T) * inv_var  # (B, n)
        glp = np.where(actions == 0, 1.0 - probs, -probs)  # (B, n)
        welfare = base.sum(axis=1)
        for i in range(n):
            w = glp[:, i] * handed[:, i]
            contrib = noise * w[:, None]  # (B, n)
            target = a_w[i].T  # (k, n) view
            np.add.at(target, outcomes, contrib)
            a_b[i] = contrib.sum(axis=0)
            b[i] = float(glp[:, i] @ welfare)
        return a_w, a_b, b, len(batch)

    for traj in batch:
        glp_traj = np.zeros(n)
        for s in traj.steps:
            p = np.asarray(s.coop_probs)
            acts = np.asarray(s.actions)
            glp_traj += np.where(acts == 0, 1.0 - p, -p)
        for i in range(n):
            b[i] += glp_traj[i] * traj.welfare_return()
            weight = glp_traj[i] * traj.planner_return(i)
            for s in traj.steps:
                if s.zeta is None:
                    raise ValueError("estimated-mode trajectories must carry sampled zeta")
                noise = (np.asarray(s.zeta) - z[:, s.outcome]) * inv_var
                a_w[i][:, s.outcome] += noise * weight
                a_b[i] += noise * weight
    return a_w, a_b, b, len(batch)


def pg_combine(
    sums: tuple[np.ndarray, np.ndarray, np.ndarray, int], etas: np.ndarray
) -> PlannerGrad:
    """Turn accumulated partial sums into the planner gradient."""
    a_w, a_b, b, count = sums
    if count == 0:
        raise ValueError("empty trajectory batch")
    inv = 1.0 / count
    gw = np.einsum("i,ijk,i->jk", etas, a_w * inv, b * inv)
    gb = np.einsum("i,ij,i->j", etas, a_b * inv, b * inv)
    return PlannerGrad(gw, gb)


def pg_planner_grad(
    batch: Sequence[Trajectory],
    learners: Sequence[SigmoidLearner],
    pp: PlannerPolicy,
) -> PlannerGrad:
    """Double likelihood-ratio planner gradient from sampled trajectories.

    grad = sum_i eta_i * E[grad_p log pi_p * grad_i log pi_i * Rp_i]
                       * E[grad_i log pi_i * R], with batch means for the
    expectations and the Gaussian preactivation jitter supplying
    grad_p log pi_p = (zeta - z) / sigma^2 on the realized outcome column.
    """
    if pp.mode != "estimated":
        raise ValueError(f"pg_planner_grad requires a planner in estimated mode, got {pp.mode!r}")
    if pp.sigma <= 0:
        raise ValueError("estimated mode requires a positive exploration spread sigma")
    if not batch:
        raise ValueError("empty trajectory batch")
    etas = np.array([ln.eta for ln in learners])
    return pg_combine(pg_partial_sums(batch, pp), etas)


def clip_grad(grad: PlannerGrad, max_norm: float) -> PlannerGrad:
    """Max-norm clipping, available for stabilizing planner training."""
    norm = grad.norm()
    if norm <= max_norm or norm == 0.0:
        return grad
    return grad.scaled(max_norm / norm)


def planner_step(pp: PlannerPolicy, grad: PlannerGrad) -> PlannerPolicy:
    """Ascent step on the planner parameters: (W, b) += eta_p * grad."""
    return replace(pp, W=pp.W + pp.eta_p * grad.w, b=pp.b + pp.eta_p * grad.b)


def aar(per_episode_abs_payouts: Sequence[float]) -> float:
    """Average additional rewards per round: mean over episodes of sum_i |r_i^p|."""
    seq = list(per_episode_abs_payouts)
    if not seq:
        return 0.0
    return float(np.mean(seq))
