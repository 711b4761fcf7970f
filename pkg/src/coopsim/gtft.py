"""Gradual tit-for-tat: cooperativeness-weighted play and opponent estimation.

An agent with cooperativeness weight alpha maximizes V1 + alpha*V2; its
policy is a softmax best response to the opponent's estimated strategy. The
opponent's weight beta is estimated either by Bayesian updates on observed
actions or by inverting the value function at the received reward level,
and the agent mirrors the estimate (alpha = beta_hat + epsilon).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .games import Action, GamePayoffs, expected_values, game_by_name, payoff
from .learners import RunningBaseline, coop_prob, logit

DEFAULT_TEMPERATURE = 0.05
DEFAULT_EPSILON = 0.05
DEFAULT_EWMA_TAU = 0.05
DEFAULT_GRID_POINTS = 101
_DAMPING_FLOOR = 1.0 / 32.0


def weighted_value(g: GamePayoffs, alpha: float, p: float, q: float) -> float:
    """V1 + alpha * V2 at cooperation probabilities (p, q)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0,1], got {alpha}")
    v1, v2 = expected_values(g, p, q)
    return v1 + alpha * v2


def induced_policy(g: GamePayoffs, alpha: float, opp_coop_prob: float,
                   temperature: float = DEFAULT_TEMPERATURE) -> float:
    """P(C) of an alpha-weighted agent against a mixed opponent strategy.

    Softmax over own actions of Q_w(a) = E[u1(a, a2) + alpha*u2(a, a2)]
    under a2 ~ opp_coop_prob.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    q = opp_coop_prob
    q_coop = q * (g.R + alpha * g.R) + (1 - q) * (g.S + alpha * g.T)
    q_defect = q * (g.T + alpha * g.S) + (1 - q) * (g.P + alpha * g.P)
    return coop_prob((q_coop - q_defect) / temperature)


class CoopLevelValues(NamedTuple):
    v1: float
    v2: float
    converged: bool


def value_of_coop_levels(g: GamePayoffs, alpha: float, beta: float,
                         temperature: float = DEFAULT_TEMPERATURE,
                         tol: float = 1e-10, max_iter: int = 10_000) -> CoopLevelValues:
    """Expected payoffs at the mutual best-response fixed point of (alpha, beta).

    Damped simultaneous iteration from (0.5, 0.5). The damping starts at 0.5
    and halves whenever a period-2 oscillation is detected (low temperatures
    make the response map expansive near interior fixed points), down to a
    floor of 1/32. Non-convergence at the cap returns the last iterate with
    converged=False.
    """
    p = q = 0.5
    damping = 0.5
    prev_dp = prev_dq = 0.0
    prev_change = math.inf
    converged = False
    for _ in range(max_iter):
        resp_p = induced_policy(g, alpha, q, temperature)
        resp_q = induced_policy(g, beta, p, temperature)
        new_p = (1 - damping) * p + damping * resp_p
        new_q = (1 - damping) * q + damping * resp_q
        dp, dq = new_p - p, new_q - q
        change = max(abs(dp), abs(dq))
        p, q = new_p, new_q
        if change < tol:
            converged = True
            break
        oscillating = (dp * prev_dp < 0 or dq * prev_dq < 0) and change > 0.9 * prev_change
        if oscillating and damping > _DAMPING_FLOOR:
            damping = max(damping / 2, _DAMPING_FLOOR)
        prev_dp, prev_dq, prev_change = dp, dq, change
    v1, v2 = expected_values(g, p, q)
    return CoopLevelValues(v1, v2, converged)


# ---------------------------------------------------------------------------
# belief over the opponent's cooperativeness


@dataclass(frozen=True)
class CoopBelief:
    """Discretized distribution over the opponent's cooperativeness in [0, 1]."""

    grid: np.ndarray
    mass: np.ndarray
    was_reset: bool = False

    @classmethod
    def uniform(cls, points: int = DEFAULT_GRID_POINTS) -> "CoopBelief":
        grid = np.linspace(0.0, 1.0, points)
        return cls(grid=grid, mass=np.full(points, 1.0 / points))


def bayes_update(belief: CoopBelief, observed: Action, g: GamePayoffs,
                 own_coop_prob_model: Callable[[np.ndarray], np.ndarray]) -> CoopBelief:
    """Pointwise likelihood product and renormalization over the belief grid.

    ``own_coop_prob_model`` maps the grid of beta values to P(C | beta). A
    posterior that underflows to zero everywhere resets to uniform with
    was_reset=True.
    """
    pc = np.clip(np.asarray(own_coop_prob_model(belief.grid), dtype=float), 0.0, 1.0)
    likelihood = pc if Action(observed) == Action.C else 1.0 - pc
    post = belief.mass * likelihood
    total = post.sum()
    if not np.isfinite(total) or total <= 0.0:
        n = len(belief.grid)
        return CoopBelief(grid=belief.grid, mass=np.full(n, 1.0 / n), was_reset=True)
    return CoopBelief(grid=belief.grid, mass=post / total, was_reset=False)


def bernoulli_model() -> Callable[[np.ndarray], np.ndarray]:
    """Direct cooperativeness model: beta itself is the cooperation probability."""
    return lambda grid: grid


def induced_model(g: GamePayoffs, opp_coop_prob: float,
                  temperature: float = DEFAULT_TEMPERATURE) -> Callable[[np.ndarray], np.ndarray]:
    """Self-model likelihood: one's own induced policy at cooperativeness beta."""

    def model(grid: np.ndarray) -> np.ndarray:
        q = opp_coop_prob
        base = q * (g.R - g.T) + (1 - q) * (g.S - g.P)
        slope = q * (g.R - g.S) + (1 - q) * (g.T - g.P)
        x = (base + grid * slope) / temperature
        return 1.0 / (1.0 + np.exp(-np.clip(x, -700, 700)))

    return model


def point_estimate(belief: CoopBelief) -> float:
    """Posterior mean over the grid."""
    return float(belief.mass @ belief.grid)


def map_estimate(belief: CoopBelief) -> float:
    """Posterior mode (logged alongside the mean for comparison)."""
    return float(belief.grid[int(np.argmax(belief.mass))])


# ---------------------------------------------------------------------------
# reward-based estimation


def ewma_return(G_prev: float | None, r: float, tau: float = DEFAULT_EWMA_TAU) -> float:
    """Time-weighted average reward; the first observation initializes it."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0,1], got {tau}")
    if G_prev is None:
        return r
    return tau * r + (1 - tau) * G_prev


class EstimateResult(NamedTuple):
    beta_hat: float
    monotone_ok: bool


def reward_based_estimate(g: GamePayoffs, alpha: float, G: float,
                          temperature: float = DEFAULT_TEMPERATURE,
                          tol: float = 1e-6) -> EstimateResult:
    """Invert beta -> V1(alpha, beta) at the observed average reward G.

    V1 is non-decreasing in beta for the induced-policy map (verified
    numerically); G below the range estimates 0 and above the range 1.
    Bisection stops when the bracket is narrower than tol; a bracket value
    falling outside the endpoint values flags the estimate as suspect.
    """
    v_bottom = value_of_coop_levels(g, alpha, 0.0, temperature).v1
    v_top = value_of_coop_levels(g, alpha, 1.0, temperature).v1
    monotone_ok = v_top >= v_bottom - 1e-9
    if G <= v_bottom:
        return EstimateResult(0.0, monotone_ok)
    if G >= v_top:
        return EstimateResult(1.0, monotone_ok)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v_mid = value_of_coop_levels(g, alpha, mid, temperature).v1
        if v_mid < v_bottom - 1e-9 or v_mid > v_top + 1e-9:
            monotone_ok = False
        if v_mid < G:
            lo = mid
        else:
            hi = mid
    return EstimateResult(0.5 * (lo + hi), monotone_ok)


def mirror_alpha(beta_hat: float, epsilon: float) -> float:
    """Mirror the estimated cooperativeness with benefit of the doubt."""
    return min(max(beta_hat + epsilon, 0.0), 1.0)


# ---------------------------------------------------------------------------
# agents and tournaments


class GtftAgent:
    """Mirrors the opponent's estimated cooperativeness each round."""

    def __init__(self, g: GamePayoffs, estimator: str = "action-bayes",
                 epsilon: float = DEFAULT_EPSILON,
                 temperature: float = DEFAULT_TEMPERATURE,
                 tau: float = DEFAULT_EWMA_TAU,
                 likelihood: str = "bernoulli",
                 grid_points: int = DEFAULT_GRID_POINTS) -> None:
        if estimator not in ("action-bayes", "reward-ewma"):
            raise ValueError(f"unknown estimator {estimator!r}")
        if likelihood not in ("bernoulli", "induced"):
            raise ValueError(f"unknown likelihood model {likelihood!r}")
        self.g = g
        self.estimator = estimator
        self.epsilon = epsilon
        self.temperature = temperature
        self.tau = tau
        self.likelihood = likelihood
        self.belief = CoopBelief.uniform(grid_points)
        self.beta_hat = point_estimate(self.belief)
        self.alpha = mirror_alpha(self.beta_hat, epsilon)
        self.G: float | None = None
        self._own_p = 0.5

    def act(self, rng: np.random.Generator) -> Action:
        opp_p = self._opponent_coop_estimate()
        p = induced_policy(self.g, self.alpha, opp_p, self.temperature)
        self._own_p = p
        return Action.C if rng.random() < p else Action.D

    def observe(self, opp_action: Action, my_reward: float) -> None:
        if self.estimator == "action-bayes":
            model = (
                bernoulli_model()
                if self.likelihood == "bernoulli"
                else induced_model(self.g, self._own_p, self.temperature)
            )
            self.belief = bayes_update(self.belief, opp_action, self.g, model)
            self.beta_hat = point_estimate(self.belief)
        else:
            self.G = ewma_return(self.G, my_reward, self.tau)
            self.beta_hat = reward_based_estimate(
                self.g, self.alpha, self.G, self.temperature
            ).beta_hat
        self.alpha = mirror_alpha(self.beta_hat, self.epsilon)

    def _opponent_coop_estimate(self) -> float:
        if self.likelihood == "induced":
            return induced_policy(self.g, self.beta_hat, self._own_p, self.temperature)
        return self.beta_hat


class AlwaysCooperate:
    alpha = None
    beta_hat = None

    def act(self, rng: np.random.Generator) -> Action:
        return Action.C

    def observe(self, opp_action: Action, my_reward: float) -> None:
        pass


class AlwaysDefect:
    alpha = None
    beta_hat = None

    def act(self, rng: np.random.Generator) -> Action:
        return Action.D

    def observe(self, opp_action: Action, my_reward: float) -> None:
        pass


class NaiveLearnerAgent:
    """Plain sigmoid REINFORCE learner, unaware of cooperativeness weights."""

    alpha = None
    beta_hat = None

    def __init__(self, eta: float = 0.01, init_coop_prob: float = 0.25) -> None:
        self.theta = logit(init_coop_prob)
        self.eta = eta
        self.baseline = RunningBaseline()
        self._last: tuple[Action, float] | None = None

    def act(self, rng: np.random.Generator) -> Action:
        p = coop_prob(self.theta)
        action = Action.C if rng.random() < p else Action.D
        self._last = (action, p)
        return action

    def observe(self, opp_action: Action, my_reward: float) -> None:
        action, p = self._last
        base = my_reward if self.baseline.value is None else self.baseline.value
        glp = 1.0 - p if action == Action.C else -p
        self.theta += self.eta * glp * (my_reward - base)
        self.baseline.update(my_reward)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    action_a: Action
    action_b: Action
    reward_a: float
    reward_b: float
    alpha_a: float | None
    beta_a: float | None
    alpha_b: float | None
    beta_b: float | None
    welfare: float


def play_iterated(agent_a, agent_b, g: GamePayoffs, rounds: int,
                  rng: np.random.Generator, welfare: str = "sum") -> list[RoundRecord]:
    """Iterated play between two stateful agents; welfare is a logged diagnostic."""
    records = []
    for t in range(rounds):
        a = agent_a.act(rng)
        b = agent_b.act(rng)
        r_a, r_b = payoff(g, a, b)
        agent_a.observe(b, r_a)
        agent_b.observe(a, r_b)
        diag = r_a * r_b if welfare == "nash" else r_a + r_b
        records.append(RoundRecord(t, a, b, r_a, r_b,
                                   agent_a.alpha, agent_a.beta_hat,
                                   agent_b.alpha, agent_b.beta_hat, diag))
    return records


def default_roster(g: GamePayoffs, epsilon: float = DEFAULT_EPSILON,
                   temperature: float = DEFAULT_TEMPERATURE) -> dict[str, Callable[[], object]]:
    return {
        "gtft-bayes": lambda: GtftAgent(g, "action-bayes", epsilon, temperature),
        "gtft-reward": lambda: GtftAgent(g, "reward-ewma", epsilon, temperature),
        "always-c": AlwaysCooperate,
        "always-d": AlwaysDefect,
        "naive-learner": NaiveLearnerAgent,
    }


def run_tournament(game_name: str = "pd", rounds: int = 1000, seed: int = 0,
                   epsilon: float = DEFAULT_EPSILON,
                   temperature: float = DEFAULT_TEMPERATURE,
                   welfare: str = "sum",
                   out_dir: str | None = None) -> dict[str, dict[str, float]]:
    """Round-robin (including self-play) over the default roster.

    Returns per-pairing means; writes one CSV per pairing when out_dir is set.
    """
    g = game_by_name(game_name)
    roster = default_roster(g, epsilon, temperature)
    names = list(roster)
    root = np.random.SeedSequence(seed)
    results: dict[str, dict[str, float]] = {}
    out_path = Path(out_dir) if out_dir else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    pair_seeds = root.spawn(len(names) * (len(names) + 1) // 2)
    k = 0
    for i, name_a in enumerate(names):
        for name_b in names[i:]:
            rng = np.random.default_rng(pair_seeds[k])
            k += 1
            records = play_iterated(roster[name_a](), roster[name_b](), g, rounds, rng,
                                    welfare=welfare)
            key = f"{name_a}_vs_{name_b}"
            coop_a = np.mean([r.action_a == Action.C for r in records])
            coop_b = np.mean([r.action_b == Action.C for r in records])
            results[key] = {
                "mean_reward_a": float(np.mean([r.reward_a for r in records])),
                "mean_reward_b": float(np.mean([r.reward_b for r in records])),
                "coop_rate_a": float(coop_a),
                "coop_rate_b": float(coop_b),
            }
            if out_path is not None:
                with open(out_path / f"{key}.csv", "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["round", "action_a", "action_b", "reward_a", "reward_b",
                                     "alpha_a", "beta_a", "alpha_b", "beta_b", "welfare"])
                    for r in records:
                        writer.writerow([
                            r.round, r.action_a.name, r.action_b.name,
                            "%.17g" % r.reward_a, "%.17g" % r.reward_b,
                            "" if r.alpha_a is None else "%.17g" % r.alpha_a,
                            "" if r.beta_a is None else "%.17g" % r.beta_a,
                            "" if r.alpha_b is None else "%.17g" % r.alpha_b,
                            "" if r.beta_b is None else "%.17g" % r.beta_b,
                            "%.17g" % r.welfare,
                        ])
    return results


# ---------------------------------------------------------------------------
# monotonicity diagnostics


@dataclass
class MonotonicityReport:
    """Grid check of the value function's monotonicity in (alpha, beta)."""

    game: GamePayoffs
    temperature: float
    grid: np.ndarray
    v1: np.ndarray
    welfare: np.ndarray
    all_converged: bool
    v1_alpha_violations: list[tuple[float, float, float]] = field(default_factory=list)
    v1_beta_violations: list[tuple[float, float, float]] = field(default_factory=list)
    w_alpha_violations: list[tuple[float, float, float]] = field(default_factory=list)
    w_beta_violations: list[tuple[float, float, float]] = field(default_factory=list)


def monotonicity_report(g: GamePayoffs, temperature: float = DEFAULT_TEMPERATURE,
                        grid_points: int = 21, tol: float = 1e-9) -> MonotonicityReport:
    """Check V1 non-increasing in alpha / non-decreasing in beta and W
    non-decreasing in both, on a uniform (alpha, beta) grid.

    Violations are recorded as (alpha, beta, magnitude) of the offending
    step; callers decide which claims to assert (the alpha-monotonicity of
    V1 fails in coordination games, where raising one's own weight tips the
    fixed point to mutual cooperation and raises one's own value).
    """
    grid = np.linspace(0.0, 1.0, grid_points)
    v1 = np.empty((grid_points, grid_points))
    w = np.empty((grid_points, grid_points))
    all_converged = True
    for i, alpha in enumerate(grid):
        for j, beta in enumerate(grid):
            res = value_of_coop_levels(g, alpha, beta, temperature)
            v1[i, j] = res.v1
            w[i, j] = res.v1 + res.v2
            all_converged &= res.converged
    report = MonotonicityReport(g, temperature, grid, v1, w, all_converged)
    for i in range(grid_points - 1):
        for j in range(grid_points):
            step = v1[i + 1, j] - v1[i, j]
            if step > tol:
                report.v1_alpha_violations.append((grid[i], grid[j], step))
            if w[i + 1, j] - w[i, j] < -tol:
                report.w_alpha_violations.append((grid[i], grid[j], w[i + 1, j] - w[i, j]))
    for i in range(grid_points):
        for j in range(grid_points - 1):
            step = v1[i, j + 1] - v1[i, j]
            if step < -tol:
                report.v1_beta_violations.append((grid[i], grid[j], step))
            if w[i, j + 1] - w[i, j] < -tol:
                report.w_beta_violations.append((grid[i], grid[j], w[i, j + 1] - w[i, j]))
    return report
