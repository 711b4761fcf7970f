"""The Coin Game: a 3x3 gridworld social dilemma, plus small actor-critic learners.

Two agents (red and blue) collect coins. Picking up any coin earns +1;
picking up the other agent's color costs that agent 2. The cooperative
strategy is to leave wrong-colored coins alone. A pair of one-hidden-layer
networks with softmax policies and full-state value heads (centralized
critics) trains on episode returns with manual backpropagation; scripted
and random policies provide baselines.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

GRID = 3
EPISODE_LENGTH = 100
N_CELLS = GRID * GRID
RED, BLUE = 0, 1
#: Cardinal moves in canonical order.
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))  # up, down, left, right
MOVE_NAMES = ("up", "down", "left", "right")
WRONG_COLOR_PENALTY = -2.0
PICKUP_REWARD = 1.0
DEFAULT_LR = 0.000083333
DISCOUNT = 0.99
HIDDEN_UNITS = 64


@dataclass(frozen=True)
class CoinGameState:
    red_pos: tuple[int, int]
    blue_pos: tuple[int, int]
    coin_pos: tuple[int, int]
    coin_color: int  # RED or BLUE
    step: int


class Pickup(NamedTuple):
    player: int
    coin_color: int


class StepRecord(NamedTuple):
    state: CoinGameState
    actions: tuple[int, int]
    rewards: tuple[float, float]
    pickups: tuple[Pickup, ...]


@dataclass
class EpisodeLog:
    initial_state: CoinGameState
    steps: list[StepRecord]

    def total_rewards(self) -> tuple[float, float]:
        r = [0.0, 0.0]
        for rec in self.steps:
            r[0] += rec.rewards[0]
            r[1] += rec.rewards[1]
        return r[0], r[1]

    def pickup_count(self) -> int:
        return sum(len(rec.pickups) for rec in self.steps)


def _cell(index: int) -> tuple[int, int]:
    return divmod(int(index), GRID)


def _random_free_cell(rng: np.random.Generator, occupied: Sequence[tuple[int, int]]) -> tuple[int, int]:
    free = [_cell(i) for i in range(N_CELLS) if _cell(i) not in occupied]
    return free[rng.integers(len(free))]


def reset(rng: np.random.Generator) -> CoinGameState:
    """Fresh episode: distinct agent cells, a coin elsewhere, random color."""
    red = _cell(rng.integers(N_CELLS))
    blue = _random_free_cell(rng, [red])
    coin = _random_free_cell(rng, [red, blue])
    color = int(rng.integers(2))
    return CoinGameState(red_pos=red, blue_pos=blue, coin_pos=coin, coin_color=color, step=0)


def _move(pos: tuple[int, int], action: int) -> tuple[int, int]:
    dr, dc = MOVES[action]
    return (min(max(pos[0] + dr, 0), GRID - 1), min(max(pos[1] + dc, 0), GRID - 1))


def step(state: CoinGameState, a_red: int, a_blue: int,
         rng: np.random.Generator) -> tuple[CoinGameState, float, float, tuple[Pickup, ...]]:
    """Simultaneous moves with boundary clamping; pickups may respawn the coin.

    Raises on a terminated episode. The rng drives the coin respawn only.
    """
    if state.step >= EPISODE_LENGTH:
        raise RuntimeError(f"episode already terminated at step {state.step}")
    red = _move(state.red_pos, a_red)
    blue = _move(state.blue_pos, a_blue)
    r_red = r_blue = 0.0
    pickups: list[Pickup] = []
    if red == state.coin_pos:
        pickups.append(Pickup(RED, state.coin_color))
        r_red += PICKUP_REWARD
        if state.coin_color != RED:
            r_blue += WRONG_COLOR_PENALTY
    if blue == state.coin_pos:
        pickups.append(Pickup(BLUE, state.coin_color))
        r_blue += PICKUP_REWARD
        if state.coin_color != BLUE:
            r_red += WRONG_COLOR_PENALTY
    if pickups:
        coin_pos = _random_free_cell(rng, [red, blue])
        coin_color = int(rng.integers(2))
    else:
        coin_pos, coin_color = state.coin_pos, state.coin_color
    new_state = CoinGameState(red_pos=red, blue_pos=blue, coin_pos=coin_pos,
                              coin_color=coin_color, step=state.step + 1)
    return new_state, r_red, r_blue, tuple(pickups)


def encode_state(state: CoinGameState) -> np.ndarray:
    """Four stacked 3x3 binary planes (red agent, blue agent, red coin, blue coin)."""
    planes = np.zeros((4, GRID, GRID))
    planes[0][state.red_pos] = 1.0
    planes[1][state.blue_pos] = 1.0
    planes[2 + state.coin_color][state.coin_pos] = 1.0
    return planes.reshape(-1)


def own_color_fraction(log: EpisodeLog, player: int) -> float | None:
    """Right-color pickups over total pickups by the player; None without pickups."""
    total = 0
    right = 0
    for rec in log.steps:
        for pickup in rec.pickups:
            if pickup.player == player:
                total += 1
                if pickup.coin_color == player:
                    right += 1
    if total == 0:
        return None
    return right / total


# ---------------------------------------------------------------------------
# policies


def random_policy_action(rng: np.random.Generator) -> int:
    return int(rng.integers(4))


def greedy_color_blind_action(state: CoinGameState, player: int) -> int:
    """Shortest-path move toward the coin regardless of color.

    Ties break in canonical move order, so the policy is deterministic.
    """
    pos = state.red_pos if player == RED else state.blue_pos
    best_action = 0
    best_dist = None
    for action in range(4):
        nxt = _move(pos, action)
        dist = abs(nxt[0] - state.coin_pos[0]) + abs(nxt[1] - state.coin_pos[1])
        if best_dist is None or dist < best_dist:
            best_dist = dist
            best_action = action
    return best_action


def play_episode(policy_red, policy_blue, rng: np.random.Generator) -> EpisodeLog:
    """Roll one episode with callables (state, player, rng) -> action."""
    state = reset(rng)
    log = EpisodeLog(initial_state=state, steps=[])
    for _ in range(EPISODE_LENGTH):
        a_red = policy_red(state, RED, rng)
        a_blue = policy_blue(state, BLUE, rng)
        nxt, r_red, r_blue, pickups = step(state, a_red, a_blue, rng)
        log.steps.append(StepRecord(state, (a_red, a_blue), (r_red, r_blue), pickups))
        state = nxt
    return log


# ---------------------------------------------------------------------------
# tiny actor-critic networks


class TinyNet:
    """One hidden layer (rectifier), a 4-way policy head and a value head."""

    def __init__(self, rng: np.random.Generator, n_inputs: int = 4 * N_CELLS,
                 hidden: int = HIDDEN_UNITS) -> None:
        self.w1 = rng.normal(0.0, np.sqrt(2.0 / n_inputs), (n_inputs, hidden))
        self.b1 = np.zeros(hidden)
        self.wp = rng.normal(0.0, np.sqrt(2.0 / hidden), (hidden, 4))
        self.bp = np.zeros(4)
        self.wv = rng.normal(0.0, np.sqrt(2.0 / hidden), hidden)
        self.bv = 0.0

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (hidden activations, action probabilities, values) for a batch."""
        x = np.atleast_2d(x)
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        logits = h @ self.wp + self.bp
        logits = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        probs = e / e.sum(axis=1, keepdims=True)
        values = h @ self.wv + self.bv
        return h, probs, values

    def policy(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[1][0]

    def value(self, x: np.ndarray) -> float:
        return float(self.forward(x)[2][0])

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.wp, self.bp, self.wv]


class EpisodeBatch(NamedTuple):
    """Per-agent training view of one episode."""

    states: np.ndarray    # (T, 36)
    actions: np.ndarray   # (T,) this agent's actions
    returns: np.ndarray   # (T,) discounted returns of this agent's rewards


def discounted_returns(rewards: Sequence[float], gamma: float = DISCOUNT) -> np.ndarray:
    out = np.empty(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def episode_batch(log: EpisodeLog, player: int, gamma: float = DISCOUNT) -> EpisodeBatch:
    states = np.array([encode_state(rec.state) for rec in log.steps])
    actions = np.array([rec.actions[player] for rec in log.steps], dtype=int)
    rewards = [rec.rewards[player] for rec in log.steps]
    return EpisodeBatch(states, actions, discounted_returns(rewards, gamma))


def actor_critic_gradients(net: TinyNet, batch: EpisodeBatch):
    """Ascent gradients of sum_t log pi(a_t) * A_t - 0.5 * sum_t (V_t - G_t)^2.

    The advantage A_t = G_t - V_t is treated as a constant weight; manual
    backpropagation through the shared hidden layer.
    """
    x, actions, returns = batch.states, batch.actions, batch.returns
    h, probs, values = net.forward(x)
    adv = returns - values

    d_logits = -probs * adv[:, None]
    d_logits[np.arange(len(actions)), actions] += adv
    d_values = returns - values  # descent on 0.5*(V-G)^2 == ascent along G-V

    g_wp = h.T @ d_logits
    g_bp = d_logits.sum(axis=0)
    g_wv = h.T @ d_values
    g_bv = d_values.sum()

    d_h = d_logits @ net.wp.T + d_values[:, None] * net.wv[None, :]
    d_pre = d_h * (h > 0)
    g_w1 = x.T @ d_pre
    g_b1 = d_pre.sum(axis=0)
    return g_w1, g_b1, g_wp, g_bp, g_wv, g_bv


def actor_critic_update(nets: tuple[TinyNet, TinyNet], logs: Sequence[EpisodeLog],
                        lr: float = DEFAULT_LR, gamma: float = DISCOUNT) -> tuple[TinyNet, TinyNet]:
    """Apply summed episode gradients to both agents' networks in place."""
    for player, net in enumerate(nets):
        grads = None
        for log in logs:
            g = actor_critic_gradients(net, episode_batch(log, player, gamma))
            grads = g if grads is None else tuple(a + b for a, b in zip(grads, g))
        g_w1, g_b1, g_wp, g_bp, g_wv, g_bv = grads
        net.w1 += lr * g_w1
        net.b1 += lr * g_b1
        net.wp += lr * g_wp
        net.bp += lr * g_bp
        net.wv += lr * g_wv
        net.bv += lr * g_bv
    return nets


# ---------------------------------------------------------------------------
# training loop


class EpisodeMetrics(NamedTuple):
    episode: int
    total_reward: float
    reward_red: float
    reward_blue: float
    own_color_frac_red: float | None
    own_color_frac_blue: float | None
    pickups: int


class TrainResult(NamedTuple):
    metrics: list[EpisodeMetrics]
    nets: tuple[TinyNet, TinyNet]


def net_policy(net: TinyNet):
    def policy(state: CoinGameState, player: int, rng: np.random.Generator) -> int:
        probs = net.policy(encode_state(state))
        return int(rng.choice(4, p=probs))
    return policy


def train(episodes: int = 5000, seed: int = 0, lr: float = DEFAULT_LR,
          out_dir: str | None = None, gamma: float = DISCOUNT) -> TrainResult:
    """Train the actor-critic pair on selfish rewards; one CSV row per episode."""
    root = np.random.SeedSequence(seed)
    env_ss, red_ss, blue_ss, act_ss = root.spawn(4)
    env_rng = np.random.default_rng(env_ss)
    act_rng = np.random.default_rng(act_ss)
    nets = (TinyNet(np.random.default_rng(red_ss)), TinyNet(np.random.default_rng(blue_ss)))

    metrics: list[EpisodeMetrics] = []
    for ep in range(episodes):
        state = reset(env_rng)
        log = EpisodeLog(initial_state=state, steps=[])
        for _ in range(EPISODE_LENGTH):
            p_red = nets[RED].policy(encode_state(state))
            p_blue = nets[BLUE].policy(encode_state(state))
            a_red = int(act_rng.choice(4, p=p_red))
            a_blue = int(act_rng.choice(4, p=p_blue))
            nxt, r_red, r_blue, pickups = step(state, a_red, a_blue, env_rng)
            log.steps.append(StepRecord(state, (a_red, a_blue), (r_red, r_blue), pickups))
            state = nxt
        actor_critic_update(nets, [log], lr=lr, gamma=gamma)
        r_red, r_blue = log.total_rewards()
        metrics.append(EpisodeMetrics(
            episode=ep,
            total_reward=r_red + r_blue,
            reward_red=r_red,
            reward_blue=r_blue,
            own_color_frac_red=own_color_fraction(log, RED),
            own_color_frac_blue=own_color_fraction(log, BLUE),
            pickups=log.pickup_count(),
        ))

    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / "coingame_metrics.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "total_reward", "reward_red", "reward_blue",
                             "own_color_frac_red", "own_color_frac_blue"])
            for m in metrics:
                writer.writerow([
                    m.episode, "%.17g" % m.total_reward,
                    "%.17g" % m.reward_red, "%.17g" % m.reward_blue,
                    "" if m.own_color_frac_red is None else "%.17g" % m.own_color_frac_red,
                    "" if m.own_color_frac_blue is None else "%.17g" % m.own_color_frac_blue,
                ])
    return TrainResult(metrics, nets)
