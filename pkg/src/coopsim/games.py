"""Matrix game social dilemmas: payoff structures, classification and evaluation.

Covers symmetric 2-player matrix games described by the four payoffs
(R, P, T, S) and an N-player Prisoner's Dilemma whose payoffs interpolate
linearly in the number of cooperating opponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np


class Action(IntEnum):
    """Binary choice, ordered so that the joint outcome index is 2*a1 + a2."""

    C = 0
    D = 1


#: Joint outcome indices for 2-player games, in canonical order.
CC, CD, DC, DD = 0, 1, 2, 3


@dataclass(frozen=True)
class GamePayoffs:
    """Symmetric 2-player matrix game held as its four scalar payoffs.

    R: reward for mutual cooperation
    P: punishment for mutual defection
    T: temptation of defecting against a cooperator
    S: sucker outcome of cooperating against a defector

    Fear and greed are derived views and never stored.
    """

    R: float
    P: float
    T: float
    S: float

    def fear(self) -> float:
        """Motivation to avoid being exploited by a defector: P - S."""
        return self.P - self.S

    def greed(self) -> float:
        """Motivation to exploit a cooperator: T - R."""
        return self.T - self.R

    def payoff_table(self) -> np.ndarray:
        """Per-player payoffs over the four joint outcomes, shape (2, 4).

        Column order follows the canonical outcome index (CC, CD, DC, DD).
        """
        return np.array(
            [
                [self.R, self.S, self.T, self.P],
                [self.R, self.T, self.S, self.P],
            ],
            dtype=float,
        )


@dataclass(frozen=True)
class ActionProfile:
    """Joint action of all players in an N-player game."""

    actions: tuple[Action, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(Action(a) for a in self.actions))

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class MultiPlayerPD:
    """N-player Prisoner's Dilemma anchored at all-C=3, all-D=1, sole-D=4, sole-C=0.

    Intermediate outcomes are linear in the number of cooperating opponents.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"player count must be >= 2, got {self.n}")

    def payoff_table(self) -> np.ndarray:
        """Per-player payoffs over all 2**n joint outcomes, shape (n, 2**n).

        Outcome index is the big-endian binary encoding of the action profile
        (player 0 is the most significant bit, C=0, D=1).
        """
        n = self.n
        table = np.empty((n, 2 ** n), dtype=float)
        for outcome in range(2 ** n):
            bits = [(outcome >> (n - 1 - j)) & 1 for j in range(n)]
            profile = ActionProfile(tuple(Action(b) for b in bits))
            for i in range(n):
                table[i, outcome] = multi_player_payoff(self, i, profile)
        return table


def from_fear_greed(fear: float, greed: float) -> GamePayoffs:
    """Build a game with R=3, P=1 from its fear and greed levels."""
    return GamePayoffs(R=3.0, P=1.0, T=3.0 + greed, S=1.0 - fear)


#: The three canonical social dilemmas, selectable by name.
NAMED_GAMES = {
    "pd": from_fear_greed(fear=1.0, greed=1.0),
    "chicken": from_fear_greed(fear=-1.0, greed=0.5),
    "staghunt": from_fear_greed(fear=1.0, greed=-1.0),
}


def game_by_name(name: str) -> GamePayoffs:
    key = name.lower().replace("-", "").replace("_", "")
    if key not in NAMED_GAMES:
        raise ValueError(f"unknown game {name!r}; choose from {sorted(NAMED_GAMES)}")
    return NAMED_GAMES[key]


def is_social_dilemma(g: GamePayoffs) -> bool:
    """True iff the game satisfies the four social-dilemma conditions.

    Mutual cooperation must beat mutual defection, being exploited, and an
    even chance of unilateral defection; and there must be some reason to
    defect (greed T>R or fear P>S).
    """
    return (
        g.R > g.P
        and g.R > g.S
        and g.R > (g.T + g.S) / 2.0
        and (g.T > g.R or g.P > g.S)
    )


def payoff(g: GamePayoffs, a1: Action, a2: Action) -> tuple[float, float]:
    """Payoffs (player1, player2) for a joint action."""
    table = {
        (Action.C, Action.C): (g.R, g.R),
        (Action.C, Action.D): (g.S, g.T),
        (Action.D, Action.C): (g.T, g.S),
        (Action.D, Action.D): (g.P, g.P),
    }
    return table[(Action(a1), Action(a2))]


def expected_values(g: GamePayoffs, p: float, q: float) -> tuple[float, float]:
    """Expected payoffs when players cooperate with probabilities p and q.

    Raises ValueError when either probability is outside [0, 1].
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"cooperation probabilities must lie in [0,1], got p={p}, q={q}")
    v1 = p * q * g.R + p * (1 - q) * g.S + (1 - p) * q * g.T + (1 - p) * (1 - q) * g.P
    v2 = p * q * g.R + p * (1 - q) * g.T + (1 - p) * q * g.S + (1 - p) * (1 - q) * g.P
    return v1, v2


def multi_player_payoff(game: MultiPlayerPD, i: int, profile: ActionProfile) -> float:
    """Payoff to player i under a joint action profile.

    With m cooperators among the other n-1 players: 3m/(n-1) when i
    cooperates, 1 + 3m/(n-1) when i defects.
    """
    n = game.n
    if len(profile) != n:
        raise ValueError(f"profile length {len(profile)} != player count {n}")
    if not 0 <= i < n:
        raise ValueError(f"player index {i} out of range for {n} players")
    m = sum(1 for j, a in enumerate(profile.actions) if j != i and a == Action.C)
    base = 3.0 * m / (n - 1)
    return base if profile.actions[i] == Action.C else 1.0 + base


def effective_payoffs(
    g: GamePayoffs, planner_rewards_per_outcome: Sequence[Sequence[float]]
) -> list[GamePayoffs]:
    """Per-player view of the game as modified by planner rewards.

    ``planner_rewards_per_outcome[outcome][player]`` gives the extra reward
    handed to each player in each of the four joint outcomes (canonical
    outcome order). Returns one GamePayoffs per player; fear()/greed() of
    each view give the modified incentive levels.
    """
    r = np.asarray(planner_rewards_per_outcome, dtype=float)
    if r.shape != (4, 2):
        raise ValueError(f"expected a 4x2 reward table, got shape {r.shape}")
    views = []
    for i in range(2):
        if i == 0:
            coop_vs_defect, defect_vs_coop = r[CD, 0], r[DC, 0]
        else:
            coop_vs_defect, defect_vs_coop = r[DC, 1], r[CD, 1]
        views.append(
            GamePayoffs(
                R=g.R + r[CC, i],
                P=g.P + r[DD, i],
                T=g.T + defect_vs_coop,
                S=g.S + coop_vs_defect,
            )
        )
    return views
