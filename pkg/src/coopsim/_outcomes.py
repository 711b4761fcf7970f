"""Joint-outcome bookkeeping for N sigmoid players.

Outcomes are indexed by the big-endian binary encoding of the action profile
(player 0 most significant, C=0, D=1), so for two players the index is
2*a1 + a2. All functions are pure and operate on float64 arrays.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _bits_cached(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    shifts = np.arange(n - 1, -1, -1)
    bits = (idx[None, :] >> shifts[:, None]) & 1
    bits.setflags(write=False)
    return bits


def outcome_bits(n: int) -> np.ndarray:
    """Action bit of each player in each outcome, shape (n, 2**n); C=0, D=1."""
    return _bits_cached(n)


def outcome_probs(coop_probs: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Probability of each joint outcome given per-player P(C), shape (2**n,)."""
    p = np.asarray(coop_probs, dtype=float)
    factors = np.where(bits == 0, p[:, None], 1.0 - p[:, None])
    return factors.prod(axis=0)


def outcome_scores(coop_probs: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """d log Pr(outcome) / d theta_i for each player and outcome, shape (n, 2**n).

    For a sigmoid policy the score is 1-p_i when player i cooperates in the
    outcome and -p_i when it defects.
    """
    p = np.asarray(coop_probs, dtype=float)
    return np.where(bits == 0, 1.0 - p[:, None], -p[:, None])
