"""Render experiment CSV logs as figures.

Six figure kinds cover the experiment dashboards: cooperation probability
curves, the planner's per-outcome rewards, modified fear/greed levels,
cumulative planner payouts, multi-player cooperation curves, and Coin Game
metrics. Curves show the raw series overlaid with a trailing moving
average. Rendering never mutates the inputs; the plotted series equal the
CSV values exactly before smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

DEFAULT_WINDOW = 100

#: kind -> (y-axis label, column names drawn from each input CSV)
KINDS: dict[str, tuple[str, tuple[str, ...]]] = {
    "coop-prob": ("probability of cooperation", ("p1", "p2", "pcc")),
    "outcome-rewards": ("extra reward for player 1", ("rp1_cc", "rp1_cd", "rp1_dc", "rp1_dd")),
    "fear-greed": ("incentive level", ("fear_mod", "greed_mod")),
    "cumulative-rewards": ("cumulative |extra rewards|", ("rp_abs_cum",)),
    "multi-coop": ("mean probability of cooperation", ("mean_coop",)),
    "coingame-metrics": ("per-episode value", ("total_reward", "own_color_frac_red",
                                               "own_color_frac_blue")),
}


class MissingColumnError(KeyError):
    """A requested column is absent from a CSV header."""


class EmptyCsvError(ValueError):
    """An input CSV holds no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input logs, figure kind, smoothing window, output path."""

    inputs: tuple[str, ...]
    kind: str
    output: str
    window: int = DEFAULT_WINDOW

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {sorted(KINDS)}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.window < 1:
            raise ValueError("smoothing window must be >= 1")


def trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average; early entries average the available prefix."""
    if window == 1:
        return values.copy()
    out = np.empty_like(values, dtype=float)
    csum = np.cumsum(np.where(np.isnan(values), 0.0, values))
    counts = np.cumsum(~np.isnan(values))
    for t in range(len(values)):
        lo = max(0, t - window + 1)
        total = csum[t] - (csum[lo - 1] if lo > 0 else 0.0)
        n = counts[t] - (counts[lo - 1] if lo > 0 else 0)
        out[t] = total / n if n > 0 else np.nan
    return out


def _load_frame(path: str, columns: tuple[str, ...]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    if frame.empty:
        raise EmptyCsvError(f"{path}: no data rows")
    for col in columns:
        if col not in frame.columns:
            raise MissingColumnError(f"{path}: column {col!r} not in header {list(frame.columns)}")
    return frame


def collect_series(spec: FigureSpec) -> dict[str, np.ndarray]:
    """The raw data series that will be plotted, keyed by legend label."""
    _, columns = KINDS[spec.kind]
    series: dict[str, np.ndarray] = {}
    multi_input = len(spec.inputs) > 1
    for path in spec.inputs:
        frame = _load_frame(path, columns)
        stem = Path(path).stem
        for col in columns:
            label = f"{stem}:{col}" if multi_input else col
            series[label] = frame[col].to_numpy(dtype=float)
    return series


def render(spec: FigureSpec) -> dict[str, np.ndarray]:
    """Write the figure and return the plotted raw series by label."""
    ylabel, _ = KINDS[spec.kind]
    series = collect_series(spec)
    fig, ax = plt.subplots(figsize=(8, 5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k, (label, values) in enumerate(series.items()):
        color = colors[k % len(colors)]
        x = np.arange(len(values))
        ax.plot(x, values, color=color, alpha=0.25, linewidth=0.8)
        ax.plot(x, trailing_mean(values, spec.window), color=color, linewidth=1.6,
                label=label)
    ax.set_xlabel("episode")
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return series
