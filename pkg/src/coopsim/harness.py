"""Experiment orchestration: seeded runs, the episode loop, CSV logs, summaries.

A run plays many one-shot episodes of a matrix game between sigmoid learners,
optionally shaped by the planning agent, and logs per-episode metrics to CSV
with deterministic formatting (identical config and seed give identical
bytes). Seeds fan out over a worker pool; the summary aggregates per-seed
final metrics and is recomputable from the per-episode files (see audit).
"""

from __future__ import annotations

import csv
import dataclasses
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _outcomes
from .games import GamePayoffs, MultiPlayerPD, effective_payoffs, expected_values, from_fear_greed, game_by_name
from .learners import (
    RunningBaseline,
    SigmoidLearner,
    coop_prob,
    logit,
    mle_opponent_theta,
)
from .planner import (
    PlannerGrad,
    PlannerPolicy,
    clip_grad,
    exact_planner_grad,
    planner_step,
    sample_planner_action,
)

FLOAT_FORMAT = "%.17g"


class Adam:
    """Adaptive moment transform applied to raw gradients before stepping.

    Returns unit-scale directions; the update steps still multiply by the
    configured learning rates, so `optimizer = sgd` and `adam` share the
    same step-size semantics.
    """

    def __init__(self, shapes: Sequence[tuple[int, ...]], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def transform(self, grads: Sequence[np.ndarray]) -> list[np.ndarray]:
        self.t += 1
        out = []
        for k, g in enumerate(grads):
            g = np.asarray(g, dtype=float)
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / (1 - self.beta1 ** self.t)
            v_hat = self.v[k] / (1 - self.beta2 ** self.t)
            out.append(m_hat / (np.sqrt(v_hat) + self.eps))
        return out


@dataclass
class ExperimentConfig:
    """Validated knobs for one experiment; defaults follow the reference setup."""

    game: str = "pd"
    fear: float | None = None
    greed: float | None = None
    n_players: int = 2
    episodes: int = 4000
    seeds: int = 10
    seed_base: int = 0
    learner_mode: str = "sampled"  # "sampled" | "exact"
    eta: float = 0.01
    init_coop_prob: float = 0.25
    planner: bool = True
    mode: str = "exact"  # planner rule: "exact" | "estimated"
    eta_p: float = 0.01
    c: float = 3.0
    cost_alpha: float = 0.0002
    revenue_neutral: bool = False
    sigma: float = 0.3
    batch_size: int = 1
    est_decay: float = 1.0 / 64.0
    optimizer: str = "adam"  # "adam" | "sgd"
    grad_clip: float | None = None
    turn_off_at: int | None = None
    opponent_modeling: bool = False
    opponent_window: int = 50
    baseline_decay: float = 0.99
    workers: int = 1
    out: str | None = None

    def __post_init__(self) -> None:
        if self.learner_mode not in ("sampled", "exact"):
            raise ValueError(f"learner_mode must be sampled|exact, got {self.learner_mode!r}")
        if self.mode not in ("exact", "estimated"):
            raise ValueError(f"mode must be exact|estimated, got {self.mode!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be adam|sgd, got {self.optimizer!r}")
        if self.n_players < 2:
            raise ValueError("n_players must be >= 2")
        if self.n_players > 16:
            # exact enumeration over 2**n joint outcomes; 2**16 is the
            # practical ceiling for the per-episode loop
            raise ValueError("n_players above 16 is not supported")
        if self.episodes < 1 or self.seeds < 1:
            raise ValueError("episodes and seeds must be positive")
        if not 0.0 < self.init_coop_prob < 1.0:
            raise ValueError("init_coop_prob must lie strictly inside (0, 1)")
        if self.mode == "estimated" and self.sigma <= 0:
            raise ValueError("estimated mode requires sigma > 0")
        if self.revenue_neutral and self.n_players != 2:
            raise ValueError("revenue-neutral payouts are supported for 2 players only")

    def resolve_game(self) -> GamePayoffs:
        if self.fear is not None or self.greed is not None:
            if self.fear is None or self.greed is None:
                raise ValueError("fear and greed must be given together")
            return from_fear_greed(self.fear, self.greed)
        return game_by_name(self.game)


_BOOL_STRINGS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(name: str, text: str, annotation: str):
    text = text.strip()
    if annotation in ("float | None", "int | None", "str | None") and text.lower() in ("none", ""):
        return None
    if annotation.startswith("bool"):
        if text.lower() not in _BOOL_STRINGS:
            raise ValueError(f"config key {name}: expected a boolean, got {text!r}")
        return _BOOL_STRINGS[text.lower()]
    if annotation.startswith("int"):
        return int(text)
    if annotation.startswith("float"):
        return float(text)
    return text


def parse_config_text(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse flat `key = value` lines; unknown keys are rejected; overrides win."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in fields:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val, str(fields[key].type))
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = val
    return ExperimentConfig(**values)


def load_config(path: str | os.PathLike | None, overrides: dict | None = None) -> ExperimentConfig:
    text = Path(path).read_text() if path is not None else ""
    return parse_config_text(text, overrides)


def config_echo(cfg: ExperimentConfig) -> str:
    lines = []
    for f in sorted(dataclasses.fields(cfg), key=lambda f: f.name):
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    return "\n".join(lines) + "\n"


@dataclass
class RunResult:
    """In-memory per-episode log of one seeded run."""

    seed: int
    n_players: int
    actions: np.ndarray        # (episodes, n) int
    coop_probs: np.ndarray     # (episodes, n)
    welfare: np.ndarray        # (episodes,)
    handed_rewards: np.ndarray  # (episodes, n) planner rewards actually emitted
    rp_abs_sum: np.ndarray     # (episodes,)
    player1_outcome_rewards: np.ndarray | None  # (episodes, 4) for 2-player runs
    fear_mod: np.ndarray | None
    greed_mod: np.ndarray | None

    def final_coop_probs(self) -> np.ndarray:
        return self.coop_probs[-1]

    def final_pcc(self) -> float:
        return float(self.coop_probs[-1].prod())

    def final_mean_coop(self) -> float:
        return float(self.coop_probs[-1].mean())

    def final_welfare(self) -> float:
        return float(self.welfare[-1])

    def aar(self) -> float:
        return float(self.rp_abs_sum.mean())


class _EwmaExpectations:
    """Running estimates of the two expectations in the estimated-mode rule."""

    def __init__(self, n: int, k: int, decay: float) -> None:
        self.rho = decay
        self.a_w = np.zeros((n, n, k))
        self.a_b = np.zeros((n, n))
        self.b = np.zeros(n)

    def update(self, outcome: int, noise: np.ndarray, glp: np.ndarray,
               handed: np.ndarray, base_welfare: float) -> None:
        rho = self.rho
        self.a_w *= 1.0 - rho
        self.a_b *= 1.0 - rho
        self.b *= 1.0 - rho
        for i in range(len(glp)):
            w_i = glp[i] * handed[i]
            self.a_w[i, :, outcome] += rho * noise * w_i
            self.a_b[i] += rho * noise * w_i
            self.b[i] += rho * glp[i] * base_welfare

    def grad(self, etas: np.ndarray) -> PlannerGrad:
        gw = np.einsum("i,ijk,i->jk", etas, self.a_w, self.b)
        gb = np.einsum("i,ij,i->j", etas, self.a_b, self.b)
        return PlannerGrad(gw, gb)


def _payoff_table(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.n_players > 2 or cfg.game == "multipd":
        return MultiPlayerPD(cfg.n_players).payoff_table()
    return cfg.resolve_game().payoff_table()


def _game_from_table(table: np.ndarray) -> GamePayoffs:
    """Recover the symmetric 2-player game from its payoff table."""
    return GamePayoffs(R=table[0, 0], P=table[0, 3], T=table[0, 2], S=table[0, 1])


def run_single_seed(cfg: ExperimentConfig, seed: int) -> RunResult:
    """Play one seeded run of the configured experiment.

    Episode order: sample learner actions, emit the planner action for the
    realized outcome, compute all gradients at the pre-update parameters,
    then apply learner and planner updates.
    """
    table = _payoff_table(cfg)
    n, n_outcomes = table.shape
    bits = _outcomes.outcome_bits(n)
    outcome_weights = 1 << np.arange(n - 1, -1, -1)
    game2 = _game_from_table(table) if n == 2 else None

    root = np.random.SeedSequence(seed)
    action_ss, planner_ss = root.spawn(2)
    action_rng = np.random.default_rng(action_ss)
    planner_rng = np.random.default_rng(planner_ss)

    thetas = np.full(n, logit(cfg.init_coop_prob))
    etas = np.full(n, cfg.eta)
    baselines = [RunningBaseline(decay=cfg.baseline_decay) for _ in range(n)]
    pp = PlannerPolicy.zeros(
        n, n_outcomes, c=cfg.c, eta_p=cfg.eta_p, sigma=cfg.sigma,
        revenue_neutral=cfg.revenue_neutral, cost_alpha=cfg.cost_alpha,
        mode=cfg.mode, grad_clip=cfg.grad_clip,
    )
    use_adam = cfg.optimizer == "adam"
    learner_adam = Adam([(n,)]) if use_adam else None
    planner_adam = Adam([pp.W.shape, pp.b.shape]) if use_adam else None
    ewma = _EwmaExpectations(n, n_outcomes, cfg.est_decay) if cfg.mode == "estimated" else None
    batch_buffer: list = []
    action_history: list[list[int]] = [[] for _ in range(n)]

    episodes = cfg.episodes
    log_actions = np.empty((episodes, n), dtype=np.int8)
    log_probs = np.empty((episodes, n))
    log_welfare = np.empty(episodes)
    log_handed = np.zeros((episodes, n))
    log_abs = np.zeros(episodes)
    log_rp1 = np.empty((episodes, 4)) if n == 2 else None
    log_fear = np.empty(episodes) if n == 2 else None
    log_greed = np.empty(episodes) if n == 2 else None

    welfare_vec = table.sum(axis=0)

    for ep in range(episodes):
        planner_active = cfg.planner and (cfg.turn_off_at is None or ep < cfg.turn_off_at)
        p = np.array([coop_prob(t) for t in thetas])
        draws = action_rng.random(n)
        acts = (draws >= p).astype(int)  # C=0 with probability p
        outcome = int(acts @ outcome_weights)

        zeta = None
        if planner_active:
            if cfg.mode == "estimated":
                zeta, handed = sample_planner_action(pp, outcome, planner_rng)
                reward_table = pp.reward_table()
            else:
                reward_table = pp.reward_table()
                handed = reward_table[:, outcome]
        else:
            reward_table = None
            handed = np.zeros(n)

        log_actions[ep] = acts
        log_probs[ep] = p
        if n == 2:
            v1, v2 = expected_values(game2, p[0], p[1])
            log_welfare[ep] = v1 + v2
        else:
            log_welfare[ep] = float(_outcomes.outcome_probs(p, bits) @ welfare_vec)
        log_handed[ep] = handed
        log_abs[ep] = float(np.abs(handed).sum()) if planner_active else 0.0
        if n == 2:
            rt = reward_table if reward_table is not None else np.zeros((2, 4))
            log_rp1[ep] = rt[0]
            views = effective_payoffs(game2, rt.T)
            log_fear[ep] = views[0].fear()
            log_greed[ep] = views[0].greed()

        # learner gradients at pre-update parameters
        glp = np.where(acts == 0, 1.0 - p, -p)
        if cfg.learner_mode == "sampled":
            lgrads = np.empty(n)
            for i in range(n):
                r_tot = table[i, outcome] + handed[i]
                base = r_tot if baselines[i].value is None else baselines[i].value
                lgrads[i] = glp[i] * (r_tot - base)
                baselines[i].update(r_tot)
        else:
            extra = reward_table if planner_active else None
            total = table if extra is None else table + extra
            probs_vec = _outcomes.outcome_probs(p, bits)
            scores = _outcomes.outcome_scores(p, bits)
            lgrads = (probs_vec[None, :] * scores * total).sum(axis=1)

        # planner gradient at pre-update parameters
        pgrad = None
        if planner_active:
            if cfg.opponent_modeling:
                for i in range(n):
                    hist = action_history[i]
                    hist.append(int(acts[i]))
                    if len(hist) > cfg.opponent_window:
                        del hist[0]
                model_thetas = np.array([mle_opponent_theta(h) for h in action_history])
            else:
                model_thetas = thetas
            model_learners = [SigmoidLearner(model_thetas[i], etas[i]) for i in range(n)]
            if cfg.mode == "exact":
                pgrad = exact_planner_grad(table, model_learners, pp)
            else:
                noise = (zeta - pp.preactivations()[:, outcome]) / pp.sigma ** 2
                base_welfare = float(table[:, outcome].sum())
                if cfg.batch_size <= 1:
                    ewma.update(outcome, noise, glp, handed, base_welfare)
                    pgrad = ewma.grad(etas)
                else:
                    batch_buffer.append((outcome, noise, glp.copy(), handed.copy(), base_welfare))
                    if len(batch_buffer) >= cfg.batch_size:
                        pgrad = _block_batch_grad(batch_buffer, etas, pp)
                        batch_buffer.clear()

        # apply updates (simultaneous: both used pre-update parameters)
        if use_adam:
            (step,) = learner_adam.transform([lgrads])
        else:
            step = lgrads
        thetas = thetas + etas * step
        if pgrad is not None:
            if pp.grad_clip is not None:
                pgrad = clip_grad(pgrad, pp.grad_clip)
            if use_adam:
                tw, tb = planner_adam.transform([pgrad.w, pgrad.b])
                pgrad = PlannerGrad(tw, tb)
            pp = planner_step(pp, pgrad)

        if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(pp.W)) and np.all(np.isfinite(pp.b))):
            raise RuntimeError(
                f"non-finite parameter at episode {ep} (seed {seed}): "
                f"thetas={thetas}, |W|max={np.abs(pp.W).max()}"
            )

    return RunResult(
        seed=seed,
        n_players=n,
        actions=log_actions,
        coop_probs=log_probs,
        welfare=log_welfare,
        handed_rewards=log_handed,
        rp_abs_sum=log_abs,
        player1_outcome_rewards=log_rp1,
        fear_mod=log_fear,
        greed_mod=log_greed,
    )


def _block_batch_grad(buffer: list, etas: np.ndarray, pp: PlannerPolicy) -> PlannerGrad:
    """Batch-mean estimated-mode gradient from buffered episode tuples."""
    n, k = pp.W.shape
    inv = 1.0 / len(buffer)
    gw = np.zeros((n, k))
    gb = np.zeros(n)
    for i in range(n):
        aw = np.zeros((n, k))
        ab = np.zeros(n)
        b_i = 0.0
        for outcome, noise, glp, handed, base_welfare in buffer:
            w_i = glp[i] * handed[i]
            aw[:, outcome] += noise * w_i
            ab += noise * w_i
            b_i += glp[i] * base_welfare
        gw += etas[i] * (aw * inv) * (b_i * inv)
        gb += etas[i] * (ab * inv) * (b_i * inv)
    return PlannerGrad(gw, gb)


# ---------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class SeedSummary:
    seed: int
    final_pcc: float
    final_mean_coop: float
    final_welfare: float
    aar: float


@dataclass
class RunSummary:
    rows: list[SeedSummary]
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float | None] = field(default_factory=dict)

    METRICS = ("final_pcc", "final_mean_coop", "final_welfare", "aar")


def summarize(rows: Sequence[SeedSummary]) -> RunSummary:
    """Sample mean and (n-1)-denominator std per metric; std absent for one seed."""
    if not rows:
        raise ValueError("summarize needs at least one seed result")
    summary = RunSummary(rows=list(rows))
    for metric in RunSummary.METRICS:
        values = np.array([getattr(r, metric) for r in rows], dtype=float)
        summary.mean[metric] = float(values.mean())
        summary.std[metric] = float(values.std(ddof=1)) if len(values) > 1 else None
    return summary


def _seed_summary(result: RunResult) -> SeedSummary:
    return SeedSummary(
        seed=result.seed,
        final_pcc=result.final_pcc(),
        final_mean_coop=result.final_mean_coop(),
        final_welfare=result.final_welfare(),
        aar=result.aar(),
    )


# ---------------------------------------------------------------------------
# CSV writing


def _fmt(x: float) -> str:
    return FLOAT_FORMAT % float(x)


def episode_csv_rows(result: RunResult):
    """Yield (header, rows) for the per-episode CSV of one run."""
    n = result.n_players
    if n == 2:
        header = [
            "episode", "a1", "a2", "p1", "p2", "pcc", "welfare", "rp1", "rp2",
            "rp1_cc", "rp1_cd", "rp1_dc", "rp1_dd", "fear_mod", "greed_mod",
            "rp_abs_sum", "rp_abs_cum",
        ]
    else:
        header = (
            ["episode", "mean_coop", "pcc", "welfare"]
            + [f"p{i+1}" for i in range(n)]
            + [f"rp{i+1}" for i in range(n)]
            + ["rp_abs_sum", "rp_abs_cum"]
        )
    cum = np.cumsum(result.rp_abs_sum)
    rows = []
    for ep in range(len(result.welfare)):
        p = result.coop_probs[ep]
        if n == 2:
            rows.append(
                [str(ep), str(int(result.actions[ep, 0])), str(int(result.actions[ep, 1]))]
                + [_fmt(v) for v in (p[0], p[1], p[0] * p[1], result.welfare[ep],
                                     result.handed_rewards[ep, 0], result.handed_rewards[ep, 1])]
                + [_fmt(v) for v in result.player1_outcome_rewards[ep]]
                + [_fmt(result.fear_mod[ep]), _fmt(result.greed_mod[ep])]
                + [_fmt(result.rp_abs_sum[ep]), _fmt(cum[ep])]
            )
        else:
            rows.append(
                [str(ep), _fmt(p.mean()), _fmt(p.prod()), _fmt(result.welfare[ep])]
                + [_fmt(v) for v in p]
                + [_fmt(v) for v in result.handed_rewards[ep]]
                + [_fmt(result.rp_abs_sum[ep]), _fmt(cum[ep])]
            )
    return header, rows


def write_episode_csv(result: RunResult, path: Path) -> None:
    header, rows = episode_csv_rows(result)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_summary_csv(summary: RunSummary, path: Path) -> None:
    header = ["seed", *RunSummary.METRICS]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in summary.rows:
            writer.writerow([str(row.seed)] + [_fmt(getattr(row, m)) for m in RunSummary.METRICS])
        writer.writerow(["mean"] + [_fmt(summary.mean[m]) for m in RunSummary.METRICS])
        writer.writerow(
            ["std"] + ["" if summary.std[m] is None else _fmt(summary.std[m]) for m in RunSummary.METRICS]
        )


# ---------------------------------------------------------------------------
# experiment drivers


def _run_seed_job(args: tuple) -> RunResult:
    cfg_dict, seed = args
    return run_single_seed(ExperimentConfig(**cfg_dict), seed)


def run_experiment(cfg: ExperimentConfig,
                   on_result: Callable[[RunResult], None] | None = None) -> RunSummary:
    """Run all seeds of an experiment, write CSVs when an out dir is set."""
    seeds = [cfg.seed_base + k for k in range(cfg.seeds)]
    if cfg.workers > 1:
        cfg_dict = dataclasses.asdict(cfg)
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_seed_job, [(cfg_dict, s) for s in seeds]))
    else:
        results = [run_single_seed(cfg, s) for s in seeds]

    results.sort(key=lambda r: r.seed)
    out_dir = Path(cfg.out) if cfg.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.txt").write_text(config_echo(cfg))
        for res in results:
            write_episode_csv(res, out_dir / f"seed_{res.seed}.csv")
    if on_result is not None:
        for res in results:
            on_result(res)
    summary = summarize([_seed_summary(r) for r in results])
    if out_dir is not None:
        write_summary_csv(summary, out_dir / "summary.csv")
    return summary


def run_matrix_experiment(cfg: ExperimentConfig, **kwargs) -> RunSummary:
    """2-player matrix game experiment."""
    if cfg.n_players != 2:
        raise ValueError("run_matrix_experiment is for 2-player games; use run_multiplayer")
    return run_experiment(cfg, **kwargs)


def run_multiplayer(cfg: ExperimentConfig, **kwargs) -> RunSummary:
    """N-player social dilemma experiment (n=2 permitted for cross-checks)."""
    if cfg.n_players < 2:
        raise ValueError("run_multiplayer needs n_players >= 2")
    return run_experiment(cfg, **kwargs)


# ---------------------------------------------------------------------------
# audit


class AuditError(RuntimeError):
    pass


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise AuditError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def audit_run_dir(out_dir: str | os.PathLike, welfare_tol: float = 1e-12) -> list[str]:
    """Re-derive the summary from per-episode CSVs and cross-check consistency.

    Returns a list of problems (empty means the directory is consistent).
    Checks: summary aggregates recompute from per-seed rows; per-seed final
    metrics recompute from the episode files; logged welfare matches the
    game's expected values at the logged cooperation probabilities.
    """
    out_dir = Path(out_dir)
    problems: list[str] = []
    cfg = load_config(out_dir / "config.txt")
    header, rows = _read_csv(out_dir / "summary.csv")
    idx = {name: k for k, name in enumerate(header)}
    seed_rows = [r for r in rows if r[0] not in ("mean", "std")]
    agg = {r[0]: r for r in rows if r[0] in ("mean", "std")}

    for metric in RunSummary.METRICS:
        values = np.array([float(r[idx[metric]]) for r in seed_rows])
        mean = values.mean()
        if abs(mean - float(agg["mean"][idx[metric]])) > 1e-12 * max(1.0, abs(mean)):
            problems.append(f"summary mean mismatch for {metric}")
        std_text = agg["std"][idx[metric]]
        if len(values) > 1:
            std = values.std(ddof=1)
            if std_text == "" or abs(std - float(std_text)) > 1e-12 * max(1.0, std):
                problems.append(f"summary std mismatch for {metric}")
        elif std_text != "":
            problems.append(f"summary std should be absent for single seed ({metric})")

    table = _payoff_table(cfg)
    n = table.shape[0]
    bits = _outcomes.outcome_bits(n)
    game2 = _game_from_table(table) if n == 2 else None
    for row in seed_rows:
        seed = int(row[0])
        eheader, erows = _read_csv(out_dir / f"seed_{seed}.csv")
        eidx = {name: k for k, name in enumerate(eheader)}
        last = erows[-1]
        if n == 2:
            p = np.array([float(last[eidx["p1"]]), float(last[eidx["p2"]])])
            pcc = float(last[eidx["pcc"]])
        else:
            p = np.array([float(last[eidx[f"p{i+1}"]]) for i in range(n)])
            pcc = float(last[eidx["pcc"]])
        if abs(p.prod() - pcc) > 1e-12:
            problems.append(f"seed {seed}: pcc does not match probabilities")
        if abs(p.prod() - float(row[idx["final_pcc"]])) > 1e-12:
            problems.append(f"seed {seed}: final_pcc does not match episode log")
        aar = float(np.mean([float(r[eidx["rp_abs_sum"]]) for r in erows]))
        if abs(aar - float(row[idx["aar"]])) > 1e-9 * max(1.0, abs(aar)):
            problems.append(f"seed {seed}: aar does not match episode log")
        for erow in erows:
            if n == 2:
                p1, p2 = float(erow[eidx["p1"]]), float(erow[eidx["p2"]])
                v1, v2 = expected_values(game2, p1, p2)
                expected = v1 + v2
            else:
                p = np.array([float(erow[eidx[f"p{i+1}"]]) for i in range(n)])
                expected = float(_outcomes.outcome_probs(p, bits) @ table.sum(axis=0))
            logged = float(erow[eidx["welfare"]])
            if abs(expected - logged) > welfare_tol * max(1.0, abs(expected)):
                problems.append(
                    f"seed {seed} episode {erow[eidx['episode']]}: welfare {logged} != {expected}"
                )
                break
    return problems
