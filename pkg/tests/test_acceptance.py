"""Acceptance suite: every headline claim at its stated tolerance.

Aggregates ten seeds per configuration (the defaults) and prints one
PASS/FAIL line per criterion. Two revenue-neutral bounds are asserted as
written but expected to fail, with the mechanism explained on their xfail
markers.
"""

import numpy as np
import pytest

from coopsim import coingame as cg
from coopsim.games import effective_payoffs, game_by_name
from coopsim.gtft import (
    AlwaysDefect,
    GtftAgent,
    bayes_update,
    bernoulli_model,
    CoopBelief,
    monotonicity_report,
    play_iterated,
)
from coopsim.harness import ExperimentConfig, run_matrix_experiment, run_multiplayer, run_single_seed

GAMES = ("pd", "chicken", "staghunt")
SEEDS = 10
pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


def report(label: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    return ok


def run_config(**kwargs):
    cfg = ExperimentConfig(seeds=SEEDS, **kwargs)
    return run_matrix_experiment(cfg)


@pytest.fixture(scope="module")
def baseline_runs():
    return {g: run_config(game=g, planner=False) for g in GAMES}


@pytest.fixture(scope="module")
def mechanism_runs():
    return {g: run_config(game=g, planner=True) for g in GAMES}


@pytest.fixture(scope="module")
def turnoff_runs():
    return {g: run_config(game=g, planner=True, episodes=8000, turn_off_at=4000)
            for g in GAMES}


@pytest.fixture(scope="module")
def revenue_neutral_runs():
    return {g: run_config(game=g, planner=True, revenue_neutral=True) for g in GAMES}


@pytest.fixture(scope="module")
def estimated_runs():
    return {g: run_config(game=g, planner=True, mode="estimated") for g in GAMES}


class TestBaselineWithoutPlanner:
    def test_cooperation_collapses(self, baseline_runs):
        bounds = {"pd": 0.01, "staghunt": 0.01, "chicken": 0.10}
        ok = True
        for game, cap in bounds.items():
            pcc = baseline_runs[game].mean["final_pcc"]
            ok &= report(f"no-planner {game} P(C,C) < {cap}", pcc < cap, f"{pcc:.6f}")
        assert ok

    def test_welfare_matches_published(self, baseline_runs):
        targets = {"pd": 2.024, "chicken": 5.44, "staghunt": 2.00}
        ok = True
        for game, target in targets.items():
            v = baseline_runs[game].mean["final_welfare"]
            ok &= report(f"no-planner {game} V within 0.2 of {target}",
                         abs(v - target) <= 0.2, f"{v:.4f}")
        assert ok


class TestMechanismDesign:
    def test_cooperation_established(self, mechanism_runs):
        ok = True
        for game in GAMES:
            pcc = mechanism_runs[game].mean["final_pcc"]
            ok &= report(f"planner {game} mean P(C,C) >= 0.95", pcc >= 0.95, f"{pcc:.6f}")
        assert ok

    def test_welfare_near_optimum(self, mechanism_runs):
        ok = True
        for game in GAMES:
            v = mechanism_runs[game].mean["final_welfare"]
            ok &= report(f"planner {game} mean V >= 5.9", v >= 5.9, f"{v:.4f}")
        assert ok

    def test_per_seed_success_rate(self, mechanism_runs):
        ok = True
        for game in GAMES:
            hits = sum(r.final_pcc > 0.95 for r in mechanism_runs[game].rows)
            ok &= report(f"planner {game} >= 9/10 seeds above 0.95", hits >= 9, f"{hits}/10")
        assert ok


class TestTurningOff:
    def test_stag_hunt_cooperation_is_stable(self, turnoff_runs):
        pcc = turnoff_runs["staghunt"].mean["final_pcc"]
        assert report("turn-off staghunt P(C,C) >= 0.95", pcc >= 0.95, f"{pcc:.6f}")

    def test_pd_collapses(self, turnoff_runs):
        pcc = turnoff_runs["pd"].mean["final_pcc"]
        assert report("turn-off pd P(C,C) <= 0.10", pcc <= 0.10, f"{pcc:.6f}")

    def test_chicken_lands_between_with_spread(self, turnoff_runs):
        pcc = turnoff_runs["chicken"].mean["final_pcc"]
        std = turnoff_runs["chicken"].std["final_pcc"]
        ok = report("turn-off chicken mean strictly between", 0.10 < pcc < 0.95, f"{pcc:.4f}")
        ok &= report("turn-off chicken cross-seed std > 0.05", std > 0.05, f"{std:.4f}")
        assert ok


class TestRevenueNeutral:
    def test_chicken_stays_high(self, revenue_neutral_runs):
        pcc = revenue_neutral_runs["chicken"].mean["final_pcc"]
        assert report("revenue-neutral chicken P(C,C) >= 0.95", pcc >= 0.95, f"{pcc:.6f}")

    @pytest.mark.xfail(
        reason="an exact-gradient planner makes cooperation dominant through "
               "mixed-outcome transfers alone (T-c < R, S+c > P), so the "
               "expected degradation band never materializes",
        strict=False,
    )
    def test_pd_degrades_into_band(self, revenue_neutral_runs):
        pcc = revenue_neutral_runs["pd"].mean["final_pcc"]
        assert report("revenue-neutral pd P(C,C) in [0.80, 0.97]",
                      0.80 <= pcc <= 0.97, f"{pcc:.6f}")

    @pytest.mark.xfail(
        reason="revenue-neutral transfers solve Stag Hunt as robustly as the "
               "unrestricted planner here; no cross-seed instability appears",
        strict=False,
    )
    def test_stag_hunt_unstable(self, revenue_neutral_runs, mechanism_runs):
        rn = revenue_neutral_runs["staghunt"].mean["final_pcc"]
        unrestricted = mechanism_runs["staghunt"].mean["final_pcc"]
        std = revenue_neutral_runs["staghunt"].std["final_pcc"]
        ok = report("revenue-neutral staghunt below unrestricted", rn < unrestricted,
                    f"{rn:.4f} vs {unrestricted:.4f}")
        ok &= report("revenue-neutral staghunt std > 0.1", std > 0.1, f"{std:.4f}")
        assert ok


class TestEstimatedPlanner:
    def test_stag_hunt_still_cooperates(self, estimated_runs):
        pcc = estimated_runs["staghunt"].mean["final_pcc"]
        assert report("estimated staghunt P(C,C) >= 0.90", pcc >= 0.90, f"{pcc:.6f}")

    def test_pd_and_chicken_degrade(self, estimated_runs, mechanism_runs):
        ok = True
        for game in ("pd", "chicken"):
            est = estimated_runs[game].mean["final_pcc"]
            exact = mechanism_runs[game].mean["final_pcc"]
            ok &= report(f"estimated {game} >= 15pp below exact",
                         est <= exact - 0.15, f"{est:.4f} vs {exact:.4f}")
        assert ok

    def test_estimation_costs_more(self, estimated_runs, mechanism_runs):
        ok = True
        for game in GAMES:
            est = estimated_runs[game].mean["aar"]
            exact = mechanism_runs[game].mean["aar"]
            ok &= report(f"estimated {game} AAR above exact", est > exact,
                         f"{est:.3f} vs {exact:.3f}")
        assert ok


class TestModifiedGameTrajectory:
    def test_converged_pd_removes_the_dilemma(self):
        # Final effective fear and greed both negative; payouts decay.
        ok = True
        for seed in range(SEEDS):
            res = run_single_seed(ExperimentConfig(game="pd", planner=True), seed)
            assert res.fear_mod is not None
            fear, greed = res.fear_mod[-1], res.greed_mod[-1]
            ok &= report(f"pd seed {seed} final fear'/greed' < 0",
                         fear < 0 and greed < 0, f"fear'={fear:.3f} greed'={greed:.3f}")
            first = res.rp_abs_sum[:500].mean()
            last = res.rp_abs_sum[-500:].mean()
            ok &= report(f"pd seed {seed} payouts decay", last < first,
                         f"first500={first:.3f} last500={last:.3f}")
        assert ok


class TestMultiplayer:
    def test_ten_player_cooperation_with_planner(self):
        cfg = ExperimentConfig(game="multipd", n_players=10, planner=True, seeds=SEEDS)
        mean_coop = run_multiplayer(cfg).mean["final_mean_coop"]
        assert report("multiplayer n=10 with planner mean P(C) > 0.9",
                      mean_coop > 0.9, f"{mean_coop:.4f}")

    def test_ten_player_defection_without_planner(self):
        cfg = ExperimentConfig(game="multipd", n_players=10, planner=False, seeds=SEEDS)
        mean_coop = run_multiplayer(cfg).mean["final_mean_coop"]
        assert report("multiplayer n=10 without planner mean P(C) < 0.1",
                      mean_coop < 0.1, f"{mean_coop:.4f}")


class TestGtftBehavioral:
    def test_resists_exploitation(self):
        pd = game_by_name("pd")
        agent = GtftAgent(pd, "action-bayes", epsilon=0.05, temperature=0.05)
        records = play_iterated(agent, AlwaysDefect(), pd, 500, np.random.default_rng(0))
        reward = float(np.mean([r.reward_a for r in records]))
        ok = report("gtft vs always-defect alpha < 0.1", agent.alpha < 0.1,
                    f"alpha={agent.alpha:.4f}")
        ok &= report("gtft vs always-defect mean reward >= P-0.1",
                     reward >= pd.P - 0.1, f"{reward:.4f}")
        assert ok

    def test_mutual_cooperation(self):
        pd = game_by_name("pd")
        a = GtftAgent(pd, "action-bayes", epsilon=0.05, temperature=0.05)
        b = GtftAgent(pd, "action-bayes", epsilon=0.05, temperature=0.05)
        records = play_iterated(a, b, pd, 1000, np.random.default_rng(1))
        last = records[-100:]
        mutual = float(np.mean([r.action_a == 0 and r.action_b == 0 for r in last]))
        ok = report("gtft vs gtft alphas > 0.9", a.alpha > 0.9 and b.alpha > 0.9,
                    f"{a.alpha:.3f}/{b.alpha:.3f}")
        ok &= report("gtft vs gtft mutual cooperation > 0.9", mutual > 0.9, f"{mutual:.3f}")
        assert ok

    def test_belief_normalization_under_stress(self):
        pd = game_by_name("pd")
        rng = np.random.default_rng(2)
        belief = CoopBelief.uniform()
        ok = True
        for _ in range(500):
            action = 0 if rng.random() < 0.2 else 1
            belief = bayes_update(belief, action, pd, bernoulli_model())
            ok &= abs(belief.mass.sum() - 1.0) < 1e-12 and bool(np.all(belief.mass >= 0))
        assert report("belief mass normalized through 500 updates", ok, "sum within 1e-12")

    def test_monotonicity_grid(self):
        reports_by_game = {g: monotonicity_report(game_by_name(g)) for g in GAMES}
        ok = True
        for game, rep in reports_by_game.items():
            ok &= report(f"{game} V1 non-decreasing in beta",
                         not rep.v1_beta_violations, f"{len(rep.v1_beta_violations)} violations")
        for game in ("pd", "chicken"):
            rep = reports_by_game[game]
            ok &= report(f"{game} V1 non-increasing in alpha",
                         not rep.v1_alpha_violations, f"{len(rep.v1_alpha_violations)} violations")
        sh = reports_by_game["staghunt"]
        ok &= report(
            "staghunt V1-alpha violations confined to coordination tipping",
            bool(sh.v1_alpha_violations)
            and all(a == 0.0 for a, _, _ in sh.v1_alpha_violations),
            f"{len(sh.v1_alpha_violations)} logged at alpha=0",
        )
        for game in ("pd", "staghunt"):
            rep = reports_by_game[game]
            ok &= report(f"{game} welfare non-decreasing",
                         not rep.w_alpha_violations and not rep.w_beta_violations,
                         "clean")
        ch = reports_by_game["chicken"]
        ok &= report(
            "chicken welfare drops logged (anti-coordination)",
            bool(ch.w_alpha_violations) and bool(ch.w_beta_violations)
            and max(abs(s) for _, _, s in ch.w_alpha_violations + ch.w_beta_violations) < 0.5,
            f"{len(ch.w_alpha_violations) + len(ch.w_beta_violations)} logged",
        )
        assert ok


class TestCoinGame:
    def test_dynamics_identities(self):
        rng = np.random.default_rng(3)
        ok = True
        for _ in range(200):
            log = cg.play_episode(
                lambda s, p, r: cg.random_policy_action(r),
                lambda s, p, r: cg.random_policy_action(r), rng)
            expected = [0.0, 0.0]
            for rec in log.steps:
                for pickup in rec.pickups:
                    expected[pickup.player] += 1.0
                    if pickup.coin_color != pickup.player:
                        expected[1 - pickup.player] -= 2.0
                for pos in (rec.state.red_pos, rec.state.blue_pos, rec.state.coin_pos):
                    ok &= 0 <= pos[0] < 3 and 0 <= pos[1] < 3
            got = log.total_rewards()
            ok &= got[0] == expected[0] and got[1] == expected[1]
        a = cg.play_episode(lambda s, p, r: cg.random_policy_action(r),
                            lambda s, p, r: cg.random_policy_action(r),
                            np.random.default_rng(99))
        b = cg.play_episode(lambda s, p, r: cg.random_policy_action(r),
                            lambda s, p, r: cg.random_policy_action(r),
                            np.random.default_rng(99))
        ok &= repr(a.steps) == repr(b.steps)
        assert report("coin game accounting/bounds/determinism", ok, "200 episodes replayed")

    def test_color_blind_racers_break_even(self):
        rng = np.random.default_rng(4)
        totals = [
            sum(cg.play_episode(
                lambda s, p, r: cg.greedy_color_blind_action(s, p),
                lambda s, p, r: cg.greedy_color_blind_action(s, p), rng).total_rewards())
            for _ in range(10_000)
        ]
        mean_total = float(np.mean(totals))
        assert report("color-blind greedy |mean episode total| < 3",
                      abs(mean_total) < 3.0, f"{mean_total:.3f}")

    def test_random_own_color_fraction(self):
        rng = np.random.default_rng(5)
        fractions = []
        for _ in range(1000):
            log = cg.play_episode(lambda s, p, r: cg.random_policy_action(r),
                                  lambda s, p, r: cg.random_policy_action(r), rng)
            for player in (cg.RED, cg.BLUE):
                frac = cg.own_color_fraction(log, player)
                if frac is not None:
                    fractions.append(frac)
        mean_frac = float(np.mean(fractions))
        assert report("random policies own-color fraction 0.5 +/- 0.03",
                      abs(mean_frac - 0.5) <= 0.03, f"{mean_frac:.4f}")

    def test_training_beats_random_baseline(self):
        result = cg.train(episodes=5000, seed=0)
        rng = np.random.default_rng(123)
        trained = [cg.play_episode(cg.net_policy(result.nets[0]),
                                   cg.net_policy(result.nets[1]), rng).pickup_count()
                   for _ in range(300)]
        rng = np.random.default_rng(124)
        random_picks = [cg.play_episode(lambda s, p, r: cg.random_policy_action(r),
                                        lambda s, p, r: cg.random_policy_action(r),
                                        rng).pickup_count()
                        for _ in range(300)]
        t, r = float(np.mean(trained)), float(np.mean(random_picks))
        assert report("actor-critic training beats random pickups", t > r,
                      f"trained={t:.2f} random={r:.2f}")


class TestOracleSuite:
    """Spot checks here; the exhaustive oracles run in the module tests."""

    def test_gradient_oracles(self):
        from coopsim.learners import SigmoidLearner
        from coopsim.planner import PlannerPolicy, cost_grad, exact_planner_grad
        from test_planner import fd_planner_grad, lookahead_objective, relative_error

        rng = np.random.default_rng(314)
        worst = 0.0
        for game in GAMES:
            g = game_by_name(game)
            for trial in range(10):
                learners = [SigmoidLearner(t, 0.01) for t in rng.uniform(-3, 3, 2)]
                pp = PlannerPolicy(W=rng.normal(0, 0.8, (2, 4)), b=rng.normal(0, 0.5, 2),
                                   cost_alpha=0.0002, revenue_neutral=bool(trial % 2))
                grad = exact_planner_grad(g, learners, pp)
                fw, fb = fd_planner_grad(g.payoff_table(), learners, pp, lookahead_objective)
                worst = max(worst, relative_error(grad, fw, fb))
        assert report("exact_planner_grad + cost term vs finite differences",
                      worst < 1e-5, f"worst rel err {worst:.2e}")

    def test_two_player_path_consistency(self):
        cfg_matrix = ExperimentConfig(game="pd", episodes=400, seeds=1)
        cfg_multi = ExperimentConfig(game="multipd", n_players=2, episodes=400, seeds=1)
        a = run_single_seed(cfg_matrix, 9)
        b = run_single_seed(cfg_multi, 9)
        gap = float(np.max(np.abs(a.coop_probs - b.coop_probs)))
        assert report("multiplayer n=2 path matches 2-player path (1e-9)",
                      gap < 1e-9, f"max |delta p| = {gap:.2e}")
