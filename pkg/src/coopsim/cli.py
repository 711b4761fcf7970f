"""Command-line interface for running experiments, tournaments and audits."""

from __future__ import annotations

import argparse
import sys

from . import coingame, gtft, harness


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file; flags override it")
    sub.add_argument("--game", help="pd | chicken | staghunt")
    sub.add_argument("--fear", type=float)
    sub.add_argument("--greed", type=float)
    sub.add_argument("--mode", choices=["exact", "estimated"], help="planner rule")
    sub.add_argument("--learner-mode", dest="learner_mode", choices=["sampled", "exact"])
    sub.add_argument("--optimizer", choices=["adam", "sgd"])
    sub.add_argument("--revenue-neutral", dest="revenue_neutral", action="store_const", const=True)
    sub.add_argument("--no-planner", dest="planner", action="store_const", const=False)
    sub.add_argument("--episodes", type=int)
    sub.add_argument("--seeds", type=int)
    sub.add_argument("--seed-base", dest="seed_base", type=int)
    sub.add_argument("--turn-off-at", dest="turn_off_at", type=int)
    sub.add_argument("--workers", type=int)
    sub.add_argument("--out", help="output directory for CSV logs")


def _config_from_args(args: argparse.Namespace, forced: dict | None = None) -> harness.ExperimentConfig:
    overrides = {
        key: getattr(args, key)
        for key in (
            "game", "fear", "greed", "mode", "learner_mode", "optimizer",
            "revenue_neutral", "planner", "episodes", "seeds", "seed_base",
            "turn_off_at", "workers", "out",
        )
        if getattr(args, key, None) is not None
    }
    if forced:
        overrides.update(forced)
    return harness.load_config(args.config, overrides)


def _print_summary(summary: harness.RunSummary) -> None:
    for row in summary.rows:
        print(
            f"seed {row.seed}: P(C,C)={row.final_pcc:.6f} "
            f"meanP(C)={row.final_mean_coop:.6f} V={row.final_welfare:.4f} AAR={row.aar:.4f}"
        )
    mean, std = summary.mean, summary.std
    def fmt_std(metric: str) -> str:
        s = std[metric]
        return "n/a" if s is None else f"{s:.6f}"
    print(
        f"mean: P(C,C)={mean['final_pcc']:.6f} (std {fmt_std('final_pcc')}), "
        f"V={mean['final_welfare']:.4f}, AAR={mean['aar']:.4f}"
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="coopsim",
        description="Social dilemma experiments with an adaptive reward-shaping planner",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="2-player matrix game experiment")
    _add_run_flags(run_p)

    multi_p = subs.add_parser("multiplayer", help="N-player social dilemma experiment")
    _add_run_flags(multi_p)
    multi_p.add_argument("--players", type=int, default=10)

    gtft_p = subs.add_parser("gtft", help="round-robin tournament of cooperativeness strategies")
    gtft_p.add_argument("--game", default="pd")
    gtft_p.add_argument("--rounds", type=int, default=1000)
    gtft_p.add_argument("--seed", type=int, default=0)
    gtft_p.add_argument("--epsilon", type=float, default=0.05)
    gtft_p.add_argument("--temperature", type=float, default=0.05)
    gtft_p.add_argument("--welfare", choices=["sum", "nash"], default="sum",
                        help="diagnostic welfare column logged per round")
    gtft_p.add_argument("--out", help="output directory for per-pairing CSVs")

    coin_p = subs.add_parser("coingame", help="train actor-critic learners in the Coin Game")
    coin_p.add_argument("--episodes", type=int, default=5000)
    coin_p.add_argument("--seed", type=int, default=0)
    coin_p.add_argument("--lr", type=float, default=coingame.DEFAULT_LR)
    coin_p.add_argument("--out-dir", dest="out_dir", help="output directory for the metrics CSV")

    audit_p = subs.add_parser("audit", help="re-derive a run directory's summary and verify it")
    audit_p.add_argument("out_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from_args(args)
            summary = harness.run_matrix_experiment(cfg)
            _print_summary(summary)
        elif args.command == "multiplayer":
            cfg = _config_from_args(args, forced={"game": "multipd", "n_players": args.players})
            summary = harness.run_multiplayer(cfg)
            _print_summary(summary)
        elif args.command == "gtft":
            results = gtft.run_tournament(
                game_name=args.game, rounds=args.rounds, seed=args.seed,
                epsilon=args.epsilon, temperature=args.temperature,
                welfare=args.welfare, out_dir=args.out,
            )
            for pairing, totals in results.items():
                print(f"{pairing}: " + ", ".join(f"{k}={v:.3f}" for k, v in totals.items()))
        elif args.command == "coingame":
            metrics = coingame.train(episodes=args.episodes, seed=args.seed,
                                     lr=args.lr, out_dir=args.out_dir).metrics
            last = metrics[-1]
            print(
                f"episode {last.episode}: total_reward={last.total_reward:.2f} "
                f"red={last.reward_red:.2f} blue={last.reward_blue:.2f}"
            )
        elif args.command == "audit":
            problems = harness.audit_run_dir(args.out_dir)
            if problems:
                for p in problems:
                    print(f"AUDIT FAIL: {p}", file=sys.stderr)
                return 1
            print("audit ok")
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
