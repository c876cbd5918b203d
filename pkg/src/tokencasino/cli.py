"""Command-line entry points.

``tokencasino-sim`` runs the Monte-Carlo harness against the in-process
engine and prints a report (text or JSON); ``--report-dir`` additionally
writes CSVs and figures. Exit codes: 0 success, 1 when the empirical
result disagrees with the exact oracle beyond three standard errors,
2 on invalid arguments.

``tokencasino-serve`` runs the HTTP service from a key=value config file.
"""

from __future__ import annotations

import argparse
import sys

from .errors import PlatformError
from .games import GAME_KINDS
from .sim import SimReport, simulate, solvency

EXIT_OK = 0
EXIT_ORACLE_DISAGREEMENT = 1
EXIT_VALIDATION = 2


def _sim_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokencasino-sim",
        description="Monte-Carlo and exact-oracle analysis of the casino engine",
    )
    parser.add_argument("--game", required=True, choices=GAME_KINDS)
    parser.add_argument("--rounds", type=int, required=True, help="rounds to play (>= 1)")
    parser.add_argument("--stake", type=int, default=10, help="stake per round (default 10)")
    parser.add_argument(
        "--reserve",
        type=int,
        default=None,
        help="fixed starting bank reserve; enables solvency mode (no top-ups)",
    )
    parser.add_argument(
        "--stand-threshold",
        type=int,
        default=17,
        help="blackjack strategy: stand at or above this total (12-21, default 17)",
    )
    parser.add_argument("--seed", type=int, default=0, help="deterministic run seed")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument(
        "--report-dir",
        default=None,
        help="write summary.csv, trajectory.csv and figures into this directory",
    )
    return parser


def _print_text(report: SimReport) -> None:
    print(f"game                 {report.game}")
    if report.stand_threshold is not None:
        print(f"stand threshold      {report.stand_threshold}")
    print(f"rounds requested     {report.rounds}")
    print(f"rounds played        {report.played}")
    print(f"rounds refused       {report.ruin_events}")
    print(f"stake                {report.stake}")
    print(f"seed                 {report.seed}")
    print(f"wins                 {report.wins}")
    print(f"empirical EV/stake   {report.empirical_ev_per_stake:.6f} (gross)")
    print(f"exact EV/stake       {report.exact_ev_per_stake:.6f} "
          f"({report.exact_ev_fraction})")
    print(f"net EV/stake         {report.empirical_net_ev_per_stake:+.6f} empirical, "
          f"{report.exact_net_ev_per_stake:+.6f} exact")
    print(f"house edge (exact)   {report.house_edge:+.6f}")
    print(f"per-round stddev     {report.stddev:.6f}")
    print(f"bank P&L             {report.bank_pnl:+d} tokens")
    print(f"3-sigma tolerance    {report.tolerance_3sigma:.6f}")
    print(f"within tolerance     {report.within_tolerance}")


def sim_main(argv: list[str] | None = None) -> int:
    parser = _sim_parser()
    args = parser.parse_args(argv)
    try:
        if args.reserve is not None:
            report = solvency(
                reserve=args.reserve,
                game=args.game,
                rounds=args.rounds,
                stake=args.stake,
                seed=args.seed,
                strategy=args.stand_threshold,
            )
        else:
            report = simulate(
                game=args.game,
                rounds=args.rounds,
                stake=args.stake,
                strategy=args.stand_threshold,
                seed=args.seed,
            )
    except (PlatformError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.format == "json":
        print(report.to_json())
    else:
        _print_text(report)

    if args.report_dir:
        from .report import write_report

        for path in write_report(report, args.report_dir):
            print(f"wrote {path}", file=sys.stderr)

    return EXIT_OK if report.within_tolerance else EXIT_ORACLE_DISAGREEMENT


def serve_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tokencasino-serve", description="Run the casino platform HTTP service"
    )
    parser.add_argument("--config", required=True, help="path to key=value config file")
    args = parser.parse_args(argv)

    from .config import load_config
    from .service import create_app

    try:
        config = load_config(args.config)
        app = create_app(config)
    except PlatformError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    import uvicorn

    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    finally:
        app.state.service.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(sim_main())
