"""Monte-Carlo harness that drives the production engine in-process.

No game logic lives here: every round goes through the same
:class:`~tokencasino.games.GameTable` code the API serves, against a
deterministic commitment derived from the run seed. The report always
carries the matching exact value from the enumeration/DP oracles, and the
harness flags any disagreement beyond three standard errors.

Two modes:

* ``simulate`` keeps both sides solvent (the player re-buys tokens, the
  owner tops the bank up) so exactly ``rounds`` rounds are played.
* ``solvency`` gives the bank a fixed starting reserve and counts the
  rounds refused for ``InsufficientReserve`` as ruin events.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from .errors import InsufficientReserve, ZeroRounds, ZeroStake
from .fairness import CommitmentRegistry
from .games import (
    BLACKJACK,
    DICE,
    GAME_KINDS,
    MAX_MULTIPLIER,
    PLAYER_TURN,
    RED,
    ROULETTE,
    SLOTS,
    GameTable,
)
from .ledger import Ledger
from .oracles import PayoutLaw, check_stand_threshold, law_for, roulette_law

SIM_OWNER = "sim-owner"
SIM_PLAYER = "sim-player"
SIM_DICE_GUESS = 4
SIM_ROULETTE_GUESS = (7, RED)

TRAJECTORY_POINTS = 2000


@dataclass
class SimReport:
    game: str
    rounds: int
    played: int
    stake: int
    seed: int
    stand_threshold: int | None
    empirical_ev_per_stake: float
    exact_ev_per_stake: float
    exact_ev_fraction: str
    empirical_net_ev_per_stake: float
    exact_net_ev_per_stake: float
    house_edge: float
    stddev: float
    bank_pnl: int
    ruin_events: int
    wins: int
    payout_counts: dict[int, int]
    exact_sigma_per_round: float
    tolerance_3sigma: float
    within_tolerance: bool
    trajectory: list[list[int | float]] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def run_seed_bytes(seed: int) -> bytes:
    return hashlib.sha256(b"tokencasino-sim:" + (seed % (1 << 64)).to_bytes(8, "big")).digest()


def _validate(game: str, rounds: int, stake: int, stand_threshold: int) -> None:
    if game not in GAME_KINDS:
        raise ValueError(f"unknown game {game!r}; choose from {GAME_KINDS}")
    if not isinstance(rounds, int) or rounds < 1:
        raise ZeroRounds(f"rounds must be >= 1, got {rounds!r}")
    if not isinstance(stake, int) or stake < 1:
        raise ZeroStake(f"stake must be >= 1, got {stake!r}")
    check_stand_threshold(stand_threshold)


class _Run:
    """One seeded pass over the engine."""

    def __init__(self, game: str, stake: int, seed: int, stand_threshold: int,
                 reserve: int | None):
        self.game = game
        self.stake = stake
        self.stand_threshold = stand_threshold
        self.auto_fund = reserve is None
        self.ledger = Ledger()
        self.registry = CommitmentRegistry()
        self.table = GameTable(self.ledger, self.registry, keep_history=False)
        bank_need = (MAX_MULTIPLIER[game] - 1) * stake
        initial = reserve if reserve is not None else max(1_000_000, 2 * bank_need)
        self.ledger.initialize_bank(SIM_OWNER, initial, rate=1)
        self.commitment_id = self.registry.open_commitment(run_seed_bytes(seed)).commitment_id
        self.bank_need = bank_need
        self._fund_player()

    def _fund_player(self) -> None:
        balance, _ = self.ledger.balance_of(SIM_PLAYER)
        while balance < self.stake:
            self.ledger.buy_tokens(SIM_PLAYER, 1000)
            balance += 1000

    def _fund_bank(self) -> None:
        while self.ledger.bank.reserve < self.bank_need:
            self.ledger.top_up_bank(SIM_OWNER, 1_000_000)

    def play_one(self) -> int:
        """Play a single round through the engine; returns the gross payout."""
        game = self.game
        table = self.table
        stake = self.stake
        if game == DICE:
            return table.play_dice(
                SIM_PLAYER, SIM_DICE_GUESS, stake, "", self.commitment_id
            ).gross_payout
        if game == SLOTS:
            return table.play_slots(SIM_PLAYER, stake, "", self.commitment_id).gross_payout
        if game == ROULETTE:
            number, color = SIM_ROULETTE_GUESS
            return table.play_roulette(
                SIM_PLAYER, number, color, stake, "", self.commitment_id
            ).gross_payout
        session = table.blackjack_start(SIM_PLAYER, stake, "", self.commitment_id)
        threshold = self.stand_threshold
        while session.phase == PLAYER_TURN and session.player_points < threshold:
            session = table.blackjack_hit(SIM_PLAYER, session.session_id)
        if session.phase != PLAYER_TURN:
            return 0  # busted out
        return table.blackjack_stand(SIM_PLAYER, session.session_id).gross_payout


def _report(game: str, rounds: int, stake: int, seed: int, stand_threshold: int,
            law: PayoutLaw, played: int, refused: int, total_payout: int,
            total_payout_sq: int, wins: int, payout_counts: dict[int, int],
            trajectory: list[list[int | float]]) -> SimReport:
    exact_ev = law.ev
    if played:
        ev = total_payout / (played * stake)
        second = total_payout_sq / (played * stake * stake)
        stddev = math.sqrt(max(second - ev * ev, 0.0))
    else:
        ev = 0.0
        stddev = 0.0
    sigma = math.sqrt(float(law.variance))
    tolerance = 3 * sigma / math.sqrt(played) if played else float("inf")
    return SimReport(
        game=game,
        rounds=rounds,
        played=played,
        stake=stake,
        seed=seed,
        stand_threshold=stand_threshold if game == BLACKJACK else None,
        empirical_ev_per_stake=ev,
        exact_ev_per_stake=float(exact_ev),
        exact_ev_fraction=f"{exact_ev.numerator}/{exact_ev.denominator}",
        empirical_net_ev_per_stake=ev - 1.0,
        exact_net_ev_per_stake=float(exact_ev - 1),
        house_edge=float(1 - exact_ev),
        stddev=stddev,
        bank_pnl=played * stake - total_payout,
        ruin_events=refused,
        wins=wins,
        payout_counts=dict(sorted(payout_counts.items())),
        exact_sigma_per_round=sigma,
        tolerance_3sigma=tolerance,
        within_tolerance=(abs(ev - float(exact_ev)) <= tolerance) if played else True,
        trajectory=trajectory,
    )


def _run(game: str, rounds: int, stake: int, seed: int, stand_threshold: int,
         reserve: int | None) -> SimReport:
    _validate(game, rounds, stake, stand_threshold)
    if game == ROULETTE:
        law = roulette_law(*SIM_ROULETTE_GUESS)
    else:
        law = law_for(game, stand_threshold)
    run = _Run(game, stake, seed, stand_threshold, reserve)
    sample_every = max(1, rounds // TRAJECTORY_POINTS)
    played = refused = wins = 0
    total_payout = total_payout_sq = 0
    payout_counts: dict[int, int] = {}
    trajectory: list[list[int | float]] = []
    for i in range(1, rounds + 1):
        if run.auto_fund:
            run._fund_bank()
        run._fund_player()  # player solvency is never what these runs measure
        try:
            payout = run.play_one()
        except InsufficientReserve:
            refused += 1
        else:
            played += 1
            total_payout += payout
            total_payout_sq += payout * payout
            multiple = payout // stake
            payout_counts[multiple] = payout_counts.get(multiple, 0) + 1
            if payout > 0:
                wins += 1
        if i % sample_every == 0 or i == rounds:
            running_ev = total_payout / (played * stake) if played else 0.0
            trajectory.append([i, run.ledger.bank.reserve, running_ev])
    if not run.ledger.conservation_check():
        raise AssertionError("conservation check failed during simulation")
    return _report(
        game, rounds, stake, seed, stand_threshold, law, played, refused,
        total_payout, total_payout_sq, wins, payout_counts, trajectory,
    )


def simulate(game: str, rounds: int, stake: int = 10, strategy: int = 17,
             seed: int = 0) -> SimReport:
    """Play ``rounds`` rounds with both sides kept solvent; ``strategy`` is
    the blackjack stand threshold (ignored for the other games)."""
    return _run(game, rounds, stake, seed, strategy, reserve=None)


def solvency(reserve: int, game: str, rounds: int, stake: int = 10,
             seed: int = 0, strategy: int = 17) -> SimReport:
    """Fixed starting reserve, no top-ups: rounds the bank can no longer
    back are refused by the engine and counted as ruin events."""
    if not isinstance(reserve, int) or reserve < 1:
        raise ValueError(f"reserve must be a positive integer, got {reserve!r}")
    return _run(game, rounds, stake, seed, strategy, reserve=reserve)
