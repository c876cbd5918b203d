"""The four stake games: dice, slots, roulette, blackjack.

Every round follows the same escrow shape: the player's stake and the
bank's worst-case payout contribution ``(max_multiplier - 1) * stake`` are
locked up front, the outcome is drawn from a commitment, and settlement
distributes the whole pool (gross payout to the player, remainder to the
reserve). Dice, slots and roulette settle within the call; blackjack keeps
a session open until the player busts or stands.

Payout table (gross, funded from the escrow pool):

    dice       guess 1-6, win on exact roll      -> 6 x stake
    slots      three digits 0-9                  -> 3 x stake (exactly two equal)
                                                    9 x stake (all three equal)
    roulette   number 0-36 plus its wheel color  -> 36 x stake (number), 2 x stake (color)
    blackjack  beat the dealer without busting   -> 2 x stake
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    AlreadyRevealed,
    GuessOutOfRange,
    InconsistentGuess,
    NotPlayerTurn,
    NotYourSession,
    OpenSessionExists,
    StakeAboveMaximum,
    UnknownRound,
    UnknownSession,
    ZeroStake,
)
from .fairness import CommitmentRegistry, check_client_seed
from .ledger import Ledger

DICE = "dice"
SLOTS = "slots"
ROULETTE = "roulette"
BLACKJACK = "blackjack"
GAME_KINDS = (DICE, SLOTS, ROULETTE, BLACKJACK)

# worst-case gross payout per unit stake; the bank escrows (multiplier - 1)
MAX_MULTIPLIER = {DICE: 6, SLOTS: 9, ROULETTE: 36, BLACKJACK: 2}

MAX_STAKE = 1000

# European single-zero wheel: 0 is green, these are red, the rest black.
RED_POCKETS = frozenset(
    {1, 3, 5, 7, 9, 12, 14, 16, 18, 19, 21, 23, 25, 27, 30, 32, 34, 36}
)
RED, BLACK, GREEN = "red", "black", "green"


def pocket_color(number: int) -> str:
    if number == 0:
        return GREEN
    return RED if number in RED_POCKETS else BLACK


# Card ranks by draw index; ace always counts 11, faces count 10.
RANKS = ("2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K", "A")
RANK_VALUES = (2, 3, 4, 5, 6, 7, 8, 9, 10, 10, 10, 10, 11)

PLAYER_TURN = "PlayerTurn"
SETTLED = "Settled"

DEALER_STANDS_AT = 16
BUST_OVER = 21


@dataclass
class GameRound:
    round_id: int
    player: str
    kind: str
    stake: int
    player_escrow: int
    bank_escrow: int
    commitment_id: str
    client_seed: str
    nonces: list[int]
    outcome: dict
    gross_payout: int = 0
    settled: bool = False
    session_id: int | None = None

    def to_dict(self) -> dict:
        return {
            "round_id": self.round_id,
            "player": self.player,
            "kind": self.kind,
            "stake": self.stake,
            "player_escrow": self.player_escrow,
            "bank_escrow": self.bank_escrow,
            "randomness": {
                "commitment_id": self.commitment_id,
                "client_seed": self.client_seed,
                "nonces": list(self.nonces),
            },
            "outcome": self.outcome,
            "gross_payout": self.gross_payout,
            "settled": self.settled,
            "session_id": self.session_id,
        }


@dataclass
class BlackjackSession:
    session_id: int
    player: str
    stake: int
    commitment_id: str
    client_seed: str
    player_cards: list[int] = field(default_factory=list)
    dealer_cards: list[int] = field(default_factory=list)
    nonces: list[int] = field(default_factory=list)
    phase: str = PLAYER_TURN
    round_id: int | None = None  # set at settlement

    @property
    def player_points(self) -> int:
        return sum(RANK_VALUES[c] for c in self.player_cards)

    @property
    def dealer_points(self) -> int:
        return sum(RANK_VALUES[c] for c in self.dealer_cards)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "player": self.player,
            "stake": self.stake,
            "player_cards": [RANKS[c] for c in self.player_cards],
            "dealer_cards": [RANKS[c] for c in self.dealer_cards],
            "player_points": self.player_points,
            "dealer_points": self.dealer_points,
            "phase": self.phase,
            "round_id": self.round_id,
        }


@dataclass
class GameTable:
    """Rounds and blackjack sessions on top of escrow and randomness.

    ``keep_history=False`` drops settled rounds instead of archiving them;
    long Monte-Carlo runs use it to keep memory flat."""

    ledger: Ledger
    registry: CommitmentRegistry
    keep_history: bool = True
    rounds: dict[int, GameRound] = field(default_factory=dict)
    sessions: dict[int, BlackjackSession] = field(default_factory=dict)
    next_round_id: int = 1
    next_session_id: int = 1

    # -- shared plumbing -----------------------------------------------------

    def _validate_stake(self, stake: int) -> None:
        if not isinstance(stake, int) or isinstance(stake, bool) or stake < 1:
            raise ZeroStake(f"stake must be a positive integer, got {stake!r}")
        if stake > MAX_STAKE:
            raise StakeAboveMaximum(f"stake {stake} exceeds the {MAX_STAKE} token cap")

    def _pre_round(self, stake: int, client_seed: str, commitment_id: str) -> bytes:
        """Everything that can fail before any state is touched."""
        self.ledger.require_initialized()
        self._validate_stake(stake)
        seed_bytes = check_client_seed(client_seed.encode("utf-8"))
        commitment = self.registry.get(commitment_id)
        if commitment.revealed:
            # check before escrow so no tokens are held for an undrawable round
            raise AlreadyRevealed(f"{commitment_id} is revealed; no further draws")
        return seed_bytes

    def _new_round(
        self,
        player: str,
        kind: str,
        stake: int,
        commitment_id: str,
        client_seed: str,
        nonces: list[int],
        outcome: dict,
        payout: int,
        session_id: int | None = None,
    ) -> GameRound:
        bank_part = (MAX_MULTIPLIER[kind] - 1) * stake
        self.ledger.settle_escrow(player, stake, bank_part, payout)
        round_ = GameRound(
            round_id=self.next_round_id,
            player=player,
            kind=kind,
            stake=stake,
            player_escrow=0,
            bank_escrow=0,
            commitment_id=commitment_id,
            client_seed=client_seed,
            nonces=nonces,
            outcome=outcome,
            gross_payout=payout,
            settled=True,
            session_id=session_id,
        )
        self.next_round_id += 1
        if self.keep_history:
            self.rounds[round_.round_id] = round_
        return round_

    # -- dice -----------------------------------------------------------------

    def play_dice(
        self, player: str, guess: int, stake: int, client_seed: str, commitment_id: str
    ) -> GameRound:
        if not isinstance(guess, int) or isinstance(guess, bool) or not 1 <= guess <= 6:
            raise GuessOutOfRange(f"dice guess must be in [1, 6], got {guess!r}")
        seed_bytes = self._pre_round(stake, client_seed, commitment_id)
        self.ledger.hold_escrow(player, stake, 5 * stake)
        draw = self.registry.draw_uniform(commitment_id, seed_bytes, 6)
        roll = 1 + draw.value
        payout = 6 * stake if roll == guess else 0
        return self._new_round(
            player,
            DICE,
            stake,
            commitment_id,
            client_seed,
            [draw.nonce],
            {"guess": guess, "roll": roll},
            payout,
        )

    # -- slots ------------------------------------------------------------------

    def play_slots(
        self, player: str, stake: int, client_seed: str, commitment_id: str
    ) -> GameRound:
        seed_bytes = self._pre_round(stake, client_seed, commitment_id)
        self.ledger.hold_escrow(player, stake, 8 * stake)
        nonces = []
        digits = []
        for _ in range(3):
            draw = self.registry.draw_uniform(commitment_id, seed_bytes, 10)
            digits.append(draw.value)
            nonces.append(draw.nonce)
        distinct = len(set(digits))
        if distinct == 1:
            tier, payout = "triple", 9 * stake
        elif distinct == 2:
            tier, payout = "pair", 3 * stake
        else:
            tier, payout = "none", 0
        return self._new_round(
            player,
            SLOTS,
            stake,
            commitment_id,
            client_seed,
            nonces,
            {"digits": digits, "tier": tier},
            payout,
        )

    # -- roulette -------------------------------------------------------------

    def play_roulette(
        self,
        player: str,
        number: int,
        color: str,
        stake: int,
        client_seed: str,
        commitment_id: str,
    ) -> GameRound:
        if not isinstance(number, int) or isinstance(number, bool) or not 0 <= number <= 36:
            raise GuessOutOfRange(f"roulette number must be in [0, 36], got {number!r}")
        if color not in (RED, BLACK, GREEN):
            raise InconsistentGuess(f"unknown color {color!r}")
        if color != pocket_color(number):
            raise InconsistentGuess(
                f"number {number} is {pocket_color(number)} on the wheel, not {color}"
            )
        seed_bytes = self._pre_round(stake, client_seed, commitment_id)
        self.ledger.hold_escrow(player, stake, 35 * stake)
        draw = self.registry.draw_uniform(commitment_id, seed_bytes, 37)
        pocket = draw.value
        hit_color = pocket_color(pocket)
        if pocket == number:
            hit, payout = "number", 36 * stake
        elif hit_color == color:
            hit, payout = "color", 2 * stake
        else:
            hit, payout = "none", 0
        return self._new_round(
            player,
            ROULETTE,
            stake,
            commitment_id,
            client_seed,
            [draw.nonce],
            {
                "number": number,
                "color": color,
                "pocket": pocket,
                "pocket_color": hit_color,
                "hit": hit,
            },
            payout,
        )

    # -- blackjack ----------------------------------------------------------------

    def blackjack_start(
        self, player: str, stake: int, client_seed: str, commitment_id: str
    ) -> BlackjackSession:
        for session in self.sessions.values():
            if session.player == player and session.phase == PLAYER_TURN:
                raise OpenSessionExists(
                    f"{player!r} already has open session {session.session_id}"
                )
        seed_bytes = self._pre_round(stake, client_seed, commitment_id)
        self.ledger.hold_escrow(player, stake, stake)
        session = BlackjackSession(
            session_id=self.next_session_id,
            player=player,
            stake=stake,
            commitment_id=commitment_id,
            client_seed=client_seed,
        )
        self.next_session_id += 1
        self.registry.begin_round(commitment_id)
        self._draw_card(session, session.player_cards)
        self._draw_card(session, session.player_cards)
        self._draw_card(session, session.dealer_cards)
        if session.player_points > BUST_OVER:  # two aces
            self._settle_session(session, payout=0, reason="player_bust")
        else:
            self.sessions[session.session_id] = session
        return session

    def blackjack_hit(self, player: str, session_id: int) -> BlackjackSession:
        session = self._open_session(player, session_id)
        self._draw_card(session, session.player_cards)
        if session.player_points > BUST_OVER:
            self._settle_session(session, payout=0, reason="player_bust")
        return session

    def blackjack_stand(self, player: str, session_id: int) -> GameRound:
        session = self._open_session(player, session_id)
        while session.dealer_points < DEALER_STANDS_AT:
            self._draw_card(session, session.dealer_cards)
        player_points = session.player_points
        dealer_points = session.dealer_points
        if dealer_points > BUST_OVER:
            payout, reason = 2 * session.stake, "dealer_bust"
        elif player_points > dealer_points:
            payout, reason = 2 * session.stake, "player_higher"
        else:
            payout, reason = 0, "dealer_higher_or_tie"  # ties lose
        round_ = self._settle_session(session, payout=payout, reason=reason)
        return round_

    def _draw_card(self, session: BlackjackSession, hand: list[int]) -> None:
        draw = self.registry.draw_uniform(
            session.commitment_id, session.client_seed.encode("utf-8"), 13
        )
        hand.append(draw.value)
        session.nonces.append(draw.nonce)

    def _open_session(self, player: str, session_id: int) -> BlackjackSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id}")
        if session.player != player:
            raise NotYourSession(f"session {session_id} belongs to another player")
        if session.phase != PLAYER_TURN:
            raise NotPlayerTurn(f"session {session_id} is {session.phase}")
        return session

    def _settle_session(self, session: BlackjackSession, payout: int, reason: str) -> GameRound:
        outcome = {
            "player_cards": [RANKS[c] for c in session.player_cards],
            "dealer_cards": [RANKS[c] for c in session.dealer_cards],
            "player_points": session.player_points,
            "dealer_points": session.dealer_points,
            "result": "win" if payout else "lose",
            "reason": reason,
        }
        round_ = self._new_round(
            session.player,
            BLACKJACK,
            session.stake,
            session.commitment_id,
            session.client_seed,
            list(session.nonces),
            outcome,
            payout,
            session_id=session.session_id,
        )
        session.phase = SETTLED
        session.round_id = round_.round_id
        self.registry.end_round(session.commitment_id)
        self.sessions.pop(session.session_id, None)
        return round_

    # -- reads -----------------------------------------------------------------

    def round_info(self, round_id: int) -> GameRound:
        round_ = self.rounds.get(round_id)
        if round_ is None:
            raise UnknownRound(f"no round {round_id}")
        return round_

    def open_sessions(self) -> list[BlackjackSession]:
        return sorted(self.sessions.values(), key=lambda s: s.session_id)
