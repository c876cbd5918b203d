"""Exact payout oracles, independent of the game engine.

Everything here is computed by brute-force enumeration or dynamic
programming over exact rational probabilities (``fractions.Fraction``),
never by sampling and never by calling engine code. The simulator and the
test suite compare engine behaviour against these numbers.

Payout conventions match the escrow-pool settlement: values are *gross*
payout per unit stake (the stake itself is part of the pool), so an
expected value of 1 means a zero-edge game.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .errors import BadStrategy
from .games import BLACK, GREEN, RED, pocket_color

# Infinite-deck card values: 2-9 and ace(11) once each, four ten-valued
# ranks (10, J, Q, K) out of the 13.
CARD_VALUE_PROBS: tuple[tuple[int, Fraction], ...] = tuple(
    [(v, Fraction(1, 13)) for v in range(2, 10)]
    + [(10, Fraction(4, 13)), (11, Fraction(1, 13))]
)

DEALER_STANDS_AT = 16
BUST_OVER = 21
MIN_STAND_THRESHOLD = 12
MAX_STAND_THRESHOLD = 21


@dataclass(frozen=True)
class PayoutLaw:
    """Exact distribution of gross payout per unit stake."""

    outcomes: tuple[tuple[int, Fraction], ...]  # (payout multiple, probability)

    @property
    def ev(self) -> Fraction:
        return sum((p * m for m, p in self.outcomes), Fraction(0))

    @property
    def variance(self) -> Fraction:
        ev = self.ev
        second = sum((p * m * m for m, p in self.outcomes), Fraction(0))
        return second - ev * ev

    def probability_of(self, multiple: int) -> Fraction:
        return sum((p for m, p in self.outcomes if m == multiple), Fraction(0))


def dice_law() -> PayoutLaw:
    """Enumerate the 6 rolls: one matches the guess and pays 6x."""
    win = Fraction(1, 6)
    return PayoutLaw(((6, win), (0, 1 - win)))


def slots_law() -> PayoutLaw:
    """Enumerate all 1000 digit triples."""
    triple = pair = none = 0
    for digits in product(range(10), repeat=3):
        distinct = len(set(digits))
        if distinct == 1:
            triple += 1
        elif distinct == 2:
            pair += 1
        else:
            none += 1
    total = 1000
    return PayoutLaw(
        (
            (9, Fraction(triple, total)),
            (3, Fraction(pair, total)),
            (0, Fraction(none, total)),
        )
    )


def roulette_law(number: int = 7, color: str = RED) -> PayoutLaw:
    """Enumerate the 37 pockets for a consistent (number, color) guess."""
    if color not in (RED, BLACK, GREEN) or pocket_color(number) != color:
        raise ValueError(f"inconsistent guess ({number}, {color})")
    exact = color_only = none = 0
    for pocket in range(37):
        if pocket == number:
            exact += 1
        elif pocket_color(pocket) == color:
            color_only += 1
        else:
            none += 1
    return PayoutLaw(
        (
            (36, Fraction(exact, 37)),
            (2, Fraction(color_only, 37)),
            (0, Fraction(none, 37)),
        )
    )


# ---------------------------------------------------------------- blackjack

@lru_cache(maxsize=None)
def _dealer_finals_from(total: int) -> tuple[tuple[int, Fraction], ...]:
    """Distribution of the dealer's final total starting from ``total``,
    drawing while below the stand line."""
    if total >= DEALER_STANDS_AT:
        return ((total, Fraction(1)),)
    acc: dict[int, Fraction] = {}
    for value, prob in CARD_VALUE_PROBS:
        for final, q in _dealer_finals_from(total + value):
            acc[final] = acc.get(final, Fraction(0)) + prob * q
    return tuple(sorted(acc.items()))


def dealer_final_distribution() -> dict[int, Fraction]:
    """Final dealer totals (16..26) from a single dealt card."""
    acc: dict[int, Fraction] = {}
    for value, prob in CARD_VALUE_PROBS:
        for final, q in _dealer_finals_from(value):
            acc[final] = acc.get(final, Fraction(0)) + prob * q
    return dict(sorted(acc.items()))


def player_final_distribution(stand_threshold: int) -> dict[int | str, Fraction]:
    """Player totals under "hit below the threshold": keys are standing
    totals plus a ``"bust"`` bucket. Starts from two dealt cards; a 22
    off the deal (two aces) busts immediately."""
    check_stand_threshold(stand_threshold)

    @lru_cache(maxsize=None)
    def finals(total: int) -> tuple[tuple[int | str, Fraction], ...]:
        if total > BUST_OVER:
            return (("bust", Fraction(1)),)
        if total >= stand_threshold:
            return ((total, Fraction(1)),)
        acc: dict[int | str, Fraction] = {}
        for value, prob in CARD_VALUE_PROBS:
            for final, q in finals(total + value):
                acc[final] = acc.get(final, Fraction(0)) + prob * q
        return tuple(acc.items())

    acc: dict[int | str, Fraction] = {}
    for v1, p1 in CARD_VALUE_PROBS:
        for v2, p2 in CARD_VALUE_PROBS:
            for final, q in finals(v1 + v2):
                acc[final] = acc.get(final, Fraction(0)) + p1 * p2 * q
    return acc


def blackjack_win_probability(stand_threshold: int) -> Fraction:
    """Exact win probability for the threshold strategy: win on dealer
    bust or a strictly higher standing total (ties lose)."""
    player = player_final_distribution(stand_threshold)
    dealer = dealer_final_distribution()
    dealer_bust = sum(
        (q for total, q in dealer.items() if total > BUST_OVER), Fraction(0)
    )
    win = Fraction(0)
    for p_total, p_prob in player.items():
        if p_total == "bust":
            continue
        beats = sum(
            (q for d_total, q in dealer.items() if d_total <= BUST_OVER and p_total > d_total),
            Fraction(0),
        )
        win += p_prob * (dealer_bust + beats)
    return win


def blackjack_law(stand_threshold: int) -> PayoutLaw:
    win = blackjack_win_probability(stand_threshold)
    return PayoutLaw(((2, win), (0, 1 - win)))


def check_stand_threshold(stand_threshold: int) -> int:
    if (
        not isinstance(stand_threshold, int)
        or isinstance(stand_threshold, bool)
        or not MIN_STAND_THRESHOLD <= stand_threshold <= MAX_STAND_THRESHOLD
    ):
        raise BadStrategy(
            f"stand threshold must be an integer in "
            f"[{MIN_STAND_THRESHOLD}, {MAX_STAND_THRESHOLD}], got {stand_threshold!r}"
        )
    return stand_threshold


def law_for(game: str, stand_threshold: int = 17) -> PayoutLaw:
    if game == "dice":
        return dice_law()
    if game == "slots":
        return slots_law()
    if game == "roulette":
        return roulette_law()
    if game == "blackjack":
        return blackjack_law(stand_threshold)
    raise ValueError(f"unknown game {game!r}")
