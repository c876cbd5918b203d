"""Platform error hierarchy.

Every rejectable operation raises a subclass of :class:`PlatformError`. The
class name doubles as the machine-readable error code that ends up in journal
events and in HTTP error bodies, and ``http_status`` drives the API layer's
status mapping (400 validation, 401 authentication, 403 authorization,
404 unknown id, 409 state conflict).
"""

from __future__ import annotations


class PlatformError(Exception):
    http_status = 400

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__

    @property
    def code(self) -> str:
        return self.__class__.__name__


# --- validation (400) ---------------------------------------------------

class ZeroInvestment(PlatformError):
    pass


class ZeroAmount(PlatformError):
    pass


class BelowMinimumPurchase(PlatformError):
    pass


class AboveMaximumPurchase(PlatformError):
    pass


class AmountNotConvertible(PlatformError):
    """Withdrawal amount is not a whole multiple of the exchange rate."""


class PrincipalOutOfBounds(PlatformError):
    pass


class RateOutOfBounds(PlatformError):
    pass


class GuessOutOfRange(PlatformError):
    pass


class InconsistentGuess(PlatformError):
    """Roulette (number, color) pair does not match the wheel layout."""


class ZeroStake(PlatformError):
    pass


class StakeAboveMaximum(PlatformError):
    pass


class ZeroRange(PlatformError):
    pass


class ClientSeedTooLong(PlatformError):
    pass


class BadStrategy(PlatformError):
    pass


class ZeroRounds(PlatformError):
    pass


class BadCommand(PlatformError):
    """Malformed or unknown command document."""


class ConfigInvalid(PlatformError):
    pass


# --- authentication / authorization (401 / 403) --------------------------

class AuthFailed(PlatformError):
    http_status = 401


class NotOwner(PlatformError):
    http_status = 403


class NotYourSession(PlatformError):
    http_status = 403


class NotYourLoan(PlatformError):
    http_status = 403


# --- unknown ids (404) ----------------------------------------------------

class UnknownAccount(PlatformError):
    http_status = 404


class UnknownLoan(PlatformError):
    http_status = 404


class UnknownCommitment(PlatformError):
    http_status = 404


class UnknownSession(PlatformError):
    http_status = 404


class UnknownRound(PlatformError):
    http_status = 404


# --- state conflicts (409) -------------------------------------------------

class AlreadyInitialized(PlatformError):
    http_status = 409


class NotInitialized(PlatformError):
    http_status = 409


class InsufficientBalance(PlatformError):
    http_status = 409


class InsufficientReserve(PlatformError):
    http_status = 409


class OutstandingDebt(PlatformError):
    """Strict lending mode: withdrawal would dip below the owed amount."""

    http_status = 409


class ExistingLiveLoan(PlatformError):
    http_status = 409


class NotRequested(PlatformError):
    http_status = 409


class NotApproved(PlatformError):
    http_status = 409


class Overpayment(PlatformError):
    http_status = 409


class AlreadyRevealed(PlatformError):
    http_status = 409


class OpenRoundsRemain(PlatformError):
    http_status = 409


class OpenSessionExists(PlatformError):
    http_status = 409


class NotPlayerTurn(PlatformError):
    http_status = 409


class JournalCorrupt(PlatformError):
    http_status = 409
