"""Token accounting: accounts, bank reserve, escrow holds, conservation.

All amounts are non-negative integers (whole platform tokens). Escrowed
tokens are moved *out* of the spendable buckets: an account's ``balance``
never includes its ``escrowed`` tokens, and the bank's ``reserve`` never
includes ``bank_escrowed``. That makes "free balance" simply ``balance``
and keeps the conservation equation a plain sum over buckets.

Conservation invariant, checked by :meth:`Ledger.conservation_check`::

    reserve + bank_escrowed + sum(balances) + sum(escrows)
        == investment + top-ups + tokens bought - tokens withdrawn

Every mutating method validates completely before touching state, so a
raised error leaves the ledger bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    AboveMaximumPurchase,
    AlreadyInitialized,
    AmountNotConvertible,
    BelowMinimumPurchase,
    InsufficientBalance,
    InsufficientReserve,
    NotInitialized,
    NotOwner,
    OutstandingDebt,
    UnknownAccount,
    ZeroAmount,
    ZeroInvestment,
)

MIN_PURCHASE_TOKENS = 10
MAX_PURCHASE_TOKENS = 1000

MAX_ACCOUNT_ID_LEN = 64


def _check_amount(value: int, name: str = "amount") -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"{name} must be an int, got {type(value).__name__}")
    return value


def _check_account_id(account_id: str) -> str:
    if not isinstance(account_id, str) or not account_id:
        raise ValueError("account id must be a non-empty string")
    if len(account_id) > MAX_ACCOUNT_ID_LEN:
        raise ValueError(f"account id longer than {MAX_ACCOUNT_ID_LEN} chars")
    return account_id


@dataclass
class Account:
    id: str
    balance: int = 0
    escrowed: int = 0
    # SHA-256 hex of the bearer credential; None for accounts created
    # directly at the library level.
    credential_hash: str | None = None


@dataclass
class BankState:
    owner: str = ""
    reserve: int = 0
    bank_escrowed: int = 0
    initialized: bool = False


@dataclass
class Ledger:
    """Single-writer token ledger. Not thread-safe on its own; callers
    serialize mutations (the platform engine runs one command at a time)."""

    bank: BankState = field(default_factory=BankState)
    rate: int = 1  # tokens per base currency unit, fixed at initialization
    accounts: dict[str, Account] = field(default_factory=dict)
    invested_total: int = 0
    topup_total: int = 0
    bought_total: int = 0
    withdrawn_total: int = 0

    # -- bank ---------------------------------------------------------------

    def initialize_bank(self, owner: str, investment: int, rate: int = 1) -> BankState:
        if self.bank.initialized:
            raise AlreadyInitialized("bank is already initialized")
        _check_account_id(owner)
        _check_amount(investment, "investment")
        if investment <= 0:
            raise ZeroInvestment("initial investment must be positive")
        if not isinstance(rate, int) or rate < 1:
            raise ValueError(f"exchange rate must be a positive integer, got {rate!r}")
        self.bank.owner = owner
        self.bank.reserve = investment
        self.bank.initialized = True
        self.rate = rate
        self.invested_total = investment
        return self.bank

    def top_up_bank(self, caller: str, amount: int) -> BankState:
        self.require_initialized()
        if caller != self.bank.owner:
            raise NotOwner("only the platform owner can top up the bank")
        _check_amount(amount)
        if amount <= 0:
            raise ZeroAmount("top-up amount must be positive")
        self.bank.reserve += amount
        self.topup_total += amount
        return self.bank

    def require_initialized(self) -> None:
        if not self.bank.initialized:
            raise NotInitialized("bank has not been initialized")

    # -- accounts -----------------------------------------------------------

    def buy_tokens(self, buyer: str, base_amount: int, credential_hash: str | None = None) -> int:
        """Convert ``base_amount`` base-currency units into tokens for
        ``buyer``, creating the account on first purchase. Returns the
        number of tokens credited."""
        self.require_initialized()
        _check_account_id(buyer)
        _check_amount(base_amount, "base_amount")
        tokens = base_amount * self.rate
        if tokens < MIN_PURCHASE_TOKENS:
            raise BelowMinimumPurchase(
                f"purchase of {tokens} tokens is below the minimum of {MIN_PURCHASE_TOKENS}"
            )
        if tokens > MAX_PURCHASE_TOKENS:
            raise AboveMaximumPurchase(
                f"purchase of {tokens} tokens is above the maximum of {MAX_PURCHASE_TOKENS}"
            )
        account = self.accounts.get(buyer)
        if account is None:
            account = Account(id=buyer, credential_hash=credential_hash)
            self.accounts[buyer] = account
        account.balance += tokens
        self.bought_total += tokens
        return tokens

    def withdraw_tokens(self, caller: str, amount: int, owed_cap: int = 0) -> int:
        """Burn ``amount`` tokens from ``caller``'s free balance and return
        the base-currency units paid out. ``owed_cap`` is the caller's
        outstanding loan debt; in strict lending mode the engine passes it
        so withdrawals cannot dip below what is owed."""
        self.require_initialized()
        account = self.accounts.get(caller)
        if account is None:
            raise UnknownAccount(f"no account {caller!r}")
        _check_amount(amount)
        if amount <= 0:
            raise ZeroAmount("withdrawal amount must be positive")
        if amount > account.balance:
            raise InsufficientBalance(
                f"withdrawal of {amount} exceeds free balance {account.balance}"
            )
        if owed_cap and account.balance - amount < owed_cap:
            raise OutstandingDebt(
                f"withdrawal would leave {account.balance - amount} < owed {owed_cap}"
            )
        if amount % self.rate != 0:
            raise AmountNotConvertible(
                f"{amount} tokens is not a whole multiple of the rate {self.rate}"
            )
        account.balance -= amount
        self.withdrawn_total += amount
        return amount // self.rate

    def balance_of(self, account_id: str) -> tuple[int, int]:
        """(balance, escrowed); zeros for unknown accounts."""
        account = self.accounts.get(account_id)
        if account is None:
            return (0, 0)
        return (account.balance, account.escrowed)

    def account(self, account_id: str) -> Account:
        account = self.accounts.get(account_id)
        if account is None:
            raise UnknownAccount(f"no account {account_id!r}")
        return account

    # -- transfers used by lending -------------------------------------------

    def reserve_to_account(self, account_id: str, amount: int) -> None:
        """Move tokens from the bank reserve into an account balance."""
        account = self.account(account_id)
        if amount > self.bank.reserve:
            raise InsufficientReserve(
                f"transfer of {amount} exceeds free reserve {self.bank.reserve}"
            )
        self.bank.reserve -= amount
        account.balance += amount

    def account_to_reserve(self, account_id: str, amount: int) -> None:
        """Move tokens from an account balance into the bank reserve."""
        account = self.account(account_id)
        if amount > account.balance:
            raise InsufficientBalance(
                f"transfer of {amount} exceeds free balance {account.balance}"
            )
        account.balance -= amount
        self.bank.reserve += amount

    # -- escrow used by the games ---------------------------------------------

    def hold_escrow(self, player: str, player_amount: int, bank_amount: int) -> None:
        """Lock the player's stake and the bank's matching contribution."""
        account = self.accounts.get(player)
        free = account.balance if account is not None else 0
        if player_amount > free:
            raise InsufficientBalance(
                f"stake of {player_amount} exceeds free balance {free}"
            )
        if bank_amount > self.bank.reserve:
            raise InsufficientReserve(
                f"bank escrow of {bank_amount} exceeds free reserve {self.bank.reserve}"
            )
        assert account is not None
        account.balance -= player_amount
        account.escrowed += player_amount
        self.bank.reserve -= bank_amount
        self.bank.bank_escrowed += bank_amount

    def settle_escrow(self, player: str, player_amount: int, bank_amount: int, payout: int) -> None:
        """Release an escrow pool: ``payout`` to the player's balance, the
        remainder of the pool back to the reserve."""
        pool = player_amount + bank_amount
        if payout > pool:
            raise ValueError(f"payout {payout} exceeds escrow pool {pool}")
        account = self.account(player)
        if player_amount > account.escrowed or bank_amount > self.bank.bank_escrowed:
            raise ValueError("settlement exceeds held escrow")
        account.escrowed -= player_amount
        self.bank.bank_escrowed -= bank_amount
        account.balance += payout
        self.bank.reserve += pool - payout

    # -- conservation ------------------------------------------------------------

    def tokens_in_system(self) -> int:
        total = self.bank.reserve + self.bank.bank_escrowed
        for account in self.accounts.values():
            total += account.balance + account.escrowed
        return total

    def tokens_expected(self) -> int:
        return self.invested_total + self.topup_total + self.bought_total - self.withdrawn_total

    def conservation_check(self) -> bool:
        return self.tokens_in_system() == self.tokens_expected()
