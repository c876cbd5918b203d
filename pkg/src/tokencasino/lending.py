"""Loan lifecycle: request -> approve/reject -> repay.

A loan is Requested by a player, decided by the owner, and repaid
voluntarily. Interest is simple and recorded once at approval:
``owed = principal + floor(principal * rate / 100)``. Each borrower may
have at most one live (Requested or Approved) loan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    ExistingLiveLoan,
    InsufficientBalance,
    InsufficientReserve,
    NotApproved,
    NotOwner,
    NotRequested,
    NotYourLoan,
    Overpayment,
    PrincipalOutOfBounds,
    RateOutOfBounds,
    UnknownAccount,
    UnknownLoan,
    ZeroAmount,
)
from .ledger import Ledger, _check_amount

MIN_PRINCIPAL = 100
MAX_PRINCIPAL = 10000

REQUESTED = "Requested"
APPROVED = "Approved"
REJECTED = "Rejected"
REPAID = "Repaid"

LIVE_STATUSES = (REQUESTED, APPROVED)


@dataclass
class Loan:
    loan_id: int
    borrower: str
    principal: int
    rate_percent: int
    owed: int = 0
    status: str = REQUESTED


def interest_on(principal: int, rate_percent: int) -> int:
    return principal * rate_percent // 100


@dataclass
class LoanBook:
    """Loan records plus the token moves they trigger on a :class:`Ledger`."""

    ledger: Ledger
    rate_min: int = 1
    rate_max: int = 20
    loans: dict[int, Loan] = field(default_factory=dict)
    next_loan_id: int = 1

    def request_loan(self, borrower: str, principal: int, rate_percent: int) -> Loan:
        self.ledger.require_initialized()
        if borrower not in self.ledger.accounts:
            raise UnknownAccount(f"no account {borrower!r}")
        _check_amount(principal, "principal")
        _check_amount(rate_percent, "rate_percent")
        if not MIN_PRINCIPAL <= principal <= MAX_PRINCIPAL:
            raise PrincipalOutOfBounds(
                f"principal {principal} outside [{MIN_PRINCIPAL}, {MAX_PRINCIPAL}]"
            )
        if not self.rate_min <= rate_percent <= self.rate_max:
            raise RateOutOfBounds(
                f"rate {rate_percent}% outside [{self.rate_min}, {self.rate_max}]"
            )
        for loan in self.loans.values():
            if loan.borrower == borrower and loan.status in LIVE_STATUSES:
                raise ExistingLiveLoan(
                    f"{borrower!r} already has a loan in status {loan.status}"
                )
        loan = Loan(
            loan_id=self.next_loan_id,
            borrower=borrower,
            principal=principal,
            rate_percent=rate_percent,
        )
        self.next_loan_id += 1
        self.loans[loan.loan_id] = loan
        return loan

    def decide_loan(self, caller: str, loan_id: int, accept: bool) -> Loan:
        self.ledger.require_initialized()
        if caller != self.ledger.bank.owner:
            raise NotOwner("only the platform owner can decide loans")
        loan = self._get(loan_id)
        if loan.status != REQUESTED:
            raise NotRequested(f"loan {loan_id} is {loan.status}, not {REQUESTED}")
        if not accept:
            loan.status = REJECTED
            return loan
        if loan.principal > self.ledger.bank.reserve:
            raise InsufficientReserve(
                f"principal {loan.principal} exceeds free reserve {self.ledger.bank.reserve}"
            )
        self.ledger.reserve_to_account(loan.borrower, loan.principal)
        loan.owed = loan.principal + interest_on(loan.principal, loan.rate_percent)
        loan.status = APPROVED
        return loan

    def repay_loan(self, borrower: str, loan_id: int, amount: int) -> Loan:
        self.ledger.require_initialized()
        loan = self._get(loan_id)
        if loan.borrower != borrower:
            raise NotYourLoan(f"loan {loan_id} does not belong to {borrower!r}")
        if loan.status != APPROVED:
            raise NotApproved(f"loan {loan_id} is {loan.status}, not {APPROVED}")
        _check_amount(amount)
        if amount <= 0:
            raise ZeroAmount("repayment amount must be positive")
        if amount > loan.owed:
            raise Overpayment(f"repayment of {amount} exceeds owed {loan.owed}")
        balance, _ = self.ledger.balance_of(borrower)
        if amount > balance:
            raise InsufficientBalance(
                f"repayment of {amount} exceeds free balance {balance}"
            )
        self.ledger.account_to_reserve(borrower, amount)
        loan.owed -= amount
        if loan.owed == 0:
            loan.status = REPAID
        return loan

    def loans_of(self, borrower: str) -> list[Loan]:
        """All loans for a borrower, newest first."""
        mine = [loan for loan in self.loans.values() if loan.borrower == borrower]
        mine.sort(key=lambda loan: loan.loan_id, reverse=True)
        return mine

    def total_owed(self, borrower: str) -> int:
        return sum(
            loan.owed
            for loan in self.loans.values()
            if loan.borrower == borrower and loan.status == APPROVED
        )

    def _get(self, loan_id: int) -> Loan:
        loan = self.loans.get(loan_id)
        if loan is None:
            raise UnknownLoan(f"no loan {loan_id}")
        return loan
