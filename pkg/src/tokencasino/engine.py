"""The platform engine: one deterministic state machine behind everything.

A :class:`Platform` aggregates the ledger, loan book, commitment registry
and game table, and applies *commands* (plain dicts with a ``kind`` field)
one at a time. All nondeterminism (fresh server seeds, fresh credential
hashes) is resolved by the caller and carried inside the command, so
re-applying a recorded command stream from genesis reproduces the exact
same state. That property is what the journal's replay and the state hash
check rely on.

The state hash is SHA-256 over a canonical binary serialization: sections
in fixed order, entries sorted by id, every integer 8-byte big-endian,
every string length-prefixed UTF-8.
"""

from __future__ import annotations

import hashlib
from typing import Any

from .errors import BadCommand, NotInitialized, UnknownCommitment
from .fairness import Commitment, CommitmentRegistry
from .games import BlackjackSession, GameRound, GameTable, SETTLED
from .ledger import Account, BankState, Ledger
from .lending import Loan, LoanBook


def _u64(value: int) -> bytes:
    return value.to_bytes(8, "big")


def _u8(flag: bool) -> bytes:
    return b"\x01" if flag else b"\x00"


def _s(text: str) -> bytes:
    raw = text.encode("utf-8")
    return _u64(len(raw)) + raw


def _ints(values: list[int]) -> bytes:
    return _u64(len(values)) + b"".join(_u64(v) for v in values)


def _commitment_order(commitment_id: str) -> int:
    return int(commitment_id.rsplit("-", 1)[1])


def loan_to_dict(loan: Loan) -> dict:
    return {
        "loan_id": loan.loan_id,
        "borrower": loan.borrower,
        "principal": loan.principal,
        "rate_percent": loan.rate_percent,
        "owed": loan.owed,
        "status": loan.status,
    }


class Platform:
    """Deterministic command-applying core. Single-writer: callers must
    serialize :meth:`apply`; reads are safe between commands."""

    def __init__(self, strict_lending: bool = False, loan_rate_min: int = 1,
                 loan_rate_max: int = 20, keep_round_history: bool = True):
        self.ledger = Ledger()
        self.loan_book = LoanBook(self.ledger, rate_min=loan_rate_min, rate_max=loan_rate_max)
        self.registry = CommitmentRegistry()
        self.table = GameTable(self.ledger, self.registry, keep_history=keep_round_history)
        self.strict_lending = strict_lending
        self.active_commitment_id: str | None = None
        self.next_account_seq = 1

    # ------------------------------------------------------------------ commands

    def apply(self, command: dict) -> dict:
        """Apply one command; returns the result document. Raises a
        PlatformError without touching state when the command is rejected."""
        kind = command.get("kind")
        handler = self._HANDLERS.get(kind)
        if handler is None:
            raise BadCommand(f"unknown command kind {kind!r}")
        if kind != "init_bank" and not self.ledger.bank.initialized:
            raise NotInitialized("bank has not been initialized")
        return handler(self, command)

    def _cmd_init_bank(self, cmd: dict) -> dict:
        owner = _arg(cmd, "owner", str)
        investment = _arg(cmd, "investment", int)
        rate = _arg(cmd, "rate", int, default=1)
        bank = self.ledger.initialize_bank(owner, investment, rate)
        return {"owner": bank.owner, "reserve": bank.reserve, "rate": self.ledger.rate}

    def _cmd_top_up_bank(self, cmd: dict) -> dict:
        bank = self.ledger.top_up_bank(_arg(cmd, "caller", str), _arg(cmd, "amount", int))
        return {"reserve": bank.reserve}

    def _cmd_buy_tokens(self, cmd: dict) -> dict:
        account_id = _arg(cmd, "account_id", str, default=None, allow_none=True)
        base_amount = _arg(cmd, "base_amount", int)
        credential_hash = _arg(cmd, "credential_hash", str, default=None, allow_none=True)
        created = account_id is None
        if created:
            account_id = self._fresh_account_id()
        tokens = self.ledger.buy_tokens(account_id, base_amount, credential_hash)
        balance, _ = self.ledger.balance_of(account_id)
        return {
            "account_id": account_id,
            "tokens": tokens,
            "balance": balance,
            "created": created,
        }

    def _cmd_withdraw_tokens(self, cmd: dict) -> dict:
        caller = _arg(cmd, "caller", str)
        amount = _arg(cmd, "amount", int)
        owed_cap = self.loan_book.total_owed(caller) if self.strict_lending else 0
        base_units = self.ledger.withdraw_tokens(caller, amount, owed_cap=owed_cap)
        balance, _ = self.ledger.balance_of(caller)
        return {"base_units": base_units, "balance": balance}

    def _cmd_request_loan(self, cmd: dict) -> dict:
        loan = self.loan_book.request_loan(
            _arg(cmd, "borrower", str),
            _arg(cmd, "principal", int),
            _arg(cmd, "rate_percent", int),
        )
        return loan_to_dict(loan)

    def _cmd_decide_loan(self, cmd: dict) -> dict:
        loan = self.loan_book.decide_loan(
            _arg(cmd, "caller", str),
            _arg(cmd, "loan_id", int),
            _arg(cmd, "accept", bool),
        )
        return loan_to_dict(loan)

    def _cmd_repay_loan(self, cmd: dict) -> dict:
        loan = self.loan_book.repay_loan(
            _arg(cmd, "borrower", str),
            _arg(cmd, "loan_id", int),
            _arg(cmd, "amount", int),
        )
        return loan_to_dict(loan)

    def _cmd_open_commitment(self, cmd: dict) -> dict:
        seed_hex = _arg(cmd, "server_seed", str)
        commitment = self.registry.open_commitment(bytes.fromhex(seed_hex))
        self.active_commitment_id = commitment.commitment_id
        return {
            "commitment_id": commitment.commitment_id,
            "commit_hash": commitment.commit_hash_hex,
        }

    def _cmd_reveal_commitment(self, cmd: dict) -> dict:
        commitment_id = _arg(cmd, "commitment_id", str)
        seed = self.registry.reveal(commitment_id)
        if self.active_commitment_id == commitment_id:
            self.active_commitment_id = None
        return {"commitment_id": commitment_id, "server_seed": seed.hex()}

    def _cmd_play_dice(self, cmd: dict) -> dict:
        round_ = self.table.play_dice(
            _arg(cmd, "player", str),
            _arg(cmd, "guess", int),
            _arg(cmd, "stake", int),
            _arg(cmd, "client_seed", str, default=""),
            self._require_commitment(),
        )
        return round_.to_dict()

    def _cmd_play_slots(self, cmd: dict) -> dict:
        round_ = self.table.play_slots(
            _arg(cmd, "player", str),
            _arg(cmd, "stake", int),
            _arg(cmd, "client_seed", str, default=""),
            self._require_commitment(),
        )
        return round_.to_dict()

    def _cmd_play_roulette(self, cmd: dict) -> dict:
        round_ = self.table.play_roulette(
            _arg(cmd, "player", str),
            _arg(cmd, "number", int),
            _arg(cmd, "color", str),
            _arg(cmd, "stake", int),
            _arg(cmd, "client_seed", str, default=""),
            self._require_commitment(),
        )
        return round_.to_dict()

    def _cmd_blackjack_start(self, cmd: dict) -> dict:
        session = self.table.blackjack_start(
            _arg(cmd, "player", str),
            _arg(cmd, "stake", int),
            _arg(cmd, "client_seed", str, default=""),
            self._require_commitment(),
        )
        return self._session_result(session)

    def _cmd_blackjack_hit(self, cmd: dict) -> dict:
        session = self.table.blackjack_hit(
            _arg(cmd, "player", str), _arg(cmd, "session_id", int)
        )
        return self._session_result(session)

    def _cmd_blackjack_stand(self, cmd: dict) -> dict:
        round_ = self.table.blackjack_stand(
            _arg(cmd, "player", str), _arg(cmd, "session_id", int)
        )
        return round_.to_dict()

    _HANDLERS = {
        "init_bank": _cmd_init_bank,
        "top_up_bank": _cmd_top_up_bank,
        "buy_tokens": _cmd_buy_tokens,
        "withdraw_tokens": _cmd_withdraw_tokens,
        "request_loan": _cmd_request_loan,
        "decide_loan": _cmd_decide_loan,
        "repay_loan": _cmd_repay_loan,
        "open_commitment": _cmd_open_commitment,
        "reveal_commitment": _cmd_reveal_commitment,
        "play_dice": _cmd_play_dice,
        "play_slots": _cmd_play_slots,
        "play_roulette": _cmd_play_roulette,
        "blackjack_start": _cmd_blackjack_start,
        "blackjack_hit": _cmd_blackjack_hit,
        "blackjack_stand": _cmd_blackjack_stand,
    }

    def _fresh_account_id(self) -> str:
        while True:
            candidate = f"acct-{self.next_account_seq}"
            self.next_account_seq += 1
            if candidate not in self.ledger.accounts:
                return candidate

    def _require_commitment(self) -> str:
        if self.active_commitment_id is None:
            raise UnknownCommitment("no active commitment; open one first")
        return self.active_commitment_id

    def _session_result(self, session: BlackjackSession) -> dict:
        result = session.to_dict()
        if session.phase == SETTLED and session.round_id is not None:
            round_ = self.table.rounds.get(session.round_id)
            if round_ is not None:
                result["round"] = round_.to_dict()
        return result

    # ------------------------------------------------------------------ reads

    def conservation_check(self) -> bool:
        return self.ledger.conservation_check()

    def commitment_info(self, commitment_id: str) -> dict:
        commitment = self.registry.get(commitment_id)
        info = {
            "commitment_id": commitment.commitment_id,
            "commit_hash": commitment.commit_hash_hex,
            "revealed": commitment.revealed,
            "draws": commitment.next_nonce,
            "open_rounds": commitment.open_rounds,
        }
        if commitment.revealed:
            info["server_seed"] = commitment.server_seed.hex()
        return info

    # ------------------------------------------------------------------ hashing

    def canonical_bytes(self) -> bytes:
        """Canonical serialization of the operational state. Settled round
        history is journal-derived and intentionally not part of the hash."""
        ledger = self.ledger
        bank = ledger.bank
        out = bytearray()
        out += _s("bank")
        out += _u8(bank.initialized) + _s(bank.owner)
        out += _u64(bank.reserve) + _u64(bank.bank_escrowed) + _u64(ledger.rate)
        out += _u64(ledger.invested_total) + _u64(ledger.topup_total)
        out += _u64(ledger.bought_total) + _u64(ledger.withdrawn_total)

        out += _s("accounts") + _u64(len(ledger.accounts))
        for account_id in sorted(ledger.accounts):
            account = ledger.accounts[account_id]
            out += _s(account.id) + _u64(account.balance) + _u64(account.escrowed)
            out += _s(account.credential_hash or "")

        out += _s("loans") + _u64(len(self.loan_book.loans))
        for loan_id in sorted(self.loan_book.loans):
            loan = self.loan_book.loans[loan_id]
            out += _u64(loan.loan_id) + _s(loan.borrower) + _u64(loan.principal)
            out += _u64(loan.rate_percent) + _u64(loan.owed) + _s(loan.status)

        out += _s("open_rounds") + _u64(len(self.table.sessions))
        for session_id in sorted(self.table.sessions):
            session = self.table.sessions[session_id]
            out += _u64(session.session_id) + _s(session.player) + _u64(session.stake)
            out += _s(session.phase) + _s(session.commitment_id) + _s(session.client_seed)
            out += _ints(session.player_cards) + _ints(session.dealer_cards)
            out += _ints(session.nonces)

        out += _s("commitments") + _u64(len(self.registry.commitments))
        for commitment_id in sorted(self.registry.commitments, key=_commitment_order):
            commitment = self.registry.commitments[commitment_id]
            out += _s(commitment.commitment_id) + commitment.server_seed
            out += _u64(commitment.next_nonce) + _u8(commitment.revealed)
            out += _u64(commitment.open_rounds)

        out += _s("counters")
        out += _u64(self.next_account_seq) + _u64(self.loan_book.next_loan_id)
        out += _u64(self.table.next_round_id) + _u64(self.table.next_session_id)
        out += _u64(self.registry.next_commitment_seq)
        out += _s(self.active_commitment_id or "")
        return bytes(out)

    def state_hash(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()

    # ------------------------------------------------------------------ snapshots

    def to_state_dict(self) -> dict:
        """Full JSON-able state, server seeds in plaintext hex; the
        persistence layer encrypts them before anything hits disk."""
        ledger = self.ledger
        return {
            "bank": {
                "owner": ledger.bank.owner,
                "reserve": ledger.bank.reserve,
                "bank_escrowed": ledger.bank.bank_escrowed,
                "initialized": ledger.bank.initialized,
            },
            "rate": ledger.rate,
            "totals": {
                "invested": ledger.invested_total,
                "topups": ledger.topup_total,
                "bought": ledger.bought_total,
                "withdrawn": ledger.withdrawn_total,
            },
            "accounts": [
                {
                    "id": a.id,
                    "balance": a.balance,
                    "escrowed": a.escrowed,
                    "credential_hash": a.credential_hash,
                }
                for a in (ledger.accounts[k] for k in sorted(ledger.accounts))
            ],
            "loans": [
                loan_to_dict(self.loan_book.loans[k])
                for k in sorted(self.loan_book.loans)
            ],
            "sessions": [
                {
                    "session_id": s.session_id,
                    "player": s.player,
                    "stake": s.stake,
                    "commitment_id": s.commitment_id,
                    "client_seed": s.client_seed,
                    "player_cards": list(s.player_cards),
                    "dealer_cards": list(s.dealer_cards),
                    "nonces": list(s.nonces),
                    "phase": s.phase,
                    "round_id": s.round_id,
                }
                for s in (self.table.sessions[k] for k in sorted(self.table.sessions))
            ],
            "rounds": [
                _round_state(self.table.rounds[k]) for k in sorted(self.table.rounds)
            ],
            "commitments": [
                {
                    "commitment_id": c.commitment_id,
                    "server_seed": c.server_seed.hex(),
                    "next_nonce": c.next_nonce,
                    "revealed": c.revealed,
                    "open_rounds": c.open_rounds,
                }
                for c in (
                    self.registry.commitments[k]
                    for k in sorted(self.registry.commitments, key=_commitment_order)
                )
            ],
            "counters": {
                "next_account_seq": self.next_account_seq,
                "next_loan_id": self.loan_book.next_loan_id,
                "next_round_id": self.table.next_round_id,
                "next_session_id": self.table.next_session_id,
                "next_commitment_seq": self.registry.next_commitment_seq,
                "active_commitment_id": self.active_commitment_id,
            },
        }

    @classmethod
    def from_state_dict(cls, state: dict, strict_lending: bool = False,
                        loan_rate_min: int = 1, loan_rate_max: int = 20) -> "Platform":
        platform = cls(
            strict_lending=strict_lending,
            loan_rate_min=loan_rate_min,
            loan_rate_max=loan_rate_max,
        )
        ledger = platform.ledger
        bank = state["bank"]
        ledger.bank = BankState(
            owner=bank["owner"],
            reserve=bank["reserve"],
            bank_escrowed=bank["bank_escrowed"],
            initialized=bank["initialized"],
        )
        ledger.rate = state["rate"]
        totals = state["totals"]
        ledger.invested_total = totals["invested"]
        ledger.topup_total = totals["topups"]
        ledger.bought_total = totals["bought"]
        ledger.withdrawn_total = totals["withdrawn"]
        for a in state["accounts"]:
            ledger.accounts[a["id"]] = Account(
                id=a["id"],
                balance=a["balance"],
                escrowed=a["escrowed"],
                credential_hash=a.get("credential_hash"),
            )
        for l in state["loans"]:
            platform.loan_book.loans[l["loan_id"]] = Loan(
                loan_id=l["loan_id"],
                borrower=l["borrower"],
                principal=l["principal"],
                rate_percent=l["rate_percent"],
                owed=l["owed"],
                status=l["status"],
            )
        for s in state["sessions"]:
            platform.table.sessions[s["session_id"]] = BlackjackSession(
                session_id=s["session_id"],
                player=s["player"],
                stake=s["stake"],
                commitment_id=s["commitment_id"],
                client_seed=s["client_seed"],
                player_cards=list(s["player_cards"]),
                dealer_cards=list(s["dealer_cards"]),
                nonces=list(s["nonces"]),
                phase=s["phase"],
                round_id=s.get("round_id"),
            )
        for r in state["rounds"]:
            round_ = _round_from_state(r)
            platform.table.rounds[round_.round_id] = round_
        for c in state["commitments"]:
            platform.registry.commitments[c["commitment_id"]] = Commitment(
                commitment_id=c["commitment_id"],
                server_seed=bytes.fromhex(c["server_seed"]),
                commit_hash=hashlib.sha256(bytes.fromhex(c["server_seed"])).digest(),
                next_nonce=c["next_nonce"],
                revealed=c["revealed"],
                open_rounds=c["open_rounds"],
            )
        counters = state["counters"]
        platform.next_account_seq = counters["next_account_seq"]
        platform.loan_book.next_loan_id = counters["next_loan_id"]
        platform.table.next_round_id = counters["next_round_id"]
        platform.table.next_session_id = counters["next_session_id"]
        platform.registry.next_commitment_seq = counters["next_commitment_seq"]
        platform.active_commitment_id = counters["active_commitment_id"]
        return platform


def _round_state(round_: GameRound) -> dict:
    return {
        "round_id": round_.round_id,
        "player": round_.player,
        "kind": round_.kind,
        "stake": round_.stake,
        "player_escrow": round_.player_escrow,
        "bank_escrow": round_.bank_escrow,
        "commitment_id": round_.commitment_id,
        "client_seed": round_.client_seed,
        "nonces": list(round_.nonces),
        "outcome": round_.outcome,
        "gross_payout": round_.gross_payout,
        "settled": round_.settled,
        "session_id": round_.session_id,
    }


def _round_from_state(state: dict) -> GameRound:
    return GameRound(
        round_id=state["round_id"],
        player=state["player"],
        kind=state["kind"],
        stake=state["stake"],
        player_escrow=state["player_escrow"],
        bank_escrow=state["bank_escrow"],
        commitment_id=state["commitment_id"],
        client_seed=state["client_seed"],
        nonces=list(state["nonces"]),
        outcome=state["outcome"],
        gross_payout=state["gross_payout"],
        settled=state["settled"],
        session_id=state.get("session_id"),
    )


def _arg(cmd: dict, key: str, type_: type, default: Any = ..., allow_none: bool = False) -> Any:
    if key not in cmd:
        if default is ...:
            raise BadCommand(f"command {cmd.get('kind')!r} missing field {key!r}")
        return default
    value = cmd[key]
    if value is None and allow_none:
        return None
    if type_ is int and isinstance(value, bool):
        raise BadCommand(f"field {key!r} must be {type_.__name__}, got bool")
    if not isinstance(value, type_):
        raise BadCommand(
            f"field {key!r} must be {type_.__name__}, got {type(value).__name__}"
        )
    return value
