"""HTTP/JSON API over the platform engine.

Authentication is bearer-token: the owner credential comes from config,
player credentials are minted on an account's first token purchase and
returned exactly once in that response (the platform stores only their
SHA-256). Every mutating request becomes one journaled command; rejected
commands (including failed authentication on mutating endpoints) are
journaled as error events. The journal write is flushed and fsynced before
the HTTP response leaves, and a success response implies the event is on
disk.

All mutations funnel through one lock, giving the total single-writer
order the engine requires; reads take the same lock briefly and serve the
latest committed state.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
from datetime import datetime, timezone

from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import PlatformConfig
from .engine import Platform, loan_to_dict
from .errors import AuthFailed, NotOwner, PlatformError
from .journal import Journal, restore_platform

OWNER_ACCOUNT_ID = "owner"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def credential_hash(credential: str) -> str:
    return hashlib.sha256(credential.encode("utf-8")).hexdigest()


class PlatformService:
    """Engine + journal + credentials behind a single writer lock."""

    def __init__(self, config: PlatformConfig):
        self.config = config
        self.journal = Journal(
            config.journal_path,
            journal_key=config.journal_key,
            snapshot_interval=config.snapshot_interval,
        )
        self.platform: Platform = restore_platform(
            self.journal,
            strict_lending=config.strict_lending,
            loan_rate_min=config.loan_rate_min,
            loan_rate_max=config.loan_rate_max,
        )
        self.events: list[dict] = [r.to_dict() for r in self.journal.load_records()]
        self.journal.open_for_append()
        self.lock = threading.RLock()
        self.credentials: dict[str, str] = {}
        for account in self.platform.ledger.accounts.values():
            if account.credential_hash:
                self.credentials[account.credential_hash] = account.id

    def close(self) -> None:
        self.journal.close()

    # ---------------------------------------------------------------- identity

    def identify(self, token: str | None) -> tuple[str, str | None]:
        """Map a bearer token to ("owner"|"account"|"anonymous", account_id)."""
        if not token:
            return ("anonymous", None)
        if hmac.compare_digest(token, self.config.owner_credential):
            return ("owner", None)
        account_id = self.credentials.get(credential_hash(token))
        if account_id is not None:
            return ("account", account_id)
        return ("anonymous", None)

    # ---------------------------------------------------------------- commands

    def execute(self, kind: str, args: dict) -> dict:
        """Apply one command and journal the outcome. Raises the platform
        error after journaling when the command is rejected."""
        with self.lock:
            try:
                result = self.platform.apply({"kind": kind, **args})
            except PlatformError as exc:
                self._journal_event(kind, {"args": args}, exc.code)
                raise
            self._journal_event(kind, {"args": args, "result": result}, "ok")
            return result

    def reject(self, kind: str, args: dict, error: PlatformError) -> None:
        """Journal a command that was rejected before reaching the engine
        (failed authentication) and raise it."""
        with self.lock:
            self._journal_event(kind, {"args": args}, error.code)
        raise error

    def _journal_event(self, kind: str, payload: dict, outcome: str) -> None:
        record = self.journal.append(_now_iso(), kind, payload, outcome)
        self.events.append(record.to_dict())
        self.journal.maybe_snapshot(self.platform)

    def ensure_commitment(self) -> None:
        """Open a fresh sealed commitment if no active one exists."""
        with self.lock:
            if self.platform.active_commitment_id is None:
                seed = secrets.token_bytes(32)
                self.execute("open_commitment", {"server_seed": seed.hex()})

    def owner_id(self) -> str:
        return self.platform.ledger.bank.owner or OWNER_ACCOUNT_ID


# -------------------------------------------------------------------- bodies

class InitBody(BaseModel):
    investment: int
    rate: int | None = None


class AmountBody(BaseModel):
    amount: int


class BuyBody(BaseModel):
    base_amount: int


class LoanRequestBody(BaseModel):
    principal: int
    rate_percent: int


class LoanDecisionBody(BaseModel):
    accept: bool


class DiceBody(BaseModel):
    guess: int
    stake: int
    client_seed: str = Field(default="")


class SlotsBody(BaseModel):
    stake: int
    client_seed: str = Field(default="")


class RouletteBody(BaseModel):
    number: int
    color: str
    stake: int
    client_seed: str = Field(default="")


class BlackjackBody(BaseModel):
    stake: int
    client_seed: str = Field(default="")


# -------------------------------------------------------------------- app

def create_app(config: PlatformConfig) -> FastAPI:
    service = PlatformService(config)
    app = FastAPI(title="tokencasino", docs_url=None, redoc_url=None)
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(PlatformError)
    async def platform_error_handler(request: Request, exc: PlatformError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "ValidationError", "message": str(exc.errors()[:1])},
        )

    def bearer(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:].strip()
        return None

    def require_owner(kind: str, args: dict, token: str | None) -> None:
        role, _ = service.identify(token)
        if role == "owner":
            return
        if role == "account":
            service.reject(kind, args, NotOwner("owner credential required"))
        service.reject(kind, args, AuthFailed("owner credential required"))

    def require_account(kind: str, args: dict, token: str | None) -> str:
        role, account_id = service.identify(token)
        if role == "account" and account_id is not None:
            return account_id
        service.reject(kind, args, AuthFailed("account credential required"))
        raise AssertionError("unreachable")

    # ---------------------------------------------------------------- bank

    @app.post("/bank/init")
    def bank_init(body: InitBody, token: str | None = Depends(bearer)):
        rate = body.rate if body.rate is not None else config.tokens_per_base_unit
        args = {"owner": OWNER_ACCOUNT_ID, "investment": body.investment, "rate": rate}
        require_owner("init_bank", args, token)
        return service.execute("init_bank", args)

    @app.post("/bank/topup")
    def bank_topup(body: AmountBody, token: str | None = Depends(bearer)):
        args = {"caller": service.owner_id(), "amount": body.amount}
        require_owner("top_up_bank", args, token)
        return service.execute("top_up_bank", args)

    # ---------------------------------------------------------------- accounts

    @app.post("/accounts/buy")
    def accounts_buy(body: BuyBody, token: str | None = Depends(bearer)):
        role, account_id = service.identify(token)
        if token and role == "anonymous":
            service.reject(
                "buy_tokens",
                {"base_amount": body.base_amount},
                AuthFailed("unknown credential"),
            )
        if role == "account":
            args = {"account_id": account_id, "base_amount": body.base_amount}
            return service.execute("buy_tokens", args)
        credential = secrets.token_hex(16)
        args = {
            "account_id": None,
            "base_amount": body.base_amount,
            "credential_hash": credential_hash(credential),
        }
        with service.lock:
            result = service.execute("buy_tokens", args)
            service.credentials[credential_hash(credential)] = result["account_id"]
        return {**result, "credential": credential}

    @app.post("/accounts/withdraw")
    def accounts_withdraw(body: AmountBody, token: str | None = Depends(bearer)):
        caller = require_account("withdraw_tokens", {"amount": body.amount}, token)
        return service.execute("withdraw_tokens", {"caller": caller, "amount": body.amount})

    @app.get("/accounts/{account_id}")
    def account_info(account_id: str):
        with service.lock:
            balance, escrowed = service.platform.ledger.balance_of(account_id)
            open_session = None
            for session in service.platform.table.sessions.values():
                if session.player == account_id:
                    open_session = session.session_id
                    break
        return {
            "account_id": account_id,
            "balance": balance,
            "escrowed": escrowed,
            "open_session_id": open_session,
        }

    # ---------------------------------------------------------------- loans

    @app.post("/loans")
    def loan_request(body: LoanRequestBody, token: str | None = Depends(bearer)):
        base_args = {"principal": body.principal, "rate_percent": body.rate_percent}
        borrower = require_account("request_loan", base_args, token)
        return service.execute("request_loan", {"borrower": borrower, **base_args})

    @app.post("/loans/{loan_id}/decision")
    def loan_decision(loan_id: int, body: LoanDecisionBody, token: str | None = Depends(bearer)):
        args = {"caller": service.owner_id(), "loan_id": loan_id, "accept": body.accept}
        require_owner("decide_loan", args, token)
        return service.execute("decide_loan", args)

    @app.post("/loans/{loan_id}/repay")
    def loan_repay(loan_id: int, body: AmountBody, token: str | None = Depends(bearer)):
        base_args = {"loan_id": loan_id, "amount": body.amount}
        borrower = require_account("repay_loan", base_args, token)
        return service.execute("repay_loan", {"borrower": borrower, **base_args})

    @app.get("/loans")
    def loans_of(borrower: str = Query(...)):
        with service.lock:
            loans = service.platform.loan_book.loans_of(borrower)
            return {"loans": [loan_to_dict(loan) for loan in loans]}

    # ---------------------------------------------------------------- games

    @app.post("/games/dice")
    def games_dice(body: DiceBody, token: str | None = Depends(bearer)):
        base_args = {"guess": body.guess, "stake": body.stake, "client_seed": body.client_seed}
        player = require_account("play_dice", base_args, token)
        with service.lock:
            service.ensure_commitment()
            return service.execute("play_dice", {"player": player, **base_args})

    @app.post("/games/slots")
    def games_slots(body: SlotsBody, token: str | None = Depends(bearer)):
        base_args = {"stake": body.stake, "client_seed": body.client_seed}
        player = require_account("play_slots", base_args, token)
        with service.lock:
            service.ensure_commitment()
            return service.execute("play_slots", {"player": player, **base_args})

    @app.post("/games/roulette")
    def games_roulette(body: RouletteBody, token: str | None = Depends(bearer)):
        base_args = {
            "number": body.number,
            "color": body.color,
            "stake": body.stake,
            "client_seed": body.client_seed,
        }
        player = require_account("play_roulette", base_args, token)
        with service.lock:
            service.ensure_commitment()
            return service.execute("play_roulette", {"player": player, **base_args})

    @app.post("/games/blackjack")
    def blackjack_start(body: BlackjackBody, token: str | None = Depends(bearer)):
        base_args = {"stake": body.stake, "client_seed": body.client_seed}
        player = require_account("blackjack_start", base_args, token)
        with service.lock:
            service.ensure_commitment()
            return service.execute("blackjack_start", {"player": player, **base_args})

    @app.post("/games/blackjack/{session_id}/hit")
    def blackjack_hit(session_id: int, token: str | None = Depends(bearer)):
        player = require_account("blackjack_hit", {"session_id": session_id}, token)
        return service.execute("blackjack_hit", {"player": player, "session_id": session_id})

    @app.post("/games/blackjack/{session_id}/stand")
    def blackjack_stand(session_id: int, token: str | None = Depends(bearer)):
        player = require_account("blackjack_stand", {"session_id": session_id}, token)
        return service.execute("blackjack_stand", {"player": player, "session_id": session_id})

    # ---------------------------------------------------------------- fairness / audit

    @app.get("/rounds/{round_id}")
    def round_info(round_id: int):
        with service.lock:
            round_ = service.platform.table.round_info(round_id)
            return round_.to_dict()

    @app.get("/fairness/commitments/{commitment_id}")
    def commitment_info(commitment_id: str, reveal: bool = Query(default=False)):
        with service.lock:
            info = service.platform.commitment_info(commitment_id)
            if reveal and not info["revealed"]:
                service.execute("reveal_commitment", {"commitment_id": commitment_id})
                info = service.platform.commitment_info(commitment_id)
            return info

    @app.get("/events")
    def events(since: int = Query(default=0)):
        with service.lock:
            tail = [e for e in service.events if e["seq"] > since]
            return {"events": tail, "last_seq": service.journal.last_seq}

    @app.get("/state/hash")
    def state_hash():
        with service.lock:
            return {"state_hash": service.platform.state_hash()}

    return app
