"""Append-only event journal and state snapshots.

One JSON document per line, UTF-8, in seq order starting at 1 with no
gaps. Each record carries a ``chain`` digest linking it to its
predecessor, so any edit, reorder or gap is detected on load:

    chain_n = SHA-256(chain_{n-1} || canonical-JSON(record without chain))

with a genesis chain value of 64 zero hex chars. Appends are flushed and
fsynced before the caller may answer a client, which is what makes a
success response mean "durably journaled".

Server seeds never hit disk in plaintext: the ``server_seed`` field inside
a payload is encrypted (Fernet) with the journal key before writing and
transparently decrypted when commands are replayed. The raw journal (as
served to API clients) keeps the encrypted form.

Snapshots bound replay time: every ``snapshot_interval`` events the full
engine state is written next to the journal; on restore the snapshot is
trusted only if its chain digest matches the verified journal line.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from cryptography.fernet import Fernet, InvalidToken

from .errors import JournalCorrupt, PlatformError
from .engine import Platform

GENESIS_CHAIN = "0" * 64


def journal_fernet(journal_key: str) -> Fernet:
    digest = hashlib.sha256(journal_key.encode("utf-8")).digest()
    return Fernet(base64.urlsafe_b64encode(digest))


@dataclass
class EventRecord:
    seq: int
    ts: str
    kind: str
    payload: dict
    outcome: str  # "ok" or an error code
    chain: str = ""

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "ts": self.ts,
            "kind": self.kind,
            "payload": self.payload,
            "outcome": self.outcome,
            "chain": self.chain,
        }


def _chain_digest(prev_chain: str, record_sans_chain: dict) -> str:
    body = json.dumps(record_sans_chain, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256((prev_chain + body).encode("utf-8")).hexdigest()


class Journal:
    """The journal file plus its snapshot sidecar."""

    def __init__(self, path: str | Path, journal_key: str, snapshot_interval: int = 1000):
        self.path = Path(path)
        self.snapshot_path = Path(str(path) + ".snapshot")
        self.fernet = journal_fernet(journal_key)
        self.snapshot_interval = snapshot_interval
        self.last_seq = 0
        self.last_chain = GENESIS_CHAIN
        self._fh = None

    # ------------------------------------------------------------------ writing

    def open_for_append(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def append(self, ts: str, kind: str, payload: dict, outcome: str) -> EventRecord:
        """Journal one event durably (flush + fsync) and return it. The
        payload is sealed (seed fields encrypted) before anything is
        written or hashed."""
        if self._fh is None:
            self.open_for_append()
        record = EventRecord(
            seq=self.last_seq + 1,
            ts=ts,
            kind=kind,
            payload=self._seal(payload),
            outcome=outcome,
        )
        body = record.to_dict()
        del body["chain"]
        record.chain = _chain_digest(self.last_chain, body)
        line = json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":"))
        self._fh.write(line.encode("utf-8") + b"\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self.last_seq = record.seq
        self.last_chain = record.chain
        return record

    def _seal(self, payload: dict) -> dict:
        args = payload.get("args")
        if isinstance(args, dict) and "server_seed" in args:
            sealed = dict(payload)
            sealed_args = dict(args)
            token = self.fernet.encrypt(sealed_args.pop("server_seed").encode("ascii"))
            sealed_args["server_seed_sealed"] = token.decode("ascii")
            sealed["args"] = sealed_args
            return sealed
        return payload

    def _unseal(self, payload: dict) -> dict:
        args = payload.get("args")
        if isinstance(args, dict) and "server_seed_sealed" in args:
            opened = dict(payload)
            opened_args = dict(args)
            token = opened_args.pop("server_seed_sealed").encode("ascii")
            try:
                opened_args["server_seed"] = self.fernet.decrypt(token).decode("ascii")
            except InvalidToken as exc:
                raise JournalCorrupt("sealed server seed cannot be decrypted") from exc
            opened["args"] = opened_args
            return opened
        return payload

    # ------------------------------------------------------------------ reading

    def load_records(self) -> list[EventRecord]:
        """Read and verify the whole journal (seq contiguity + hash
        chain). Returns records in their on-disk (sealed) form."""
        if not self.path.exists():
            self.last_seq = 0
            self.last_chain = GENESIS_CHAIN
            return []
        records: list[EventRecord] = []
        chain = GENESIS_CHAIN
        expected_seq = 1
        with open(self.path, "rb") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if not raw.endswith(b"\n"):
                    raise JournalCorrupt(f"line {lineno} is truncated")
                try:
                    doc = json.loads(raw)
                except ValueError as exc:
                    raise JournalCorrupt(f"line {lineno} is not valid JSON") from exc
                for key in ("seq", "ts", "kind", "payload", "outcome", "chain"):
                    if key not in doc:
                        raise JournalCorrupt(f"line {lineno} missing field {key!r}")
                if doc["seq"] != expected_seq:
                    raise JournalCorrupt(
                        f"seq gap at line {lineno}: expected {expected_seq}, found {doc['seq']}"
                    )
                body = {k: doc[k] for k in ("seq", "ts", "kind", "payload", "outcome")}
                expected_chain = _chain_digest(chain, body)
                if doc["chain"] != expected_chain:
                    raise JournalCorrupt(f"hash chain mismatch at seq {doc['seq']}")
                chain = doc["chain"]
                records.append(
                    EventRecord(
                        seq=doc["seq"],
                        ts=doc["ts"],
                        kind=doc["kind"],
                        payload=doc["payload"],
                        outcome=doc["outcome"],
                        chain=doc["chain"],
                    )
                )
                expected_seq += 1
        self.last_seq = expected_seq - 1
        self.last_chain = chain
        return records

    def commands_from(self, records: Iterable[EventRecord]) -> Iterable[tuple[int, dict]]:
        """Unsealed (seq, command) pairs for every committed event."""
        for record in records:
            if record.outcome != "ok":
                continue
            payload = self._unseal(record.payload)
            args = payload.get("args", {})
            yield record.seq, {"kind": record.kind, **args}

    # ------------------------------------------------------------------ snapshots

    def write_snapshot(self, platform: Platform) -> None:
        state = platform.to_state_dict()
        for commitment in state["commitments"]:
            token = self.fernet.encrypt(commitment.pop("server_seed").encode("ascii"))
            commitment["server_seed_sealed"] = token.decode("ascii")
        doc = {
            "seq": self.last_seq,
            "chain": self.last_chain,
            "state_hash": platform.state_hash(),
            "state": state,
        }
        tmp = self.snapshot_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, separators=(",", ":"))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.snapshot_path)

    def load_snapshot(self) -> dict | None:
        """The snapshot document with seeds unsealed, or None if absent or
        unusable (a bad snapshot falls back to full replay, never crashes)."""
        if not self.snapshot_path.exists():
            return None
        try:
            with open(self.snapshot_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            for commitment in doc["state"]["commitments"]:
                token = commitment.pop("server_seed_sealed").encode("ascii")
                commitment["server_seed"] = self.fernet.decrypt(token).decode("ascii")
            return doc
        except (ValueError, KeyError, InvalidToken):
            return None

    def maybe_snapshot(self, platform: Platform) -> None:
        if self.snapshot_interval > 0 and self.last_seq % self.snapshot_interval == 0:
            self.write_snapshot(platform)


def restore_platform(
    journal: Journal,
    strict_lending: bool = False,
    loan_rate_min: int = 1,
    loan_rate_max: int = 20,
    use_snapshot: bool = True,
) -> Platform:
    """Verify the journal and rebuild the engine, starting from the
    snapshot when it matches the verified chain, else from genesis."""
    records = journal.load_records()

    def fresh() -> Platform:
        return Platform(
            strict_lending=strict_lending,
            loan_rate_min=loan_rate_min,
            loan_rate_max=loan_rate_max,
        )

    platform = fresh()
    start_seq = 0
    if use_snapshot:
        snapshot = journal.load_snapshot()
        if snapshot is not None and 0 < snapshot["seq"] <= len(records):
            anchored = records[snapshot["seq"] - 1].chain == snapshot["chain"]
            if anchored:
                candidate = Platform.from_state_dict(
                    snapshot["state"],
                    strict_lending=strict_lending,
                    loan_rate_min=loan_rate_min,
                    loan_rate_max=loan_rate_max,
                )
                if candidate.state_hash() == snapshot["state_hash"]:
                    platform = candidate
                    start_seq = snapshot["seq"]
    for seq, command in journal.commands_from(records):
        if seq <= start_seq:
            continue
        try:
            platform.apply(command)
        except PlatformError as exc:
            raise JournalCorrupt(
                f"committed event seq {seq} ({command.get('kind')}) failed on replay: {exc.code}"
            ) from exc
    return platform


def replay(
    journal: Journal,
    strict_lending: bool = False,
    loan_rate_min: int = 1,
    loan_rate_max: int = 20,
) -> Platform:
    """Full deterministic replay from genesis, ignoring snapshots."""
    return restore_platform(
        journal,
        strict_lending=strict_lending,
        loan_rate_min=loan_rate_min,
        loan_rate_max=loan_rate_max,
        use_snapshot=False,
    )
