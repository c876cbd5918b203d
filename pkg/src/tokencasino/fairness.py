"""Commit-reveal randomness.

The house commits to a secret 32-byte server seed by publishing
``SHA-256(server_seed)`` before any stake is taken. Every outcome is then
derived deterministically:

    message = server_seed || client_seed || nonce (8-byte big-endian)
    value   = first 8 bytes of SHA-256(message), big-endian unsigned

and reduced to ``[0, n)`` by rejection sampling: if ``value`` falls into
the biased tail of the 64-bit range, retry with an 8-byte big-endian
subcounter (1, 2, ...) appended to the message. Attempt 0 carries no
subcounter. Once the seed is revealed, anyone can replay this recipe and
check the outcome; until then the seed never leaves the registry.

Nonces are assigned by the registry (one per draw, strictly increasing per
commitment) so a nonce can never be reused.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field

from .errors import (
    AlreadyRevealed,
    ClientSeedTooLong,
    OpenRoundsRemain,
    UnknownCommitment,
    ZeroRange,
)

SEED_BYTES = 32
MAX_CLIENT_SEED_BYTES = 64
SOURCE_BITS = 64


def rejection_bound(n: int, source_bits: int = SOURCE_BITS) -> int:
    """Largest multiple of ``n`` not exceeding ``2**source_bits``. Values
    below the bound map uniformly onto ``[0, n)`` via ``% n``; values at or
    above it are rejected."""
    if n < 1:
        raise ZeroRange(f"range must be >= 1, got {n}")
    space = 1 << source_bits
    return space - (space % n)


def derive_uniform(server_seed: bytes, client_seed: bytes, nonce: int, n: int) -> int:
    """Deterministic uniform draw in ``[0, n)``. This is the public
    verification recipe: given a revealed seed it reproduces any outcome."""
    if n < 1:
        raise ZeroRange(f"range must be >= 1, got {n}")
    bound = rejection_bound(n)
    base = server_seed + client_seed + nonce.to_bytes(8, "big")
    attempt = 0
    while True:
        message = base if attempt == 0 else base + attempt.to_bytes(8, "big")
        value = int.from_bytes(hashlib.sha256(message).digest()[:8], "big")
        if value < bound:
            return value % n
        attempt += 1


def check_client_seed(client_seed: bytes) -> bytes:
    if len(client_seed) > MAX_CLIENT_SEED_BYTES:
        raise ClientSeedTooLong(
            f"client seed of {len(client_seed)} bytes exceeds {MAX_CLIENT_SEED_BYTES}"
        )
    return client_seed


@dataclass
class Commitment:
    commitment_id: str
    server_seed: bytes
    commit_hash: bytes
    next_nonce: int = 0
    revealed: bool = False
    open_rounds: int = 0

    @property
    def commit_hash_hex(self) -> str:
        return self.commit_hash.hex()


@dataclass
class DrawResult:
    value: int
    nonce: int


@dataclass
class CommitmentRegistry:
    commitments: dict[str, Commitment] = field(default_factory=dict)
    next_commitment_seq: int = 1

    def open_commitment(self, server_seed: bytes | None = None) -> Commitment:
        """Draw (or accept) a server seed, publish its hash, keep the seed
        sealed. Passing a seed is for deterministic harnesses and replay."""
        if server_seed is None:
            server_seed = secrets.token_bytes(SEED_BYTES)
        if len(server_seed) != SEED_BYTES:
            raise ValueError(f"server seed must be {SEED_BYTES} bytes")
        commitment = Commitment(
            commitment_id=f"cmt-{self.next_commitment_seq}",
            server_seed=server_seed,
            commit_hash=hashlib.sha256(server_seed).digest(),
        )
        self.next_commitment_seq += 1
        self.commitments[commitment.commitment_id] = commitment
        return commitment

    def draw_uniform(self, commitment_id: str, client_seed: bytes, n: int) -> DrawResult:
        """Consume the commitment's next nonce and derive a uniform value
        in ``[0, n)``."""
        commitment = self.get(commitment_id)
        if commitment.revealed:
            raise AlreadyRevealed(f"{commitment_id} is revealed; no further draws")
        check_client_seed(client_seed)
        nonce = commitment.next_nonce
        value = derive_uniform(commitment.server_seed, client_seed, nonce, n)
        commitment.next_nonce = nonce + 1
        return DrawResult(value=value, nonce=nonce)

    def reveal(self, commitment_id: str) -> bytes:
        """Publish the server seed once nothing open depends on it.
        Idempotent: revealing twice returns the same seed."""
        commitment = self.get(commitment_id)
        if commitment.open_rounds > 0:
            raise OpenRoundsRemain(
                f"{commitment_id} still backs {commitment.open_rounds} open round(s)"
            )
        commitment.revealed = True
        return commitment.server_seed

    def begin_round(self, commitment_id: str) -> None:
        self.get(commitment_id).open_rounds += 1

    def end_round(self, commitment_id: str) -> None:
        commitment = self.get(commitment_id)
        if commitment.open_rounds <= 0:
            raise ValueError(f"{commitment_id} has no open rounds to settle")
        commitment.open_rounds -= 1

    def get(self, commitment_id: str) -> Commitment:
        commitment = self.commitments.get(commitment_id)
        if commitment is None:
            raise UnknownCommitment(f"no commitment {commitment_id!r}")
        return commitment
