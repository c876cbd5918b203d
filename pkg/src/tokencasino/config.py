"""Service configuration: a flat key=value file.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigInvalid

_BOOL_VALUES = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


@dataclass
class PlatformConfig:
    owner_credential: str
    journal_path: str = "journal.jsonl"
    listen_addr: str = "127.0.0.1:8000"
    tokens_per_base_unit: int = 1
    strict_lending: bool = False
    snapshot_interval: int = 1000
    journal_key: str = ""
    loan_rate_min: int = 1
    loan_rate_max: int = 20

    def __post_init__(self):
        if not self.owner_credential:
            raise ConfigInvalid("owner_credential must be set and non-empty")
        if self.tokens_per_base_unit < 1:
            raise ConfigInvalid("tokens_per_base_unit must be a positive integer")
        if self.snapshot_interval < 0:
            raise ConfigInvalid("snapshot_interval must be >= 0 (0 disables snapshots)")
        if not 1 <= self.loan_rate_min <= self.loan_rate_max:
            raise ConfigInvalid("loan rate interval must satisfy 1 <= min <= max")
        if ":" not in self.listen_addr:
            raise ConfigInvalid("listen_addr must be host:port")
        if not self.journal_key:
            # derived key so a minimal config still gets seeds sealed at rest
            self.journal_key = hashlib.sha256(
                b"journal-key:" + self.owner_credential.encode("utf-8")
            ).hexdigest()

    @property
    def host(self) -> str:
        return self.listen_addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        try:
            return int(self.listen_addr.rsplit(":", 1)[1])
        except ValueError:
            raise ConfigInvalid(f"bad port in listen_addr {self.listen_addr!r}") from None


_INT_KEYS = {"tokens_per_base_unit", "snapshot_interval", "loan_rate_min", "loan_rate_max"}
_BOOL_KEYS = {"strict_lending"}
_STR_KEYS = {"listen_addr", "journal_path", "owner_credential", "journal_key"}
_ALL_KEYS = _INT_KEYS | _BOOL_KEYS | _STR_KEYS


def parse_config(text: str) -> PlatformConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigInvalid(f"line {lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigInvalid(f"line {lineno}: {key} must be an integer") from None
        elif key in _BOOL_KEYS:
            if value.lower() not in _BOOL_VALUES:
                raise ConfigInvalid(f"line {lineno}: {key} must be true/false")
            values[key] = _BOOL_VALUES[value.lower()]
        else:
            values[key] = value
    if "owner_credential" not in values:
        raise ConfigInvalid("owner_credential is required")
    return PlatformConfig(**values)


def load_config(path: str | Path) -> PlatformConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigInvalid(f"config file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"))
