"""On-disk wallets for the command-line actors.

A wallet stores only a seed (or a part's eID); keys are re-derived on load.
Files are written with mode 0600 and never echo secrets when printed.
"""

from __future__ import annotations

import json
import os
import secrets
from dataclasses import dataclass, field
from typing import Optional

from .accounts import MIN_EID_BYTES, LongTermKeys, acc_gen, item_gen

WALLET_VERSION = 1
ROLES = ("designer", "client", "printer", "certifier", "verifier", "operator")


class WalletError(RuntimeError):
    pass


class WalletMissing(WalletError):
    pass


@dataclass
class Wallet:
    role: str
    label: str = ""
    seed: Optional[bytes] = field(default=None, repr=False)
    eid: Optional[bytes] = field(default=None, repr=False)
    salt: bytes = field(default=b"", repr=False)

    def __post_init__(self):
        if self.role not in ROLES and self.role != "part":
            raise WalletError(f"unknown role {self.role!r}")
        if (self.seed is None) == (self.eid is None):
            raise WalletError("a wallet holds either a seed or a part eID")

    @classmethod
    def create(cls, role: str, label: str = "") -> Wallet:
        return cls(role, label, seed=secrets.token_bytes(32))

    @classmethod
    def for_part(cls, eid: bytes, salt: bytes = b"", label: str = "") -> Wallet:
        if len(eid) < MIN_EID_BYTES:
            raise WalletError(f"eID must be at least {MIN_EID_BYTES * 8} bits")
        return cls("part", label, eid=eid, salt=salt)

    @property
    def keys(self) -> LongTermKeys:
        if self.seed is not None:
            return acc_gen(self.seed)
        return item_gen(self.eid + self.salt)

    def to_json(self) -> dict:
        out = {"version": WALLET_VERSION, "role": self.role, "label": self.label,
               "address": self.keys.ltp.hex()}
        if self.seed is not None:
            out["seed"] = self.seed.hex()
        else:
            out["eid"] = self.eid.hex()
            out["salt"] = self.salt.hex()
        return out

    @classmethod
    def from_json(cls, data: dict) -> Wallet:
        if data.get("version") != WALLET_VERSION:
            raise WalletError(f"unsupported wallet version {data.get('version')!r}")
        try:
            if "seed" in data:
                return cls(data["role"], data.get("label", ""), seed=bytes.fromhex(data["seed"]))
            return cls(data["role"], data.get("label", ""), eid=bytes.fromhex(data["eid"]),
                       salt=bytes.fromhex(data.get("salt", "")))
        except (KeyError, ValueError) as exc:
            raise WalletError(f"corrupt wallet: {exc}") from None

    def save(self, path, *, overwrite: bool = False) -> None:
        flags = os.O_WRONLY | os.O_CREAT | (os.O_TRUNC if overwrite else os.O_EXCL)
        try:
            fd = os.open(path, flags, 0o600)
        except FileExistsError:
            raise WalletError(f"wallet {path} already exists") from None
        with os.fdopen(fd, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")
        os.chmod(path, 0o600)

    @classmethod
    def load(cls, path) -> Wallet:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise WalletMissing(f"wallet {path} not found") from None
        except json.JSONDecodeError as exc:
            raise WalletError(f"wallet {path} is not JSON: {exc}") from None
        return cls.from_json(data)


def new_eid(nbytes: int = 16) -> bytes:
    return secrets.token_bytes(nbytes)
