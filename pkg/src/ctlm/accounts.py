"""Long-term keys, one-time accounts and their detection.

A one-time account for recipient ``(vpk, tpk, pk)`` with ephemeral secret ``e``
and output index ``i`` is::

    otpk = pk + Hs(e*tpk, i) * G        R = e * G
    com  = a * T + ck * G               tag = T + Hs(ck) * G
    memo = Enc(e*vpk, a | type | ck)

The tracking key ``tsk`` detects accounts, the view key ``vsk`` decrypts them,
and only the spend scalar turns them into a spendable ``sk``.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .crypto.encoding import DecodeError, Reader, Writer, decode_all
from .crypto.group import (
    ORDER,
    Point,
    base_mul,
    hash_to_group,
    hash_to_scalar,
    kdf,
    random_scalar,
    scalar_from_bytes,
    scalar_to_bytes,
)
from .crypto.memo import MemoError, memo_open, memo_seal
from .crypto.proofs import commit
from .params import DOMAINS, TypeTag

MIN_EID_BYTES = 12
MEMO_PLAINTEXT_BYTES = 8 + 1 + 32 + 32


class AccountError(ValueError):
    pass


class NoSpendKey(AccountError):
    """The long-term keys are receive-only."""


class NotAddressed(AccountError):
    """The account was not generated for these keys."""


@dataclass(frozen=True)
class ViewKey:
    """``ltv = (vsk, tsk)`` together with the public spend key needed for detection."""

    vsk: int
    tsk: int
    pk: Point

    def encode(self) -> bytes:
        return Writer().scalar(self.vsk).scalar(self.tsk).point(self.pk).getvalue()

    @classmethod
    def decode(cls, data: bytes) -> ViewKey:
        return decode_all(data, lambda r: cls(r.scalar(), r.scalar(), r.point()))


@dataclass(frozen=True)
class PublicAddress:
    vpk: Point
    tpk: Point
    pk: Point

    def encode(self) -> bytes:
        return bytes(self.vpk) + bytes(self.tpk) + bytes(self.pk)

    @classmethod
    def decode(cls, data: bytes) -> PublicAddress:
        return decode_all(data, lambda r: cls(r.point(), r.point(), r.point()))

    def hex(self) -> str:
        return self.encode().hex()

    @classmethod
    def from_hex(cls, text: str) -> PublicAddress:
        return cls.decode(bytes.fromhex(text.strip()))


@dataclass(frozen=True)
class LongTermKeys:
    ltv: ViewKey
    ltp: PublicAddress
    lts: Optional[int] = None

    @property
    def spendable(self) -> bool:
        return self.lts is not None

    def __repr__(self):
        # secret scalars stay out of logs and tracebacks
        return f"LongTermKeys(ltp={self.ltp.hex()[:16]}..., spendable={self.spendable})"


def _view_part(seed: bytes):
    tsk = kdf(seed, "track")
    vsk = kdf(seed, "view")
    return vsk, tsk, base_mul(vsk), base_mul(tsk)


def acc_gen(seed: Optional[bytes] = None) -> LongTermKeys:
    """Spendable long-term keys, deterministic in ``seed`` when one is given."""
    if seed is None:
        seed = secrets.token_bytes(32)
    vsk, tsk, vpk, tpk = _view_part(seed)
    spend = kdf(seed, "spend-seed")
    pk = base_mul(spend)
    return LongTermKeys(ViewKey(vsk, tsk, pk), PublicAddress(vpk, tpk, pk), spend)


def item_gen(eid: bytes) -> LongTermKeys:
    """Receive-only keys for a part; the spend key is a hash-derived point."""
    if len(eid) < MIN_EID_BYTES:
        raise AccountError(f"eID must be at least {MIN_EID_BYTES * 8} bits")
    vsk, tsk, vpk, tpk = _view_part(eid)
    pk = hash_to_group(b"own", kdf(eid, "own"))
    return LongTermKeys(ViewKey(vsk, tsk, pk), PublicAddress(vpk, tpk, pk), None)


@dataclass(frozen=True)
class OneTimeAccount:
    otpk: Point
    ephemeral: Point
    tag: Point
    com: Point
    memo: bytes
    index: int = 0

    @property
    def key(self) -> bytes:
        return bytes(self.otpk)

    def encode(self) -> bytes:
        return (
            Writer()
            .point(self.otpk)
            .point(self.ephemeral)
            .point(self.tag)
            .point(self.com)
            .u64(self.index)
            .bytes(self.memo)
            .getvalue()
        )

    @classmethod
    def read(cls, r: Reader) -> OneTimeAccount:
        otpk, eph, tag, com = r.point(), r.point(), r.point(), r.point()
        index = r.u64()
        return cls(otpk, eph, tag, com, r.bytes(), index)

    @classmethod
    def decode(cls, data: bytes) -> OneTimeAccount:
        return decode_all(data, cls.read)


class Opening(NamedTuple):
    amount: int
    type: TypeTag
    ck: int


def tag_blinding(ck: int) -> int:
    return hash_to_scalar(b"tag-blind", scalar_to_bytes(ck % ORDER))


def blinded_tag(ty: TypeTag, ck: int) -> Point:
    return ty.generator + base_mul(tag_blinding(ck))


def _offset(shared: Point, index: int) -> int:
    return hash_to_scalar(b"one-time", bytes(shared), index.to_bytes(8, "little"))


def _memo_plaintext(amount: int, ty: TypeTag, ck: int) -> bytes:
    return amount.to_bytes(8, "little") + bytes([ty.domain_code]) + ty.preimage_hash + scalar_to_bytes(ck)


def _parse_memo(data: bytes) -> Opening:
    if len(data) != MEMO_PLAINTEXT_BYTES:
        raise DecodeError("bad memo length")
    code = data[8]
    if code >= len(DOMAINS):
        raise DecodeError("bad memo domain")
    return Opening(int.from_bytes(data[:8], "little"), TypeTag(DOMAINS[code], data[9:41]), scalar_from_bytes(data[41:]))


def ot_gen(ltp: PublicAddress, ty: TypeTag, amount: int, *, index: int = 0, bits: int = 64):
    """Create a one-time account paying ``amount`` of ``ty`` to ``ltp``.

    Returns ``(account, ck)``.
    """
    ck = random_scalar()
    com = commit(amount, ty.generator, ck, bits)
    e = random_scalar()
    otpk = ltp.pk + base_mul(_offset(ltp.tpk * e, index))
    memo = memo_seal(ltp.vpk * e, _memo_plaintext(amount, ty, ck))
    acc = OneTimeAccount(otpk, base_mul(e), blinded_tag(ty, ck), com, memo, index)
    return acc, ck


def detect(ltv: ViewKey, acc: OneTimeAccount) -> Optional[int]:
    """The one-time offset if ``acc`` is addressed to ``ltv``, else None."""
    h = _offset(acc.ephemeral * ltv.tsk, acc.index)
    if acc.otpk - base_mul(h) != ltv.pk:
        return None
    return h


def view(ltv: ViewKey, acc: OneTimeAccount) -> Optional[Opening]:
    """Recover ``(amount, type, ck)`` or None when not addressed or inconsistent."""
    if detect(ltv, acc) is None:
        return None
    try:
        opening = _parse_memo(memo_open(acc.ephemeral * ltv.vsk, acc.memo))
    except (MemoError, DecodeError):
        return None
    if not chk_val(opening.ck, opening.type, opening.amount, acc):
        return None
    if blinded_tag(opening.type, opening.ck) != acc.tag:
        return None
    return opening


def receive(keys: LongTermKeys, acc: OneTimeAccount) -> int:
    """One-time secret key ``sk`` for an account addressed to ``keys``."""
    if keys.lts is None:
        raise NoSpendKey("receive-only keys have no spend path")
    h = detect(keys.ltv, acc)
    if h is None:
        raise NotAddressed("account is not addressed to these keys")
    return (keys.lts + h) % ORDER


def chk_key(sk: int, acc: OneTimeAccount) -> bool:
    return base_mul(sk) == acc.otpk


def chk_val(ck: int, ty: TypeTag, amount: int, acc: OneTimeAccount) -> bool:
    if not 0 <= amount < 1 << 64:
        return False
    return commit(amount, ty.generator, ck) == acc.com


def key_image_base(otpk: Point) -> Point:
    return hash_to_group(b"ki", bytes(otpk))


def key_image(sk: int, acc: OneTimeAccount) -> Point:
    return key_image_base(acc.otpk) * sk


__all__ = [
    "AccountError",
    "LongTermKeys",
    "NoSpendKey",
    "NotAddressed",
    "OneTimeAccount",
    "Opening",
    "PublicAddress",
    "ViewKey",
    "acc_gen",
    "blinded_tag",
    "chk_key",
    "chk_val",
    "detect",
    "item_gen",
    "key_image",
    "key_image_base",
    "ot_gen",
    "receive",
    "view",
]
