"""System parameters and token type tags."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property

from .crypto.encoding import DecodeError, Reader, Writer, decode_all
from .crypto.group import G, Point, hash_to_group

DOMAINS = ("design", "property", "attribute", "currency")
MAX_RANGE_BITS = 64
NEGATION_PREFIX = "¬"


@dataclass(frozen=True)
class PublicParams:
    security: int = 128
    range_bits: int = 16
    ring_size: int = 27
    type_set_size: int = 16
    base: Point = field(default=G, repr=False, compare=False)

    def with_(self, **changes) -> PublicParams:
        p = replace(self, **changes)
        if not 1 <= p.range_bits <= MAX_RANGE_BITS:
            raise ValueError(f"range_bits must be in [1, {MAX_RANGE_BITS}]")
        if p.ring_size < 2:
            raise ValueError("ring size must be at least 2")
        return p


def setup(security_level: int = 128) -> PublicParams:
    if security_level != 128:
        raise ValueError(f"unsupported security level {security_level}; only 128 is available")
    return PublicParams()


PROFILES = {
    "test": {"range_bits": 16, "ring_size": 8},
    "production": {"range_bits": 64, "ring_size": 27},
}


def profile(name: str) -> PublicParams:
    try:
        return setup(128).with_(**PROFILES[name])
    except KeyError:
        raise ValueError(f"unknown profile {name!r}") from None


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class TypeTag:
    """A token type: a domain plus the digest of its preimage.

    The group generator is derived by hashing both, so nobody knows its
    discrete log with respect to the base point.
    """

    domain: str
    preimage_hash: bytes

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown type domain {self.domain!r}")
        if len(self.preimage_hash) != 32:
            raise ValueError("preimage hash must be 32 bytes")

    @classmethod
    def from_bytes_preimage(cls, domain: str, data: bytes) -> TypeTag:
        return cls(domain, digest(data))

    @classmethod
    def from_label(cls, domain: str, label: str) -> TypeTag:
        return cls(domain, digest(label.encode("utf-8")))

    @cached_property
    def generator(self) -> Point:
        return hash_to_group(b"type", self.domain.encode() + self.preimage_hash)

    @property
    def domain_code(self) -> int:
        return DOMAINS.index(self.domain)

    def encode(self) -> bytes:
        return Writer().u8(self.domain_code).raw(self.preimage_hash).getvalue()

    @classmethod
    def read(cls, r: Reader) -> TypeTag:
        code = r.u8()
        if code >= len(DOMAINS):
            raise DecodeError("unknown type domain")
        return cls(DOMAINS[code], r.raw(32))

    @classmethod
    def decode(cls, data: bytes) -> TypeTag:
        return decode_all(data, cls.read)

    def __str__(self):
        return f"{self.domain}:{self.preimage_hash.hex()}"
