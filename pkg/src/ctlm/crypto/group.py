"""Prime-order group arithmetic over ristretto255.

Points are canonical 32-byte ristretto255 encodings; scalars are plain Python
integers reduced modulo ``ORDER``. The arithmetic is delegated to libsodium
through ctypes, which is loaded once at import time.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import hashlib
import secrets

ORDER = 2**252 + 27742317777372353535851937790883648493
POINT_BYTES = 32
SCALAR_BYTES = 32
PROTOCOL_VERSION = 1
_DOMAIN = b"cTLM"


class GroupError(ValueError):
    """Raised on non-canonical encodings or unusable group input."""


def _load_sodium():
    candidates = [ctypes.util.find_library("sodium"), "libsodium.so.23", "libsodium.so", "libsodium.dylib"]
    for name in candidates:
        if not name:
            continue
        try:
            lib = ctypes.CDLL(name)
        except OSError:
            continue
        if hasattr(lib, "crypto_core_ristretto255_add"):
            if lib.sodium_init() < 0:
                raise RuntimeError("libsodium failed to initialise")
            return lib
    raise RuntimeError("libsodium >= 1.0.18 with ristretto255 support is required")


_lib = _load_sodium()
_buf = ctypes.create_string_buffer


class Point:
    """Element of the ristretto255 group, held as its canonical encoding."""

    __slots__ = ("_b",)

    def __init__(self, encoded: bytes, *, _trusted: bool = False):
        if not _trusted:
            encoded = bytes(encoded)
            if len(encoded) != POINT_BYTES:
                raise GroupError("point encoding must be 32 bytes")
            if not _lib.crypto_core_ristretto255_is_valid_point(encoded):
                raise GroupError("non-canonical point encoding")
        self._b = encoded

    def __bytes__(self):
        return self._b

    def __eq__(self, other):
        return isinstance(other, Point) and self._b == other._b

    def __hash__(self):
        return hash(self._b)

    def __repr__(self):
        return f"Point({self._b.hex()[:16]}...)"

    def __add__(self, other: Point) -> Point:
        out = _buf(POINT_BYTES)
        if _lib.crypto_core_ristretto255_add(out, self._b, other._b) != 0:
            raise GroupError("point addition failed")
        return Point(out.raw, _trusted=True)

    def __sub__(self, other: Point) -> Point:
        out = _buf(POINT_BYTES)
        if _lib.crypto_core_ristretto255_sub(out, self._b, other._b) != 0:
            raise GroupError("point subtraction failed")
        return Point(out.raw, _trusted=True)

    def __neg__(self) -> Point:
        return IDENTITY - self

    def __mul__(self, scalar: int) -> Point:
        s = (scalar % ORDER).to_bytes(SCALAR_BYTES, "little")
        out = _buf(POINT_BYTES)
        # a return of -1 only signals an identity result for valid input
        _lib.crypto_scalarmult_ristretto255(out, s, self._b)
        return Point(out.raw, _trusted=True)

    __rmul__ = __mul__

    def is_identity(self) -> bool:
        return self._b == _ZERO


_ZERO = bytes(POINT_BYTES)
IDENTITY = Point(_ZERO, _trusted=True)


def base_mul(scalar: int) -> Point:
    """``scalar * G`` using libsodium's fixed-base routine."""
    s = (scalar % ORDER).to_bytes(SCALAR_BYTES, "little")
    out = _buf(POINT_BYTES)
    _lib.crypto_scalarmult_ristretto255_base(out, s)
    return Point(out.raw, _trusted=True)


G = base_mul(1)


def mul(scalar: int, point: Point) -> Point:
    if point._b == G._b:
        return base_mul(scalar)
    return point * scalar


def point_sum(points) -> Point:
    acc = IDENTITY
    for p in points:
        acc = acc + p
    return acc


def random_scalar() -> int:
    return secrets.randbelow(ORDER - 1) + 1


def scalar_to_bytes(x: int) -> bytes:
    if not 0 <= x < ORDER:
        raise GroupError("scalar out of range")
    return x.to_bytes(SCALAR_BYTES, "little")


def scalar_from_bytes(data: bytes) -> int:
    if len(data) != SCALAR_BYTES:
        raise GroupError("scalar encoding must be 32 bytes")
    x = int.from_bytes(data, "little")
    if x >= ORDER:
        raise GroupError("non-canonical scalar encoding")
    return x


def inverse(x: int) -> int:
    if x % ORDER == 0:
        raise GroupError("zero has no inverse")
    return pow(x, -1, ORDER)


def _lp(data: bytes) -> bytes:
    return len(data).to_bytes(8, "little") + data


def hash_bytes(label: bytes, *parts: bytes) -> bytes:
    """Domain-separated SHA-512 over length-prefixed parts."""
    h = hashlib.sha512()
    h.update(_DOMAIN + bytes([PROTOCOL_VERSION]) + _lp(label))
    for part in parts:
        h.update(_lp(part))
    return h.digest()


def hash_to_scalar(label: bytes, *parts: bytes) -> int:
    return int.from_bytes(hash_bytes(label, *parts), "little") % ORDER


def hash_to_group(label: bytes, data: bytes) -> Point:
    """Map ``(label, data)`` to a group element with unknown discrete log."""
    out = _buf(POINT_BYTES)
    _lib.crypto_core_ristretto255_from_hash(out, hash_bytes(b"h2g:" + label, data))
    return Point(out.raw, _trusted=True)


KDF_LABELS = ("track", "view", "own", "spend-seed")


def kdf(seed: bytes, label: str):
    """Derive key material from ``seed`` under one of ``KDF_LABELS``.

    ``own`` yields raw bytes (later mapped through :func:`hash_to_group`, so no
    scalar preimage exists); every other label yields a nonzero scalar.
    """
    if label not in KDF_LABELS:
        raise ValueError(f"unknown kdf label {label!r}")
    out = hash_bytes(b"kdf", label.encode(), bytes(seed))
    if label == "own":
        return out
    return int.from_bytes(out, "little") % (ORDER - 1) + 1
