"""Canonical binary encoding shared by every hashed or persisted object.

Integers are 8-byte little-endian, byte strings are length-prefixed, points and
scalars use their fixed 32-byte encodings. Decoding is strict: trailing bytes,
short reads and non-canonical group values all raise :class:`DecodeError`.
"""

from __future__ import annotations

from .group import GroupError, Point, scalar_from_bytes, scalar_to_bytes

MAX_COUNT = 1 << 16
MAX_BYTES = 1 << 24


class DecodeError(ValueError):
    pass


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, v: int) -> Writer:
        self._parts.append(bytes([v]))
        return self

    def u64(self, v: int) -> Writer:
        self._parts.append(int(v).to_bytes(8, "little"))
        return self

    def raw(self, b: bytes) -> Writer:
        self._parts.append(bytes(b))
        return self

    def bytes(self, b: bytes) -> Writer:
        return self.u64(len(b)).raw(b)

    def point(self, p: Point) -> Writer:
        return self.raw(bytes(p))

    def scalar(self, x: int) -> Writer:
        return self.raw(scalar_to_bytes(x))

    def points(self, ps) -> Writer:
        ps = list(ps)
        self.u64(len(ps))
        for p in ps:
            self.point(p)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes):
        self._data = memoryview(bytes(data))
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError("truncated input")
        out = self._data[self._pos:self._pos + n].tobytes()
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "little")

    def count(self) -> int:
        n = self.u64()
        if n > MAX_COUNT:
            raise DecodeError("count too large")
        return n

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def bytes(self) -> bytes:
        n = self.u64()
        if n > MAX_BYTES:
            raise DecodeError("byte string too long")
        return self._take(n)

    def point(self) -> Point:
        try:
            return Point(self._take(32))
        except GroupError as exc:
            raise DecodeError(str(exc)) from None

    def scalar(self) -> int:
        try:
            return scalar_from_bytes(self._take(32))
        except GroupError as exc:
            raise DecodeError(str(exc)) from None

    def points(self) -> list[Point]:
        return [self.point() for _ in range(self.count())]

    def done(self) -> None:
        if self._pos != len(self._data):
            raise DecodeError("trailing bytes")


def decode_all(data: bytes, fn):
    """Run ``fn(reader)`` and require that it consumes every byte."""
    r = Reader(data)
    out = fn(r)
    r.done()
    return out
