"""Reference computations that do not go through the code under test."""

import hashlib
from collections import defaultdict

from ctlm.crypto.group import IDENTITY

ORDER = 2**252 + 27742317777372353535851937790883648493


def double_and_add(k, point):
    """Scalar multiplication using only point addition."""
    k %= ORDER
    acc, addend = IDENTITY, point
    while k:
        if k & 1:
            acc = acc + addend
        addend = addend + addend
        k >>= 1
    return acc


def framed_sha512(label, *parts):
    lp = lambda b: len(b).to_bytes(8, "little") + b  # noqa: E731
    h = hashlib.sha512(b"cTLM\x01" + lp(label))
    for p in parts:
        h.update(lp(p))
    return h.digest()


def hash_to_scalar(label, *parts):
    return int.from_bytes(framed_sha512(label, *parts), "little") % ORDER


def type_totals(items):
    """Per-type sums of ``(type, amount)`` pairs, zero totals dropped."""
    out = defaultdict(int)
    for ty, amount in items:
        out[ty] += amount
    return {k: v for k, v in out.items() if v}


def conserves(inputs, outputs):
    return type_totals(inputs) == type_totals(outputs)
