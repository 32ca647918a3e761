"""Authenticated encryption of output memos under an ECDH shared point."""

from __future__ import annotations

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .group import Point, hash_bytes

_NONCE = bytes(12)


class MemoError(ValueError):
    pass


def _key(shared: Point) -> bytes:
    return hash_bytes(b"memo-key", bytes(shared))[:32]


def memo_seal(shared: Point, plaintext: bytes) -> bytes:
    # every shared point comes from a fresh ephemeral key, so a fixed nonce is safe
    return ChaCha20Poly1305(_key(shared)).encrypt(_NONCE, bytes(plaintext), b"ctlm-memo")


def memo_open(shared: Point, ciphertext: bytes) -> bytes:
    try:
        return ChaCha20Poly1305(_key(shared)).decrypt(_NONCE, bytes(ciphertext), b"ctlm-memo")
    except InvalidTag:
        raise MemoError("memo integrity check failed") from None
