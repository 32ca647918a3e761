import pytest
from hypothesis import given, strategies as st

from ctlm.crypto.group import base_mul
from ctlm.crypto.memo import MemoError, memo_open, memo_seal


@given(st.binary(max_size=200), st.integers(1, 2**200))
def test_round_trip(plaintext, k):
    shared = base_mul(k)
    assert memo_open(shared, memo_seal(shared, plaintext)) == plaintext


def test_wrong_key_and_tamper_fail():
    ct = memo_seal(base_mul(5), b"secret")
    with pytest.raises(MemoError):
        memo_open(base_mul(6), ct)
    bad = bytearray(ct)
    bad[0] ^= 1
    with pytest.raises(MemoError):
        memo_open(base_mul(5), bytes(bad))


def test_ciphertext_hides_plaintext():
    pt = b"amount=12345 type=design"
    assert pt not in memo_seal(base_mul(9), pt)
