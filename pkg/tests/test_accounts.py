import pytest
from hypothesis import given, settings, strategies as st

from ctlm.accounts import (
    MEMO_PLAINTEXT_BYTES,
    AccountError,
    NoSpendKey,
    NotAddressed,
    OneTimeAccount,
    PublicAddress,
    ViewKey,
    acc_gen,
    blinded_tag,
    chk_key,
    chk_val,
    detect,
    item_gen,
    key_image,
    ot_gen,
    receive,
    view,
)
from ctlm.crypto.group import base_mul
from ctlm.params import TypeTag

TY = TypeTag.from_label("design", "widget")
OTHER = TypeTag.from_label("property", "widget")


def test_acc_gen_is_deterministic_in_seed():
    a, b = acc_gen(b"x" * 32), acc_gen(b"x" * 32)
    assert a.ltp == b.ltp and a.lts == b.lts
    assert acc_gen(b"y" * 32).ltp != a.ltp
    assert base_mul(a.lts) == a.ltp.pk


def test_item_gen_has_no_spend_key():
    keys = item_gen(b"e" * 16)
    assert keys.lts is None and not keys.spendable
    acc, _ = ot_gen(keys.ltp, TY, 1)
    assert view(keys.ltv, acc).amount == 1
    with pytest.raises(NoSpendKey):
        receive(keys, acc)


def test_item_gen_requires_96_bit_eid():
    with pytest.raises(AccountError):
        item_gen(b"short")


def test_item_and_transient_accounts_differ():
    eid = b"q" * 16
    assert item_gen(eid).ltp != acc_gen(eid).ltp


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**16 - 1), st.integers(0, 5))
def test_view_recovers_opening(amount, index):
    keys = acc_gen()
    acc, ck = ot_gen(keys.ltp, TY, amount, index=index, bits=16)
    op = view(keys.ltv, acc)
    assert (op.amount, op.type, op.ck) == (amount, TY, ck)
    sk = receive(keys, acc)
    assert chk_key(sk, acc)
    assert chk_val(ck, TY, amount, acc)
    if amount:
        assert not chk_val(ck, OTHER, amount, acc)
    else:
        # a zero commitment is type-free; the blinded tag still binds the type
        assert chk_val(ck, OTHER, 0, acc)
        assert blinded_tag(OTHER, ck) != acc.tag


def test_other_keys_see_nothing():
    a, b = acc_gen(), acc_gen()
    acc, _ = ot_gen(a.ltp, TY, 3)
    assert detect(b.ltv, acc) is None
    assert view(b.ltv, acc) is None
    with pytest.raises(NotAddressed):
        receive(b, acc)


def test_tampered_memo_is_not_viewable():
    keys = acc_gen()
    acc, _ = ot_gen(keys.ltp, TY, 3)
    memo = bytearray(acc.memo)
    memo[-1] ^= 1
    bad = OneTimeAccount(acc.otpk, acc.ephemeral, acc.tag, acc.com, bytes(memo), acc.index)
    assert detect(keys.ltv, bad) is not None
    assert view(keys.ltv, bad) is None


def test_key_image_is_deterministic_per_account():
    keys = acc_gen()
    a1, _ = ot_gen(keys.ltp, TY, 1)
    a2, _ = ot_gen(keys.ltp, TY, 1)
    i1 = key_image(receive(keys, a1), a1)
    assert i1 == key_image(receive(keys, a1), a1)
    assert i1 != key_image(receive(keys, a2), a2)


def test_encodings_round_trip():
    keys = acc_gen()
    acc, _ = ot_gen(keys.ltp, TY, 9, index=3)
    assert OneTimeAccount.decode(acc.encode()) == acc
    assert PublicAddress.from_hex(keys.ltp.hex()) == keys.ltp
    assert ViewKey.decode(keys.ltv.encode()) == keys.ltv
    assert len(keys.ltp.encode()) == 96


def test_memo_layout_size():
    # amount u64, domain byte, preimage digest, coin key
    assert MEMO_PLAINTEXT_BYTES == 8 + 1 + 32 + 32


def test_repr_hides_secrets():
    keys = acc_gen()
    assert str(keys.lts) not in repr(keys)
    assert hex(keys.lts)[2:12] not in repr(keys)
