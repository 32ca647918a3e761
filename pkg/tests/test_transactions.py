import random

import pytest

from ctlm.accounts import acc_gen, ot_gen, receive
from ctlm.crypto.group import base_mul
from ctlm.crypto.proofs import DlogProof, RangeError
from ctlm.license import holdings, issue_tx, pick_account, swap_offer
from ctlm.params import TypeTag
from ctlm.transactions import (
    BAD_PROOF,
    DOUBLE_SPEND,
    MALFORMED,
    TYPE_REUSE,
    UNKNOWN_RING_MEMBER,
    ConservationError,
    DuplicateKeyImage,
    DuplicateType,
    InputBundle,
    Offer,
    Output,
    OwnershipError,
    Rejected,
    RingTooSmall,
    SpendInput,
    Transaction,
    check,
    coin_gen,
    decode_signed,
    encode_signed,
    offer,
    seal,
    spend,
)

import adversary
from conftest import fund


def inputs_of(state, keys, ty, n=1):
    hits = holdings(state, keys, ty)[:n]
    return [SpendInput(h.amount, h.type, h.ck, receive(keys, h.account), h.account) for h in hits]


def outputs_to(ltp, ty, amounts, bits=16):
    out = []
    for i, a in enumerate(amounts):
        acc, ck = ot_gen(ltp, ty, a, index=i, bits=bits)
        out.append(Output(ck, a, ty, acc))
    return out


def reason(state, tx, sig):
    try:
        check(state, tx, sig)
    except Rejected as exc:
        return exc.reason
    return None


def test_honest_spend_verifies_and_round_trips(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 100)
    ins = inputs_of(ledger.state, alice, ty)
    tx, sig = spend(ins, outputs_to(bob.ltp, ty, [60]) + outputs_to(alice.ltp, ty, [40]), ledger.state)
    assert reason(ledger.state, tx, sig) is None
    assert decode_signed(encode_signed(tx, sig)) == (tx, sig)
    rec = ledger.apply(tx, sig)
    assert rec.seq == ledger.state.height
    assert {h.amount for h in holdings(ledger.state, bob)} == {60}


def test_double_spend_rejected(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    ins = inputs_of(ledger.state, alice, ty)
    state0 = ledger.state
    ledger.apply(*spend(ins, outputs_to(bob.ltp, ty, [10]), state0))
    tx2, sig2 = spend(ins, outputs_to(alice.ltp, ty, [10]), state0)
    with pytest.raises(Rejected) as exc:
        ledger.apply(tx2, sig2)
    assert exc.value.reason == DOUBLE_SPEND


def test_type_reuse_rejected(ledger, alice):
    ty = fund(ledger, alice, "EUR", 10)
    with pytest.raises(Rejected) as exc:
        ledger.apply(*issue_tx(ledger.params, 5, ty, alice.ltp))
    assert exc.value.reason == TYPE_REUSE


def test_coingen_refuses_duplicate_type_and_range(params, alice):
    ty = TypeTag.from_label("currency", "X")
    outs = outputs_to(alice.ltp, ty, [1, 2])
    with pytest.raises(DuplicateType):
        coin_gen(outs, params)
    acc, ck = ot_gen(alice.ltp, ty, 1 << 16, bits=64)
    with pytest.raises(RangeError):
        coin_gen([Output(ck, 1 << 16, ty, acc)], params)


def test_builder_checks(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    ins = inputs_of(ledger.state, alice, ty)
    with pytest.raises(ConservationError):
        spend(ins, outputs_to(bob.ltp, ty, [11]), ledger.state)
    wrong = [SpendInput(i.amount, i.type, i.ck, i.sk + 1, i.account) for i in ins]
    with pytest.raises(OwnershipError):
        spend(wrong, outputs_to(bob.ltp, ty, [10]), ledger.state)
    with pytest.raises(RangeError):
        spend(ins, outputs_to(bob.ltp, ty, [1 << 16], bits=64), ledger.state)


def test_unbalanced_spend_rejected_by_ledger(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    ins = inputs_of(ledger.state, alice, ty)
    off = offer(ins, outputs_to(bob.ltp, ty, [12]), ledger.state, check=False)
    tx, sig = seal([off], check=False)
    assert reason(ledger.state, tx, sig) == BAD_PROOF


def test_negative_output_rejected(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    ins = inputs_of(ledger.state, alice, ty)
    outs = [adversary.honest_output(bob.ltp, ty, 1010, ledger.state, bits=16),
            adversary.forged_output(alice.ltp, ty, -1000, ledger.state)]
    tx, sig = adversary.assemble(ledger.state, ins, outs)
    assert reason(ledger.state, tx, sig) == BAD_PROOF


def test_type_swap_rejected(ledger, alice, bob):
    eur = fund(ledger, alice, "EUR", 10)
    gold = fund(ledger, bob, "GOLD", 10)
    ins = inputs_of(ledger.state, alice, eur)
    off = offer(ins, outputs_to(alice.ltp, gold, [10]), ledger.state, check=False)
    assert reason(ledger.state, *seal([off], check=False)) == BAD_PROOF
    assert gold


def test_unknown_ring_member(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    ins = inputs_of(ledger.state, alice, ty)
    tx, sig = spend(ins, outputs_to(bob.ltp, ty, [10]), ledger.state)
    stray, _ = ot_gen(bob.ltp, ty, 1)
    b = tx.inputs[0]
    ring = tuple(sorted([*b.ring[1:], stray.otpk], key=bytes))
    bad = Transaction("spend", (InputBundle(ring, b.key_image, b.pseudo_com, b.proof),), tx.outputs)
    assert reason(ledger.state, bad, sig) == UNKNOWN_RING_MEMBER


def test_unregistered_type_in_type_set(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    ins = inputs_of(ledger.state, alice, ty)
    fake = TypeTag.from_label("currency", "FAKE")
    off = offer(ins, outputs_to(bob.ltp, ty, [10]), ledger.state)
    tx, sig = seal([off])
    o = tx.outputs[0]
    ts = tuple(sorted([*o.type_set, fake.generator], key=bytes))
    bad = Transaction("spend", tx.inputs, (type(o)(o.account, ts, o.type_proof, o.range_proof),))
    assert reason(ledger.state, bad, sig) == MALFORMED


def test_structural_rejections(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    ins = inputs_of(ledger.state, alice, ty)
    tx, sig = spend(ins, outputs_to(bob.ltp, ty, [10]), ledger.state)
    assert reason(ledger.state, Transaction("spend", tx.inputs, ()), sig) == MALFORMED
    assert reason(ledger.state, Transaction("coingen", tx.inputs, tx.outputs), sig) == MALFORMED
    assert reason(ledger.state, tx, DlogProof(1, 1)) == BAD_PROOF
    ledger.apply(tx, sig)
    # replaying the same outputs is caught before signature checks
    assert reason(ledger.state, Transaction("spend", (), tx.outputs), sig) == MALFORMED
    with pytest.raises(Rejected) as exc:
        ledger.apply_encoded(b"\x00garbage")
    assert exc.value.reason == MALFORMED


def test_ring_too_small(params, alice, bob):
    from ctlm.ledger import Ledger
    led = Ledger(params, genesis=False)
    ty = fund(led, alice, "EUR", 10)
    with pytest.raises(RingTooSmall):
        spend(inputs_of(led.state, alice, ty), outputs_to(bob.ltp, ty, [10]), led.state)


def test_ring_size_is_clamped_and_sorted(ledger, alice, bob):
    ty = fund(ledger, alice, "EUR", 10)
    tx, _ = spend(inputs_of(ledger.state, alice, ty), outputs_to(bob.ltp, ty, [10]), ledger.state, ring_size=1000)
    ring = [bytes(p) for p in tx.inputs[0].ring]
    assert len(ring) == len(ledger.state.outputs)
    assert ring == sorted(ring)


def test_swap_is_atomic(ledger, alice, bob):
    eur = fund(ledger, alice, "EUR", 100)
    gold = fund(ledger, bob, "GOLD", 5)
    s = ledger.state
    oa = swap_offer(s, alice, eur, 30, gold, 2)
    ob = swap_offer(s, bob, gold, 2, eur, 30)
    assert Offer.decode(oa.encode()) == oa
    with pytest.raises(ConservationError):
        seal([oa])
    assert reason(s, *seal([oa], check=False)) == BAD_PROOF
    with pytest.raises(DuplicateKeyImage):
        seal([oa, oa])
    ledger.apply(*seal([oa, ob]))
    bal_a = {h.type: h.amount for h in holdings(ledger.state, alice)}
    bal_b = {h.type: h.amount for h in holdings(ledger.state, bob)}
    assert bal_a == {eur: 70, gold: 2}
    assert bal_b == {gold: 3, eur: 30}


def test_multi_input_multi_type_spend(ledger, alice, bob):
    eur = fund(ledger, alice, "EUR", 40, split=4)
    gold = fund(ledger, alice, "GOLD", 6)
    ins = inputs_of(ledger.state, alice, eur, 3) + inputs_of(ledger.state, alice, gold, 1)
    outs = outputs_to(bob.ltp, eur, [25, 5]) + outputs_to(bob.ltp, gold, [6])
    tx, sig = spend(ins, outs, ledger.state, rng=random.Random(1))
    ledger.apply(tx, sig)
    got = sorted((h.type.preimage_hash, h.amount) for h in holdings(ledger.state, bob))
    assert got == sorted([(eur.preimage_hash, 25), (eur.preimage_hash, 5), (gold.preimage_hash, 6)])


def test_pick_account_and_pseudo_commitment_hide_amount(ledger, alice):
    ty = fund(ledger, alice, "EUR", 10)
    hit = pick_account(ledger.state, alice, ty, 10)
    tx, _ = spend(inputs_of(ledger.state, alice, ty), outputs_to(alice.ltp, ty, [10]), ledger.state)
    assert tx.inputs[0].pseudo_com != hit.account.com
    assert tx.inputs[0].pseudo_com != base_mul(0)
