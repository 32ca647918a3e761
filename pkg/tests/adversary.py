"""A wallet that skips every local check, for building invalid transactions."""

from ctlm.accounts import OneTimeAccount, blinded_tag, ot_gen, tag_blinding
from ctlm.crypto.group import G, ORDER, base_mul, random_scalar
from ctlm.crypto.memo import memo_seal
from ctlm.crypto.proofs import or_prove, range_prove, schnorr_prove
from ctlm.transactions import (
    CONSERVATION_CTX,
    Output,
    OutputBundle,
    Transaction,
    _output_ctx,
    build_output,
    choose_type_set,
    excess,
    pre_spend,
    type_clauses,
)


def forged_output(ltp, ty, amount, state, *, proved_amount=0):
    """An output committing to ``amount`` mod q with a range proof for ``proved_amount``."""
    bits = state.params.range_bits
    ck = random_scalar()
    t = tag_blinding(ck)
    a = amount % ORDER
    tag = blinded_tag(ty, ck)
    com = ty.generator * a + base_mul(ck)
    acc = OneTimeAccount(ltp.pk + base_mul(random_scalar()), base_mul(random_scalar()), tag, com,
                         memo_seal(G, b"junk"), 0)
    type_set = choose_type_set(ty, state, state.params)
    tp = or_prove(type_clauses(tag, type_set), list(type_set).index(ty.generator), [t], _output_ctx(b"ctlm/type", acc))
    rho = (ck - a * t) % ORDER
    rp = range_prove(proved_amount, tag, rho, bits, _output_ctx(b"ctlm/range", acc))
    return ck, OutputBundle(acc, type_set, tp, rp)


def honest_output(ltp, ty, amount, state, bits=None):
    acc, ck = ot_gen(ltp, ty, amount, bits=64)
    return ck, build_output(Output(ck, amount, ty, acc), choose_type_set(ty, state, state.params),
                            bits or state.params.range_bits)


def assemble(state, inputs, outputs, *, ring_size=None):
    """``outputs`` is a list of ``(ck, OutputBundle)``; signs whatever excess results."""
    bundles = pre_spend(inputs, state, ring_size=ring_size)
    beta = (sum(i.ck for i in inputs) - sum(d for _, d in bundles) - sum(ck for ck, _ in outputs)) % ORDER
    tx = Transaction(
        "spend",
        tuple(sorted((b for b, _ in bundles), key=lambda b: bytes(b.key_image))),
        tuple(sorted((o for _, o in outputs), key=lambda o: o.account.key)),
    )
    return tx, schnorr_prove(G, excess(tx.inputs, tx.outputs), beta, CONSERVATION_CTX + tx.digest())
