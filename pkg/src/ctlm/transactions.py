"""Confidential multi-type transactions.

A spend input is a ring of existing one-time accounts, a key image and a
pseudo-commitment re-blinding the true member's commitment. One OR proof per
input shows, for some hidden ring member ``j``::

    otpk_j = sk * G  and  I = sk * Hp(otpk_j)  and  com_j - pc = delta * G

Every output carries a blinded type tag proven to hide a registered type, and
a bit range proof over that tag. Conservation is a single Schnorr proof that
``sum(pc) - sum(com_out)`` is a multiple of ``G``, which holds only if every
type balances. Offers are partial spends; sealing several offers into one
transaction is what makes swaps atomic.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .accounts import (
    OneTimeAccount,
    chk_key,
    chk_val,
    key_image,
    key_image_base,
    tag_blinding,
)
from .crypto.encoding import DecodeError, Reader, Writer, decode_all
from .crypto.group import ORDER, G, Point, base_mul, hash_bytes, point_sum, random_scalar
from .crypto.proofs import (
    DlogProof,
    OrProof,
    RangeError,
    RangeProof,
    Relation,
    or_prove,
    or_verify,
    range_prove,
    range_verify,
    schnorr_prove,
    schnorr_verify,
)
from .params import PublicParams, TypeTag

DOUBLE_SPEND = "double-spend"
BAD_PROOF = "bad-proof"
UNKNOWN_RING_MEMBER = "unknown-ring-member"
TYPE_REUSE = "type-reuse"
MALFORMED = "malformed"
REASONS = (DOUBLE_SPEND, BAD_PROOF, UNKNOWN_RING_MEMBER, TYPE_REUSE, MALFORMED)

KINDS = ("spend", "coingen")
MAX_RING = 1024
MAX_TYPE_SET = 1024

MEMBERSHIP_CTX = b"ctlm/membership"
CONSERVATION_CTX = b"ctlm/conservation"
ISSUANCE_CTX = b"ctlm/issuance"


class Rejected(Exception):
    """Verification failure carrying a machine-readable reason code."""

    def __init__(self, reason: str, detail: str = ""):
        assert reason in REASONS
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class TransactionError(ValueError):
    pass


class ConservationError(TransactionError):
    pass


class OwnershipError(TransactionError):
    pass


class RingTooSmall(TransactionError):
    pass


class DuplicateType(TransactionError):
    pass


class DuplicateKeyImage(TransactionError):
    pass


@dataclass(frozen=True)
class SpendInput:
    amount: int
    type: TypeTag
    ck: int
    sk: int
    account: OneTimeAccount


@dataclass(frozen=True)
class Output:
    ck: int
    amount: int
    type: TypeTag
    account: OneTimeAccount


@dataclass(frozen=True)
class InputBundle:
    ring: tuple
    key_image: Point
    pseudo_com: Point
    proof: OrProof

    def encode(self) -> bytes:
        return (
            Writer()
            .points(self.ring)
            .point(self.key_image)
            .point(self.pseudo_com)
            .bytes(self.proof.encode())
            .getvalue()
        )

    @classmethod
    def read(cls, r: Reader) -> InputBundle:
        ring = tuple(r.points())
        ki, pc = r.point(), r.point()
        return cls(ring, ki, pc, OrProof.decode(r.bytes()))


@dataclass(frozen=True)
class OutputBundle:
    account: OneTimeAccount
    type_set: tuple
    type_proof: OrProof
    range_proof: RangeProof

    def encode(self) -> bytes:
        return (
            Writer()
            .bytes(self.account.encode())
            .points(self.type_set)
            .bytes(self.type_proof.encode())
            .bytes(self.range_proof.encode())
            .getvalue()
        )

    @classmethod
    def read(cls, r: Reader) -> OutputBundle:
        acc = OneTimeAccount.decode(r.bytes())
        type_set = tuple(r.points())
        tp = OrProof.decode(r.bytes())
        return cls(acc, type_set, tp, RangeProof.decode(r.bytes()))


@dataclass(frozen=True)
class Transaction:
    kind: str
    inputs: tuple = ()
    outputs: tuple = ()
    revealed_types: tuple = ()

    def encode(self) -> bytes:
        w = Writer().u8(KINDS.index(self.kind))
        w.u64(len(self.inputs))
        for i in self.inputs:
            w.bytes(i.encode())
        w.u64(len(self.outputs))
        for o in self.outputs:
            w.bytes(o.encode())
        w.u64(len(self.revealed_types))
        for t in self.revealed_types:
            w.raw(t.encode())
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> Transaction:
        code = r.u8()
        if code >= len(KINDS):
            raise DecodeError("unknown transaction kind")
        inputs = tuple(decode_all(r.bytes(), InputBundle.read) for _ in range(r.count()))
        outputs = tuple(decode_all(r.bytes(), OutputBundle.read) for _ in range(r.count()))
        revealed = tuple(TypeTag.read(r) for _ in range(r.count()))
        return cls(KINDS[code], inputs, outputs, revealed)

    @classmethod
    def decode(cls, data: bytes) -> Transaction:
        return decode_all(data, cls.read)

    def digest(self) -> bytes:
        return hash_bytes(b"tx", self.encode())[:32]

    @property
    def key_images(self):
        return [i.key_image for i in self.inputs]


def encode_signed(tx: Transaction, sig: DlogProof) -> bytes:
    return Writer().bytes(tx.encode()).bytes(sig.encode()).getvalue()


def decode_signed(data: bytes):
    def read(r):
        tx = Transaction.decode(r.bytes())
        return tx, DlogProof.decode(r.bytes())

    return decode_all(data, read)


@dataclass(frozen=True)
class Offer:
    """Half of a transaction; ``blinding_sum`` stays with the parties until sealing."""

    inputs: tuple
    outputs: tuple
    blinding_sum: int

    @property
    def binding_digest(self) -> bytes:
        w = Writer()
        for i in self.inputs:
            w.bytes(i.encode())
        for o in self.outputs:
            w.bytes(o.encode())
        return hash_bytes(b"offer", w.getvalue())[:32]

    def encode(self) -> bytes:
        body = Transaction("spend", self.inputs, self.outputs).encode()
        return Writer().bytes(body).scalar(self.blinding_sum).getvalue()

    @classmethod
    def decode(cls, data: bytes) -> Offer:
        def read(r):
            body = Transaction.decode(r.bytes())
            return cls(body.inputs, body.outputs, r.scalar())

        return decode_all(data, read)


def membership_clauses(ring_accounts, image: Point, pseudo_com: Point):
    return [
        [
            Relation(G, acc.otpk, 0),
            Relation(key_image_base(acc.otpk), image, 0),
            Relation(G, acc.com - pseudo_com, 1),
        ]
        for acc in ring_accounts
    ]


def type_clauses(tag: Point, type_set):
    return [[Relation(G, tag - t)] for t in type_set]


def _output_ctx(label: bytes, acc: OneTimeAccount) -> bytes:
    return label + acc.encode()


def _rng(rng):
    return rng if rng is not None else random.SystemRandom()


def pre_spend(inputs, state, params: Optional[PublicParams] = None, *, ring_size=None, rng=None):
    """Build the secret-key dependent half of a spend.

    Returns ``[(InputBundle, delta)]`` where ``delta`` is the re-blinding of
    each pseudo-commitment.
    """
    params = params or state.params
    n = ring_size or params.ring_size
    rng = _rng(rng)
    out = []
    for inp in inputs:
        acc = inp.account
        if acc.key not in state.outputs:
            raise OwnershipError("input account is not on the ledger")
        size = min(n, len(state.outputs))
        if size < 2:
            raise RingTooSmall(f"ring of {size} member(s); need at least 2")
        decoys = state.sample_decoys(size - 1, exclude=acc.key, rng=rng)
        members = sorted([acc, *decoys], key=lambda a: a.key)
        index = members.index(acc)
        image = key_image(inp.sk, acc)
        delta = random_scalar()
        pc = acc.com - base_mul(delta)
        proof = or_prove(membership_clauses(members, image, pc), index, [inp.sk, delta], MEMBERSHIP_CTX)
        out.append((InputBundle(tuple(m.otpk for m in members), image, pc, proof), delta))
    return out


def choose_type_set(ty: TypeTag, state, params: PublicParams, rng=None):
    registered = state.types
    if bytes(ty.generator) not in registered:
        raise TransactionError(f"type {ty} is not registered")
    others = [k for k in registered if k != bytes(ty.generator)]
    room = max(params.type_set_size - 1, 0)
    if len(others) > room:
        others = _rng(rng).sample(others, room)
    return tuple(Point(k, _trusted=True) for k in sorted([bytes(ty.generator), *others]))


def build_output(out: Output, type_set, bits: int) -> OutputBundle:
    acc = out.account
    t = tag_blinding(out.ck)
    index = list(type_set).index(out.type.generator)
    tp = or_prove(type_clauses(acc.tag, type_set), index, [t], _output_ctx(b"ctlm/type", acc))
    rho = (out.ck - out.amount * t) % ORDER
    rp = range_prove(out.amount, acc.tag, rho, bits, _output_ctx(b"ctlm/range", acc))
    return OutputBundle(acc, tuple(type_set), tp, rp)


def _type_sums(items):
    sums = defaultdict(int)
    for it in items:
        sums[it.type] += it.amount
    return {k: v for k, v in sums.items() if v}


def offer(inputs, outputs, state, params=None, *, ring_size=None, partial=False, check=True, rng=None) -> Offer:
    """Prove ownership of ``inputs`` and well-formedness of ``outputs``.

    With ``partial=True`` the per-type sums may differ; the offer then only
    seals together with offers that cancel the difference. ``check=False``
    skips every local sanity check and exists for adversarial tests.
    """
    params = params or state.params
    bits = params.range_bits
    if check:
        for inp in inputs:
            if not chk_key(inp.sk, inp.account):
                raise OwnershipError("secret key does not open the input account")
            if not chk_val(inp.ck, inp.type, inp.amount, inp.account):
                raise OwnershipError("coin key does not open the input commitment")
        for out in outputs:
            if not 0 <= out.amount < 1 << bits:
                raise RangeError(f"output amount {out.amount} outside [0, 2^{bits})")
            if not chk_val(out.ck, out.type, out.amount, out.account):
                raise TransactionError("output coin key does not open its commitment")
        if not partial and _type_sums(inputs) != _type_sums(outputs):
            raise ConservationError("per-type input and output sums differ")
    bundles = pre_spend(inputs, state, params, ring_size=ring_size, rng=rng)
    out_bundles = [build_output(o, choose_type_set(o.type, state, params, rng), bits) for o in outputs]
    beta = (
        sum(inp.ck for inp in inputs) - sum(d for _, d in bundles) - sum(o.ck for o in outputs)
    ) % ORDER
    return Offer(
        tuple(sorted((b for b, _ in bundles), key=lambda b: bytes(b.key_image))),
        tuple(sorted(out_bundles, key=lambda o: o.account.key)),
        beta,
    )


def excess(inputs, outputs) -> Point:
    return point_sum(i.pseudo_com for i in inputs) - point_sum(o.account.com for o in outputs)


def seal(offers, *, check=True):
    """Merge offers into one spend transaction and sign its conservation."""
    offers = list(offers)
    if not offers:
        raise TransactionError("nothing to seal")
    inputs = [i for o in offers for i in o.inputs]
    outputs = [x for o in offers for x in o.outputs]
    beta = sum(o.blinding_sum for o in offers) % ORDER
    ex = excess(inputs, outputs)
    if check:
        images = [bytes(i.key_image) for i in inputs]
        if len(set(images)) != len(images):
            raise DuplicateKeyImage("the same input appears in more than one offer")
        if len({o.account.key for o in outputs}) != len(outputs):
            raise TransactionError("duplicate output account")
        if ex != base_mul(beta):
            raise ConservationError("merged offers do not conserve every type")
    tx = Transaction(
        "spend",
        tuple(sorted(inputs, key=lambda b: bytes(b.key_image))),
        tuple(sorted(outputs, key=lambda o: o.account.key)),
    )
    return tx, schnorr_prove(G, ex, beta, CONSERVATION_CTX + tx.digest())


def spend(inputs, outputs, state, params=None, **kw):
    return seal([offer(inputs, outputs, state, params, **kw)], check=kw.get("check", True))


def coin_gen(outputs, params: PublicParams, *, check=True):
    """Issue fresh token types; each output reveals its type but not its amount."""
    bits = params.range_bits
    if check:
        gens = [bytes(o.type.generator) for o in outputs]
        if len(set(gens)) != len(gens):
            raise DuplicateType("a coingen may register each type only once")
        for o in outputs:
            if not 0 <= o.amount < 1 << bits:
                raise RangeError(f"issued amount {o.amount} outside [0, 2^{bits})")
            if not chk_val(o.ck, o.type, o.amount, o.account):
                raise TransactionError("output coin key does not open its commitment")
    ordered = sorted(outputs, key=lambda o: o.account.key)
    bundles = tuple(build_output(o, (o.type.generator,), bits) for o in ordered)
    tx = Transaction("coingen", (), bundles, tuple(o.type for o in ordered))
    ex = point_sum(o.account.tag - o.type.generator for o in ordered)
    t_sum = sum(tag_blinding(o.ck) for o in ordered) % ORDER
    return tx, schnorr_prove(G, ex, t_sum, ISSUANCE_CTX + tx.digest())


def _check_output(bundle: OutputBundle, bits: int) -> bool:
    acc = bundle.account
    if not or_verify(type_clauses(acc.tag, bundle.type_set), bundle.type_proof, _output_ctx(b"ctlm/type", acc)):
        return False
    return range_verify(acc.com, acc.tag, bundle.range_proof, bits, _output_ctx(b"ctlm/range", acc))


def _strictly_sorted(keys) -> bool:
    return all(a < b for a, b in zip(keys, keys[1:]))


def _check_spend(state, tx: Transaction, sig: DlogProof) -> None:
    bits = state.params.range_bits
    if not tx.inputs or not tx.outputs or tx.revealed_types:
        raise Rejected(MALFORMED, "spend needs inputs and outputs and reveals no types")
    images = [bytes(i.key_image) for i in tx.inputs]
    if not _strictly_sorted(images):
        raise Rejected(MALFORMED, "inputs not in canonical order")
    for img in images:
        if img in state.key_images:
            raise Rejected(DOUBLE_SPEND, f"key image {img.hex()[:16]} already spent")
    _check_output_structure(state, tx)
    for bundle in tx.outputs:
        if not bundle.type_set or len(bundle.type_set) > MAX_TYPE_SET:
            raise Rejected(MALFORMED, "bad type set size")
        keys = [bytes(t) for t in bundle.type_set]
        if not _strictly_sorted(keys):
            raise Rejected(MALFORMED, "type set not in canonical order")
        if any(k not in state.types for k in keys):
            raise Rejected(MALFORMED, "type set names an unregistered type")
    rings = []
    for bundle in tx.inputs:
        keys = [bytes(p) for p in bundle.ring]
        if not 2 <= len(keys) <= MAX_RING or not _strictly_sorted(keys):
            raise Rejected(MALFORMED, "ring must hold 2 or more distinct members in canonical order")
        if bundle.key_image.is_identity():
            raise Rejected(MALFORMED, "identity key image")
        try:
            rings.append([state.outputs[k].account for k in keys])
        except KeyError:
            raise Rejected(UNKNOWN_RING_MEMBER, "ring references an account not on the ledger") from None
    for bundle, members in zip(tx.inputs, rings):
        clauses = membership_clauses(members, bundle.key_image, bundle.pseudo_com)
        if not or_verify(clauses, bundle.proof, MEMBERSHIP_CTX):
            raise Rejected(BAD_PROOF, "ring membership proof")
    for bundle in tx.outputs:
        if not _check_output(bundle, bits):
            raise Rejected(BAD_PROOF, "output type or range proof")
    if not schnorr_verify(G, excess(tx.inputs, tx.outputs), sig, CONSERVATION_CTX + tx.digest()):
        raise Rejected(BAD_PROOF, "conservation proof")


def _check_output_structure(state, tx: Transaction) -> None:
    keys = [o.account.key for o in tx.outputs]
    if not _strictly_sorted(keys):
        raise Rejected(MALFORMED, "outputs not in canonical order")
    for k in keys:
        if k in state.outputs:
            raise Rejected(MALFORMED, "output account already exists")


def _check_coingen(state, tx: Transaction, sig: DlogProof) -> None:
    bits = state.params.range_bits
    if tx.inputs or not tx.outputs or len(tx.revealed_types) != len(tx.outputs):
        raise Rejected(MALFORMED, "coingen reveals exactly one type per output and has no inputs")
    gens = [bytes(t.generator) for t in tx.revealed_types]
    if len(set(gens)) != len(gens):
        raise Rejected(MALFORMED, "duplicate type within coingen")
    for g in gens:
        if g in state.types:
            raise Rejected(TYPE_REUSE, "type already registered")
    _check_output_structure(state, tx)
    for bundle, ty in zip(tx.outputs, tx.revealed_types):
        if bundle.type_set != (ty.generator,):
            raise Rejected(MALFORMED, "coingen output must prove its revealed type")
        if not _check_output(bundle, bits):
            raise Rejected(BAD_PROOF, "output type or range proof")
    ex = point_sum(b.account.tag - t.generator for b, t in zip(tx.outputs, tx.revealed_types))
    if not schnorr_verify(G, ex, sig, ISSUANCE_CTX + tx.digest()):
        raise Rejected(BAD_PROOF, "issuance signature")


def check(state, tx: Transaction, sig: DlogProof) -> None:
    """Validate ``tx`` against ``state`` without changing anything."""
    if not isinstance(tx, Transaction) or not isinstance(sig, DlogProof):
        raise Rejected(MALFORMED, "not a transaction")
    if tx.kind == "spend":
        _check_spend(state, tx, sig)
    elif tx.kind == "coingen":
        _check_coingen(state, tx, sig)
    else:
        raise Rejected(MALFORMED, f"unknown kind {tx.kind!r}")


def verify(state, tx: Transaction, sig: DlogProof, *, timestamp: Optional[int] = None):
    """Return the successor state with ``tx`` included, or raise :class:`Rejected`."""
    check(state, tx, sig)
    return state.extended(tx, sig, timestamp)
