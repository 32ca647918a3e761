"""Sigma protocols made non-interactive with Fiat-Shamir.

Everything here reduces to one primitive: an OR over clauses, where each clause
is a conjunction of discrete-log relations ``target = w[var] * base``. A
Schnorr proof is the one-clause, one-relation case; ring membership, bit
proofs and designated-verifier proofs are larger instances.
"""

from __future__ import annotations

from dataclasses import dataclass

from .encoding import DecodeError, Reader, Writer, decode_all
from .group import (
    IDENTITY,
    ORDER,
    G,
    Point,
    base_mul,
    hash_to_scalar,
    inverse,
    mul,
    random_scalar,
)


class RangeError(ValueError):
    """Amount does not fit the configured bit width."""


@dataclass(frozen=True)
class Relation:
    base: Point
    target: Point
    var: int = 0


Clause = list  # list[Relation]


@dataclass(frozen=True)
class OrProof:
    challenges: tuple
    responses: tuple  # one tuple of scalars per clause

    def encode(self) -> bytes:
        w = Writer().u64(len(self.challenges))
        for c, zs in zip(self.challenges, self.responses):
            w.scalar(c).u64(len(zs))
            for z in zs:
                w.scalar(z)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> OrProof:
        n = r.count()
        cs, zss = [], []
        for _ in range(n):
            cs.append(r.scalar())
            zss.append(tuple(r.scalar() for _ in range(r.count())))
        return cls(tuple(cs), tuple(zss))

    @classmethod
    def decode(cls, data: bytes) -> OrProof:
        return decode_all(data, cls.read)


@dataclass(frozen=True)
class DlogProof:
    challenge: int
    response: int

    def encode(self) -> bytes:
        return Writer().scalar(self.challenge).scalar(self.response).getvalue()

    @classmethod
    def read(cls, r: Reader) -> DlogProof:
        return cls(r.scalar(), r.scalar())

    @classmethod
    def decode(cls, data: bytes) -> DlogProof:
        return decode_all(data, cls.read)


def _nvars(clause) -> int:
    return max(rel.var for rel in clause) + 1


def _statement_bytes(clauses) -> bytes:
    w = Writer().u64(len(clauses))
    for clause in clauses:
        w.u64(len(clause))
        for rel in clause:
            w.point(rel.base).point(rel.target).u64(rel.var)
    return w.getvalue()


def _commitment(rel: Relation, z: int, c: int) -> Point:
    return mul(z, rel.base) - mul(c, rel.target)


def _challenge(ctx: bytes, clauses, commitments) -> int:
    w = Writer()
    for a in commitments:
        w.point(a)
    return hash_to_scalar(b"or-proof", ctx, _statement_bytes(clauses), w.getvalue())


def or_prove(clauses, index: int, witness, ctx: bytes) -> OrProof:
    """Prove that clause ``index`` holds, hiding which one.

    ``witness`` lists the scalars of the true clause, indexed by ``Relation.var``.
    """
    if not 0 <= index < len(clauses):
        raise IndexError("satisfied clause index out of range")
    true_clause = clauses[index]
    nonces = [random_scalar() for _ in range(_nvars(true_clause))]
    cs, zss, commitments = [], [], []
    for i, clause in enumerate(clauses):
        if i == index:
            cs.append(None)
            zss.append(None)
            commitments.extend(mul(nonces[rel.var], rel.base) for rel in clause)
        else:
            c = random_scalar()
            zs = [random_scalar() for _ in range(_nvars(clause))]
            cs.append(c)
            zss.append(tuple(zs))
            commitments.extend(_commitment(rel, zs[rel.var], c) for rel in clause)
    total = _challenge(ctx, clauses, commitments)
    c_true = (total - sum(c for c in cs if c is not None)) % ORDER
    cs[index] = c_true
    zss[index] = tuple((k + c_true * w) % ORDER for k, w in zip(nonces, witness))
    return OrProof(tuple(cs), tuple(zss))


def or_verify(clauses, proof: OrProof, ctx: bytes) -> bool:
    if len(proof.challenges) != len(clauses) or len(proof.responses) != len(clauses):
        return False
    commitments = []
    for clause, c, zs in zip(clauses, proof.challenges, proof.responses):
        if len(zs) != _nvars(clause):
            return False
        commitments.extend(_commitment(rel, zs[rel.var], c) for rel in clause)
    return sum(proof.challenges) % ORDER == _challenge(ctx, clauses, commitments)


def schnorr_prove(base: Point, target: Point, x: int, ctx: bytes) -> DlogProof:
    p = or_prove([[Relation(base, target)]], 0, [x], ctx)
    return DlogProof(p.challenges[0], p.responses[0][0])


def schnorr_verify(base: Point, target: Point, proof: DlogProof, ctx: bytes) -> bool:
    p = OrProof((proof.challenge,), ((proof.response,),))
    return or_verify([[Relation(base, target)]], p, ctx)


def commit(amount: int, generator: Point, blinding: int, bits: int = 64) -> Point:
    """Pedersen commitment ``amount * generator + blinding * G``."""
    if not 0 <= amount < 1 << bits:
        raise RangeError(f"amount {amount} outside [0, 2^{bits})")
    return mul(amount, generator) + base_mul(blinding)


def verify_open(com: Point, amount: int, generator: Point, blinding: int) -> bool:
    if amount < 0:
        return False
    return mul(amount, generator) + base_mul(blinding) == com


@dataclass(frozen=True)
class RangeProof:
    """Bit decomposition of a committed amount with one OR proof per bit."""

    bits: tuple  # Points, least significant first
    proofs: tuple  # OrProof per bit

    def encode(self) -> bytes:
        w = Writer().points(self.bits)
        for p in self.proofs:
            w.bytes(p.encode())
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> RangeProof:
        bits = r.points()
        proofs = tuple(OrProof.decode(r.bytes()) for _ in bits)
        return cls(tuple(bits), proofs)

    @classmethod
    def decode(cls, data: bytes) -> RangeProof:
        return decode_all(data, cls.read)


def _bit_clauses(bit: Point, generator: Point):
    return [[Relation(G, bit)], [Relation(G, bit - generator)]]


def _range_ctx(ctx: bytes, com: Point, generator: Point, bits) -> bytes:
    return Writer().bytes(ctx).point(com).point(generator).points(bits).getvalue()


def _recompose(bits) -> Point:
    acc = IDENTITY
    for b in reversed(bits):
        acc = acc + acc + b
    return acc


def range_prove(amount: int, generator: Point, blinding: int, bits: int, ctx: bytes = b"") -> RangeProof:
    """Prove ``amount * generator + blinding * G`` commits to a value below ``2**bits``."""
    if not 0 <= amount < 1 << bits:
        raise RangeError(f"amount {amount} outside [0, 2^{bits})")
    com = commit(amount, generator, blinding, bits)
    blinds = [random_scalar() for _ in range(bits - 1)]
    partial = sum(r << i for i, r in enumerate(blinds)) % ORDER
    blinds.append((blinding - partial) * inverse(1 << (bits - 1)) % ORDER)
    values = [(amount >> i) & 1 for i in range(bits)]
    bit_points = tuple(
        (generator if v else IDENTITY) + base_mul(r) for v, r in zip(values, blinds)
    )
    full_ctx = _range_ctx(ctx, com, generator, bit_points)
    proofs = tuple(
        or_prove(_bit_clauses(pt, generator), v, [r], full_ctx + i.to_bytes(2, "little"))
        for i, (pt, v, r) in enumerate(zip(bit_points, values, blinds))
    )
    return RangeProof(bit_points, proofs)


def range_verify(com: Point, generator: Point, proof: RangeProof, bits: int, ctx: bytes = b"") -> bool:
    if len(proof.bits) != bits or len(proof.proofs) != bits:
        return False
    if _recompose(proof.bits) != com:
        return False
    full_ctx = _range_ctx(ctx, com, generator, proof.bits)
    return all(
        or_verify(_bit_clauses(pt, generator), p, full_ctx + i.to_bytes(2, "little"))
        for i, (pt, p) in enumerate(zip(proof.bits, proof.proofs))
    )


__all__ = [
    "DecodeError",
    "DlogProof",
    "OrProof",
    "RangeError",
    "RangeProof",
    "Relation",
    "commit",
    "or_prove",
    "or_verify",
    "range_prove",
    "range_verify",
    "schnorr_prove",
    "schnorr_verify",
    "verify_open",
]
