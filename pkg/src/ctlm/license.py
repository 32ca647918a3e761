"""License management and part life-cycle workflows on top of the ledger.

Designs, properties and transient attributes are all token types; every
workflow is either an issuance (CoinGen of a fresh type) or a transfer of
tokens from one account to another. Parts own receive-only accounts derived
from their eID, so tokens sent there can never leave again.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .accounts import (
    LongTermKeys,
    NotAddressed,
    OneTimeAccount,
    PublicAddress,
    acc_gen,
    detect,
    item_gen,
    ot_gen,
    receive,
    view,
)
from .crypto.encoding import Writer, decode_all
from .crypto.group import G, Point, base_mul
from .crypto.proofs import OrProof, Relation, or_prove, or_verify
from .ledger import Ledger, LedgerRecord, LedgerState, ScanHit, scan_state
from .params import NEGATION_PREFIX, TypeTag
from .transactions import Offer, Output, SpendInput, coin_gen, offer, seal, spend


class LicenseError(ValueError):
    pass


class InsufficientTokens(LicenseError):
    pass


def max_supply(params) -> int:
    return (1 << params.range_bits) - 1


def design_type(cad: bytes) -> TypeTag:
    return TypeTag.from_bytes_preimage("design", cad)


def property_type(label: str) -> TypeTag:
    return TypeTag.from_label("property", label)


def negation_label(label: str) -> str:
    return NEGATION_PREFIX + label


def attribute_type(label: str) -> TypeTag:
    return TypeTag.from_label("attribute", label)


def currency_type(label: str) -> TypeTag:
    return TypeTag.from_label("currency", label)


# -- generic operations ------------------------------------------------------

def issue_tx(params, amount: int, ty: TypeTag, ltp: PublicAddress):
    acc, ck = ot_gen(ltp, ty, amount, bits=params.range_bits)
    return coin_gen([Output(ck, amount, ty, acc)], params)


def issue_token(ledger: Ledger, amount: int, domain: str, preimage: bytes, ltp: PublicAddress) -> LedgerRecord:
    """Register type ``H(domain | preimage)`` with ``amount`` tokens for ``ltp``."""
    ty = TypeTag.from_bytes_preimage(domain, preimage)
    return ledger.apply(*issue_tx(ledger.params, amount, ty, ltp))


def transfer_tx(state: LedgerState, amount: int, ty: TypeTag, acc: OneTimeAccount, keys: LongTermKeys,
                ltp_to: PublicAddress, *, ring_size: Optional[int] = None, rng=None):
    sk = receive(keys, acc)
    opening = view(keys.ltv, acc)
    if opening is None:
        raise NotAddressed("account does not open under these keys")
    if opening.type != ty or opening.amount < amount:
        raise InsufficientTokens(
            f"account holds {opening.amount} of {opening.type}, asked for {amount} of {ty}"
        )
    bits = state.params.range_bits
    acc_t, ck_t = ot_gen(ltp_to, ty, amount, index=0, bits=bits)
    outputs = [Output(ck_t, amount, ty, acc_t)]
    rest = opening.amount - amount
    if rest:
        acc_r, ck_r = ot_gen(keys.ltp, ty, rest, index=1, bits=bits)
        outputs.append(Output(ck_r, rest, ty, acc_r))
    inputs = [SpendInput(opening.amount, ty, opening.ck, sk, acc)]
    return spend(inputs, outputs, state, ring_size=ring_size, rng=rng)


def transfer_token(ledger: Ledger, amount: int, ty: TypeTag, acc: OneTimeAccount, keys: LongTermKeys,
                   ltp_to: PublicAddress, **kw) -> LedgerRecord:
    """Send ``amount`` of ``ty`` from ``acc`` to ``ltp_to``, change back to the sender."""
    return ledger.apply(*transfer_tx(ledger.state, amount, ty, acc, keys, ltp_to, **kw))


# -- wallet views ------------------------------------------------------------

def holdings(state: LedgerState, keys: LongTermKeys, ty: Optional[TypeTag] = None) -> list:
    hits = scan_state(state, keys)
    return [h for h in hits if h.spent is not True and (ty is None or h.type == ty)]


def balance(state: LedgerState, keys: LongTermKeys) -> dict:
    out: dict = {}
    for h in holdings(state, keys):
        out[h.type] = out.get(h.type, 0) + h.amount
    return out


def pick_account(state: LedgerState, keys: LongTermKeys, ty: TypeTag, amount: int) -> ScanHit:
    """The largest unspent account of ``ty``; it must cover ``amount`` on its own."""
    candidates = sorted(holdings(state, keys, ty), key=lambda h: (-h.amount, h.seq))
    if not candidates or candidates[0].amount < amount:
        have = candidates[0].amount if candidates else 0
        raise InsufficientTokens(f"largest account of {ty} holds {have}, need {amount}")
    return candidates[0]


# -- trading -------------------------------------------------------------------

def swap_offer(state: LedgerState, keys: LongTermKeys, give: TypeTag, give_amount: int, want: TypeTag,
               want_amount: int, *, ring_size: Optional[int] = None, rng=None) -> Offer:
    """One side of a swap: spend ``give`` and pay ``want`` to ourselves.

    The offer is unbalanced on purpose and only seals together with a
    counter-offer that pays the opposite difference.
    """
    hit = pick_account(state, keys, give, give_amount)
    bits = state.params.range_bits
    outputs = []
    acc_w, ck_w = ot_gen(keys.ltp, want, want_amount, index=0, bits=bits)
    outputs.append(Output(ck_w, want_amount, want, acc_w))
    rest = hit.amount - give_amount
    if rest:
        acc_r, ck_r = ot_gen(keys.ltp, give, rest, index=1, bits=bits)
        outputs.append(Output(ck_r, rest, give, acc_r))
    sk = receive(keys, hit.account)
    inputs = [SpendInput(hit.amount, give, hit.ck, sk, hit.account)]
    return offer(inputs, outputs, state, ring_size=ring_size, partial=True, rng=rng)


def swap(ledger: Ledger, offers) -> LedgerRecord:
    """Seal offers into one atomic transaction; all transfers land or none."""
    return ledger.apply(*seal(offers))


# -- designs and parts -------------------------------------------------------

def issue_design(ledger: Ledger, cad: bytes, ltp_d: PublicAddress, amount: Optional[int] = None) -> LedgerRecord:
    if amount is None:
        amount = max_supply(ledger.params)
    return issue_token(ledger, amount, "design", cad, ltp_d)


def verify_file_integrity(cad: bytes, ty: TypeTag) -> bool:
    return ty.domain == "design" and design_type(cad) == ty


def part_keys(eid: bytes, salt: bytes = b"") -> LongTermKeys:
    return item_gen(eid + salt)


def transient_keys(eid: bytes) -> LongTermKeys:
    return acc_gen(eid)


def register_item(ledger: Ledger, eid: bytes, cad: bytes, acc_m: OneTimeAccount, keys_m: LongTermKeys,
                  *, salt: bytes = b"", **kw) -> LedgerRecord:
    """Bind one license token of the design to the part's receive-only account."""
    return transfer_token(ledger, 1, design_type(cad), acc_m, keys_m, part_keys(eid, salt).ltp, **kw)


def issue_certificate_tokens(ledger: Ledger, amount: int, label: str, ltp_q: PublicAddress) -> LedgerRecord:
    return issue_token(ledger, amount, "property", label.encode("utf-8"), ltp_q)


def attest_tx(state: LedgerState, eid: bytes, label: str, acc_q: OneTimeAccount, keys_q: LongTermKeys,
              amount: int = 1, *, salt: bytes = b"", **kw):
    return transfer_tx(state, amount, property_type(label), acc_q, keys_q, part_keys(eid, salt).ltp, **kw)


def attest_post_processing(ledger: Ledger, eid: bytes, label: str, acc_q: OneTimeAccount,
                           keys_q: LongTermKeys, amount: int = 1, **kw) -> LedgerRecord:
    """Send ``amount`` property tokens to the part; the amount is the attested value."""
    return ledger.apply(*attest_tx(ledger.state, eid, label, acc_q, keys_q, amount, **kw))


def apply_transient(ledger: Ledger, eid: bytes, label: str, amount: int, acc_o: OneTimeAccount,
                    keys_o: LongTermKeys, **kw) -> LedgerRecord:
    return transfer_token(ledger, amount, attribute_type(label), acc_o, keys_o, transient_keys(eid).ltp, **kw)


def recover_transient(ledger: Ledger, eid: bytes, amount: int, acc_i: OneTimeAccount, ltp_o: PublicAddress,
                      **kw) -> LedgerRecord:
    """Claim transient tokens from the part's spendable secondary account."""
    keys_i = transient_keys(eid)
    opening = view(keys_i.ltv, acc_i)
    if opening is None:
        raise NotAddressed("account is not the part's transient account")
    return transfer_token(ledger, amount, opening.type, acc_i, keys_i, ltp_o, **kw)


@dataclass(frozen=True)
class HistoryEntry:
    type: TypeTag
    amount: int
    ck: int
    account: OneTimeAccount
    received_seq: int
    received_at: int
    transient: bool = False
    spent_seq: Optional[int] = None
    spent_at: Optional[int] = None

    @property
    def held(self) -> bool:
        return self.spent_seq is None


def item_verification(state: LedgerState, eid: bytes, *, salt: bytes = b"") -> list:
    """Every token the part ever received, with timestamps, oldest first."""
    entries = [
        HistoryEntry(h.type, h.amount, h.ck, h.account, h.seq, h.timestamp)
        for h in scan_state(state, part_keys(eid, salt))
    ]
    for h in scan_state(state, transient_keys(eid)):
        entries.append(
            HistoryEntry(h.type, h.amount, h.ck, h.account, h.seq, h.timestamp, True, h.spent_seq, h.spent_timestamp)
        )
    return sorted(entries, key=lambda e: (e.received_seq, e.account.key))


@dataclass(frozen=True)
class PropertyStatus:
    positive: int
    negated: int

    @property
    def valid(self) -> bool:
        return self.positive >= 1 and self.negated == 0

    @property
    def anomalous(self) -> bool:
        return self.negated > 0 and self.positive == 0


def effective_properties(entries, labels) -> dict:
    """Pair each property label with its negation and apply the validity rule.

    Only labels the caller knows can be recognised, since the ledger stores
    digests of labels rather than the labels themselves.
    """
    totals: dict = {}
    for e in entries:
        if e.held and e.type.domain == "property":
            totals[e.type] = totals.get(e.type, 0) + e.amount
    return {
        label: PropertyStatus(
            totals.get(property_type(label), 0), totals.get(property_type(negation_label(label)), 0)
        )
        for label in labels
    }


# -- round-robin certification pool -------------------------------------------

def split_tx(state: LedgerState, acc: OneTimeAccount, keys: LongTermKeys, ways: int = 16, **kw):
    """Split one account into ``ways`` outputs back to the same owner."""
    opening = view(keys.ltv, acc)
    if opening is None:
        raise NotAddressed("account does not open under these keys")
    if ways < 1 or opening.amount < ways:
        raise InsufficientTokens(f"cannot split {opening.amount} tokens {ways} ways")
    share, extra = divmod(opening.amount, ways)
    bits = state.params.range_bits
    outputs = []
    for i in range(ways):
        amt = share + (extra if i == 0 else 0)
        a, ck = ot_gen(keys.ltp, opening.type, amt, index=i, bits=bits)
        outputs.append(Output(ck, amt, opening.type, a))
    sk = receive(keys, acc)
    return spend([SpendInput(opening.amount, opening.type, opening.ck, sk, acc)], outputs, state, **kw)


class CertificationPool:
    """Rotate attestations across many small outputs.

    Change from an attestation is usable only once persisted, so attesting
    parts in quick succession draws from a different pool output each time.
    """

    def __init__(self, keys: LongTermKeys, label: str):
        self.keys = keys
        self.type = property_type(label)
        self._cursor = 0
        self._reserved: set = set()

    def split(self, ledger: Ledger, ways: int = 16, **kw) -> LedgerRecord:
        hit = pick_account(ledger.state, self.keys, self.type, ways)
        return ledger.apply(*split_tx(ledger.state, hit.account, self.keys, ways, **kw))

    def take(self, state: LedgerState, amount: int = 1) -> ScanHit:
        live = [
            h for h in holdings(state, self.keys, self.type)
            if h.amount >= amount and h.account.key not in self._reserved
        ]
        if not live:
            raise InsufficientTokens("no free pool output; wait for pending attestations to persist")
        hit = live[self._cursor % len(live)]
        self._cursor += 1
        self._reserved.add(hit.account.key)
        return hit

    def release(self, hit: ScanHit) -> None:
        self._reserved.discard(hit.account.key)


# -- designated-verifier proofs for proxy parts --------------------------------

@dataclass(frozen=True)
class ProxyProof:
    """OR proof: [opening of one listed account for (type, amount)] or [knowledge of the verifier's key]."""

    accounts: tuple
    verifier: PublicAddress
    type: TypeTag
    amount: int
    item_pk: Point
    proof: OrProof

    def statement(self) -> bytes:
        w = Writer().raw(self.verifier.encode()).raw(self.type.encode()).u64(self.amount).point(self.item_pk)
        w.u64(len(self.accounts))
        for acc in self.accounts:
            w.bytes(acc.encode())
        return w.getvalue()

    def encode(self) -> bytes:
        return Writer().bytes(self.statement()).bytes(self.proof.encode()).getvalue()

    @classmethod
    def decode(cls, data: bytes) -> ProxyProof:
        def read_statement(r):
            verifier = PublicAddress.decode(r.raw(96))
            ty = TypeTag.read(r)
            amount, item_pk = r.u64(), r.point()
            accounts = tuple(OneTimeAccount.decode(r.bytes()) for _ in range(r.count()))
            return verifier, ty, amount, item_pk, accounts

        def read(r):
            verifier, ty, amount, item_pk, accounts = decode_all(r.bytes(), read_statement)
            return cls(accounts, verifier, ty, amount, item_pk, OrProof.decode(r.bytes()))

        return decode_all(data, read)


def _proxy_clauses(accounts, verifier: PublicAddress, ty: TypeTag, amount: int, item_pk: Point):
    value = ty.generator * amount
    clauses = [[Relation(G, acc.com - value, 0), Relation(G, acc.otpk - item_pk, 1)] for acc in accounts]
    clauses.append([Relation(G, verifier.pk, 0)])
    return clauses


def _proxy_ctx(statement: bytes) -> bytes:
    return b"ctlm/proxy" + statement


def proxy_prove(account: OneTimeAccount, verifier: PublicAddress, eid: bytes, *, salt: bytes = b"",
                decoys=()) -> ProxyProof:
    """Designated-verifier proof that the part received ``account``'s tokens.

    With ``decoys`` the proof hides which of the listed accounts is the part's.
    """
    keys = part_keys(eid, salt)
    opening = view(keys.ltv, account)
    if opening is None:
        raise NotAddressed("account is not addressed to this part")
    h = detect(keys.ltv, account)
    accounts = tuple(sorted({a.key: a for a in (account, *decoys)}.values(), key=lambda a: a.key))
    shell = ProxyProof(accounts, verifier, opening.type, opening.amount, keys.ltp.pk, OrProof((), ()))
    clauses = _proxy_clauses(accounts, verifier, opening.type, opening.amount, keys.ltp.pk)
    proof = or_prove(clauses, accounts.index(account), [opening.ck, h], _proxy_ctx(shell.statement()))
    return ProxyProof(accounts, verifier, opening.type, opening.amount, keys.ltp.pk, proof)


def proxy_forge(accounts, verifier_keys: LongTermKeys, ty: TypeTag, amount: int, item_pk: Point) -> ProxyProof:
    """What only the designated verifier can do: prove any statement with its own key."""
    if verifier_keys.lts is None or base_mul(verifier_keys.lts) != verifier_keys.ltp.pk:
        raise LicenseError("forging requires the verifier's spend key")
    accounts = tuple(sorted(accounts, key=lambda a: a.key))
    shell = ProxyProof(accounts, verifier_keys.ltp, ty, amount, item_pk, OrProof((), ()))
    clauses = _proxy_clauses(accounts, verifier_keys.ltp, ty, amount, item_pk)
    proof = or_prove(clauses, len(accounts), [verifier_keys.lts], _proxy_ctx(shell.statement()))
    return ProxyProof(accounts, verifier_keys.ltp, ty, amount, item_pk, proof)


def proxy_verify(proof: ProxyProof, verifier: PublicAddress, *, eid: Optional[bytes] = None, salt: bytes = b"",
                 state: Optional[LedgerState] = None) -> bool:
    """Check a proof addressed to ``verifier``.

    ``eid``/``salt`` additionally tie the proof to a physical part; ``state``
    checks that every listed account is on the ledger.
    """
    if proof.verifier != verifier or not proof.accounts:
        return False
    if eid is not None and part_keys(eid, salt).ltp.pk != proof.item_pk:
        return False
    if state is not None:
        for acc in proof.accounts:
            entry = state.outputs.get(acc.key)
            if entry is None or entry.account != acc:
                return False
    keys = [a.key for a in proof.accounts]
    if keys != sorted(set(keys)):
        return False
    clauses = _proxy_clauses(proof.accounts, verifier, proof.type, proof.amount, proof.item_pk)
    return or_verify(clauses, proof.proof, _proxy_ctx(proof.statement()))
