"""Single-writer ledger with an append-only, checksummed transaction log.

State snapshots are immutable; :meth:`Ledger.apply` verifies a transaction
against the current snapshot, persists it with ``fsync`` and only then swaps
the snapshot in. Reopening a log replays every record to rebuild the sets.

Spent status is not public: key images do not say which ring member they
consume, so the output set holds every account ever created and only a holder
of the spend key can tell whether one of them was spent.
"""

from __future__ import annotations

import fcntl
import hashlib
import os
import struct
import threading
import time
import zlib
from dataclasses import dataclass
from types import MappingProxyType
from typing import Optional, Union

from .accounts import LongTermKeys, OneTimeAccount, ViewKey, detect, item_gen, key_image, ot_gen, view
from .crypto.encoding import DecodeError, Reader, Writer, decode_all
from .crypto.group import ORDER
from .crypto.proofs import DlogProof
from .params import PublicParams, TypeTag, profile
from .transactions import MALFORMED, Output, Rejected, Transaction, coin_gen, decode_signed, verify

MAGIC = b"CTLMLOG\x00"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sHB5x")
FRAME = struct.Struct("<II")
GENESIS_SEED = b"ctlm-genesis-decoys"


class StorageError(RuntimeError):
    pass


class LedgerLocked(StorageError):
    pass


@dataclass(frozen=True)
class OutputEntry:
    account: OneTimeAccount
    seq: int


@dataclass(frozen=True)
class LedgerRecord:
    seq: int
    timestamp: int  # UTC milliseconds
    tx: Transaction
    sig: DlogProof

    def encode(self) -> bytes:
        return (
            Writer()
            .u64(self.seq)
            .u64(self.timestamp)
            .bytes(self.tx.encode())
            .bytes(self.sig.encode())
            .getvalue()
        )

    @classmethod
    def decode(cls, data: bytes) -> LedgerRecord:
        def read(r: Reader):
            seq, ts = r.u64(), r.u64()
            tx = Transaction.decode(r.bytes())
            return cls(seq, ts, tx, DlogProof.decode(r.bytes()))

        return decode_all(data, read)


def now_ms() -> int:
    return time.time_ns() // 1_000_000


def genesis_tx(params: PublicParams):
    """Zero-value outputs to a receive-only address so the first rings can form."""
    owner = item_gen(GENESIS_SEED).ltp
    outputs = []
    for i in range(params.ring_size):
        # one type per output: a coingen registers each type once
        ty = TypeTag.from_bytes_preimage("currency", GENESIS_SEED + i.to_bytes(2, "little"))
        acc, ck = ot_gen(owner, ty, 0, index=i, bits=params.range_bits)
        outputs.append(Output(ck, 0, ty, acc))
    return coin_gen(outputs, params)


class LedgerState:
    """Immutable view of the ledger after ``height`` records."""

    def __init__(self, params: PublicParams, outputs=None, key_images=None, types=None, records=(), order=()):
        self.params = params
        self._outputs = dict(outputs or {})
        self._key_images = dict(key_images or {})
        self._types = dict(types or {})
        self.records = tuple(records)
        self.output_keys = tuple(order)
        self.outputs = MappingProxyType(self._outputs)
        self.key_images = MappingProxyType(self._key_images)
        self.types = MappingProxyType(self._types)

    @property
    def height(self) -> int:
        return len(self.records)

    def extended(self, tx: Transaction, sig: DlogProof, timestamp: Optional[int] = None) -> LedgerState:
        seq = self.height + 1
        ts = now_ms() if timestamp is None else int(timestamp)
        if self.records:
            ts = max(ts, self.records[-1].timestamp)
        outputs = dict(self._outputs)
        order = list(self.output_keys)
        for bundle in tx.outputs:
            outputs[bundle.account.key] = OutputEntry(bundle.account, seq)
            order.append(bundle.account.key)
        images = dict(self._key_images)
        for img in tx.key_images:
            images[bytes(img)] = seq
        types = dict(self._types)
        for ty in tx.revealed_types:
            types[bytes(ty.generator)] = ty
        record = LedgerRecord(seq, ts, tx, sig)
        return LedgerState(self.params, outputs, images, types, self.records + (record,), order)

    def sample_decoys(self, count: int, exclude: bytes, rng):
        pool = self.output_keys
        picks = rng.sample(pool, min(count + 1, len(pool)))
        picks = [k for k in picks if k != exclude][:count]
        return [self._outputs[k].account for k in picks]

    def record(self, seq: int) -> LedgerRecord:
        return self.records[seq - 1]

    def digest(self) -> bytes:
        """Hash of the output, key-image and type sets plus the height."""
        h = hashlib.sha256(b"ctlm-state\x00")
        h.update(self.height.to_bytes(8, "little"))
        for k in sorted(self._outputs):
            e = self._outputs[k]
            h.update(k + e.seq.to_bytes(8, "little") + hashlib.sha256(e.account.encode()).digest())
        h.update(b"|images")
        for k in sorted(self._key_images):
            h.update(k + self._key_images[k].to_bytes(8, "little"))
        h.update(b"|types")
        for k in sorted(self._types):
            h.update(k + self._types[k].encode())
        return h.digest()

    def stats(self) -> dict:
        return {
            "records": self.height,
            "outputs": len(self._outputs),
            "key_images": len(self._key_images),
            "types": len(self._types),
        }


@dataclass(frozen=True)
class ScanHit:
    account: OneTimeAccount
    amount: int
    type: TypeTag
    ck: int
    seq: int
    timestamp: int
    spent: Optional[bool] = None
    spent_seq: Optional[int] = None
    spent_timestamp: Optional[int] = None


Keys = Union[LongTermKeys, ViewKey]


def scan_state(state: LedgerState, keys: Keys) -> list:
    """Every account in ``state`` viewable with ``keys``, oldest first.

    Spent flags are filled in only when ``keys`` can derive key images.
    """
    ltv = keys.ltv if isinstance(keys, LongTermKeys) else keys
    lts = keys.lts if isinstance(keys, LongTermKeys) else None
    hits = []
    for rec in state.records:
        for bundle in rec.tx.outputs:
            acc = bundle.account
            opening = view(ltv, acc)
            if opening is None:
                continue
            spent = spent_seq = spent_ts = None
            if lts is not None:
                sk = (lts + detect(ltv, acc)) % ORDER
                spent_seq = state.key_images.get(bytes(key_image(sk, acc)))
                spent = spent_seq is not None
                if spent:
                    spent_ts = state.record(spent_seq).timestamp
            hits.append(
                ScanHit(acc, opening.amount, opening.type, opening.ck, rec.seq, rec.timestamp, spent, spent_seq, spent_ts)
            )
    return hits


def export_view_key(keys: Keys) -> dict:
    """Escrow record granting scan-only access; it carries no spend secret."""
    ltv = keys.ltv if isinstance(keys, LongTermKeys) else keys
    return {"version": 1, "kind": "escrow-view-key", "ltv": ltv.encode().hex()}


def import_view_key(record: dict) -> ViewKey:
    if record.get("kind") != "escrow-view-key":
        raise ValueError("not an escrow view key record")
    return ViewKey.decode(bytes.fromhex(record["ltv"]))


class Ledger:
    """The serialized state machine; optionally backed by a log file."""

    def __init__(self, params: Optional[PublicParams] = None, path=None, *, verify_replay: bool = False,
                 clock=now_ms, genesis: bool = True):
        self._lock = threading.Lock()
        self._clock = clock
        self._fd = None
        self.path = os.fspath(path) if path is not None else None
        params = params or profile("test")
        self._state = LedgerState(params)
        if self.path is not None:
            self._open_log(verify_replay)
        if genesis and self._state.height == 0:
            self.apply(*genesis_tx(self.params))

    @classmethod
    def open(cls, path, params=None, **kw) -> Ledger:
        return cls(params, path, **kw)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None

    @property
    def params(self) -> PublicParams:
        return self._state.params

    @property
    def state(self) -> LedgerState:
        return self._state

    def snapshot(self) -> LedgerState:
        return self._state

    def _open_log(self, verify_replay: bool) -> None:
        fd = os.open(self.path, os.O_RDWR | os.O_CREAT, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            os.close(fd)
            raise LedgerLocked(f"ledger {self.path} is locked by another process") from None
        self._fd = fd
        size = os.fstat(fd).st_size
        if size == 0:
            self._write(HEADER.pack(MAGIC, FORMAT_VERSION, self.params.range_bits))
            return
        with open(self.path, "rb") as fh:
            data = fh.read()
        if len(data) < HEADER.size:
            raise StorageError("ledger header truncated")
        magic, version, bits = HEADER.unpack_from(data)
        if magic != MAGIC or version != FORMAT_VERSION:
            raise StorageError("not a ledger file of a supported version")
        if bits != self.params.range_bits:
            self._state = LedgerState(self.params.with_(range_bits=bits))
        state = self._state
        pos = HEADER.size
        while pos < len(data):
            if pos + FRAME.size > len(data):
                break
            length, crc = FRAME.unpack_from(data, pos)
            end = pos + FRAME.size + length
            if end > len(data):
                break
            payload = data[pos + FRAME.size:end]
            if zlib.crc32(payload) != crc:
                if end == len(data):
                    break
                raise StorageError(f"checksum mismatch in record at byte {pos}")
            try:
                rec = LedgerRecord.decode(payload)
            except DecodeError as exc:
                raise StorageError(f"undecodable record at byte {pos}: {exc}") from None
            if rec.seq != state.height + 1:
                raise StorageError(f"record sequence gap at byte {pos}")
            if verify_replay:
                state = verify(state, rec.tx, rec.sig, timestamp=rec.timestamp)
            else:
                state = state.extended(rec.tx, rec.sig, rec.timestamp)
            pos = end
        if pos < len(data):
            # torn tail from an interrupted append
            os.ftruncate(fd, pos)
            os.fsync(fd)
        self._state = state

    def _write(self, data: bytes) -> None:
        try:
            os.lseek(self._fd, 0, os.SEEK_END)
            view_ = memoryview(data)
            while view_:
                n = os.write(self._fd, view_)
                view_ = view_[n:]
            os.fsync(self._fd)
        except OSError as exc:
            raise StorageError(f"cannot persist record: {exc}") from exc

    def apply(self, tx: Transaction, sig: DlogProof) -> LedgerRecord:
        """Verify, persist and include ``tx``; raises :class:`Rejected` on failure."""
        with self._lock:
            new = verify(self._state, tx, sig, timestamp=self._clock())
            rec = new.records[-1]
            if self._fd is not None:
                payload = rec.encode()
                self._write(FRAME.pack(len(payload), zlib.crc32(payload)) + payload)
            self._state = new
            return rec

    def apply_encoded(self, data: bytes) -> LedgerRecord:
        try:
            tx, sig = decode_signed(data)
        except (DecodeError, ValueError) as exc:
            raise Rejected(MALFORMED, str(exc)) from None
        return self.apply(tx, sig)

    def scan(self, keys: Keys) -> list:
        return scan_state(self._state, keys)

    def stats(self) -> dict:
        return self._state.stats()

    def digest(self) -> bytes:
        return self._state.digest()
