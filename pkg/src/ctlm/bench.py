"""Benchmark harness: transaction generation, verification throughput, scanning.

Every row is the summary of at least ``MIN_REPS`` timed repetitions. The
verification benchmark runs in worker processes because group arithmetic
here is interpreter-bound and threads would serialize on the GIL.
"""

from __future__ import annotations

import csv
import math
import os
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from .accounts import acc_gen, ot_gen, receive, view
from .ledger import Ledger, LedgerRecord, LedgerState
from .params import PublicParams, TypeTag
from .transactions import Output, Rejected, SpendInput, check, decode_signed, encode_signed, pre_spend, spend
from . import license as lic

MIN_REPS = 10
BENCH_TYPE = TypeTag.from_label("currency", "bench")


@dataclass
class BenchRow:
    operation: str
    io: int
    ring: int
    range_bits: int
    workers: int
    reps: int
    items: int
    median_s: float
    min_s: float
    max_s: float
    throughput_per_s: float
    note: str = ""


CSV_COLUMNS = [f.name for f in fields(BenchRow)]


def _summary(operation, samples, *, io=0, ring=0, bits=0, workers=1, items=1, note="") -> BenchRow:
    med = statistics.median(samples)
    rate = items / med if med > 0 and items else math.nan
    return BenchRow(operation, io, ring, bits, workers, len(samples), items, med, min(samples), max(samples), rate, note)


def _timed(fn, reps):
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return out


class Fixture:
    """A ledger where one wallet owns ``accounts`` spendable outputs of one type."""

    def __init__(self, params: PublicParams, accounts: int = 8, amount: int = 10, seed: int = 1):
        self.params = params
        self.rng = random.Random(seed)
        self.ledger = Ledger(params)
        self.keys = acc_gen(seed.to_bytes(32, "little"))
        total = amount * accounts
        self.ledger.apply(*lic.issue_tx(params, total, BENCH_TYPE, self.keys.ltp))
        hit = lic.pick_account(self.ledger.state, self.keys, BENCH_TYPE, total)
        self.ledger.apply(*lic.split_tx(self.ledger.state, hit.account, self.keys, accounts, rng=self.rng))
        self.hits = lic.holdings(self.ledger.state, self.keys, BENCH_TYPE)
        self.amount = amount

    @property
    def state(self) -> LedgerState:
        return self.ledger.state

    def inputs(self, n: int):
        return [SpendInput(h.amount, h.type, h.ck, receive(self.keys, h.account), h.account) for h in self.hits[:n]]

    def outputs(self, n: int):
        bits = self.params.range_bits
        out = []
        for i in range(n):
            acc, ck = ot_gen(self.keys.ltp, BENCH_TYPE, self.amount, index=i, bits=bits)
            out.append(Output(ck, self.amount, BENCH_TYPE, acc))
        return out

    def build(self, n_in: int, n_out: int, ring: int):
        if n_in != n_out:
            raise ValueError("fixture builds balanced n-in/n-out spends only")
        return spend(self.inputs(n_in), self.outputs(n_out), self.state, ring_size=ring, rng=self.rng)


def bench_generate(params: PublicParams, io_counts=range(1, 9), ring_size=None, reps=MIN_REPS, fixture=None):
    """Pre-Spend (input proofs only) and full Spend build time per n-in/n-out shape."""
    reps = max(reps, MIN_REPS)
    ring = ring_size or params.ring_size
    io_counts = list(io_counts)
    fx = fixture or Fixture(params, accounts=max(io_counts))
    ring = min(ring, len(fx.state.outputs))
    inputs = {n: fx.inputs(n) for n in io_counts}
    pre = {n: [] for n in io_counts}
    full = {n: [] for n in io_counts}
    # interleave shapes so slow drift of the machine hits every shape alike
    for _ in range(reps):
        for n in io_counts:
            pre[n] += _timed(lambda: pre_spend(inputs[n], fx.state, ring_size=ring, rng=fx.rng), 1)
            full[n] += _timed(lambda: fx.build(n, n, ring), 1)
    rows = []
    for n in io_counts:
        rows.append(_summary("pre_spend", pre[n], io=n, ring=ring, bits=params.range_bits))
        rows.append(_summary("spend", full[n], io=n, ring=ring, bits=params.range_bits))
    return rows


_WORKER_STATE = None


def _worker_init(params, records):
    global _WORKER_STATE
    state = LedgerState(params)
    for data in records:
        rec = LedgerRecord.decode(data)
        state = state.extended(rec.tx, rec.sig, rec.timestamp)
    _WORKER_STATE = state


def _worker_verify(batch):
    ok = 0
    for data in batch:
        tx, sig = decode_signed(data)
        try:
            check(_WORKER_STATE, tx, sig)
            ok += 1
        except Rejected:
            pass
    return ok


def _chunks(items, n):
    k, extra = divmod(len(items), n)
    out, pos = [], 0
    for i in range(n):
        size = k + (1 if i < extra else 0)
        out.append(items[pos:pos + size])
        pos += size
    return [c for c in out if c]


def bench_verify(params: PublicParams, workers=(1, 2, 4), txs: int = 32, ring_size=None, reps=MIN_REPS, fixture=None):
    """Verification throughput of 2-in/2-out spends across a process pool."""
    reps = max(reps, MIN_REPS)
    fx = fixture or Fixture(params, accounts=4)
    ring = min(ring_size or params.ring_size, len(fx.state.outputs))
    batch = [encode_signed(*fx.build(2, 2, ring)) for _ in range(txs)]
    records = [r.encode() for r in fx.state.records]
    rows = []
    for w in workers:
        with ProcessPoolExecutor(max_workers=w, initializer=_worker_init, initargs=(params, records)) as pool:
            chunks = _chunks(batch, w)
            assert sum(pool.map(_worker_verify, chunks)) == txs  # warm-up, also a sanity check
            samples = _timed(lambda: sum(pool.map(_worker_verify, chunks)), reps)
        rows.append(_summary("verify", samples, io=2, ring=ring, bits=params.range_bits, workers=w, items=txs,
                             note=f"cpus={os.cpu_count()}"))
    return rows


def bench_scan(params: PublicParams, outputs: int = 2000, reps=MIN_REPS, hit_ratio: float = 0.01, seed: int = 2):
    """Outputs tested per second by a wallet that owns about ``hit_ratio`` of them."""
    reps = max(reps, MIN_REPS)
    rng = random.Random(seed)
    mine = acc_gen(rng.randbytes(32))
    other = acc_gen(rng.randbytes(32))
    accounts = []
    for i in range(outputs):
        owner = mine if rng.random() < hit_ratio else other
        accounts.append(ot_gen(owner.ltp, BENCH_TYPE, i % 100, bits=params.range_bits)[0])
    if not accounts:
        return [BenchRow("scan", 0, 0, params.range_bits, 1, reps, 0, 0.0, 0.0, 0.0, math.nan, "no outputs")]
    samples = _timed(lambda: [view(mine.ltv, a) for a in accounts], reps)
    return [_summary("scan", samples, bits=params.range_bits, items=outputs)]


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(asdict(r))


def read_csv(path) -> list:
    types = {f.name: f.type for f in fields(BenchRow)}
    conv = {"int": int, "float": float, "str": str}
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            rows.append(BenchRow(**{k: conv[types[k]](v) for k, v in raw.items()}))
    return rows
