"""Scripted multi-actor runs over one ledger.

A scenario is a JSON document with an ``actors`` list and a ``steps`` list.
The runner keeps the plaintext of every token it sends to a part so the
final history can be checked against an independent record, not against the
ledger scan it is testing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import license as lic
from .accounts import LongTermKeys, acc_gen
from .ledger import Ledger
from .params import TypeTag
from .wallet import new_eid


class ScenarioError(RuntimeError):
    pass


@dataclass
class Planted:
    part: str
    type: TypeTag
    amount: int
    seq: int
    timestamp: int
    transient: bool = False
    spent_seq: Optional[int] = None


@dataclass
class ScenarioResult:
    name: str
    ledger: Ledger
    actors: dict
    parts: dict
    designs: dict
    planted: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    log: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks)


def builtin_names() -> list:
    pkg = resources.files("ctlm") / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_scenario(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return json.loads(path.read_text())
    res = resources.files("ctlm") / "scenarios" / f"{name_or_path}.json"
    if not res.is_file():
        raise ScenarioError(f"no scenario {name_or_path!r}; built in: {', '.join(builtin_names())}")
    return json.loads(res.read_text())


def _type(spec: dict, designs: dict) -> TypeTag:
    if "design" in spec:
        return lic.design_type(designs[spec["design"]])
    domain, label = spec["type"].split(":", 1)
    return TypeTag.from_label(domain, label)


class _Runner:
    def __init__(self, doc: dict, ledger: Ledger, ring_size: Optional[int]):
        self.doc = doc
        self.ledger = ledger
        self.ring = ring_size
        self.actors: dict[str, LongTermKeys] = {}
        self.parts: dict[str, bytes] = {}
        self.designs: dict[str, bytes] = {}
        self.planted: list[Planted] = []
        self.checks: list[dict] = []
        self.log: list[str] = []

    def keys(self, name: str) -> LongTermKeys:
        try:
            return self.actors[name]
        except KeyError:
            raise ScenarioError(f"unknown actor {name!r}") from None

    def eid(self, name: str) -> bytes:
        if name not in self.parts:
            self.parts[name] = new_eid()
        return self.parts[name]

    def pick(self, actor: str, ty: TypeTag, amount: int):
        return lic.pick_account(self.ledger.state, self.keys(actor), ty, amount)

    def plant(self, part: str, ty: TypeTag, amount: int, rec, transient=False):
        self.planted.append(Planted(part, ty, amount, rec.seq, rec.timestamp, transient))

    def run(self) -> None:
        for a in self.doc.get("actors", []):
            self.actors[a["name"]] = acc_gen()
        for i, step in enumerate(self.doc["steps"]):
            op = step["op"]
            handler = getattr(self, "op_" + op, None)
            if handler is None:
                raise ScenarioError(f"step {i}: unknown op {op!r}")
            handler(step)

    def op_design(self, s):
        cad = s["cad"].encode("utf-8")
        self.designs[s["name"]] = cad
        rec = lic.issue_design(self.ledger, cad, self.keys(s["actor"]).ltp, s.get("amount"))
        self.log.append(f"#{rec.seq} {s['actor']} issued design {s['name']}")

    def op_issue(self, s):
        domain, label = s["type"].split(":", 1)
        rec = lic.issue_token(self.ledger, s["amount"], domain, label.encode("utf-8"), self.keys(s["actor"]).ltp)
        self.log.append(f"#{rec.seq} {s['actor']} issued {s['amount']} {s['type']}")

    def op_issue_cert(self, s):
        keys = self.keys(s["actor"])
        rec = lic.issue_certificate_tokens(self.ledger, s["amount"], s["label"], keys.ltp)
        self.log.append(f"#{rec.seq} {s['actor']} issued certificate {s['label']!r}")
        if s.get("split"):
            rec = lic.CertificationPool(keys, s["label"]).split(self.ledger, s["split"], ring_size=self.ring)
            self.log.append(f"#{rec.seq} {s['actor']} split into {s['split']} pool outputs")

    def op_transfer(self, s):
        ty = _type(s, self.designs)
        hit = self.pick(s["from"], ty, s["amount"])
        rec = lic.transfer_token(self.ledger, s["amount"], ty, hit.account, self.keys(s["from"]),
                                 self.keys(s["to"]).ltp, ring_size=self.ring)
        self.log.append(f"#{rec.seq} {s['from']} -> {s['to']}: {s['amount']} {ty.domain}")

    def op_swap(self, s):
        a, b = s["a"], s["b"]
        ta, tb = _type(s["a_gives"], self.designs), _type(s["b_gives"], self.designs)
        na, nb = s["a_gives"]["amount"], s["b_gives"]["amount"]
        state = self.ledger.state
        oa = lic.swap_offer(state, self.keys(a), ta, na, tb, nb, ring_size=self.ring)
        ob = lic.swap_offer(state, self.keys(b), tb, nb, ta, na, ring_size=self.ring)
        rec = lic.swap(self.ledger, [oa, ob])
        self.log.append(f"#{rec.seq} swap {a} <-> {b}")

    def op_register(self, s):
        ty = lic.design_type(self.designs[s["design"]])
        hit = self.pick(s["actor"], ty, 1)
        rec = lic.register_item(self.ledger, self.eid(s["part"]), self.designs[s["design"]], hit.account,
                                self.keys(s["actor"]), ring_size=self.ring)
        self.plant(s["part"], ty, 1, rec)
        self.log.append(f"#{rec.seq} {s['actor']} registered part {s['part']}")

    def op_attest(self, s):
        label = s["label"]
        if s.get("negate"):
            label = lic.negation_label(label)
        amount = s.get("amount", 1)
        ty = lic.property_type(label)
        hit = self.pick(s["actor"], ty, amount)
        rec = lic.attest_post_processing(self.ledger, self.eid(s["part"]), label, hit.account,
                                         self.keys(s["actor"]), amount, ring_size=self.ring)
        self.plant(s["part"], ty, amount, rec)
        self.log.append(f"#{rec.seq} {s['actor']} attested {label!r}={amount} on {s['part']}")

    def op_apply_transient(self, s):
        ty = lic.attribute_type(s["label"])
        hit = self.pick(s["actor"], ty, s["amount"])
        rec = lic.apply_transient(self.ledger, self.eid(s["part"]), s["label"], s["amount"], hit.account,
                                  self.keys(s["actor"]), ring_size=self.ring)
        self.plant(s["part"], ty, s["amount"], rec, transient=True)
        self.log.append(f"#{rec.seq} {s['actor']} applied transient {s['label']!r} to {s['part']}")

    def op_recover_transient(self, s):
        eid = self.eid(s["part"])
        ty = lic.attribute_type(s["label"])
        hit = lic.pick_account(self.ledger.state, lic.transient_keys(eid), ty, s["amount"])
        rec = lic.recover_transient(self.ledger, eid, s["amount"], hit.account, self.keys(s["actor"]).ltp,
                                    ring_size=self.ring)
        for p in self.planted:
            if p.part == s["part"] and p.transient and p.spent_seq is None and p.type == ty:
                p.spent_seq = rec.seq
                break
        if hit.amount > s["amount"]:
            # change returns to the transient account itself
            self.plant(s["part"], ty, hit.amount - s["amount"], rec, transient=True)
        self.log.append(f"#{rec.seq} {s['actor']} recovered {s['amount']} from {s['part']}")

    def op_verify(self, s):
        part = s["part"]
        history = lic.item_verification(self.ledger.state, self.eid(part))
        got = sorted((e.type.encode(), e.amount, e.received_seq, e.received_at, e.transient, e.spent_seq)
                     for e in history)
        want = sorted((p.type.encode(), p.amount, p.seq, p.timestamp, p.transient, p.spent_seq)
                      for p in self.planted if p.part == part)
        self.checks.append({"step": f"history {part}", "ok": got == want, "entries": len(got)})
        for label, expected in s.get("expect_valid", {}).items():
            status = lic.effective_properties(history, [label])[label]
            self.checks.append({"step": f"{part} {label!r} valid={expected}", "ok": status.valid == expected})
        if "cad" in s:
            design = self.designs[s["cad"]]
            held = [e for e in history if e.type.domain == "design"]
            ok = len(held) == 1 and lic.verify_file_integrity(design, held[0].type)
            self.checks.append({"step": f"{part} file integrity", "ok": ok})
        self.log.append(f"verified {part}: {len(history)} entries")


def run_scenario(doc: dict, ledger: Optional[Ledger] = None, *, ring_size: Optional[int] = None) -> ScenarioResult:
    ledger = ledger or Ledger()
    runner = _Runner(doc, ledger, ring_size)
    runner.run()
    return ScenarioResult(doc.get("name", "scenario"), ledger, runner.actors, runner.parts, runner.designs,
                          runner.planted, runner.checks, runner.log)
