"""Command-line front end: one process per command, one ledger file.

Exit codes: 0 success, 1 unexpected error, 2 bad arguments, 3 rejected by
the ledger or an invalid proof, 4 wallet missing or unreadable, 5 ledger
locked, 6 the operation could not be built (for example, too few tokens).
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import bench, license as lic
from .accounts import AccountError, PublicAddress
from .crypto.encoding import DecodeError
from .crypto.proofs import RangeError
from .ledger import Ledger, LedgerLocked, StorageError, export_view_key, import_view_key, scan_state
from .params import DOMAINS, TypeTag, profile
from .scenario import ScenarioError, builtin_names, load_scenario, run_scenario
from .transactions import Offer, Rejected, TransactionError
from .wallet import ROLES, Wallet, WalletError, WalletMissing, new_eid

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_REJECTED, EXIT_WALLET, EXIT_LOCKED, EXIT_FAILED = range(7)
LEDGER_ENV = "CTLM_LEDGER"
DEFAULT_LEDGER = "ledger.ctlm"


class CliError(Exception):
    def __init__(self, code: int, reason: str, detail: str = ""):
        super().__init__(detail or reason)
        self.code = code
        self.reason = reason
        self.detail = detail


# -- argument helpers --------------------------------------------------------

def parse_type(spec: str) -> TypeTag:
    """``domain:label``, ``domain:file=PATH`` or ``domain:hex=DIGEST``."""
    domain, sep, rest = spec.partition(":")
    if not sep or domain not in DOMAINS:
        raise argparse.ArgumentTypeError(f"type must look like DOMAIN:LABEL with DOMAIN in {', '.join(DOMAINS)}")
    if rest.startswith("file="):
        try:
            return TypeTag.from_bytes_preimage(domain, Path(rest[5:]).read_bytes())
        except OSError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    if rest.startswith("hex="):
        try:
            return TypeTag(domain, bytes.fromhex(rest[4:]))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return TypeTag.from_label(domain, rest)


def parse_hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not hex: {text!r}") from None


def parse_address(text: str) -> PublicAddress:
    """A hex address, or the path of a wallet whose address to use."""
    if os.path.exists(text):
        try:
            return Wallet.load(text).keys.ltp
        except WalletError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    try:
        return PublicAddress.from_hex(text)
    except (ValueError, DecodeError):
        raise argparse.ArgumentTypeError("expected a 192-digit hex address or a wallet file") from None


def parse_int_list(text: str) -> list:
    out = []
    for part in text.split(","):
        lo, _, hi = part.partition("-")
        out.extend(range(int(lo), int(hi) + 1) if hi else [int(lo)])
    return out


PROFILE_ALIASES = {"paper": "production"}


def _params(args):
    name = "production" if args.paper_profile else PROFILE_ALIASES.get(args.profile, args.profile)
    p = profile(name)
    if args.ring:
        p = p.with_(ring_size=args.ring)
    return p


def _open_ledger(args) -> Ledger:
    path = args.ledger or os.environ.get(LEDGER_ENV) or DEFAULT_LEDGER
    return Ledger.open(path, _params(args))


def _wallet(args) -> Wallet:
    if not args.wallet:
        raise CliError(EXIT_USAGE, "usage", "--wallet is required")
    return Wallet.load(args.wallet)


def _record_out(rec) -> dict:
    return {"seq": rec.seq, "timestamp": rec.timestamp, "kind": rec.tx.kind, "tx": rec.tx.digest().hex()}


def _hit_out(h) -> dict:
    out = {"type": str(h.type), "amount": h.amount, "seq": h.seq, "timestamp": h.timestamp,
           "account": h.account.key.hex()}
    if h.spent is not None:
        out["spent"] = h.spent
        out["spent_seq"] = h.spent_seq
    return out


# -- commands ----------------------------------------------------------------

def cmd_keygen(args):
    w = Wallet.create(args.role, args.label)
    try:
        w.save(args.wallet, overwrite=args.force)
    except WalletError as exc:
        raise CliError(EXIT_WALLET, "wallet-exists", str(exc)) from None
    return {"wallet": args.wallet, "role": w.role, "address": w.keys.ltp.hex()}


def cmd_address(args):
    w = _wallet(args)
    return {"role": w.role, "label": w.label, "address": w.keys.ltp.hex()}


def cmd_item_id(args):
    eid = new_eid(args.bytes)
    out = {"eid": eid.hex()}
    if args.wallet:
        w = Wallet.for_part(eid, args.salt or b"", args.label)
        w.save(args.wallet, overwrite=args.force)
        out["wallet"] = args.wallet
    return out


def cmd_issue_token(args):
    w = _wallet(args)
    with _open_ledger(args) as led:
        ty = args.type
        rec = led.apply(*lic.issue_tx(led.params, args.amount, ty, w.keys.ltp))
    return {**_record_out(rec), "type": str(ty)}


def cmd_issue_design(args):
    w = _wallet(args)
    cad = Path(args.cad).read_bytes()
    with _open_ledger(args) as led:
        rec = lic.issue_design(led, cad, w.keys.ltp, args.amount)
        amount = args.amount if args.amount is not None else lic.max_supply(led.params)
    return {**_record_out(rec), "type": str(lic.design_type(cad)), "amount": amount}


def cmd_transfer(args):
    w = _wallet(args)
    with _open_ledger(args) as led:
        hit = lic.pick_account(led.state, w.keys, args.type, args.amount)
        rec = lic.transfer_token(led, args.amount, args.type, hit.account, w.keys, args.to)
    return _record_out(rec)


def cmd_swap_offer(args):
    w = _wallet(args)
    with _open_ledger(args) as led:
        off = lic.swap_offer(led.state, w.keys, args.give, args.give_amount, args.want, args.want_amount)
    Path(args.out).write_text(off.encode().hex() + "\n")
    return {"offer": args.out, "binding": off.binding_digest.hex()}


def cmd_swap_seal(args):
    try:
        offers = [Offer.decode(bytes.fromhex(Path(p).read_text().strip())) for p in args.offers]
    except (ValueError, DecodeError) as exc:
        raise CliError(EXIT_USAGE, "malformed-offer", str(exc)) from None
    with _open_ledger(args) as led:
        rec = lic.swap(led, offers)
    return _record_out(rec)


def cmd_register_item(args):
    w = _wallet(args)
    cad = Path(args.cad).read_bytes()
    with _open_ledger(args) as led:
        hit = lic.pick_account(led.state, w.keys, lic.design_type(cad), 1)
        rec = lic.register_item(led, args.eid, cad, hit.account, w.keys, salt=args.salt or b"")
    return _record_out(rec)


def cmd_issue_cert(args):
    w = _wallet(args)
    with _open_ledger(args) as led:
        rec = lic.issue_certificate_tokens(led, args.amount, args.label, w.keys.ltp)
        out = _record_out(rec)
        if args.split:
            split = lic.CertificationPool(w.keys, args.label).split(led, args.split)
            out["split_seq"] = split.seq
    return {**out, "type": str(lic.property_type(args.label))}


def cmd_attest(args):
    w = _wallet(args)
    label = lic.negation_label(args.label) if args.negate else args.label
    with _open_ledger(args) as led:
        hit = lic.pick_account(led.state, w.keys, lic.property_type(label), args.amount)
        rec = lic.attest_post_processing(led, args.eid, label, hit.account, w.keys, args.amount,
                                         salt=args.salt or b"")
    return _record_out(rec)


def cmd_verify_item(args):
    with _open_ledger(args) as led:
        history = lic.item_verification(led.state, args.eid, salt=args.salt or b"")
    entries = [
        {"type": str(e.type), "amount": e.amount, "seq": e.received_seq, "timestamp": e.received_at,
         "transient": e.transient, "spent_seq": e.spent_seq, "spent_timestamp": e.spent_at}
        for e in history
    ]
    out = {"eid": args.eid.hex(), "entries": entries}
    if args.label:
        status = lic.effective_properties(history, args.label)
        out["properties"] = {
            k: {"positive": v.positive, "negated": v.negated, "valid": v.valid, "anomalous": v.anomalous}
            for k, v in status.items()
        }
    if args.cad:
        cad = Path(args.cad).read_bytes()
        out["file_integrity"] = any(lic.verify_file_integrity(cad, e.type) for e in history)
    return out


def cmd_apply_transient(args):
    w = _wallet(args)
    with _open_ledger(args) as led:
        hit = lic.pick_account(led.state, w.keys, lic.attribute_type(args.label), args.amount)
        rec = lic.apply_transient(led, args.eid, args.label, args.amount, hit.account, w.keys)
    return _record_out(rec)


def cmd_recover_transient(args):
    w = _wallet(args)
    keys_i = lic.transient_keys(args.eid)
    with _open_ledger(args) as led:
        if args.label:
            hit = lic.pick_account(led.state, keys_i, lic.attribute_type(args.label), args.amount)
        else:
            held = [h for h in lic.holdings(led.state, keys_i) if h.amount >= args.amount]
            if not held:
                raise lic.InsufficientTokens(f"transient account holds no output of at least {args.amount}")
            hit = held[0]
        rec = lic.recover_transient(led, args.eid, args.amount, hit.account, w.keys.ltp)
    return _record_out(rec)


def cmd_proxy_prove(args):
    keys = lic.part_keys(args.eid, args.salt or b"")
    with _open_ledger(args) as led:
        hits = [h for h in scan_state(led.state, keys) if h.type == args.type]
        if not hits:
            raise lic.InsufficientTokens(f"part holds no {args.type} tokens")
        target = hits[0].account
        decoys = led.state.sample_decoys(max(args.decoys, 0), exclude=target.key, rng=random.SystemRandom())
    proof = lic.proxy_prove(target, args.verifier, args.eid, salt=args.salt or b"", decoys=decoys)
    Path(args.out).write_text(proof.encode().hex() + "\n")
    return {"proof": args.out, "accounts": len(proof.accounts), "type": str(proof.type), "amount": proof.amount}


def cmd_proxy_verify(args):
    if args.verifier is None:
        args.verifier = _wallet(args).keys.ltp
    try:
        proof = lic.ProxyProof.decode(bytes.fromhex(Path(args.proof).read_text().strip()))
    except (ValueError, DecodeError) as exc:
        raise CliError(EXIT_REJECTED, "malformed", str(exc)) from None
    with _open_ledger(args) as led:
        ok = lic.proxy_verify(proof, args.verifier, eid=args.eid, salt=args.salt or b"", state=led.state)
    if not ok:
        raise CliError(EXIT_REJECTED, "invalid-proof", "proof does not verify for this verifier")
    return {"valid": True, "type": str(proof.type), "amount": proof.amount, "accounts": len(proof.accounts)}


def cmd_ledger_stats(args):
    with _open_ledger(args) as led:
        return {**led.stats(), "digest": led.digest().hex(), "range_bits": led.params.range_bits}


def cmd_ledger_check(args):
    path = args.ledger or os.environ.get(LEDGER_ENV) or DEFAULT_LEDGER
    if not os.path.exists(path):
        raise CliError(EXIT_ERROR, "no-ledger", f"{path} does not exist")
    with Ledger.open(path, _params(args), verify_replay=True, genesis=False) as led:
        return {"verified": True, **led.stats(), "digest": led.digest().hex()}


def cmd_scan(args):
    if args.view_key:
        keys = import_view_key(json.loads(Path(args.view_key).read_text()))
    else:
        keys = _wallet(args).keys
    with _open_ledger(args) as led:
        hits = scan_state(led.state, keys)
    if not args.all:
        hits = [h for h in hits if h.spent is not True]
    totals: dict = {}
    for h in hits:
        if h.spent is not True:
            totals[str(h.type)] = totals.get(str(h.type), 0) + h.amount
    return {"outputs": [_hit_out(h) for h in hits], "balance": totals}


def cmd_export_view_key(args):
    rec = export_view_key(_wallet(args).keys)
    fd = os.open(args.out, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as fh:
        json.dump(rec, fh)
    return {"view_key": args.out}


def cmd_scenario_list(args):
    return {"scenarios": builtin_names()}


def cmd_scenario_run(args):
    doc = load_scenario(args.name)
    if args.ledger:
        led = Ledger.open(args.ledger, _params(args))
    else:
        led = Ledger(_params(args))
    with led:
        result = run_scenario(doc, led)
    if not result.ok:
        raise CliError(EXIT_FAILED, "scenario-check-failed",
                       "; ".join(c["step"] for c in result.checks if not c["ok"]))
    return {"scenario": result.name, "ok": result.ok, "log": result.log, "checks": result.checks,
            "parts": {k: v.hex() for k, v in result.parts.items()}}


def cmd_bench(args):
    params = _params(args)
    rows = []
    which = args.which
    if which in ("generate", "all"):
        rows += bench.bench_generate(params, parse_int_list(args.io), args.ring, args.reps)
    if which in ("verify", "all"):
        rows += bench.bench_verify(params, parse_int_list(args.workers), args.txs, args.ring, args.reps)
    if which in ("scan", "all"):
        rows += bench.bench_scan(params, args.outputs, args.reps)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, f"bench_{which}.csv")
    bench.write_csv(rows, csv_path)
    figures = []
    if not args.no_plot:
        from .plotting import render_report
        figures = render_report(rows, args.out)
    return {"csv": csv_path, "figures": figures,
            "rows": [{k: getattr(r, k) for k in bench.CSV_COLUMNS} for r in rows]}


def cmd_report(args):
    from .plotting import render_report
    rows = bench.read_csv(args.csv)
    return {"figures": render_report(rows, args.out or os.path.dirname(os.path.abspath(args.csv)))}


# -- parser --------------------------------------------------------------------

def _common(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--ledger", default=d(None), help=f"ledger file (default ${LEDGER_ENV} or {DEFAULT_LEDGER})")
    parser.add_argument("--wallet", default=d(None), help="wallet file")
    parser.add_argument("--profile", choices=("test", "production", "paper"), default=d("test"),
                        help="test: 16-bit amounts, ring 8; production (alias paper): 64-bit amounts, ring 27")
    parser.add_argument("--paper-profile", action="store_true", default=d(False), help="same as --profile production")
    parser.add_argument("--ring", type=int, default=d(None), help="ring size override")
    parser.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctlm", description="Confidential token ledger for design licenses.")
    _common(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("keygen", cmd_keygen, "create a wallet")
    p.add_argument("--role", choices=ROLES, required=True)
    p.add_argument("--label", default="")
    p.add_argument("--force", action="store_true", help="overwrite an existing wallet")

    add("address", cmd_address, "print a wallet's public address")

    p = add("item-id", cmd_item_id, "draw a random part identifier")
    p.add_argument("--bytes", type=int, default=16)
    p.add_argument("--salt", type=parse_hex)
    p.add_argument("--label", default="")
    p.add_argument("--force", action="store_true")

    p = add("issue-token", cmd_issue_token, "register a new token type")
    p.add_argument("--type", type=parse_type, required=True)
    p.add_argument("--amount", type=int, required=True)

    p = add("issue-design", cmd_issue_design, "register a design file")
    p.add_argument("--cad", required=True)
    p.add_argument("--amount", type=int)

    p = add("transfer", cmd_transfer, "send tokens")
    p.add_argument("--type", type=parse_type, required=True)
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--to", type=parse_address, required=True)

    p = add("swap", None, "atomic two-party exchange")
    ssub = p.add_subparsers(dest="swap_command", required=True)
    q = ssub.add_parser("offer", parents=[common], help="build one side")
    q.set_defaults(fn=cmd_swap_offer)
    q.add_argument("--give", type=parse_type, required=True)
    q.add_argument("--give-amount", type=int, required=True)
    q.add_argument("--want", type=parse_type, required=True)
    q.add_argument("--want-amount", type=int, required=True)
    q.add_argument("--out", required=True)
    q = ssub.add_parser("seal", parents=[common], help="merge offers and submit")
    q.set_defaults(fn=cmd_swap_seal)
    q.add_argument("offers", nargs="+")

    p = add("register-item", cmd_register_item, "bind one license token to a part")
    p.add_argument("--eid", type=parse_hex, required=True)
    p.add_argument("--cad", required=True)
    p.add_argument("--salt", type=parse_hex)

    p = add("issue-cert", cmd_issue_cert, "register a certificate label")
    p.add_argument("--label", required=True)
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--split", type=int, default=0, help="pre-split into this many pool outputs")

    p = add("attest", cmd_attest, "send certificate tokens to a part")
    p.add_argument("--eid", type=parse_hex, required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--amount", type=int, default=1)
    p.add_argument("--negate", action="store_true", help="send the revocation token instead")
    p.add_argument("--salt", type=parse_hex)

    p = add("verify-item", cmd_verify_item, "list a part's token history")
    p.add_argument("--eid", type=parse_hex, required=True)
    p.add_argument("--salt", type=parse_hex)
    p.add_argument("--label", action="append", help="property label to evaluate (repeatable)")
    p.add_argument("--cad", help="design file to check against the part's license")

    p = add("apply-transient", cmd_apply_transient, "send attribute tokens to a part's transient account")
    p.add_argument("--eid", type=parse_hex, required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--amount", type=int, required=True)

    p = add("recover-transient", cmd_recover_transient, "claim tokens from a part's transient account")
    p.add_argument("--eid", type=parse_hex, required=True)
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--label")

    p = add("proxy-prove", cmd_proxy_prove, "designated-verifier proof of a part's tokens")
    p.add_argument("--eid", type=parse_hex, required=True)
    p.add_argument("--salt", type=parse_hex)
    p.add_argument("--type", type=parse_type, required=True)
    p.add_argument("--verifier", type=parse_address, required=True)
    p.add_argument("--decoys", type=int, default=7)
    p.add_argument("--out", required=True)

    p = add("proxy-verify", cmd_proxy_verify, "check a designated-verifier proof")
    p.add_argument("--proof", required=True)
    p.add_argument("--verifier", type=parse_address)
    p.add_argument("--eid", type=parse_hex)
    p.add_argument("--salt", type=parse_hex)

    p = add("ledger", None, "ledger maintenance")
    lsub = p.add_subparsers(dest="ledger_command", required=True)
    lsub.add_parser("stats", parents=[common]).set_defaults(fn=cmd_ledger_stats)
    lsub.add_parser("check", parents=[common], help="replay and re-verify every record").set_defaults(
        fn=cmd_ledger_check)

    p = add("scan", cmd_scan, "list a wallet's outputs")
    p.add_argument("--all", action="store_true", help="include spent outputs")
    p.add_argument("--view-key", help="escrowed view key file instead of a wallet")

    p = add("export-view-key", cmd_export_view_key, "write a scan-only key for escrow")
    p.add_argument("--out", required=True)

    p = add("scenario", None, "scripted demo runs")
    ssub = p.add_subparsers(dest="scenario_command", required=True)
    ssub.add_parser("list", parents=[common]).set_defaults(fn=cmd_scenario_list)
    q = ssub.add_parser("run", parents=[common])
    q.set_defaults(fn=cmd_scenario_run)
    q.add_argument("name", nargs="?", default="lifecycle")

    p = add("bench", cmd_bench, "run benchmarks; writes CSV and PNG figures")
    p.add_argument("which", choices=("generate", "verify", "scan", "all"))
    p.add_argument("--out", default="bench-out")
    p.add_argument("--io", default="1-8", help="input/output counts, e.g. 1-8 or 1,2,4")
    p.add_argument("--reps", type=int, default=30,
                   help=f"timed repetitions per row (at least {bench.MIN_REPS}; medians of 10 drift on busy hosts)")
    p.add_argument("--workers", default="1,2,4")
    p.add_argument("--txs", type=int, default=32)
    p.add_argument("--outputs", type=int, default=2000)
    p.add_argument("--no-plot", action="store_true")

    p = add("report", cmd_report, "render figures from a bench CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out")
    return parser


def _emit(args, payload) -> None:
    if args.json:
        print(json.dumps({"ok": True, **payload}, sort_keys=True))
        return
    for key, value in payload.items():
        if isinstance(value, (list, dict)):
            print(f"{key}:")
            items = value.items() if isinstance(value, dict) else enumerate(value)
            for k, v in items:
                print(f"  {k}: {v}" if isinstance(value, dict) else f"  - {v}")
        else:
            print(f"{key}: {value}")


def _fail(args, code: int, reason: str, detail: str) -> int:
    if getattr(args, "json", False):
        print(json.dumps({"ok": False, "reason": reason, "detail": detail}, sort_keys=True))
    else:
        print(f"error: {reason}: {detail}" if detail else f"error: {reason}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.fn(args)
    except CliError as exc:
        return _fail(args, exc.code, exc.reason, exc.detail)
    except Rejected as exc:
        return _fail(args, EXIT_REJECTED, exc.reason, exc.detail)
    except WalletMissing as exc:
        return _fail(args, EXIT_WALLET, "wallet-missing", str(exc))
    except WalletError as exc:
        return _fail(args, EXIT_WALLET, "wallet-invalid", str(exc))
    except LedgerLocked as exc:
        return _fail(args, EXIT_LOCKED, "ledger-locked", str(exc))
    except StorageError as exc:
        return _fail(args, EXIT_ERROR, "storage", str(exc))
    except (lic.InsufficientTokens, TransactionError, RangeError, AccountError) as exc:
        return _fail(args, EXIT_FAILED, type(exc).__name__, str(exc))
    except (ScenarioError, OSError) as exc:
        return _fail(args, EXIT_ERROR, type(exc).__name__, str(exc))
    _emit(args, payload)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
