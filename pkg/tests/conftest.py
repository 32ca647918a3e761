import pytest

from ctlm.accounts import acc_gen
from ctlm.ledger import Ledger
from ctlm.license import issue_tx, pick_account, split_tx
from ctlm.params import TypeTag, profile

ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=str):
            terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def params():
    return profile("test")


@pytest.fixture
def ledger(params):
    return Ledger(params)


def fund(ledger, keys, label, amount, *, domain="currency", split=1):
    """Register ``domain:label`` with ``amount`` for ``keys``; optionally split it."""
    ty = TypeTag.from_label(domain, label)
    ledger.apply(*issue_tx(ledger.params, amount, ty, keys.ltp))
    if split > 1:
        hit = pick_account(ledger.state, keys, ty, amount)
        ledger.apply(*split_tx(ledger.state, hit.account, keys, split))
    return ty


@pytest.fixture
def alice():
    return acc_gen(b"alice".ljust(32, b"\0"))


@pytest.fixture
def bob():
    return acc_gen(b"bob".ljust(32, b"\0"))
