"""Append transactions to a ledger forever, reporting each committed state."""

import sys

from ctlm.accounts import acc_gen
from ctlm.ledger import Ledger
from ctlm.license import issue_tx, pick_account, transfer_tx
from ctlm.params import TypeTag, profile


def main(path):
    keys = acc_gen(b"writer".ljust(32, b"\0"))
    with Ledger.open(path, profile("test")) as led:
        print(led.state.height, led.digest().hex(), flush=True)
        i = 0
        while True:
            ty = TypeTag.from_label("currency", f"T{led.state.height}-{i}")
            led.apply(*issue_tx(led.params, 50, ty, keys.ltp))
            print(led.state.height, led.digest().hex(), flush=True)
            hit = pick_account(led.state, keys, ty, 7)
            led.apply(*transfer_tx(led.state, 7, ty, hit.account, keys, keys.ltp))
            print(led.state.height, led.digest().hex(), flush=True)
            i += 1


if __name__ == "__main__":
    main(sys.argv[1])
