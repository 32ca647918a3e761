from .encoding import DecodeError, Reader, Writer
from .group import (
    G,
    IDENTITY,
    ORDER,
    GroupError,
    Point,
    base_mul,
    hash_bytes,
    hash_to_group,
    hash_to_scalar,
    kdf,
    random_scalar,
)
from .memo import MemoError, memo_open, memo_seal
from .proofs import (
    DlogProof,
    OrProof,
    RangeError,
    RangeProof,
    Relation,
    commit,
    or_prove,
    or_verify,
    range_prove,
    range_verify,
    schnorr_prove,
    schnorr_verify,
    verify_open,
)
