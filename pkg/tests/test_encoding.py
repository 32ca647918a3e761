import pytest
from hypothesis import given, strategies as st

from ctlm.crypto.encoding import MAX_COUNT, DecodeError, Reader, Writer, decode_all
from ctlm.crypto.group import ORDER, base_mul


@given(st.integers(0, 255), st.integers(0, 2**64 - 1), st.binary(max_size=300),
       st.integers(0, ORDER - 1), st.lists(st.integers(1, 1000), max_size=5))
def test_round_trip(u8, u64, blob, scalar, ks):
    pts = [base_mul(k) for k in ks]
    data = Writer().u8(u8).u64(u64).bytes(blob).scalar(scalar).points(pts).getvalue()

    def read(r):
        return r.u8(), r.u64(), r.bytes(), r.scalar(), r.points()

    assert decode_all(data, read) == (u8, u64, blob, scalar, pts)


@given(st.binary(min_size=1, max_size=64))
def test_trailing_bytes_rejected(extra):
    data = Writer().u64(5).getvalue() + extra
    with pytest.raises(DecodeError):
        decode_all(data, lambda r: r.u64())


@given(st.binary(max_size=40))
def test_truncation_rejected(blob):
    data = Writer().bytes(blob).getvalue()
    with pytest.raises(DecodeError):
        decode_all(data[:-1], lambda r: r.bytes())


def test_bad_group_values_raise_decode_error():
    with pytest.raises(DecodeError):
        Reader(b"\xff" * 32).point()
    with pytest.raises(DecodeError):
        Reader(ORDER.to_bytes(32, "little")).scalar()


def test_count_limit():
    data = Writer().u64(MAX_COUNT + 1).getvalue()
    with pytest.raises(DecodeError):
        Reader(data).count()
