import itertools

import numpy as np
import pytest

from gjcodec.errors import FecDecodeError, ParameterError
from gjcodec.fec import Packet, fec_decode, fec_encode, gf_inv, gf_mul


def _slow_gf_mul(a, b):
    """Reference shift-and-add multiply over GF(256), poly 0x11D."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= 0x11D
    return acc


@pytest.mark.parametrize("seed", range(3))
def test_gf_mul_matches_reference(seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        a, b = int(rng.integers(0, 256)), int(rng.integers(0, 256))
        assert gf_mul(a, b) == _slow_gf_mul(a, b)


def test_gf_inverse():
    for a in range(1, 256):
        assert gf_mul(a, gf_inv(a)) == 1
    with pytest.raises(ZeroDivisionError):
        gf_inv(0)


def _payloads(rng, k, length=11):
    return [bytes(rng.integers(0, 256, length, dtype=np.uint8).tobytes())
            for _ in range(k)]


def test_r_zero_is_passthrough(rng):
    data = _payloads(rng, 3)
    packets = fec_encode(data, 0)
    assert [p.payload for p in packets] == data


def test_parity_packets_share_payload_length(rng):
    packets = fec_encode(_payloads(rng, 4), 2)
    assert len({len(p.payload) for p in packets}) == 1
    assert len(packets) == 6


def test_all_double_losses_recover(rng):
    """k=4, r=2: every C(6,2) erasure pattern is correctable."""
    data = _payloads(rng, 4)
    packets = fec_encode(data, 2)
    for gone in itertools.combinations(range(6), 2):
        received = [p for p in packets if p.index not in gone]
        assert fec_decode(received, 4, 6) == data


def test_systematic_identity_path(rng):
    data = _payloads(rng, 5)
    packets = fec_encode(data, 3)
    assert fec_decode(packets[:5], 5, 8) == data


def test_loss_beyond_parity_fails(rng):
    packets = fec_encode(_payloads(rng, 4), 2)
    with pytest.raises(FecDecodeError):
        fec_decode(packets[3:], 4, 6)  # 3 losses, r=2


def test_k6_r3_boundary(rng):
    data = _payloads(rng, 6)
    packets = fec_encode(data, 3)
    for gone in itertools.combinations(range(9), 3):
        kept = [p for p in packets if p.index not in gone]
        assert fec_decode(kept, 6, 9) == data
    for gone in itertools.combinations(range(9), 4):
        kept = [p for p in packets if p.index not in gone]
        with pytest.raises(FecDecodeError):
            fec_decode(kept, 6, 9)


def test_single_byte_payloads(rng):
    data = [bytes([b]) for b in (7, 200, 0)]
    packets = fec_encode(data, 2)
    kept = [p for p in packets if p.index not in (0, 2)]
    assert fec_decode(kept, 3, 5) == data


def test_unequal_payloads_rejected():
    with pytest.raises(ParameterError):
        fec_encode([b"ab", b"c"], 1)


def test_duplicate_packet_indices_rejected(rng):
    packets = fec_encode(_payloads(rng, 3), 1)
    bad = [packets[0], packets[0], packets[1]]
    with pytest.raises((FecDecodeError, ParameterError)):
        fec_decode(bad, 3, 4)
