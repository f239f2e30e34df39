"""Systematic Reed-Solomon style erasure coding over GF(256).

A block of k equal-length data packets is extended with r parity packets;
any k of the k+r packets recover the data.  The generator matrix is built
from a Vandermonde matrix V (evaluation points 0..k+r-1) normalised so the
top k rows are the identity: M = V @ inv(V[:k]).  Every k-row submatrix of
M is then invertible, which is exactly the any-k recovery property.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FecDecodeError, ParameterError

_POLY = 0x11D  # x^8 + x^4 + x^3 + x^2 + 1

_GF_EXP = np.zeros(510, dtype=np.uint8)
_GF_LOG = np.zeros(256, dtype=np.int32)
_x = 1
for _i in range(255):
    _GF_EXP[_i] = _x
    _GF_LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= _POLY
_GF_EXP[255:510] = _GF_EXP[:255]
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(_GF_EXP[int(_GF_LOG[a]) + int(_GF_LOG[b])])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("gf_inv(0)")
    return int(_GF_EXP[255 - int(_GF_LOG[a])])


def _gf_mul_bytes(coef: int, vec: np.ndarray) -> np.ndarray:
    """coef * vec elementwise over GF(256); vec is uint8."""
    if coef == 0:
        return np.zeros_like(vec)
    out = _GF_EXP[_GF_LOG[vec] + int(_GF_LOG[coef])]
    out[vec == 0] = 0
    return out


def _gf_pow(base: int, exp: int) -> int:
    if exp == 0:
        return 1
    if base == 0:
        return 0
    return int(_GF_EXP[(int(_GF_LOG[base]) * exp) % 255])


def _gf_mul_mat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over GF(256) via log/antilog tables."""
    la = _GF_LOG[a]
    lb = _GF_LOG[b]
    prod = _GF_EXP[la[:, :, None] + lb[None, :, :]]
    prod[(a[:, :, None] == 0) | (b[None, :, :] == 0)] = 0
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
    for t in range(a.shape[1]):
        out ^= prod[:, t, :]
    return out


def _gf_mat_inv(m: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inversion over GF(256); m is a uint8 square matrix."""
    k = len(m)
    a = np.concatenate([m.astype(np.uint8), np.eye(k, dtype=np.uint8)], axis=1)
    for col in range(k):
        nz = np.nonzero(a[col:, col])[0]
        if nz.size == 0:
            raise FecDecodeError("singular recovery matrix")
        pivot = col + int(nz[0])
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
        a[col] = _gf_mul_bytes(gf_inv(int(a[col, col])), a[col])
        factors = a[:, col].copy()
        factors[col] = 0
        rows = np.nonzero(factors)[0]
        if rows.size:
            upd = _GF_EXP[_GF_LOG[factors[rows], None] + _GF_LOG[a[col]][None, :]]
            upd[:, a[col] == 0] = 0
            a[rows] ^= upd
    return a[:, k:]


@lru_cache(maxsize=32)
def _generator_rows(k: int, total: int) -> np.ndarray:
    """Rows k..total-1 of the systematic generator matrix, (total-k, k) uint8."""
    vand = np.array([[_gf_pow(i, j) for j in range(k)] for i in range(total)],
                    dtype=np.uint8)
    top_inv = _gf_mat_inv(vand[:k])
    return _gf_mul_mat(vand[k:], top_inv)


def _coding_row(index: int, k: int, total: int,
                parity_rows: np.ndarray) -> np.ndarray:
    if index < k:
        row = np.zeros(k, dtype=np.uint8)
        row[index] = 1
        return row
    return parity_rows[index - k]


@dataclass
class Packet:
    """One transmitted unit: block-local index, payload, parity flag."""

    index: int
    payload: bytes
    is_parity: bool = False


def _validate_block(k: int, r: int) -> None:
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if r < 0:
        raise ParameterError(f"r must be >= 0, got {r}")
    if k + r > 255:
        raise ParameterError(f"k + r must be <= 255, got {k + r}")


def fec_encode(data: list[bytes], r: int) -> list[Packet]:
    """Extend k equal-length payloads with r parity packets."""
    k = len(data)
    _validate_block(k, r)
    if k and any(len(p) != len(data[0]) for p in data):
        raise ParameterError("all data payloads must have equal length")
    packets = [Packet(i, bytes(p), False) for i, p in enumerate(data)]
    if r == 0:
        return packets
    parity_rows = _generator_rows(k, k + r)
    arrays = [np.frombuffer(p, dtype=np.uint8) for p in data]
    for i in range(r):
        acc = np.zeros(len(data[0]), dtype=np.uint8)
        for j, coef in enumerate(parity_rows[i]):
            if coef:
                acc ^= _gf_mul_bytes(coef, arrays[j])
        packets.append(Packet(k + i, acc.tobytes(), True))
    return packets


def fec_decode(received: list[Packet], k: int, total: int) -> list[bytes]:
    """Recover the k data payloads from any k received packets.

    Raises FecDecodeError when fewer than k packets survive; callers treat
    that as a decode failure signal, not a crash.
    """
    _validate_block(k, total - k)
    seen: dict[int, bytes] = {}
    for p in received:
        if not 0 <= p.index < total:
            raise ParameterError(f"packet index {p.index} outside block 0..{total - 1}")
        if p.index in seen:
            raise ParameterError(f"duplicate packet index {p.index}")
        seen[p.index] = p.payload
    if len(seen) < k:
        raise FecDecodeError(
            f"unrecoverable block: {len(seen)} of {total} packets received, need {k}")
    lengths = {len(v) for v in seen.values()}
    if len(lengths) > 1:
        raise ParameterError("received payloads must have equal length")

    if all(i in seen for i in range(k)):
        return [seen[i] for i in range(k)]

    use = sorted(seen)[:k]
    parity_rows = _generator_rows(k, total)
    m = np.stack([_coding_row(i, k, total, parity_rows) for i in use])
    m_inv = _gf_mat_inv(m)
    plen = lengths.pop()
    rec = [np.frombuffer(seen[i], dtype=np.uint8) for i in use]
    out = []
    for row in m_inv:
        acc = np.zeros(plen, dtype=np.uint8)
        for coef, vec in zip(row, rec):
            if coef:
                acc ^= _gf_mul_bytes(coef, vec)
        out.append(acc.tobytes())
    return out
