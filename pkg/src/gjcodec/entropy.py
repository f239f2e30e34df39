"""Adaptive arithmetic (range) coding over fixed-point context-model PMFs.

The coder keeps a 64-bit window (`low`, `range`) onto the code interval and
renormalizes in 16-bit steps whenever `range` falls below 2**32, emitting the
settled top 16 bits.  Because `range` is always at least 2**32 when a symbol
is coded and PMF totals are 2**16, the per-symbol rounding loss of the
integer subdivision is below log2(1 + 2**-16) bits, and termination costs at
most 16 extra bits beyond what is already pending in the window.  Hence for
any stream of up to about a million symbols:

    payload_bits  <=  sum(-log2 p(sym | ctx))  +  32

with p taken from the same quantized PMFs the decoder uses.  Carries are
propagated directly into the output buffer, so no code space is ever
discarded.  The subdivision remainder goes to the top symbol of the
alphabet; encoder and decoder share this rule exactly.

Stream layout (little-endian header): magic "GJS1", u8 version=1,
u16 alphabet, u32 symbol count, u64 model state hash, then the payload as
16-bit big-endian words.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .context import CausalContextModel
from .errors import CorruptStreamError, FormatError, ModelMismatchError, ParameterError

STREAM_MAGIC = b"GJS1"
STREAM_VERSION = 1
_HEADER_FMT = "<BHIQ"
_HEADER_SIZE = 4 + struct.calcsize(_HEADER_FMT)

_TWO64 = 1 << 64
_TWO48 = 1 << 48
_TWO32 = 1 << 32
_MASK64 = _TWO64 - 1


@dataclass
class Bitstream:
    """A self-describing entropy-coded payload."""

    alphabet: int
    n_symbols: int
    model_hash: int
    payload: bytes

    @property
    def total_bits(self) -> int:
        """Header plus payload size in bits."""
        return 8 * (len(self.payload) + _HEADER_SIZE)

    @property
    def payload_bits(self) -> int:
        return 8 * len(self.payload)

    def to_bytes(self) -> bytes:
        head = STREAM_MAGIC + struct.pack(
            _HEADER_FMT, STREAM_VERSION, self.alphabet, self.n_symbols,
            self.model_hash)
        return head + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        if data[:4] != STREAM_MAGIC:
            raise FormatError(f"stream: bad magic {data[:4]!r}")
        if len(data) < _HEADER_SIZE:
            raise CorruptStreamError("stream: truncated header")
        version, alphabet, n, model_hash = struct.unpack_from(_HEADER_FMT, data, 4)
        if version != STREAM_VERSION:
            raise FormatError(f"stream: unsupported version {version}")
        return cls(alphabet=alphabet, n_symbols=n, model_hash=model_hash,
                   payload=data[_HEADER_SIZE:])


def _propagate_carry(buf: bytearray) -> None:
    i = len(buf) - 1
    while True:
        if i < 0:  # cannot happen: a carry implies earlier output
            raise AssertionError("range coder carry with empty output buffer")
        if buf[i] == 0xFF:
            buf[i] = 0
            i -= 1
        else:
            buf[i] += 1
            return


def _check_model(model) -> None:
    if not isinstance(model, CausalContextModel):
        raise ParameterError("entropy coding requires a CausalContextModel")


def ac_encode(symbols, model: CausalContextModel, adaptive: bool = False) -> Bitstream:
    """Encode a symbol sequence under a causal context model.

    With `adaptive` set, the model is updated after every symbol (in place;
    pass `model.copy()` to keep the original).  The stream records the hash
    of the model state *before* any update, which is the state the decoder
    must start from.
    """
    _check_model(model)
    syms = [int(s) for s in symbols]
    a = model.alphabet
    for s in syms:
        if not 0 <= s < a:
            raise ParameterError(f"symbol {s} outside alphabet [0, {a})")
    start_hash = model.state_hash()

    out = bytearray()
    low = 0
    range_ = _TWO64
    top = a - 1
    order = model.order
    hist: tuple = ()
    for s in syms:
        w, cum = model.coding_table(hist)
        r = range_ >> 16
        base = r * int(cum[s])
        low += base
        if low >= _TWO64:
            low -= _TWO64
            _propagate_carry(out)
        if s == top:
            range_ -= base
        else:
            range_ = r * int(w[s])
        while range_ < _TWO32:
            out.append(low >> 56)
            out.append((low >> 48) & 0xFF)
            low = (low << 16) & _MASK64
            range_ <<= 16
        if adaptive:
            model.update(hist, s)
        if order:
            hist = (hist + (s,))[-order:]

    if syms:
        shift = 48 if range_ >= _TWO48 else 32
        point = ((low + (1 << shift) - 1) >> shift) << shift
        if point >= _TWO64:
            point -= _TWO64
            _propagate_carry(out)
        out.append(point >> 56)
        out.append((point >> 48) & 0xFF)
        if shift == 32:
            out.append((point >> 40) & 0xFF)
            out.append((point >> 32) & 0xFF)

    return Bitstream(alphabet=a, n_symbols=len(syms), model_hash=start_hash,
                     payload=bytes(out))


class _WordReader:
    """Serves 16-bit words from the payload, zero-padding past the end."""

    def __init__(self, payload: bytes):
        self.payload = payload
        self.pos = 0

    def next_word(self) -> int:
        p = self.pos
        self.pos = p + 2
        chunk = self.payload[p:p + 2]
        if len(chunk) == 2:
            return chunk[0] << 8 | chunk[1]
        if len(chunk) == 1:
            return chunk[0] << 8
        return 0


def ac_decode(stream: Bitstream, model: CausalContextModel,
              adaptive: bool = False) -> np.ndarray:
    """Decode a Bitstream; the inverse of :func:`ac_encode`.

    Raises ModelMismatchError if the model state hash differs from the one
    recorded at encode time, and CorruptStreamError if the payload length is
    inconsistent with the decoded symbol count (e.g. truncation).
    """
    _check_model(model)
    if model.alphabet != stream.alphabet:
        raise ModelMismatchError(
            f"stream alphabet {stream.alphabet} != model alphabet {model.alphabet}")
    if model.state_hash() != stream.model_hash:
        raise ModelMismatchError(
            f"model state hash {model.state_hash():#018x} does not match "
            f"stream header {stream.model_hash:#018x}")

    n = stream.n_symbols
    payload = stream.payload
    if n == 0:
        if payload:
            raise CorruptStreamError(
                f"stream: empty sequence carries {len(payload)} payload bytes")
        return np.zeros(0, dtype=np.int64)

    reader = _WordReader(payload)
    c = 0
    for _ in range(4):
        c = c << 16 | reader.next_word()
    range_ = _TWO64
    renorms = 0

    a = model.alphabet
    top = a - 1
    order = model.order
    hist: tuple = ()
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        w, cum = model.coding_table(hist)
        r = range_ >> 16
        v = c // r
        if v > 0xFFFF:
            v = 0xFFFF
        s = int(np.searchsorted(cum, v, side="right")) - 1
        base = r * int(cum[s])
        c -= base
        if s == top:
            range_ -= base
        else:
            range_ = r * int(w[s])
        while range_ < _TWO32:
            c = c << 16 | reader.next_word()
            range_ <<= 16
            renorms += 1
        out[i] = s
        if adaptive:
            model.update(hist, s)
        if order:
            hist = (hist + (s,))[-order:]

    flush_words = 1 if range_ >= _TWO48 else 2
    expected = 2 * (renorms + flush_words)
    if len(payload) != expected:
        raise CorruptStreamError(
            f"stream: payload holds {len(payload)} bytes, expected {expected} "
            f"for {n} symbols (truncated or trailing garbage)")
    return out


def sequence_cost_bits(model: CausalContextModel, symbols,
                       adaptive: bool = False) -> float:
    """Ideal model cost sum(-log2 p) in bits, from quantized PMFs.

    With adaptive=True the cost is evaluated against a private copy of the
    model that updates after every symbol, mirroring ac_encode; the caller's
    model is never mutated.
    """
    _check_model(model)
    if adaptive:
        model = model.copy()
    total = 0.0
    order = model.order
    hist: tuple = ()
    for s in symbols:
        s = int(s)
        w, _ = model.coding_table(hist)
        total += 16.0 - float(np.log2(int(w[s])))
        if adaptive:
            model.update(hist, s)
        if order:
            hist = (hist + (s,))[-order:]
    return total
