"""Count-based context models with fixed-point PMFs.

A single trained model serves two masters: evaluated causally it prices
tokens for entropy coding, evaluated over a spatial neighborhood it predicts
missing tokens for loss concealment.  Both views share the same fixed-point
PMF representation: integer weights that sum to exactly 2**16 with every
symbol kept at weight >= 1, so an entropy decoder can never starve and coder
and predictor agree bit-for-bit on probabilities.

Model file layout (little-endian): magic "GJCM", u8 version=1, u8 kind
(0=causal, 1=neighborhood), u16 alphabet, u8 order/arity, u32 alpha as 16.16
fixed point, u64 number of (context, symbol) entries, then sorted entries:
order-many i16 context symbols (-1 = ABSENT/pad), u16 symbol, u64 count.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError

PMF_BITS = 16
PMF_TOTAL = 1 << PMF_BITS
ABSENT = -1

MODEL_MAGIC = b"GJCM"
MODEL_VERSION = 1
KIND_CAUSAL = 0
KIND_NEIGHBOR = 1

# Neighborhood positions in context order: up, left, right, down.
NEIGHBOR_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0))


@dataclass
class Pmf:
    """Fixed-point PMF: int64 weights summing to exactly PMF_TOTAL."""

    weights: np.ndarray

    def probabilities(self) -> np.ndarray:
        return self.weights / PMF_TOTAL

    def argmax(self) -> int:
        # np.argmax takes the first maximum, i.e. the lowest symbol on ties.
        return int(np.argmax(self.weights))

    def max_weight(self) -> int:
        return int(self.weights.max())


def quantize_pmf(counts: np.ndarray, alpha_fp: int) -> np.ndarray:
    """Laplace-smooth integer counts and quantize to fixed point.

    The real-valued model is p[i] = (counts[i] + alpha) / (total + alpha*A)
    with alpha = alpha_fp / 2**16.  Quantization floors each weight at 1,
    distributes the deficit by largest remainder (ties: lowest symbol), and
    reclaims any excess from the largest weights, so the result always sums
    to exactly 2**16.  All arithmetic is integer, hence reproducible.
    """
    c = np.asarray(counts, dtype=np.int64)
    a = c.shape[0]
    if a < 2 or a > PMF_TOTAL:
        raise ParameterError(f"alphabet size must be in [2, {PMF_TOTAL}], got {a}")
    if alpha_fp <= 0:
        raise ParameterError("alpha must be positive")
    if c.min() < 0:
        raise ParameterError("counts must be non-negative")

    num = c * PMF_TOTAL + alpha_fp          # p[i] scaled by total_scaled
    total_scaled = int(num.sum())
    w = (num * PMF_TOTAL) // total_scaled
    rem = num * PMF_TOTAL - w * total_scaled
    w = np.maximum(w, 1)

    s = int(w.sum())
    if s < PMF_TOTAL:
        deficit = PMF_TOTAL - s
        order = np.lexsort((np.arange(a), -rem))
        w[order[:deficit]] += 1
    elif s > PMF_TOTAL:
        excess = s - PMF_TOTAL
        order = np.lexsort((np.arange(a), -w))
        for idx in order:
            if excess == 0:
                break
            take = min(int(w[idx]) - 1, excess)
            w[idx] -= take
            excess -= take
        if excess:
            raise ParameterError("cannot renormalize PMF (alphabet too large)")
    return w


def _alpha_to_fp(alpha: float) -> int:
    fp = round(alpha * PMF_TOTAL)
    if fp <= 0:
        raise ParameterError(f"alpha must be >= 2**-16, got {alpha}")
    return int(fp)


class _CountModel:
    """Shared storage: context tuple -> int64 count vector of length A."""

    kind: int
    context_len: int

    def __init__(self, alphabet: int, alpha: float = 1.0):
        if alphabet < 2 or alphabet > PMF_TOTAL:
            raise ParameterError(
                f"alphabet size must be in [2, {PMF_TOTAL}], got {alphabet}")
        self.alphabet = alphabet
        self.alpha_fp = _alpha_to_fp(alpha)
        self.counts: dict[tuple, np.ndarray] = {}
        self._tables: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
        self._hash: int | None = None

    # -- counting ---------------------------------------------------------

    def _check_symbol(self, symbol: int) -> None:
        if not 0 <= symbol < self.alphabet:
            raise ParameterError(
                f"symbol {symbol} outside alphabet [0, {self.alphabet})")

    def _counts_for(self, key: tuple) -> np.ndarray:
        vec = self.counts.get(key)
        if vec is None:
            vec = np.zeros(self.alphabet, dtype=np.int64)
            self.counts[key] = vec
        return vec

    def update(self, context, symbol: int) -> None:
        """Add one observation of `symbol` in `context` (touches nothing else)."""
        key = self._context_key(context)
        self._check_symbol(symbol)
        self._counts_for(key)[symbol] += 1
        self._tables.pop(key, None)
        self._hash = None

    def context_counts(self, context) -> np.ndarray:
        """Raw (unsmoothed) counts for a context; zeros if never observed."""
        key = self._context_key(context)
        vec = self.counts.get(key)
        if vec is None:
            return np.zeros(self.alphabet, dtype=np.int64)
        return vec.copy()

    # -- probabilities ----------------------------------------------------

    def _resolve_key(self, key: tuple) -> tuple:
        """Hook: map a query context onto the count table that answers it."""
        return key

    def coding_table(self, context) -> tuple[np.ndarray, np.ndarray]:
        """(weights, cumulative) for the arithmetic coder; cached per context."""
        key = self._resolve_key(self._context_key(context))
        cached = self._tables.get(key)
        if cached is not None:
            return cached
        vec = self.counts.get(key)
        if vec is None:
            vec = np.zeros(self.alphabet, dtype=np.int64)
        w = quantize_pmf(vec, self.alpha_fp)
        cum = np.concatenate(([0], np.cumsum(w)))
        table = (w, cum)
        self._tables[key] = table
        return table

    def pmf(self, context) -> Pmf:
        return Pmf(weights=self.coding_table(context)[0].copy())

    # -- hashing / serialization -----------------------------------------

    def _entries(self) -> list[tuple[tuple, int, int]]:
        out = []
        for key in sorted(self.counts):
            vec = self.counts[key]
            for sym in np.nonzero(vec)[0]:
                out.append((key, int(sym), int(vec[sym])))
        return out

    def _serialize(self) -> bytes:
        entries = self._entries()
        head = MODEL_MAGIC + struct.pack(
            "<BBHBIQ", MODEL_VERSION, self.kind, self.alphabet,
            self.context_len, self.alpha_fp, len(entries))
        parts = [head]
        fmt = "<" + "h" * self.context_len + "HQ"
        for key, sym, count in entries:
            parts.append(struct.pack(fmt, *key, sym, count))
        return b"".join(parts)

    def state_hash(self) -> int:
        """64-bit digest of kind, parameters, and every count: two models
        produce the same hash iff they would price every symbol identically."""
        if self._hash is None:
            digest = hashlib.blake2b(self._serialize(), digest_size=8).digest()
            self._hash = int.from_bytes(digest, "little")
        return self._hash

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self._serialize())

    def copy(self):
        dup = self.__class__.__new__(self.__class__)
        dup.__dict__.update(self.__dict__)
        dup.counts = {k: v.copy() for k, v in self.counts.items()}
        dup._tables = dict(self._tables)
        return dup


class CausalContextModel(_CountModel):
    """Order-k model over the previous k symbols in scan order.

    History does not cross row boundaries: each grid row (or sequence) starts
    from an empty history, with missing positions padded by ABSENT.
    """

    kind = KIND_CAUSAL

    def __init__(self, alphabet: int, order: int = 2, alpha: float = 1.0):
        if order < 0:
            raise ParameterError(f"order must be >= 0, got {order}")
        super().__init__(alphabet, alpha)
        self.order = order
        self.context_len = order

    def _context_key(self, context) -> tuple:
        hist = tuple(int(s) for s in context)
        if len(hist) > self.order:
            raise ParameterError(
                f"context of length {len(hist)} exceeds model order {self.order}")
        for s in hist:
            if s != ABSENT and not 0 <= s < self.alphabet:
                raise ParameterError(
                    f"context symbol {s} outside alphabet [0, {self.alphabet})")
        return (ABSENT,) * (self.order - len(hist)) + hist

    def iter_row(self, row):
        """Yield (context, symbol) pairs for one row / sequence."""
        hist: tuple = ()
        for s in row:
            yield hist, int(s)
            hist = (hist + (int(s),))[-self.order:] if self.order else ()


class NeighborhoodModel(_CountModel):
    """Bidirectional model over the 4-neighborhood (up, left, right, down).

    For every training cell, counts are accumulated for each distinct subset
    of its present neighbors (others masked to ABSENT), so a query with any
    survival pattern is answered from direct evidence when available.  Unseen
    patterns back off by dropping present neighbors (last position first)
    down to the all-ABSENT marginal.
    """

    kind = KIND_NEIGHBOR

    def __init__(self, alphabet: int, alpha: float = 1.0):
        super().__init__(alphabet, alpha)
        self.arity = len(NEIGHBOR_OFFSETS)
        self.context_len = self.arity

    def _context_key(self, context) -> tuple:
        key = tuple(int(s) for s in context)
        if len(key) != self.arity:
            raise ParameterError(
                f"neighborhood context must have {self.arity} entries, got {len(key)}")
        for s in key:
            if s != ABSENT and not 0 <= s < self.alphabet:
                raise ParameterError(
                    f"context symbol {s} outside alphabet [0, {self.alphabet})")
        return key

    def _resolve_key(self, key: tuple) -> tuple:
        while True:
            vec = self.counts.get(key)
            if vec is not None and vec.any():
                return key
            present = [i for i, s in enumerate(key) if s != ABSENT]
            if not present:
                return key  # untrained marginal: uniform after smoothing
            lst = list(key)
            lst[present[-1]] = ABSENT
            key = tuple(lst)

    def observe_cell(self, context, symbol: int) -> None:
        """Count one cell under every distinct present-neighbor subset."""
        key = self._context_key(context)
        self._check_symbol(symbol)
        present = [i for i, s in enumerate(key) if s != ABSENT]
        seen = set()
        for mask in range(1 << len(present)):
            sub = list(key)
            for bit, pos in enumerate(present):
                if not mask >> bit & 1:
                    sub[pos] = ABSENT
            subkey = tuple(sub)
            if subkey not in seen:
                seen.add(subkey)
                self._counts_for(subkey)[symbol] += 1
                self._tables.pop(subkey, None)
        self._hash = None

    def marginal(self) -> Pmf:
        return self.pmf((ABSENT,) * self.arity)


def neighbor_context(tokens: np.ndarray, available: np.ndarray,
                     r: int, c: int) -> tuple:
    """4-neighbor context of cell (r, c); borders and unavailable cells -> ABSENT."""
    rows, cols = tokens.shape
    ctx = []
    for dr, dc in NEIGHBOR_OFFSETS:
        rr, cc = r + dr, c + dc
        if 0 <= rr < rows and 0 <= cc < cols and available[rr, cc]:
            ctx.append(int(tokens[rr, cc]))
        else:
            ctx.append(ABSENT)
    return tuple(ctx)


def train(model: _CountModel, corpus: list[np.ndarray]) -> _CountModel:
    """Accumulate counts over a corpus of 2-D token grids (in place)."""
    if not corpus:
        raise ParameterError("training corpus is empty")
    for grid in corpus:
        g = np.asarray(grid)
        if g.ndim != 2 or g.size == 0:
            raise ParameterError("corpus entries must be non-empty 2-D grids")
        if g.min() < 0 or g.max() >= model.alphabet:
            raise ParameterError(
                f"corpus tokens outside alphabet [0, {model.alphabet})")
        if isinstance(model, CausalContextModel):
            for row in g:
                for ctx, sym in model.iter_row(row):
                    model.update(ctx, sym)
        else:
            avail = np.ones_like(g, dtype=bool)
            for r in range(g.shape[0]):
                for c in range(g.shape[1]):
                    ctx = neighbor_context(g, avail, r, c)
                    model.observe_cell(ctx, int(g[r, c]))
    return model


def cross_entropy(model: _CountModel, grid: np.ndarray) -> float:
    """Mean -log2 p(symbol | context) over a grid, raster order, in bits/token.

    Uses the model's quantized fixed-point PMFs and does not adapt mid-pass,
    so the value is exactly the ideal (pre-termination) cost of coding the
    grid with the frozen model.
    """
    g = np.asarray(grid)
    if g.ndim == 1:
        g = g[None, :]
    if g.ndim != 2 or g.size == 0:
        raise ParameterError("grid must be a non-empty 1-D or 2-D array")
    if g.min() < 0 or g.max() >= model.alphabet:
        raise ParameterError(f"tokens outside alphabet [0, {model.alphabet})")
    total = 0.0
    if isinstance(model, CausalContextModel):
        for row in g:
            for ctx, sym in model.iter_row(row):
                w, _ = model.coding_table(ctx)
                total += PMF_BITS - np.log2(int(w[sym]))
    else:
        avail = np.ones_like(g, dtype=bool)
        for r in range(g.shape[0]):
            for c in range(g.shape[1]):
                ctx = neighbor_context(g, avail, r, c)
                w, _ = model.coding_table(ctx)
                total += PMF_BITS - np.log2(int(w[g[r, c]]))
    return float(total / g.size)


def load_model(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MODEL_MAGIC:
        raise FormatError(f"model: bad magic {data[:4]!r}")
    head_fmt = "<BBHBIQ"
    head_size = 4 + struct.calcsize(head_fmt)
    if len(data) < head_size:
        raise FormatError("model: truncated header")
    version, kind, alphabet, ctx_len, alpha_fp, n_entries = struct.unpack_from(
        head_fmt, data, 4)
    if version != MODEL_VERSION:
        raise FormatError(f"model: unsupported version {version}")
    if kind == KIND_CAUSAL:
        model = CausalContextModel(alphabet, order=ctx_len,
                                   alpha=alpha_fp / PMF_TOTAL)
    elif kind == KIND_NEIGHBOR:
        model = NeighborhoodModel(alphabet, alpha=alpha_fp / PMF_TOTAL)
        if ctx_len != model.arity:
            raise FormatError(f"model: bad neighborhood arity {ctx_len}")
    else:
        raise FormatError(f"model: unknown kind {kind}")
    fmt = "<" + "h" * ctx_len + "HQ"
    entry_size = struct.calcsize(fmt)
    if len(data) - head_size != n_entries * entry_size:
        raise FormatError(
            f"model: payload holds {len(data) - head_size} bytes, expected "
            f"{n_entries * entry_size}")
    off = head_size
    for _ in range(n_entries):
        *key, sym, count = struct.unpack_from(fmt, data, off)
        off += entry_size
        if sym >= alphabet:
            raise FormatError(f"model: entry symbol {sym} outside alphabet")
        model._counts_for(tuple(key))[sym] = count
    model._hash = None
    return model
