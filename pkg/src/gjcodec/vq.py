"""Patch tokenization: k-means codebook training, encode/decode, file format.

Codebook file layout (little-endian): magic "GJCB", u8 version=1, u16 K,
u16 dim, u64 train_seed, then K*dim float32 codeword entries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, ParameterError

CODEBOOK_MAGIC = b"GJCB"
CODEBOOK_VERSION = 1
MAX_CODEWORDS = 1024


@dataclass
class Codebook:
    vectors: np.ndarray          # (K, dim) float32
    train_seed: int = 0
    distortion_history: list = field(default_factory=list)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float32)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ParameterError("codebook must be a non-empty (K, dim) array")
        if v.shape[0] > MAX_CODEWORDS:
            raise ConfigError(
                f"codebook size {v.shape[0]} exceeds the supported maximum "
                f"{MAX_CODEWORDS}")
        if len(np.unique(v, axis=0)) != v.shape[0]:
            raise ParameterError("codebook contains duplicate codewords")
        self.vectors = v

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def _pairwise_sq_dist(x: np.ndarray, c: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Squared Euclidean distances, (N, K), computed by direct differences.

    The direct form is slower than the expanded inner-product form but is
    bit-reproducible regardless of BLAS threading, which keeps trained
    codebooks and sweep CSVs deterministic.
    """
    n = x.shape[0]
    out = np.empty((n, c.shape[0]), dtype=np.float64)
    for s in range(0, n, chunk):
        d = x[s:s + chunk, None, :] - c[None, :, :]
        out[s:s + chunk] = np.einsum("nkd,nkd->nk", d, d)
    return out


def vq_train(vectors: np.ndarray, k: int, iters: int, seed: int) -> Codebook:
    """Train a codebook with batch k-means.

    Initialization draws k distinct training vectors (seeded).  After each
    mean update, clusters that lost all members are re-seeded from the
    training vectors with the highest quantization distortion.  The recorded
    per-iteration mean distortion (measured at assignment time) is
    non-increasing.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ParameterError("training vectors must form a non-empty (N, dim) array")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k > MAX_CODEWORDS:
        raise ConfigError(f"k={k} exceeds the supported maximum {MAX_CODEWORDS}")
    if iters < 1:
        raise ParameterError(f"iters must be >= 1, got {iters}")

    uniq = np.unique(x, axis=0)
    if uniq.shape[0] < k:
        raise ParameterError(
            f"training set has only {uniq.shape[0]} distinct vectors, need {k}")

    rng = np.random.default_rng(seed)
    # Walk a random permutation, keeping the first k pairwise-distinct vectors.
    centers = []
    seen = set()
    for idx in rng.permutation(x.shape[0]):
        key = x[idx].tobytes()
        if key not in seen:
            seen.add(key)
            centers.append(x[idx])
            if len(centers) == k:
                break
    c = np.array(centers)

    history = []
    for _ in range(iters):
        d2 = _pairwise_sq_dist(x, c)
        assign = np.argmin(d2, axis=1)
        per_point = d2[np.arange(x.shape[0]), assign]
        history.append(float(per_point.mean()))
        # Mean update.
        new_c = c.copy()
        counts = np.bincount(assign, minlength=k)
        for j in np.nonzero(counts)[0]:
            new_c[j] = x[assign == j].mean(axis=0)
        # Empty clusters grab the worst-quantized vectors.
        empties = np.nonzero(counts == 0)[0]
        if len(empties):
            worst = np.argsort(-per_point, kind="stable")
            taken = 0
            used = set()
            for j in empties:
                while worst[taken] in used:
                    taken += 1
                new_c[j] = x[worst[taken]]
                used.add(worst[taken])
                taken += 1
        c = new_c

    cb = Codebook(vectors=c.astype(np.float32), train_seed=seed,
                  distortion_history=history)
    return cb


def vq_encode(codebook: Codebook, vectors: np.ndarray) -> np.ndarray:
    """Map each vector to its nearest codeword index (ties: lowest index)."""
    x = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if x.shape[1] != codebook.dim:
        raise ParameterError(
            f"vector dim {x.shape[1]} does not match codebook dim {codebook.dim}")
    d2 = _pairwise_sq_dist(x, codebook.vectors.astype(np.float64))
    return np.argmin(d2, axis=1).astype(np.int64)


def vq_decode(codebook: Codebook, tokens: np.ndarray) -> np.ndarray:
    t = np.asarray(tokens, dtype=np.int64)
    if t.size and (t.min() < 0 or t.max() >= codebook.size):
        raise ParameterError(
            f"token out of range [0, {codebook.size}): {t.min()}..{t.max()}")
    return codebook.vectors.astype(np.float64)[t]


def extract_patches(samples: np.ndarray, patch: int) -> np.ndarray:
    """(H, W) -> (H//p * W//p, p*p) non-overlapping patches, raster order."""
    h, w = samples.shape
    if h % patch or w % patch:
        raise ParameterError(f"image dimensions {w}x{h} are not multiples of {patch}")
    a = samples.reshape(h // patch, patch, w // patch, patch)
    return a.transpose(0, 2, 1, 3).reshape(-1, patch * patch).astype(np.float64)


def assemble_patches(patches: np.ndarray, height: int, width: int, patch: int) -> np.ndarray:
    pr, pc = height // patch, width // patch
    a = patches.reshape(pr, pc, patch, patch).transpose(0, 2, 1, 3)
    return a.reshape(height, width)


def save_codebook(codebook: Codebook, path) -> None:
    payload = codebook.vectors.astype("<f4").tobytes()
    header = CODEBOOK_MAGIC + struct.pack(
        "<BHHQ", CODEBOOK_VERSION, codebook.size, codebook.dim,
        codebook.train_seed & 0xFFFFFFFFFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_codebook(path) -> Codebook:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CODEBOOK_MAGIC:
        raise FormatError(f"codebook: bad magic {data[:4]!r}")
    if len(data) < 4 + struct.calcsize("<BHHQ"):
        raise FormatError("codebook: truncated header")
    version, k, dim, seed = struct.unpack_from("<BHHQ", data, 4)
    if version != CODEBOOK_VERSION:
        raise FormatError(f"codebook: unsupported version {version}")
    off = 4 + struct.calcsize("<BHHQ")
    need = k * dim * 4
    if len(data) - off != need:
        raise FormatError(
            f"codebook: payload holds {len(data) - off} bytes, expected {need}")
    vec = np.frombuffer(data, dtype="<f4", count=k * dim, offset=off)
    return Codebook(vectors=vec.reshape(k, dim).copy(), train_seed=seed)
