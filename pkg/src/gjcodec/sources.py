"""Test sources and image containers.

Provides a seeded AR(1) scalar source, a separable AR(1) image texture
generator used by the bundled scenarios, and binary PGM (P5) image I/O.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import FormatError, ParameterError


@dataclass
class SampleSequence:
    """A 1-D source realization together with the parameters that made it."""

    samples: np.ndarray
    model_params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)


def gen_ar1(n: int, rho: float, sigma: float, seed: int) -> SampleSequence:
    """Generate n samples of a stationary AR(1) process.

    x[t] = rho * x[t-1] + w[t], with innovation variance sigma^2 * (1 - rho^2)
    so the marginal variance is sigma^2 for every t.  x[0] is drawn from the
    stationary distribution, so there is no warm-up transient.
    """
    if not (0.0 <= rho < 1.0):
        raise ParameterError(f"rho must be in [0, 1), got {rho}")
    if sigma <= 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if n <= 0:
        raise ParameterError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    x0 = rng.normal(0.0, sigma)
    if n == 1:
        samples = np.array([x0])
    else:
        w = rng.normal(0.0, sigma * np.sqrt(1.0 - rho * rho), size=n - 1)
        # y[t] = w[t] + rho * y[t-1]; the initial condition folds x0 in.
        rest, _ = lfilter([1.0], [1.0, -rho], w, zi=np.array([rho * x0]))
        samples = np.concatenate(([x0], rest))
    params = {"n": n, "rho": rho, "sigma": sigma, "seed": seed}
    return SampleSequence(samples=samples, model_params=params)


def ar1_field(rows: int, cols: int, rho: float, seed: int) -> np.ndarray:
    """Zero-mean, unit-variance field with separable AR(1) correlation.

    corr(x[i,j], x[i+di, j+dj]) ~= rho^(|di| + |dj|).  White noise is run
    through a first-order recursion along rows and then columns; a margin is
    generated and cropped so the interior is effectively stationary.
    """
    if not (0.0 <= rho < 1.0):
        raise ParameterError(f"rho must be in [0, 1), got {rho}")
    if rows <= 0 or cols <= 0:
        raise ParameterError("field dimensions must be positive")
    rng = np.random.default_rng(seed)
    pad = 64
    w = rng.normal(0.0, 1.0, size=(rows + pad, cols + pad))
    gain = np.sqrt(1.0 - rho * rho)  # unit marginal variance per axis
    f = lfilter([gain], [1.0, -rho], w, axis=0)
    f = lfilter([gain], [1.0, -rho], f, axis=1)
    return f[pad:, pad:]


def ar1_image(rows: int, cols: int, rho: float, sigma: float, mean: float,
              seed: int) -> "ImageGrid":
    """8-bit image with separable AR(1) texture, clipped to [0, 255]."""
    f = ar1_field(rows, cols, rho, seed) * sigma + mean
    return ImageGrid.from_float(f)


@dataclass
class ImageGrid:
    """An 8-bit grayscale image stored row-major."""

    samples: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        a = np.asarray(self.samples)
        if a.ndim != 2 or a.size == 0:
            raise ParameterError("image must be a non-empty 2-D array")
        if a.dtype != np.uint8:
            raise ParameterError(f"image samples must be uint8, got {a.dtype}")
        self.samples = a

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def pixels(self) -> int:
        return self.samples.size

    @classmethod
    def from_float(cls, values: np.ndarray) -> "ImageGrid":
        """Round to nearest and clamp into the 8-bit range."""
        v = np.rint(np.asarray(values, dtype=np.float64))
        return cls(np.clip(v, 0, 255).astype(np.uint8))


def _read_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skip whitespace and '#' comment lines, then read one token.
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("pgm: truncated header")
    return data[start:pos], pos


def load_pgm(path) -> ImageGrid:
    """Read a binary PGM (P5) file with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise FormatError(f"pgm: bad magic {data[:2]!r}, expected P5")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _read_pgm_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise FormatError(f"pgm: field {name} is not an integer: {tok!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FormatError(f"pgm: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"pgm: maxval must be 255, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:pos + width * height]
    if len(payload) != width * height:
        raise FormatError(
            f"pgm: payload holds {len(payload)} bytes, expected {width * height}")
    samples = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return ImageGrid(samples.copy())


def save_pgm(image: ImageGrid, path) -> None:
    """Write a binary PGM (P5) file with maxval 255."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(image.samples.tobytes())
