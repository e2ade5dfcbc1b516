"""8-bit grayscale image handling for the edge-map experiments.

Images are float64 arrays holding integer gray levels in [0, 255]; the only
file format is binary PGM ("P5", maxval 255).
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import InvalidArgumentError, PGMError, UnsupportedDepthError, UnsupportedFormatError
from .field import as_field


def round_half_away(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def to_gray(values) -> np.ndarray:
    """Round half away from zero, then clamp to [0, 255]."""
    return np.clip(round_half_away(values), 0.0, 255.0)


def _read_token(data: bytes, pos: int):
    """Next whitespace-delimited header token, skipping '#' comments."""
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
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMError("unexpected end of header", start)
    return data[start:pos], start, pos


def parse_pgm(data: bytes) -> np.ndarray:
    if len(data) < 2:
        raise PGMError("file too short for a PGM magic number", 0)
    magic = data[:2]
    if magic in (b"P2", b"P1", b"P3", b"P4", b"P6"):
        raise UnsupportedFormatError(f"unsupported netpbm format {magic.decode()!r}; only binary P5 is read", 0)
    if magic != b"P5":
        raise PGMError(f"bad magic number {magic!r}", 0)
    pos = 2
    header = []
    for name in ("width", "height", "maxval"):
        token, start, pos = _read_token(data, pos)
        if not token.isdigit():
            raise PGMError(f"invalid {name} {token!r}", start)
        header.append((int(token), start))
    (width, _), (height, _), (maxval, maxval_at) = header
    if width < 1 or height < 1:
        raise PGMError(f"invalid image size {width}x{height}", header[0][1])
    if maxval > 255:
        raise UnsupportedDepthError(f"maxval {maxval} needs 16-bit samples; only 8-bit is supported", maxval_at)
    if maxval != 255:
        raise PGMError(f"maxval must be 255, got {maxval}", maxval_at)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PGMError("missing whitespace after maxval", pos)
    pos += 1
    expected = width * height
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise PGMError(f"truncated payload: expected {expected} bytes, found {len(payload)}", pos + len(payload))
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).astype(np.float64)


def load_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def encode_pgm(image) -> bytes:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise InvalidArgumentError("image must be 2-D")
    h, w = image.shape
    pixels = to_gray(image).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def save_pgm(image, path):
    from .io import atomic_write_bytes

    atomic_write_bytes(path, encode_pgm(image))


def add_gaussian_noise(image, sigma_n: float, seed=None) -> np.ndarray:
    if not sigma_n >= 0:
        raise InvalidArgumentError(f"noise level must be non-negative, got {sigma_n}")
    image = np.asarray(image, dtype=np.float64)
    if sigma_n == 0:
        return image.copy()
    rng = np.random.default_rng(seed)
    return to_gray(image + sigma_n * rng.standard_normal(image.shape))


def laplacian_map(image) -> np.ndarray:
    """Absolute response of the 4-neighbour Laplacian, wrapping at the borders."""
    x = as_field(image)
    out = -4.0 * x
    for shift, axis in ((1, 0), (-1, 0), (1, 1), (-1, 1)):
        out += np.roll(x, shift, axis=axis)
    return np.abs(out)


def normalize_map(values, mode: str = "linear") -> np.ndarray:
    """Min-max scale a real map to gray levels 0..255.

    ``mode="log"`` applies log(1 + v) first.  NaN entries (undefined sites)
    are ignored for the range and come out black.  A constant map is black.
    """
    if mode not in ("linear", "log"):
        raise InvalidArgumentError(f"unknown normalization {mode!r}")
    v = np.array(values, dtype=np.float64)
    finite = np.isfinite(v)
    if mode == "log":
        if np.any(v[finite] <= -1):
            raise InvalidArgumentError("log normalization needs values > -1")
        v[finite] = np.log1p(v[finite])
    out = np.zeros(v.shape)
    if not finite.any():
        return out
    lo, hi = v[finite].min(), v[finite].max()
    if hi > lo:
        out[finite] = round_half_away((v[finite] - lo) / (hi - lo) * 255.0)
    return out


def gaussian_blur(image, sigma: float) -> np.ndarray:
    """Gaussian smoothing with wrap-around borders, re-quantized to gray levels."""
    if not sigma >= 0:
        raise InvalidArgumentError("blur sigma must be non-negative")
    return to_gray(ndimage.gaussian_filter(np.asarray(image, dtype=np.float64), sigma, mode="wrap"))


def step_image(height: int, width: int, low: float = 64.0, high: float = 192.0) -> np.ndarray:
    """Left half ``low``, right half ``high``."""
    image = np.full((height, width), float(low))
    image[:, width // 2:] = high
    return image
