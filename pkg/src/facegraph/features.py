"""Per-landmark appearance features.

Cuts fixed-size patches around landmark positions (edge replication at the
borders) and encodes each patch with a deterministic pooled-projection
encoder: average-pool to an 8x8 grid, scale to [0, 1], multiply by a seeded
random projection. Precomputed feature files can be used instead, see
:mod:`facegraph.data`.

Also provides binary PGM (P5, 8-bit) image reading and writing.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError, InvalidInputError

__all__ = [
    "EncoderConfig",
    "encode_patch_toy",
    "extract_patch",
    "features_for_sample",
    "read_pgm",
    "write_pgm",
]

POOL_GRID = 8


@dataclass(frozen=True)
class EncoderConfig:
    """How to turn patches into feature vectors.

    ``kind`` is ``"toy-projection"`` for the built-in encoder or
    ``"external-file"`` when features come precomputed from files.
    """

    kind: str = "toy-projection"
    out_dim: int = 64
    projection_seed: int = 1000

    def __post_init__(self):
        if self.kind not in ("toy-projection", "external-file"):
            raise InvalidInputError(f"unknown encoder kind: {self.kind!r}")
        if self.out_dim < 1:
            raise InvalidInputError("encoder output dimension must be >= 1")


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM file into an H x W uint8 array."""
    with open(path, "rb") as handle:
        data = handle.read()

    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            ch = data[pos:pos + 1]
            if ch == b"#":
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetError(f"{path}: truncated PGM header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise DatasetError(f"{path}: not a binary PGM (P5) file")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise DatasetError(f"{path}: malformed PGM header") from exc
    if width < 1 or height < 1:
        raise DatasetError(f"{path}: invalid PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise DatasetError(f"{path}: only 8-bit PGM supported, maxval={maxval}")
    pos += 1  # single whitespace byte after the header
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise DatasetError(f"{path}: PGM raster shorter than {width}x{height}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, image: np.ndarray) -> None:
    """Write an H x W uint8 array as a binary (P5) PGM file."""
    pixels = np.asarray(image)
    if pixels.ndim != 2:
        raise InvalidInputError("image must be a 2-D intensity grid")
    pixels = pixels.astype(np.uint8)
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(pixels.tobytes())


def extract_patch(image: np.ndarray, center, h: int, w: int) -> np.ndarray:
    """Cut an h x w window around a landmark, replicating edge pixels.

    The top-left corner is (round(cx) - w // 2, round(cy) - h // 2); pixels
    falling outside the image are clamped to the nearest valid pixel, so the
    output shape is always exactly h x w.
    """
    img = np.asarray(image)
    if img.ndim != 2:
        raise InvalidInputError("image must be a 2-D intensity grid")
    if h < 1 or w < 1:
        raise InvalidInputError(f"patch size must be positive, got {h}x{w}")
    cx, cy = float(center[0]), float(center[1])
    if not (np.isfinite(cx) and np.isfinite(cy)):
        raise InvalidInputError("patch center must be finite")
    top = int(round(cy)) - h // 2
    left = int(round(cx)) - w // 2
    rows = np.clip(np.arange(top, top + h), 0, img.shape[0] - 1)
    cols = np.clip(np.arange(left, left + w), 0, img.shape[1] - 1)
    return img[np.ix_(rows, cols)]


def _pool_to_grid(patch: np.ndarray) -> np.ndarray:
    """Average-pool an arbitrary patch onto a fixed POOL_GRID x POOL_GRID grid."""
    pixels = np.asarray(patch, dtype=float)
    h, w = pixels.shape
    pooled = np.empty((POOL_GRID, POOL_GRID))
    for i in range(POOL_GRID):
        r0 = (i * h) // POOL_GRID
        r1 = max(r0 + 1, ((i + 1) * h) // POOL_GRID)
        for j in range(POOL_GRID):
            c0 = (j * w) // POOL_GRID
            c1 = max(c0 + 1, ((j + 1) * w) // POOL_GRID)
            pooled[i, j] = pixels[r0:r1, c0:c1].mean()
    return pooled / 255.0


@functools.lru_cache(maxsize=None)
def _projection_matrix(seed: int, out_dim: int) -> np.ndarray:
    # Generated once per (seed, dim) and treated as read-only afterwards.
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((out_dim, POOL_GRID * POOL_GRID)) / POOL_GRID
    matrix.setflags(write=False)
    return matrix


def encode_patch_toy(patch: np.ndarray, config: EncoderConfig) -> np.ndarray:
    """Deterministic patch embedding: pool to 8x8, flatten, project to out_dim."""
    if config.kind != "toy-projection":
        raise InvalidInputError("encode_patch_toy requires a toy-projection config")
    pooled = _pool_to_grid(patch)
    return _projection_matrix(config.projection_seed, config.out_dim) @ pooled.ravel()


def features_for_sample(image: np.ndarray, landmarks: np.ndarray, h: int, w: int,
                        config: EncoderConfig) -> np.ndarray:
    """Encode one patch per landmark; row i belongs to landmark i."""
    points = np.asarray(landmarks, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise InvalidInputError("landmark array must have shape (N, 2)")
    rows = [encode_patch_toy(extract_patch(image, point, h, w), config)
            for point in points]
    return np.stack(rows, axis=0)
