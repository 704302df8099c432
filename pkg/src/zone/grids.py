"""Raster value types (grids, masks, images) and their file formats.

Every stage of the pipeline exchanges data through the types in this module:
float32 grids in the ZTF binary tensor format, 8-bit RGB/RGBA PNG images,
and 1-bit PNG masks.  All types are immutable after construction; the
backing numpy arrays are marked read-only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

ZTF_MAGIC = b"ZTF1"


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Grid2D:
    """H x W raster of float32 samples (attention maps, latents, luma planes)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"Grid2D expects a 2-D array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"Grid2D dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Grid2D values must be finite")
        object.__setattr__(self, "values", _freeze(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_flat(cls, height: int, width: int, data) -> "Grid2D":
        flat = np.asarray(data, dtype=np.float32).ravel()
        if flat.size != height * width:
            raise ValueError(
                f"data length {flat.size} does not match {height}x{width}"
            )
        return cls(flat.reshape(height, width))


@dataclass(frozen=True, eq=False)
class Grid3D:
    """L x H x W stack of float32 maps, one layer per text token.

    The localization stages expect L >= 2 (start-of-text and end-of-text
    token maps); the type itself accepts any L >= 1 so that generic tensor
    payloads round-trip through ZTF files.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"Grid3D expects a 3-D array, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"Grid3D dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Grid3D values must be finite")
        object.__setattr__(self, "values", _freeze(arr))

    @property
    def layers(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def layer(self, index: int) -> Grid2D:
        return Grid2D(self.values[index])


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """H x W boolean raster; the common currency of all mask stages."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.dtype != np.bool_:
            raise ValueError(f"BinaryMask expects bool bits, got dtype {arr.dtype}")
        if arr.ndim != 2:
            raise ValueError(f"BinaryMask expects a 2-D array, got shape {arr.shape}")
        object.__setattr__(self, "bits", _freeze(arr))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def area(self) -> int:
        """Number of set pixels."""
        return int(np.count_nonzero(self.bits))

    @property
    def total(self) -> int:
        """Total pixel count (set or not)."""
        return self.bits.size

    def __invert__(self) -> "BinaryMask":
        return BinaryMask(~self.bits)


@dataclass(frozen=True, eq=False)
class Image:
    """H x W x C 8-bit image, C in {3, 4}; alpha (when present) is hard 0/255."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.dtype != np.uint8:
            raise ValueError(f"Image expects uint8 samples, got dtype {arr.dtype}")
        if arr.ndim != 3 or arr.shape[2] not in (3, 4):
            raise ValueError(f"Image expects HxWx3 or HxWx4, got shape {arr.shape}")
        if arr.shape[2] == 4:
            alpha = arr[:, :, 3]
            if not np.all((alpha == 0) | (alpha == 255)):
                raise ValueError("alpha channel must contain only 0 or 255")
        object.__setattr__(self, "samples", _freeze(arr))

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return self.samples.shape[2]


def write_tensor(grid: Grid2D | Grid3D, path) -> None:
    """Serialize a grid to the ZTF layout.

    Layout: magic ``ZTF1`` | rank u8 (2 or 3) | dims u32 little-endian |
    payload float32 little-endian, row-major (layer-major for rank 3).
    """
    arr = grid.values
    rank = arr.ndim
    with open(path, "wb") as fh:
        fh.write(ZTF_MAGIC)
        fh.write(struct.pack("<B", rank))
        fh.write(struct.pack(f"<{rank}I", *arr.shape))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_tensor(path) -> Grid2D | Grid3D:
    """Read a ZTF file back into a Grid2D or Grid3D (dual of write_tensor)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != ZTF_MAGIC:
        raise ValueError(f"bad magic in {path!r}: expected {ZTF_MAGIC!r}")
    if len(blob) < 5:
        raise ValueError(f"truncated header in {path!r}")
    rank = blob[4]
    if rank not in (2, 3):
        raise ValueError(f"unsupported rank {rank} in {path!r} (expected 2 or 3)")
    header_end = 5 + 4 * rank
    if len(blob) < header_end:
        raise ValueError(f"truncated header in {path!r}")
    dims = struct.unpack(f"<{rank}I", blob[5:header_end])
    count = 1
    for d in dims:
        count *= d
    expected = header_end + 4 * count
    if len(blob) < expected:
        raise ValueError(
            f"truncated payload in {path!r}: expected {expected} bytes, got {len(blob)}"
        )
    if len(blob) > expected:
        raise ValueError(f"trailing data after payload in {path!r}")
    flat = np.frombuffer(blob, dtype="<f4", count=count, offset=header_end)
    if not np.all(np.isfinite(flat)):
        raise ValueError(f"non-finite values in {path!r}")
    arr = flat.reshape(dims)
    return Grid2D(arr) if rank == 2 else Grid3D(arr)


def write_image(image: Image, path) -> None:
    """Write an 8-bit RGB/RGBA PNG losslessly."""
    mode = "RGB" if image.channels == 3 else "RGBA"
    PILImage.fromarray(np.asarray(image.samples), mode=mode).save(path, format="PNG")


def read_image(path) -> Image:
    """Read an 8-bit RGB or RGBA PNG; anything else is rejected."""
    with PILImage.open(path) as im:
        if im.format != "PNG":
            raise ValueError(f"unsupported image format {im.format!r} in {path!r}")
        if im.mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
            raise ValueError(f"unsupported bit depth in {path!r} (8-bit only)")
        if im.mode not in ("RGB", "RGBA"):
            raise ValueError(
                f"unsupported color type {im.mode!r} in {path!r} (RGB/RGBA only)"
            )
        arr = np.asarray(im, dtype=np.uint8)
    return Image(arr)


def write_mask(mask: BinaryMask, path) -> None:
    """Write a BinaryMask as a 1-bit PNG."""
    gray = PILImage.fromarray(np.where(mask.bits, 255, 0).astype(np.uint8), mode="L")
    gray.convert("1", dither=PILImage.Dither.NONE).save(path, format="PNG")


def read_mask(path) -> BinaryMask:
    """Read a 1-bit PNG (or strictly-binary 8-bit grayscale) as a BinaryMask."""
    with PILImage.open(path) as im:
        if im.mode == "1":
            arr = np.asarray(im, dtype=bool)
        elif im.mode == "L":
            gray = np.asarray(im, dtype=np.uint8)
            if not np.all((gray == 0) | (gray == 255)):
                raise ValueError(f"grayscale mask in {path!r} is not binary")
            arr = gray == 255
        else:
            raise ValueError(f"unsupported mask mode {im.mode!r} in {path!r}")
    return BinaryMask(arr)


def resize_bilinear(grid: Grid2D, out_h: int, out_w: int) -> Grid2D:
    """Bilinear resample with align-corners mapping and edge clamping.

    Output pixel (i, j) samples the source at i*(H-1)/(out_h-1) and
    j*(W-1)/(out_w-1); a singleton output axis samples coordinate 0.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be >= 1, got {out_h}x{out_w}")
    src = grid.values.astype(np.float64)
    h, w = src.shape

    ys = np.arange(out_h) * ((h - 1) / (out_h - 1)) if out_h > 1 else np.zeros(1)
    xs = np.arange(out_w) * ((w - 1) / (out_w - 1)) if out_w > 1 else np.zeros(1)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]

    top = src[np.ix_(y0, x0)] * (1.0 - wx) + src[np.ix_(y0, x1)] * wx
    bot = src[np.ix_(y1, x0)] * (1.0 - wx) + src[np.ix_(y1, x1)] * wx
    out = top * (1.0 - wy) + bot * wy
    return Grid2D(out.astype(np.float32))
