"""Cross-attention computation and edit-region localization.

Instruction-tuned editors concentrate attention on the edit region uniformly
across tokens, so the stack of per-token attention maps can be reduced to a
rough edit mask: average all collected stacks, rescale jointly to 8-bit
range, and threshold the difference between the first (start-of-text) and
last (end-of-text) token maps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grids import BinaryMask, Grid2D, Grid3D, read_tensor, resize_bilinear


@dataclass(frozen=True)
class LocalizerConfig:
    target_h: int
    target_w: int
    threshold_T: int = 128
    invert: bool = False

    def __post_init__(self):
        if not 0 <= self.threshold_T <= 255:
            raise ValueError(f"threshold_T must be in [0, 255], got {self.threshold_T}")
        if self.target_h < 1 or self.target_w < 1:
            raise ValueError("target size must be >= 1")


@dataclass(frozen=True, eq=False)
class AttentionInputs:
    """Projection weights that turn spatial features and text embeddings
    into attention queries, keys, and values."""

    query_proj: Grid2D  # d x F_spatial
    key_proj: Grid2D    # d x F_text
    value_proj: Grid2D  # d_v x F_text
    key_dim: int

    def __post_init__(self):
        if self.key_dim <= 0:
            raise ValueError(f"key_dim must be positive, got {self.key_dim}")
        if self.query_proj.height != self.key_dim or self.key_proj.height != self.key_dim:
            raise ValueError("query/key projections must have key_dim rows")
        if self.key_proj.width != self.value_proj.width:
            raise ValueError("key and value projections must consume the same embedding")

    def project(self, features: Grid2D, text: Grid2D) -> tuple[Grid2D, Grid2D, Grid2D]:
        """(P x F_spatial, L x F_text) -> (Q: P x d, K: L x d, V: L x d_v)."""
        if features.width != self.query_proj.width:
            raise ValueError("feature width does not match query projection")
        if text.width != self.key_proj.width:
            raise ValueError("text width does not match key projection")
        q = features.values @ self.query_proj.values.T
        k = text.values @ self.key_proj.values.T
        v = text.values @ self.value_proj.values.T
        return Grid2D(q), Grid2D(k), Grid2D(v)


@dataclass(frozen=True, eq=False)
class StackEntry:
    step: int
    block: str
    maps: Grid3D


@dataclass(frozen=True, eq=False)
class AttentionCollection:
    """All attention stacks gathered over a denoising run (one per step x block)."""

    entries: tuple[StackEntry, ...]
    step_count: int
    block_ids: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "block_ids", tuple(self.block_ids))
        if self.step_count < 1:
            raise ValueError(f"step_count must be >= 1, got {self.step_count}")
        if self.entries:
            tokens = {e.maps.layers for e in self.entries}
            if len(tokens) != 1:
                raise ValueError(f"inconsistent token counts across stacks: {sorted(tokens)}")

    @property
    def token_count(self) -> int:
        if not self.entries:
            raise ValueError("empty attention collection")
        return self.entries[0].maps.layers


def cross_attention(
    query: Grid2D,
    key: Grid2D,
    value: Grid2D,
    key_dim: int,
    spatial: tuple[int, int] | None = None,
) -> tuple[Grid3D, Grid2D]:
    """Scaled dot-product cross-attention.

    Returns the L token maps softmax(Q K^T / sqrt(d)) reshaped over the
    spatial grid (default 1 x P) and the updated features M . V.
    """
    if key_dim <= 0:
        raise ValueError(f"key_dim must be positive, got {key_dim}")
    if query.width != key_dim or key.width != key_dim:
        raise ValueError(
            f"query/key width must equal key_dim={key_dim}, "
            f"got {query.width} and {key.width}"
        )
    if key.height != value.height:
        raise ValueError("key and value must have the same number of rows")
    p = query.height
    tokens = key.height
    if spatial is None:
        spatial = (1, p)
    if spatial[0] * spatial[1] != p:
        raise ValueError(f"spatial shape {spatial} does not factor {p} rows")

    q = query.values.astype(np.float64)
    k = key.values.astype(np.float64)
    logits = (q @ k.T) / np.sqrt(float(key_dim))
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)

    maps = weights.T.reshape(tokens, spatial[0], spatial[1])
    updated = weights @ value.values.astype(np.float64)
    return Grid3D(maps.astype(np.float32)), Grid2D(updated.astype(np.float32))


def average_maps(collection: AttentionCollection, config: LocalizerConfig) -> Grid3D:
    """Mean all stacks, resize token maps to the target size, and jointly
    min-max normalize the whole stack to [0, 255].

    A degenerate stack (max == min) normalizes to all zeros.  Stacks with
    mixed native resolutions are resized to the target before averaging;
    bilinear resampling is linear, so the result matches the uniform-
    resolution path up to rounding.
    """
    if not collection.entries:
        raise ValueError("empty attention collection")
    tokens = collection.token_count
    shapes = {(e.maps.height, e.maps.width) for e in collection.entries}

    if len(shapes) == 1:
        acc = np.zeros((tokens,) + next(iter(shapes)), dtype=np.float64)
        for entry in collection.entries:
            acc += entry.maps.values
        acc /= len(collection.entries)
        resized = np.stack(
            [
                resize_bilinear(Grid2D(acc[l]), config.target_h, config.target_w).values
                for l in range(tokens)
            ]
        ).astype(np.float64)
    else:
        resized = np.zeros((tokens, config.target_h, config.target_w), dtype=np.float64)
        for entry in collection.entries:
            for l in range(tokens):
                resized[l] += resize_bilinear(
                    entry.maps.layer(l), config.target_h, config.target_w
                ).values
        resized /= len(collection.entries)

    lo = resized.min()
    hi = resized.max()
    if hi == lo:
        return Grid3D(np.zeros_like(resized, dtype=np.float32))
    scaled = (resized - lo) * (255.0 / (hi - lo))
    return Grid3D(scaled.astype(np.float32))


def binarize_location(m_a: Grid3D, config: LocalizerConfig) -> BinaryMask:
    """Threshold the first-vs-last token map difference into the rough mask.

    A pixel is marked as edit region iff map[first] - map[last] is strictly
    below threshold_T; the ``invert`` flag flips the polarity.
    """
    if m_a.layers < 2:
        raise ValueError(f"need at least 2 token maps, got {m_a.layers}")
    diff = m_a.values[0] - m_a.values[-1]
    mask = diff < np.float32(config.threshold_T)
    if config.invert:
        mask = ~mask
    return BinaryMask(mask)


def load_attention_manifest(path) -> AttentionCollection:
    """Read an attention manifest: step/block metadata plus one ZTF per stack.

    Schema: {"step_count": int, "block_ids": [str], "stacks":
    [{"step": int, "block": str, "path": str}, ...]}; stack paths are
    relative to the manifest's directory.
    """
    manifest_path = Path(path)
    doc = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    entries = []
    for item in doc["stacks"]:
        grid = read_tensor(base / item["path"])
        if not isinstance(grid, Grid3D):
            raise ValueError(f"attention stack {item['path']!r} is not rank-3")
        entries.append(StackEntry(step=int(item["step"]), block=str(item["block"]), maps=grid))
    return AttentionCollection(
        entries=tuple(entries),
        step_count=int(doc["step_count"]),
        block_ids=tuple(str(b) for b in doc.get("block_ids", ())),
    )
