"""Region-IoU selection of the best segment candidate for the rough mask."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grids import BinaryMask, read_mask


@dataclass(frozen=True, eq=False)
class SegmentSet:
    """Candidate instance segments, all levels pooled into one flat list."""

    segments: tuple[BinaryMask, ...]
    source_levels: tuple[int | None, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("SegmentSet must contain at least one segment")
        dims = {(s.height, s.width) for s in self.segments}
        if len(dims) != 1:
            raise ValueError(f"segments must share dimensions, got {sorted(dims)}")
        if self.source_levels is not None:
            levels = tuple(self.source_levels)
            if len(levels) != len(self.segments):
                raise ValueError("source_levels length must match segments")
            object.__setattr__(self, "source_levels", levels)

    def __len__(self) -> int:
        return len(self.segments)


def region_iou(segment: BinaryMask, location: BinaryMask) -> float:
    """Intersection-over-union between a candidate segment and the rough mask.

    Returns 0.0 when the union is empty.
    """
    if (segment.height, segment.width) != (location.height, location.width):
        raise ValueError(
            f"dimension mismatch: {segment.height}x{segment.width} vs "
            f"{location.height}x{location.width}"
        )
    inter = int(np.count_nonzero(segment.bits & location.bits))
    union = int(np.count_nonzero(segment.bits | location.bits))
    if union == 0:
        return 0.0
    return inter / union


def refine(segments: SegmentSet, location: BinaryMask) -> tuple[BinaryMask, int, float]:
    """Pick the candidate with the highest region IoU against the rough mask.

    Ties break to the lowest index.  An all-zero location mask is an error:
    it means no edit region was located and silently returning an arbitrary
    segment would corrupt everything downstream.
    """
    if location.area == 0:
        raise ValueError("no edit region located: location mask is empty")
    first = segments.segments[0]
    if (first.height, first.width) != (location.height, location.width):
        raise ValueError(
            f"segments are {first.height}x{first.width} but location is "
            f"{location.height}x{location.width}"
        )
    best_index = 0
    best_score = -1.0
    for j, seg in enumerate(segments.segments):
        score = region_iou(seg, location)
        if score > best_score:
            best_index = j
            best_score = score
    return segments.segments[best_index], best_index, best_score


def load_segment_set(path) -> SegmentSet:
    """Read a segment directory: 1-bit PNG masks plus a manifest.

    Schema of ``segments.json``: {"segments": [{"path": str,
    "level": int | null}, ...]}; paths are relative to the directory.
    """
    root = Path(path)
    manifest = json.loads((root / "segments.json").read_text())
    masks = []
    levels = []
    for item in manifest["segments"]:
        masks.append(read_mask(root / item["path"]))
        levels.append(item.get("level"))
    return SegmentSet(segments=tuple(masks), source_levels=tuple(levels))


def save_segment_set(segments: SegmentSet, path) -> None:
    """Write a SegmentSet as a directory of 1-bit PNGs plus segments.json."""
    from .grids import write_mask

    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    items = []
    for j, seg in enumerate(segments.segments):
        name = f"segment_{j:03d}.png"
        write_mask(seg, root / name)
        level = None if segments.source_levels is None else segments.source_levels[j]
        items.append({"path": name, "level": level})
    (root / "segments.json").write_text(json.dumps({"segments": items}, indent=2) + "\n")
