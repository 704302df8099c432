"""Synthetic end-to-end cases: original, canvas, attention, segments, truth.

A fixture is everything the pipeline consumes for one edit, generated
deterministically from a seed so acceptance checks can measure mask quality
against a known ground-truth region without any pretrained model.  The
canvas repaints the region with a luma-contrasting fill, guaranteeing the
spectral difference stage has signal everywhere inside the edit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import rng
from .actions import EditAction
from .classifier import make_synthetic_dataset, save_params, train
from .denoise import FusionConfig, GuidanceScales, MockDenoiser, default_schedule, run_fused_denoise
from .grids import BinaryMask, Grid2D, Image, resize_bilinear, write_image, write_mask, write_tensor
from .localizer import AttentionCollection
from .refine import SegmentSet, save_segment_set

_S_COARSE = 31
_S_FINE = 32
_S_EDIT = 33
_S_BLOB = 34
_S_EMB = 35

_BRIGHT_FILL = np.array([225.0, 210.0, 60.0])
_DARK_FILL = np.array([30.0, 25.0, 90.0])


@dataclass(frozen=True)
class FixtureSpec:
    seed: int = 7
    height: int = 512
    width: int = 512
    shape: str = "square"  # "square" or "disk"
    extent: int = 64  # side length or disk diameter
    center: tuple[int, int] | None = None
    instruction: str = "change the marked object"
    action: EditAction = EditAction.CHANGE
    steps: int = 20
    att_downscale: int = 4

    def __post_init__(self):
        if self.shape not in ("square", "disk"):
            raise ValueError(f"shape must be 'square' or 'disk', got {self.shape!r}")
        if self.extent < 2:
            raise ValueError(f"extent must be >= 2, got {self.extent}")
        if self.extent > min(self.height, self.width):
            raise ValueError("extent exceeds image size")


def region_mask(spec: FixtureSpec) -> BinaryMask:
    """Ground-truth edit region: axis-aligned square or centered disk."""
    cy, cx = spec.center if spec.center is not None else (spec.height // 2, spec.width // 2)
    bits = np.zeros((spec.height, spec.width), dtype=bool)
    if spec.shape == "square":
        half = spec.extent // 2
        y0, x0 = cy - half, cx - half
        bits[max(0, y0) : y0 + spec.extent, max(0, x0) : x0 + spec.extent] = True
    else:
        radius = spec.extent / 2.0
        yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
        bits = ((yy - cy) ** 2 + (xx - cx) ** 2) <= radius * radius
    return BinaryMask(bits)


def synth_original(seed: int, height: int, width: int) -> Image:
    """Deterministic textured photo stand-in: coarse gradients + fine grain."""
    channels = []
    for ch in range(3):
        coarse = rng.uniforms(seed, _S_COARSE, 64, offset=ch * 64).reshape(8, 8)
        field = resize_bilinear(Grid2D(coarse.astype(np.float32)), height, width).values
        fine = rng.uniforms(seed, _S_FINE, height * width, offset=ch * height * width)
        plane = 40.0 + 175.0 * field + 24.0 * (fine.reshape(height, width) - 0.5)
        channels.append(plane)
    stacked = np.clip(np.stack(channels, axis=-1), 0, 255)
    return Image(stacked.astype(np.uint8))


def paint_edit(original: Image, region: BinaryMask, seed: int) -> Image:
    """Repaint the region with a fill chosen to flip the local luma.

    Dark pixels get a bright fill and vice versa, so the luma change inside
    the region stays far above the edge-smoother threshold.
    """
    rgb = original.samples[:, :, :3].astype(np.float64)
    luma = rgb @ np.array([0.299, 0.587, 0.114])
    target = np.where(luma[:, :, None] < 128.0, _BRIGHT_FILL, _DARK_FILL)
    h, w = region.height, region.width
    grain = rng.uniforms(seed, _S_EDIT, h * w * 3).reshape(h, w, 3)
    edited = 0.25 * rgb + 0.75 * target + 16.0 * (grain - 0.5)
    out = np.where(region.bits[:, :, None], np.clip(edited, 0, 255), rgb)
    return Image(out.astype(np.uint8))


def distractor_segments(region: BinaryMask, seed: int) -> SegmentSet:
    """Candidate pool: the true region buried among plausible decoys."""
    h, w = region.height, region.width
    bits = region.bits

    shifted = np.roll(bits, (h // 8, w // 10), axis=(0, 1))
    grown = ndimage.binary_dilation(bits, iterations=max(2, h // 40))
    shrunk = ndimage.binary_erosion(bits, iterations=max(2, h // 60))
    if not shrunk.any():
        shrunk = bits & np.roll(bits, 1, axis=0)

    cy = int(h * (0.2 + 0.5 * rng.uniforms(seed, _S_BLOB, 1)[0]))
    cx = int(w * (0.2 + 0.5 * rng.uniforms(seed, _S_BLOB, 1, offset=1)[0]))
    radius = max(4, h // 12)
    yy, xx = np.mgrid[0:h, 0:w]
    blob = ((yy - cy) ** 2 + (xx - cx) ** 2) <= radius * radius

    corner = np.zeros((h, w), dtype=bool)
    corner[: h // 16 + 1, : w // 16 + 1] = True

    candidates = [
        np.ones((h, w), dtype=bool),  # whole frame
        shifted,
        grown,
        bits,  # the true region
        shrunk,
        blob,
        corner,
    ]
    return SegmentSet(
        segments=tuple(BinaryMask(c) for c in candidates),
        source_levels=(0, 1, 1, 1, 2, 1, 2),
    )


def instruction_embedding(seed: int, action: EditAction, dim: int = 768) -> np.ndarray:
    """A fresh sample from the action's synthetic embedding blob."""
    ds = make_synthetic_dataset(seed=seed, per_class_train=1, per_class_test=1, dim=dim)
    # reuse the blob geometry: take the train sample of the right class and
    # jitter it with an independent draw so fixtures differ from the dataset
    base = next(s.embedding for s in ds.train if s.label == int(action))
    jitter = 0.002 * rng.gaussians(seed, _S_EMB, dim)
    return base + jitter


def generate_fixture(out_dir, spec: FixtureSpec) -> dict:
    """Write a complete case directory and return its manifest."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    region = region_mask(spec)
    original = synth_original(spec.seed, spec.height, spec.width)
    canvas = paint_edit(original, region, spec.seed)

    mock = MockDenoiser(
        seed=spec.seed,
        noise_schedule=default_schedule(spec.steps),
        implanted_region=region,
        att_downscale=spec.att_downscale,
    )
    _, collection = run_fused_denoise(
        mock, spec.action, GuidanceScales(), FusionConfig(steps=spec.steps)
    )

    write_image(original, root / "original.png")
    write_image(canvas, root / "canvas.png")
    write_mask(region, root / "ground_truth.png")
    save_attention(collection, root / "attention")
    save_segment_set(distractor_segments(region, spec.seed), root / "segments")

    dataset = make_synthetic_dataset(seed=spec.seed)
    result = train(dataset, seed=spec.seed)
    save_params(result.params, root / "classifier")
    embedding = instruction_embedding(spec.seed, spec.action)
    write_tensor(Grid2D(embedding.reshape(1, -1).astype(np.float32)), root / "instruction.ztf")

    manifest = {
        "original": "original.png",
        "canvas": "canvas.png",
        "attention_manifest": "attention/attention.json",
        "segments": "segments",
        "classifier_params": "classifier",
        "instruction_embedding": "instruction.ztf",
        "ground_truth_mask": "ground_truth.png",
        "instruction": spec.instruction,
        "action": spec.action.name.lower(),
        "seed": spec.seed,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def save_attention(collection: AttentionCollection, out_dir) -> None:
    """One ZTF per stack plus the attention manifest consumed by the localizer."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    stacks = []
    for entry in collection.entries:
        name = f"step{entry.step:02d}_{entry.block}.ztf"
        write_tensor(entry.maps, root / name)
        stacks.append({"step": entry.step, "block": entry.block, "path": name})
    manifest = {
        "step_count": collection.step_count,
        "block_ids": list(collection.block_ids),
        "stacks": stacks,
    }
    (root / "attention.json").write_text(json.dumps(manifest, indent=2) + "\n")
