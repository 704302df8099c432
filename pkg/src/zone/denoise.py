"""Fused-denoiser arithmetic and a deterministic mock denoiser.

The two tensor operations here are the guidance combination over three noise
predictions and the action-weighted fusion of two denoised latents.  The
mock denoiser drives both with counter-based pseudo-randomness to synthesize
attention stacks and latents for the rest of the pipeline, implanting a
known edit region so localization quality can be measured against ground
truth without any pretrained model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .actions import EditAction
from .grids import BinaryMask, Grid2D, Grid3D
from .localizer import AttentionCollection, StackEntry

DEFAULT_BLOCK_IDS = ("up1", "up2", "up3", "down2", "down3", "down4")

# rng stream ids used by the mock
_S_EPS_UNCOND = 1
_S_EPS_IMG = 2
_S_EPS_FULL = 3
_S_CLEAN = 6
_S_ATT = 7


@dataclass(frozen=True)
class GuidanceScales:
    image_scale: float = 1.5
    text_scale: float = 7.5

    def __post_init__(self):
        for name, v in (("image_scale", self.image_scale), ("text_scale", self.text_scale)):
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class FusionConfig:
    beta_remove: float = 0.2
    beta_other: float = 0.01
    steps: int = 20

    def __post_init__(self):
        if self.beta_remove < 0 or self.beta_other < 0:
            raise ValueError("betas must be >= 0")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")

    def beta_for(self, action: EditAction) -> float:
        return self.beta_remove if action == EditAction.REMOVE else self.beta_other


def cfg_combine(
    eps_uncond: Grid2D, eps_img: Grid2D, eps_full: Grid2D, scales: GuidanceScales
) -> Grid2D:
    """Classifier-free guidance over (unconditional, image-only, full) noise.

    out = e_uu + s_I * (e_iu - e_uu) + s_T * (e_it - e_iu), elementwise.
    """
    shape = eps_uncond.values.shape
    if eps_img.values.shape != shape or eps_full.values.shape != shape:
        raise ValueError(
            f"shape mismatch: {shape} vs {eps_img.values.shape} vs {eps_full.values.shape}"
        )
    e_uu = eps_uncond.values.astype(np.float64)
    e_iu = eps_img.values.astype(np.float64)
    e_it = eps_full.values.astype(np.float64)
    out = e_uu + scales.image_scale * (e_iu - e_uu) + scales.text_scale * (e_it - e_iu)
    return Grid2D(out.astype(np.float32))


def fuse_latents(
    z_main: Grid2D, z_aux: Grid2D, action: EditAction, config: FusionConfig
) -> Grid2D:
    """Blend the two editors' denoised latents: (z + beta * z') / (1 + beta).

    beta is the remove-strength when the action is REMOVE, else the weaker
    default, so removals lean harder on the auxiliary editor.
    """
    if z_main.values.shape != z_aux.values.shape:
        raise ValueError(
            f"shape mismatch: {z_main.values.shape} vs {z_aux.values.shape}"
        )
    beta = config.beta_for(action)
    fused = (z_main.values.astype(np.float64) + beta * z_aux.values.astype(np.float64)) / (
        1.0 + beta
    )
    return Grid2D(fused.astype(np.float32))


def _box_mean(bits: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-average a boolean raster onto a coarser grid (out dims <= in dims)."""
    arr = bits.astype(np.float64)
    h, w = arr.shape
    rows = (np.arange(out_h) * h) // out_h
    cols = (np.arange(out_w) * w) // out_w
    sums = np.add.reduceat(np.add.reduceat(arr, rows, axis=0), cols, axis=1)
    heights = np.diff(np.append(rows, h)).astype(np.float64)
    widths = np.diff(np.append(cols, w)).astype(np.float64)
    return sums / (heights[:, None] * widths[None, :])


@dataclass(frozen=True, eq=False)
class MockDenoiser:
    """Deterministic stand-in for the fused denoiser.

    Token maps converge to a shared anchor field inside ``implanted_region``,
    so the first-vs-last token difference collapses exactly there and the
    localization stage can recover the region.  All draws are pure functions
    of (seed, step, block, token, pixel).
    """

    seed: int
    noise_schedule: tuple[float, ...]
    implanted_region: BinaryMask
    token_count: int = 8
    att_downscale: int = 4
    block_ids: tuple[str, ...] = DEFAULT_BLOCK_IDS
    map_noise: float = 0.03
    token_floor: float = 0.08  # brightness of the end-of-text token map

    def __post_init__(self):
        object.__setattr__(self, "noise_schedule", tuple(float(a) for a in self.noise_schedule))
        object.__setattr__(self, "block_ids", tuple(self.block_ids))
        sched = np.asarray(self.noise_schedule, dtype=np.float64)
        if sched.size == 0:
            raise ValueError("noise_schedule must be nonempty")
        if np.any(sched <= 0) or np.any(sched > 1):
            raise ValueError("alpha values must lie in (0, 1]")
        if np.any(np.diff(sched) < 0):
            raise ValueError("noise level must decrease: alpha must be non-decreasing")
        if self.token_count < 2:
            raise ValueError(f"token_count must be >= 2, got {self.token_count}")
        if self.att_downscale < 1:
            raise ValueError("att_downscale must be >= 1")
        if not 0 <= self.map_noise < 1:
            raise ValueError("map_noise must be in [0, 1)")
        if not 0 < self.token_floor < 1:
            raise ValueError("token_floor must be in (0, 1)")

    @property
    def steps(self) -> int:
        return len(self.noise_schedule)


def default_schedule(steps: int) -> tuple[float, ...]:
    """Alpha ramp from noisy to clean over the run."""
    return tuple(np.linspace(0.05, 1.0, steps))


def run_fused_denoise(
    mock: MockDenoiser,
    instruction_action: EditAction,
    scales: GuidanceScales,
    config: FusionConfig,
) -> tuple[Grid2D, AttentionCollection]:
    """Run the mock denoising loop.

    Each step synthesizes three noise predictions per model, combines them
    with classifier-free guidance, fuses the two models' latents with the
    action-selected beta, and emits one attention stack per attention block.
    Returns the final fused latent and the full attention collection.
    """
    if len(mock.noise_schedule) != config.steps:
        raise ValueError(
            f"noise_schedule length {len(mock.noise_schedule)} != steps {config.steps}"
        )
    region = mock.implanted_region
    att_h = max(1, region.height // mock.att_downscale)
    att_w = max(1, region.width // mock.att_downscale)
    npix = att_h * att_w
    coverage = _box_mean(region.bits, att_h, att_w)

    tokens = mock.token_count
    blocks = mock.block_ids
    # token brightness ramps down from 1.0 to the floor along the prompt
    brightness = np.linspace(1.0, mock.token_floor, tokens)

    def unit_noise(stream: int, offset: int) -> np.ndarray:
        u = rng.uniforms(mock.seed, stream, npix, offset=offset)
        return (2.0 * u - 1.0).reshape(att_h, att_w)

    # pseudo clean latent; the edit shifts it inside the implanted region
    clean = rng.uniforms(mock.seed, _S_CLEAN, npix).reshape(att_h, att_w) + 0.4 * coverage

    entries = []
    latent = None
    for step, alpha in enumerate(mock.noise_schedule):
        per_model = []
        for model_idx in (0, 1):
            off = (step * 2 + model_idx) * npix
            eps = cfg_combine(
                Grid2D(unit_noise(_S_EPS_UNCOND, off)),
                Grid2D(unit_noise(_S_EPS_IMG, off)),
                Grid2D(unit_noise(_S_EPS_FULL, off)),
                scales,
            )
            z = np.sqrt(alpha) * clean + np.sqrt(1.0 - alpha) * eps.values
            per_model.append(Grid2D(z.astype(np.float32)))
        latent = fuse_latents(per_model[0], per_model[1], instruction_action, config)

        for block_idx, block in enumerate(blocks):
            base = (step * len(blocks) + block_idx) * (tokens + 1) * npix
            anchor = mock.token_floor * (
                1.0 + mock.map_noise * unit_noise(_S_ATT, base + tokens * npix)
            )
            stack = np.empty((tokens, att_h, att_w), dtype=np.float64)
            for l in range(tokens):
                free = brightness[l] * (
                    1.0 + mock.map_noise * unit_noise(_S_ATT, base + l * npix)
                )
                stack[l] = (1.0 - coverage) * free + coverage * anchor
            entries.append(StackEntry(step=step, block=block, maps=Grid3D(stack.astype(np.float32))))

    collection = AttentionCollection(
        entries=tuple(entries), step_count=config.steps, block_ids=blocks
    )
    return latent, collection
