"""Edited-layer extraction, lossless compositing, and edit sessions.

Layers carry hard alpha (0 or 255): a pixel either comes from the edited
canvas or shows the base image bit-for-bit.  That makes the core guarantee
of the whole pipeline checkable with integer equality: compositing never
touches pixels outside the union of layer masks.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .actions import EditAction
from .grids import BinaryMask, Image, read_image, read_mask, write_image, write_mask
from .refine import region_iou


@dataclass(frozen=True, eq=False)
class EditLayer:
    name: str
    pixels: Image  # RGBA; RGB zeroed where alpha is 0
    mask: BinaryMask
    instruction: str = ""
    action: EditAction = EditAction.CHANGE

    def __post_init__(self):
        if self.pixels.channels != 4:
            raise ValueError("layer pixels must be RGBA")
        if (self.pixels.height, self.pixels.width) != (self.mask.height, self.mask.width):
            raise ValueError("layer pixels and mask dimensions differ")
        alpha = self.pixels.samples[:, :, 3]
        if not np.array_equal(alpha == 255, self.mask.bits):
            raise ValueError("alpha must be 255 exactly where the mask is set")
        if np.any(self.pixels.samples[:, :, :3][~self.mask.bits]):
            raise ValueError("RGB must be zero outside the mask")


def extract_layer(
    canvas: Image,
    final_mask: BinaryMask,
    name: str = "edit",
    instruction: str = "",
    action: EditAction = EditAction.CHANGE,
) -> EditLayer:
    """Cut the edited layer out of the canvas: canvas color under the mask,
    transparent (and black) everywhere else."""
    if (canvas.height, canvas.width) != (final_mask.height, final_mask.width):
        raise ValueError(
            f"dimension mismatch: canvas {canvas.height}x{canvas.width} vs "
            f"mask {final_mask.height}x{final_mask.width}"
        )
    rgba = np.zeros((canvas.height, canvas.width, 4), dtype=np.uint8)
    rgba[:, :, :3] = np.where(final_mask.bits[:, :, None], canvas.samples[:, :, :3], 0)
    rgba[:, :, 3] = np.where(final_mask.bits, 255, 0)
    return EditLayer(
        name=name, pixels=Image(rgba), mask=final_mask, instruction=instruction, action=action
    )


def composite(base: Image, layers: list[EditLayer] | tuple[EditLayer, ...]) -> Image:
    """Back-to-front hard overlay.

    For each pixel the topmost (latest) layer with alpha 255 wins; where no
    layer covers, the base sample is copied bit-identically.
    """
    out = np.array(base.samples, copy=True)
    for layer in layers:
        if (layer.pixels.height, layer.pixels.width) != (base.height, base.width):
            raise ValueError(
                f"layer {layer.name!r} is {layer.pixels.height}x{layer.pixels.width} "
                f"but base is {base.height}x{base.width}"
            )
        covered = layer.mask.bits
        out[:, :, :3][covered] = layer.pixels.samples[:, :, :3][covered]
    return Image(out)


class EditSession:
    """Ordered stack of named layers over a base image.

    Single-writer: mutations append to an operation history that, replayed
    against the same layer catalog, reproduces the identical flattened
    image.  Timestamps come from the injected clock; the default logical
    clock keeps session files byte-reproducible.
    """

    def __init__(self, base: Image, clock: Callable[[], str] | None = None):
        self.base = base
        self.layers: list[EditLayer] = []
        self.history: list[dict] = []
        self._clock = clock
        self._ticks = 0

    def _now(self) -> str:
        if self._clock is not None:
            return self._clock()
        self._ticks += 1
        return f"t{self._ticks:06d}"

    def _log(self, op: str, **details) -> None:
        self.history.append({"op": op, "timestamp": self._now(), **details})

    def layer_names(self) -> list[str]:
        return [layer.name for layer in self.layers]

    def _index_of(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise KeyError(f"no layer named {name!r}")

    def add_layer(self, layer: EditLayer) -> None:
        if (layer.pixels.height, layer.pixels.width) != (self.base.height, self.base.width):
            raise ValueError("layer dimensions must match the base image")
        if layer.name in self.layer_names():
            raise ValueError(f"duplicate layer name {layer.name!r}")
        self.layers.append(layer)
        self._log("add_layer", name=layer.name)

    def remove_layer(self, name: str) -> EditLayer:
        index = self._index_of(name)
        removed = self.layers.pop(index)
        self._log("remove_layer", name=name)
        return removed

    def reorder(self, name: str, index: int) -> None:
        if not 0 <= index < len(self.layers):
            raise ValueError(f"index {index} out of range for {len(self.layers)} layers")
        current = self._index_of(name)
        layer = self.layers.pop(current)
        self.layers.insert(index, layer)
        self._log("reorder", name=name, index=index)

    def flatten(self) -> Image:
        return composite(self.base, self.layers)


def replay_history(
    base: Image, history: list[dict], catalog: dict[str, EditLayer]
) -> EditSession:
    """Re-run a session's operation log against a layer catalog."""
    session = EditSession(base)
    for entry in history:
        op = entry["op"]
        if op == "add_layer":
            session.add_layer(catalog[entry["name"]])
        elif op == "remove_layer":
            session.remove_layer(entry["name"])
        elif op == "reorder":
            session.reorder(entry["name"], entry["index"])
        else:
            raise ValueError(f"unknown history op {op!r}")
    return session


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]+", "-", name).strip("-") or "layer"


def save_session(session: EditSession, path) -> None:
    """Session directory: base.png, layers/NN_name(.mask).png, session.json."""
    root = Path(path)
    (root / "layers").mkdir(parents=True, exist_ok=True)
    write_image(session.base, root / "base.png")
    records = []
    for i, layer in enumerate(session.layers):
        stem = f"{i:02d}_{_slug(layer.name)}"
        write_image(layer.pixels, root / "layers" / f"{stem}.png")
        write_mask(layer.mask, root / "layers" / f"{stem}.mask.png")
        records.append(
            {
                "name": layer.name,
                "instruction": layer.instruction,
                "action": layer.action.name.lower(),
                "pixels": f"layers/{stem}.png",
                "mask": f"layers/{stem}.mask.png",
            }
        )
    manifest = {"base": "base.png", "layers": records, "history": session.history}
    (root / "session.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_session(path) -> EditSession:
    root = Path(path)
    manifest = json.loads((root / "session.json").read_text())
    session = EditSession(read_image(root / manifest["base"]))
    for record in manifest["layers"]:
        layer = EditLayer(
            name=record["name"],
            pixels=read_image(root / record["pixels"]),
            mask=read_mask(root / record["mask"]),
            instruction=record.get("instruction", ""),
            action=EditAction.from_name(record.get("action", "change")),
        )
        session.layers.append(layer)
    session.history = list(manifest.get("history", []))
    session._ticks = len(session.history)
    return session


def pixel_metrics(a: Image, b: Image) -> dict[str, float]:
    """Mean absolute and mean squared sample difference, normalized to [0, 1]."""
    if a.samples.shape != b.samples.shape:
        raise ValueError(f"dimension mismatch: {a.samples.shape} vs {b.samples.shape}")
    diff = (
        a.samples.astype(np.float64) - b.samples.astype(np.float64)
    ) / 255.0
    return {"l1": float(np.mean(np.abs(diff))), "l2": float(np.mean(diff * diff))}


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection-over-union between two masks (0.0 when both are empty)."""
    return region_iou(a, b)


def upr(scores: list[float] | tuple[float, ...]) -> list[float]:
    """User-preference rates: each total as a percentage of the grand total."""
    totals = [float(s) for s in scores]
    if not totals:
        raise ValueError("scores must be nonempty")
    if any(s < 0 for s in totals):
        raise ValueError("scores must be >= 0")
    grand = sum(totals)
    if grand == 0:
        raise ValueError("scores must not all be zero")
    return [100.0 * s / grand for s in totals]
