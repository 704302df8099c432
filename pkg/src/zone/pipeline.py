"""End-to-end edit pipeline over file inputs.

Stage order: classify, localize (average + binarize), refine, smooth,
extract, composite.  Every failure is tagged with the stage it came from;
timings and the resolved configuration are embedded in the report so runs
are auditable and reproducible.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from .classifier import classify, load_params
from .compositor import (
    EditSession,
    extract_layer,
    load_session,
    pixel_metrics,
    save_session,
)
from .config import PipelineConfig
from .grids import Grid2D, read_image, read_tensor, write_image
from .localizer import average_maps, binarize_location, load_attention_manifest
from .refine import load_segment_set, refine
from .smoother import smooth


class StageError(RuntimeError):
    """Pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class _Stages:
    def __init__(self):
        self.seconds: dict[str, float] = {}

    def run(self, name: str, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        self.seconds[name] = time.perf_counter() - start
        return result


def _resolve(base: Path, rel) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base / p


def run_edit(
    manifest_path,
    config: PipelineConfig,
    out_dir,
    original_path=None,
    instruction: str | None = None,
    session_dir=None,
    layer_name: str | None = None,
    seed: int | None = None,
) -> dict:
    """Execute one edit from a case manifest and write the session, the
    flattened composite, and a JSON report under ``out_dir``."""
    stages = _Stages()
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    base_dir = manifest_path.parent

    if original_path is None:
        original_path = _resolve(base_dir, manifest["original"])
    if instruction is None:
        instruction = manifest.get("instruction", "")

    original = stages.run("load-original", read_image, original_path)
    canvas = stages.run("load-canvas", read_image, _resolve(base_dir, manifest["canvas"]))
    if (canvas.height, canvas.width) != (original.height, original.width):
        raise StageError(
            "load-canvas",
            ValueError("canvas and original dimensions differ"),
        )

    def _classify():
        params = load_params(_resolve(base_dir, manifest["classifier_params"]))
        tensor = read_tensor(_resolve(base_dir, manifest["instruction_embedding"]))
        if not isinstance(tensor, Grid2D):
            raise ValueError("instruction embedding must be a rank-2 tensor")
        return classify(params, np.asarray(tensor.values).ravel())

    action = stages.run("classify", _classify)

    def _localize():
        collection = load_attention_manifest(_resolve(base_dir, manifest["attention_manifest"]))
        local_cfg = config.localizer(original.height, original.width)
        location = binarize_location(average_maps(collection, local_cfg), local_cfg)
        if location.area == 0:
            raise ValueError("no edit region located")
        return location

    location = stages.run("localize", _localize)

    def _refine():
        segments = load_segment_set(_resolve(base_dir, manifest["segments"]))
        mask, index, score = refine(segments, location)
        if score < config.min_riou:
            raise ValueError(
                f"best rIoU {score:.6f} below min_riou {config.min_riou:.6f}"
            )
        return mask, index, score

    refined, segment_index, riou_score = stages.run("refine", _refine)

    final_mask = stages.run("smooth", smooth, original, canvas, refined, config.smoother())

    name = layer_name
    session_path = Path(session_dir) if session_dir is not None else Path(out_dir) / "session"

    def _session():
        if (session_path / "session.json").exists():
            session = load_session(session_path)
            if not np.array_equal(session.base.samples, original.samples):
                raise ValueError("existing session base differs from the original image")
        else:
            session = EditSession(original)
        layer = extract_layer(
            canvas,
            final_mask,
            name=name or f"edit-{len(session.layers) + 1:03d}",
            instruction=instruction,
            action=action,
        )
        session.add_layer(layer)
        save_session(session, session_path)
        return session

    session = stages.run("composite", _session)
    composite_image = session.flatten()
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    write_image(composite_image, out_root / "composite.png")

    metrics = pixel_metrics(composite_image, original)
    union = np.zeros((original.height, original.width), dtype=bool)
    for layer in session.layers:
        union |= layer.mask.bits
    outside = ~union
    complement_l1 = float(
        np.mean(
            np.abs(
                composite_image.samples[outside].astype(np.float64)
                - original.samples[outside].astype(np.float64)
            )
        )
        / 255.0
    ) if outside.any() else 0.0

    report = {
        "instruction": instruction,
        "action": action.name.lower(),
        "segment_index": segment_index,
        "riou": riou_score,
        "mask_areas": {
            "location": location.area,
            "refined": refined.area,
            "final": final_mask.area,
        },
        "metrics_vs_original": metrics,
        "complement_l1": complement_l1,
        "layer_count": len(session.layers),
        "session_dir": str(session_path),
        "composite": str(out_root / "composite.png"),
        "config": config.to_dict(),
        "seed": seed,
        "stage_seconds": stages.seconds,
    }
    (out_root / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report
