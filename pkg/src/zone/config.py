"""Pipeline configuration with file/env/flag precedence.

Precedence, lowest to highest: built-in defaults, a single JSON config
document, ZONE_* environment variables, explicit overrides (CLI flags).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

from .denoise import FusionConfig
from .localizer import LocalizerConfig
from .smoother import SmootherConfig


@dataclass(frozen=True)
class PipelineConfig:
    threshold_T: int = 128
    beta_remove: float = 0.2
    beta_other: float = 0.01
    cutoff_D0: float = 200.0
    steps: int = 20
    dilation_radius: float = 15.0
    g_threshold: float = 10.0
    closing_radius: float = 5.0
    min_riou: float = 0.0
    invert_localization: bool = False

    def __post_init__(self):
        # delegate range checks to the owning configs
        self.smoother()
        self.fusion()
        if not 0 <= self.threshold_T <= 255:
            raise ValueError(f"threshold_T must be in [0, 255], got {self.threshold_T}")
        if not 0.0 <= self.min_riou <= 1.0:
            raise ValueError(f"min_riou must be in [0, 1], got {self.min_riou}")

    def localizer(self, target_h: int, target_w: int) -> LocalizerConfig:
        return LocalizerConfig(
            target_h=target_h,
            target_w=target_w,
            threshold_T=self.threshold_T,
            invert=self.invert_localization,
        )

    def smoother(self) -> SmootherConfig:
        return SmootherConfig(
            cutoff_D0=self.cutoff_D0,
            dilation_radius=self.dilation_radius,
            g_threshold=self.g_threshold,
            closing_radius=self.closing_radius,
        )

    def fusion(self) -> FusionConfig:
        return FusionConfig(
            beta_remove=self.beta_remove, beta_other=self.beta_other, steps=self.steps
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}

ENV_PREFIX = "ZONE_"


def _coerce(name: str, raw) -> int | float | bool:
    kind = _FIELD_TYPES[name]
    if kind == "bool":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean config {name}={raw!r}")
    if kind == "int":
        return int(raw)
    return float(raw)


def resolve_config(
    config_file=None, env: dict | None = None, overrides: dict | None = None
) -> PipelineConfig:
    """Merge config sources into a PipelineConfig (flags > env > file > defaults)."""
    values: dict = {}

    if config_file is not None:
        doc = json.loads(open(config_file).read())
        if not isinstance(doc, dict):
            raise ValueError(f"config file {config_file!r} must hold a JSON object")
        for key, val in doc.items():
            if key not in _FIELD_TYPES:
                raise ValueError(f"unknown config key {key!r} in {config_file!r}")
            values[key] = _coerce(key, val)

    env = os.environ if env is None else env
    for name in _FIELD_TYPES:
        var = ENV_PREFIX + name.upper()
        if var in env:
            values[name] = _coerce(name, env[var])

    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELD_TYPES:
            raise ValueError(f"unknown config override {key!r}")
        values[key] = _coerce(key, val)

    return PipelineConfig(**values)
