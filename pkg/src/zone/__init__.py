"""Instruction-guided local image editing pipeline.

Stages: attention-based localization, Region-IoU mask refinement, FFT edge
smoothing, and lossless layer compositing, plus the action classifier that
steers the fused denoiser.
"""

from .actions import EditAction
from .grids import (
    BinaryMask,
    Grid2D,
    Grid3D,
    Image,
    read_image,
    read_mask,
    read_tensor,
    resize_bilinear,
    write_image,
    write_mask,
    write_tensor,
)
from .localizer import (
    AttentionCollection,
    AttentionInputs,
    LocalizerConfig,
    StackEntry,
    average_maps,
    binarize_location,
    cross_attention,
    load_attention_manifest,
)
from .denoise import (
    FusionConfig,
    GuidanceScales,
    MockDenoiser,
    cfg_combine,
    default_schedule,
    fuse_latents,
    run_fused_denoise,
)
from .refine import SegmentSet, load_segment_set, refine, region_iou, save_segment_set
from .smoother import (
    SmootherConfig,
    Spectrum,
    close_and_fill,
    difference_mask,
    dilate,
    fft2,
    ifft2,
    lowpass,
    smooth,
)
from .compositor import (
    EditLayer,
    EditSession,
    composite,
    extract_layer,
    load_session,
    mask_iou,
    pixel_metrics,
    replay_history,
    save_session,
    upr,
)
from .config import ENV_PREFIX, PipelineConfig, resolve_config
from .fixtures import FixtureSpec, generate_fixture, save_attention, synth_original
from .pipeline import StageError, run_edit
from .classifier import (
    AdamState,
    ClassifierParams,
    LabeledEmbedding,
    SplitDataset,
    TrainResult,
    adam_step,
    classify,
    forward,
    load_dataset,
    load_params,
    loss_and_grad,
    make_synthetic_dataset,
    save_dataset,
    save_params,
    train,
)

__version__ = "0.1.0"
