"""Sparse-control / dense-synthesis video editing at desk scale.

Training data is synthesized from unlabeled clips by two pipelines
(cut-and-paste pseudo-sources and degraded keyframe references), a
dual-branch conditioned denoiser learns to reconstruct the clean clip
from both, and at inference a handful of edited keyframes steer the
whole clip while the unedited source preserves everything else.
"""

from .anchor import AnchoredControlPipeline, build_degraded_reference, interpolate_reference
from .core import KeyframeSet, MaskSequence, Rng, Video
from .dataset import SceneConfig, make_clip, make_pair, make_pool
from .editors import IdentityEditor, KeyframeEditor, RecolorEditor, SpriteEditor, get_editor
from .errors import (
    ConfigError,
    DataError,
    DegenerateShapeError,
    KeyframeEditError,
    NovaError,
    NumericError,
)
from .fidelity import SourceFidelityPipeline, synth_pseudo_source
from .inference import EditRequest, EditResult, edit_keyframes, run_edit
from .metrics import GridEmbedder, MetricReport, bg_ssim, evaluate, psnr, ssim
from .model import DualBranchDenoiser, DualBranchNet, load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "AnchoredControlPipeline",
    "ConfigError",
    "DataError",
    "DegenerateShapeError",
    "DualBranchDenoiser",
    "DualBranchNet",
    "EditRequest",
    "EditResult",
    "GridEmbedder",
    "IdentityEditor",
    "KeyframeEditError",
    "KeyframeEditor",
    "KeyframeSet",
    "MaskSequence",
    "MetricReport",
    "NovaError",
    "NumericError",
    "RecolorEditor",
    "Rng",
    "SceneConfig",
    "SourceFidelityPipeline",
    "SpriteEditor",
    "Video",
    "bg_ssim",
    "build_degraded_reference",
    "edit_keyframes",
    "evaluate",
    "get_editor",
    "interpolate_reference",
    "load_checkpoint",
    "make_clip",
    "make_pair",
    "make_pool",
    "psnr",
    "run_edit",
    "save_checkpoint",
    "ssim",
    "synth_pseudo_source",
    "__version__",
]
