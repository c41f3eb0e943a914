from .rng import Rng, rng_uniform, stream_id
from .video import KeyframeSet, MaskSequence, Video
from .io import (
    TensorBlob,
    load_frame,
    load_mask_sequence,
    load_tensor,
    load_video,
    save_frame,
    save_mask_sequence,
    save_tensor,
    save_video,
)

__all__ = [
    "Rng",
    "rng_uniform",
    "stream_id",
    "Video",
    "MaskSequence",
    "KeyframeSet",
    "TensorBlob",
    "save_tensor",
    "load_tensor",
    "save_video",
    "load_video",
    "save_frame",
    "load_frame",
    "save_mask_sequence",
    "load_mask_sequence",
]
