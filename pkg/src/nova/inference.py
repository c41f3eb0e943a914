"""Multi-keyframe guided editing.

The edit flows through three stages: selected keyframes are edited one
by one (every keyframe after the first sees the edited first frame, so
a consistency-aware editor can anchor its choices to it), the edited
keyframes are linearly interpolated into a full-length reference, and
the trained denoiser samples the output with the reference on the
sparse branch and the original clip on the dense branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anchor import interpolate_reference
from .core import KeyframeSet, MaskSequence, Video
from .editors import KeyframeEditor
from .errors import KeyframeEditError
from .validation import as_video

__all__ = ["EditRequest", "EditResult", "edit_keyframes", "build_reference", "run_edit"]


@dataclass(frozen=True)
class EditRequest:
    """What to edit: a clip, where to anchor, and how."""

    source: Video
    keyframes: KeyframeSet
    prompt: str = ""
    masks: MaskSequence | None = None
    editor_id: str = "identity"

    def __post_init__(self):
        source = as_video(self.source)
        object.__setattr__(self, "source", source)
        if self.keyframes.last_index != source.last_index:
            raise KeyframeEditError(
                None,
                f"keyframes cover span {self.keyframes.last_index}, "
                f"clip span is {source.last_index}",
            )
        if self.masks is not None and not self.masks.matches(source):
            raise KeyframeEditError(None, "mask sequence does not match the clip")

    def mask_at(self, t: int):
        return None if self.masks is None else self.masks.mask(t)


@dataclass(frozen=True)
class EditResult:
    video: Video
    reference: Video
    edited_keyframes: dict
    manifest: dict = field(repr=False)


def edit_keyframes(req: EditRequest, editor: KeyframeEditor, anchored: bool = True) -> dict:
    """Edit every keyframe; returns index → edited frame.

    The first keyframe is edited without a reference; later ones receive
    the edited first frame (unless ``anchored`` is off, which mimics
    editing each keyframe independently).
    """
    edited = {}
    first_index = req.keyframes.indices[0]
    for k in req.keyframes:
        ref = edited[first_index] if (anchored and k != first_index) else None
        try:
            frame = editor.edit(
                req.source.frame(k), reference=ref, mask=req.mask_at(k), prompt=req.prompt
            )
        except KeyframeEditError:
            raise
        except Exception as exc:
            raise KeyframeEditError(k, f"editor {editor.editor_id!r} failed: {exc}") from exc
        frame = np.asarray(frame, dtype=np.float32)
        if frame.shape != req.source.frame(k).shape:
            raise KeyframeEditError(
                k, f"editor changed frame shape to {frame.shape}"
            )
        edited[k] = frame
    return edited


def build_reference(edited: dict, last_index: int) -> Video:
    """Interpolated reference from edited keyframes (anchors kept exact)."""
    return interpolate_reference(edited, last_index)


def run_edit(
    req: EditRequest,
    editor: KeyframeEditor,
    model,
    steps: int | None = None,
    seed: int = 0,
    anchored: bool = True,
    use_sparse: bool | None = None,
    use_dense: bool | None = None,
) -> EditResult:
    """Full pipeline: edit keyframes → build reference → sample."""
    edited = edit_keyframes(req, editor, anchored=anchored)
    reference = build_reference(edited, req.source.last_index)
    video = model.sample(
        reference,
        req.source,
        steps=steps,
        seed=seed,
        use_sparse=use_sparse,
        use_dense=use_dense,
    )
    manifest = {
        "keyframes": list(req.keyframes.indices),
        "editor": editor.editor_id,
        "prompt": req.prompt,
        "anchored": anchored,
        "seed": seed,
        "sample_steps": steps,
        "use_sparse": use_sparse,
        "use_dense": use_dense,
        "masked": req.masks is not None,
    }
    return EditResult(
        video=video, reference=reference, edited_keyframes=edited, manifest=manifest
    )
