"""Keyframe editors: the pluggable per-frame edit step.

An editor maps (frame, reference frame or None, mask or None, prompt) to
an edited frame of the same shape. The reference, when given, is the
already-edited first keyframe; consistency-aware editors use it to keep
their choices aligned across keyframes. Pixels where the mask is zero
must come back unchanged.

Ships with oracle editors whose effect is known analytically, so edits
have exact ground truth: identity, flat recolor with per-call jitter,
and sprite add/remove against a pre-rendered scene pair.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod

import numpy as np

from .core import Rng
from .errors import DataError, KeyframeEditError
from .fidelity import composite_frame

__all__ = [
    "KeyframeEditor",
    "IdentityEditor",
    "RecolorEditor",
    "SpriteEditor",
    "get_editor",
    "parse_color",
]


class KeyframeEditor(ABC):
    """Contract: same-shape output; mask-zero pixels unchanged."""

    editor_id = "abstract"

    @abstractmethod
    def edit(self, frame, reference=None, mask=None, prompt: str = ""):
        """Return the edited frame."""


class IdentityEditor(KeyframeEditor):
    editor_id = "identity"

    def edit(self, frame, reference=None, mask=None, prompt: str = ""):
        return np.array(frame, dtype=np.float32)


_COLOR_RE = re.compile(r"recolor:#([0-9a-fA-F]{6})$")


def parse_color(prompt: str) -> np.ndarray:
    """Parse the ``recolor:#rrggbb`` micro-grammar into an RGB triple."""
    m = _COLOR_RE.match(prompt.strip())
    if not m:
        raise DataError(f"prompt {prompt!r} does not match 'recolor:#rrggbb'")
    hexcode = m.group(1)
    return np.array(
        [int(hexcode[i : i + 2], 16) / 255.0 for i in (0, 2, 4)], dtype=np.float32
    )


class RecolorEditor(KeyframeEditor):
    """Paint the masked region a flat color near the prompted one.

    Every call jitters the color independently, emulating the run-to-run
    variation of a real generative editor. When a reference frame is
    given, the editor instead recovers the color actually applied there
    (the flat painted region is the only exact color within the jitter
    radius of the prompt target) and reuses it, which is what keeps
    anchored keyframes consistent.
    """

    editor_id = "recolor"

    def __init__(self, jitter: float = 0.05, seed: int = 0):
        if not 0.0 <= jitter <= 0.5:
            raise DataError(f"jitter must be in [0, 0.5], got {jitter}")
        self.jitter = jitter
        self.seed = seed
        self._calls = 0

    def _applied_color(self, reference, target) -> np.ndarray | None:
        pixels = np.asarray(reference, dtype=np.float32).reshape(-1, reference.shape[-1])
        radius = self.jitter + 1e-6
        near = pixels[np.max(np.abs(pixels - target), axis=1) <= radius]
        if near.size == 0:
            return None
        colors, counts = np.unique(near, axis=0, return_counts=True)
        return colors[np.argmax(counts)]

    def edit(self, frame, reference=None, mask=None, prompt: str = ""):
        frame = np.asarray(frame, dtype=np.float32)
        target = parse_color(prompt)
        if frame.shape[-1] == 1:
            target = target[:1]
        color = None
        if reference is not None:
            color = self._applied_color(reference, target)
        if color is None:
            call_rng = Rng(self.seed).fork(("recolor-call", self._calls))
            self._calls += 1
            jitter = call_rng.uniform(-self.jitter, self.jitter, size=target.size)
            color = np.clip(target + jitter.astype(np.float32), 0.0, 1.0)
        flat = np.broadcast_to(
            np.asarray(color, dtype=np.float32), frame.shape
        ).astype(np.float32)
        if mask is None:
            return flat.copy()
        return composite_frame(frame, flat, np.asarray(mask, dtype=np.float32))


class SpriteEditor(KeyframeEditor):
    """Add or remove a known synthetic object using pre-rendered plates.

    Built from a scene pair rendered with and without one sprite. The
    incoming frame is located in the appropriate plate by exact pixel
    match, and the matching frame of the other plate is returned — a
    perfect edit by construction. Prompts: ``sprite:add`` / ``sprite:remove``.
    """

    editor_id = "sprite"

    def __init__(self, pair: dict):
        for key in ("with", "without"):
            if key not in pair:
                raise DataError(f"sprite editor pair is missing the {key!r} plate")
        self.pair = pair

    @staticmethod
    def _find_frame(video, frame) -> int:
        for t in range(video.num_frames):
            if np.array_equal(video.frame(t), frame):
                return t
        raise DataError("frame not found in the sprite editor's plates")

    def edit(self, frame, reference=None, mask=None, prompt: str = ""):
        frame = np.asarray(frame, dtype=np.float32)
        op = prompt.strip()
        if op == "sprite:add":
            t = self._find_frame(self.pair["without"], frame)
            return np.array(self.pair["with"].frame(t))
        if op == "sprite:remove":
            t = self._find_frame(self.pair["with"], frame)
            return np.array(self.pair["without"].frame(t))
        raise DataError(f"prompt {prompt!r} is not 'sprite:add' or 'sprite:remove'")


def get_editor(editor_id: str, **kwargs) -> KeyframeEditor:
    """Instantiate an editor by id; extra kwargs go to its constructor."""
    registry = {
        "identity": IdentityEditor,
        "recolor": RecolorEditor,
        "sprite": SpriteEditor,
    }
    if editor_id not in registry:
        raise DataError(f"unknown editor {editor_id!r}; known: {sorted(registry)}")
    return registry[editor_id](**kwargs)
