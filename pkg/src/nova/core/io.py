"""On-disk formats.

Two interchange formats are supported:

* ``.nvt`` tensor container: bytes ``NVT1``, then a little-endian u32 rank,
  ``rank`` u64 dims, and the raw float32 payload in C order. Bit-exact.
* frame directories: zero-padded numeric PNG names (``00000.png``...), 8-bit
  RGB or grayscale, lexicographic order. Lossy (8-bit quantization).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DataError
from .video import MaskSequence, Video

__all__ = [
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

_MAGIC = b"NVT1"


@dataclass(frozen=True)
class TensorBlob:
    """A named float32 tensor; the unit of the ``.nvt`` container."""

    name: str
    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.data, dtype=np.float32)
        a.flags.writeable = False
        object.__setattr__(self, "data", a)

    @property
    def shape(self) -> tuple:
        return self.data.shape


def save_tensor(path, tensor) -> None:
    """Write an array or TensorBlob to a ``.nvt`` file."""
    data = tensor.data if isinstance(tensor, TensorBlob) else np.asarray(tensor)
    data = np.ascontiguousarray(data, dtype="<f4")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", data.ndim))
        f.write(struct.pack(f"<{data.ndim}Q", *data.shape))
        f.write(data.tobytes())


def load_tensor(path) -> TensorBlob:
    """Read a ``.nvt`` file; the blob name is the file stem."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    if len(raw) < 8 or raw[:4] != _MAGIC:
        raise DataError(f"{path}: not an NVT1 container")
    (rank,) = struct.unpack_from("<I", raw, 4)
    header_end = 8 + 8 * rank
    if rank > 16 or len(raw) < header_end:
        raise DataError(f"{path}: corrupt header (rank={rank})")
    dims = struct.unpack_from(f"<{rank}Q", raw, 8)
    count = int(np.prod(dims, dtype=np.uint64)) if rank else 1
    payload = raw[header_end:]
    if len(payload) != 4 * count:
        raise DataError(
            f"{path}: payload is {len(payload)} bytes, expected {4 * count} for dims {dims}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return TensorBlob(name=path.stem, data=data)


def _frame_to_u8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)


def save_video(video: Video, path, format: str = "frames") -> None:
    """Persist a video either as a PNG frame directory or a ``.nvt`` container.

    The container path round-trips bit-exactly; the frame path quantizes to
    8 bits (max round-trip error 1/510).
    """
    path = Path(path)
    if format == "container":
        save_tensor(path, video.frames)
    elif format == "frames":
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DataError(f"cannot create {path}: {e}") from e
        for t in range(video.num_frames):
            u8 = _frame_to_u8(video.frame(t))
            img = Image.fromarray(u8[..., 0], "L") if u8.shape[2] == 1 else Image.fromarray(u8, "RGB")
            img.save(path / f"{t:05d}.png")
    else:
        raise DataError(f"unknown video format {format!r} (use 'frames' or 'container')")


def _read_frame_dir(path: Path) -> np.ndarray:
    files = sorted(path.glob("*.png"))
    if len(files) < 2:
        raise DataError(f"{path}: found {len(files)} PNG frames, need at least 2")
    frames = []
    shape = None
    for f in files:
        try:
            img = Image.open(f)
            img.load()
        except OSError as e:
            raise DataError(f"cannot read frame {f}: {e}") from e
        if img.mode not in ("L", "RGB"):
            img = img.convert("RGB")
        a = np.asarray(img)
        if a.ndim == 2:
            a = a[..., None]
        if shape is None:
            shape = a.shape
        elif a.shape != shape:
            raise DataError(
                f"frame shape mismatch in {path}: {f.name} is {a.shape}, expected {shape}"
            )
        frames.append(a)
    return np.stack(frames).astype(np.float32) / 255.0


def load_video(path) -> Video:
    """Load a video from a frame directory or a ``.nvt`` container file."""
    path = Path(path)
    if path.is_dir():
        return Video(_read_frame_dir(path))
    if not path.exists():
        raise DataError(f"no such video: {path}")
    blob = load_tensor(path)
    if blob.data.ndim not in (3, 4):
        raise DataError(f"{path}: container rank {blob.data.ndim} is not a video")
    return Video(blob.data)


def save_frame(frame: np.ndarray, path) -> None:
    """Write a single ``(H, W, C)`` frame as an 8-bit PNG or an ``.nvt`` file."""
    path = Path(path)
    frame = np.asarray(frame, dtype=np.float32)
    if frame.ndim != 3:
        raise DataError(f"frame must be (H, W, C), got shape {frame.shape}")
    if path.suffix == ".nvt":
        save_tensor(path, frame)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    u8 = _frame_to_u8(frame)
    img = Image.fromarray(u8[..., 0], "L") if u8.shape[2] == 1 else Image.fromarray(u8, "RGB")
    img.save(path)


def load_frame(path) -> np.ndarray:
    """Read a single frame from a PNG or a rank-3 ``.nvt`` file."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such frame: {path}")
    if path.suffix == ".nvt":
        data = load_tensor(path).data
        if data.ndim != 3:
            raise DataError(f"{path}: container rank {data.ndim} is not a frame")
        return np.array(data)
    try:
        img = Image.open(path)
        img.load()
    except OSError as e:
        raise DataError(f"cannot read frame {path}: {e}") from e
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    a = np.asarray(img)
    if a.ndim == 2:
        a = a[..., None]
    return a.astype(np.float32) / 255.0


def save_mask_sequence(masks: MaskSequence, path, format: str = "frames") -> None:
    path = Path(path)
    if format == "container":
        save_tensor(path, masks.masks)
    elif format == "frames":
        path.mkdir(parents=True, exist_ok=True)
        for t in range(masks.num_frames):
            Image.fromarray(_frame_to_u8(masks.mask(t)[..., None])[..., 0], "L").save(
                path / f"{t:05d}.png"
            )
    else:
        raise DataError(f"unknown mask format {format!r}")


def load_mask_sequence(path, binary: bool = False) -> MaskSequence:
    path = Path(path)
    if path.is_dir():
        data = _read_frame_dir(path)[..., 0]
    else:
        data = load_tensor(path).data
        if data.ndim == 4 and data.shape[3] == 1:
            data = data[..., 0]
    if binary:
        data = (data > 0.5).astype(np.float32)
    return MaskSequence(data, binary=binary)
