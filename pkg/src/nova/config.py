"""Run configuration: flat key=value text with dotted sections.

Every run resolves its config fully (defaults applied, every key
validated against the registry) and writes the result back out as a
snapshot; parsing that snapshot reproduces the config exactly, which is
what makes runs re-executable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .anchor import AnchoredControlPipeline
from .core import KeyframeSet
from .dataset import SceneConfig
from .errors import ConfigError, DataError
from .fidelity import SourceFidelityPipeline
from .model import DualBranchDenoiser

__all__ = ["RunConfig", "parse_config", "parse_assignment", "parse_assignments", "CONFIG_KEYS"]


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_pair(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'low,high', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _parse_names(text: str) -> tuple:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"must be one of {options}, got {v!r}")

    return check


def _positive(v):
    if v <= 0:
        raise ValueError(f"must be positive, got {v}")


def _non_negative(v):
    if v < 0:
        raise ValueError(f"must be >= 0, got {v}")


def _probability(v):
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"must be in [0, 1], got {v}")


def _ordered(v):
    if v[0] > v[1]:
        raise ValueError(f"range is reversed: {v}")


# key -> (parser, default, validator-or-None)
CONFIG_KEYS = {
    "seed": (int, 0, _non_negative),
    "data.height": (int, 16, _positive),
    "data.width": (int, 16, _positive),
    "data.frames": (int, 17, lambda v: _positive(v - 1)),
    "data.channels": (int, 3, _choice(1, 3)),
    "data.shapes": (int, 2, _non_negative),
    "data.clips": (int, 16, _positive),
    "data.background": (str, "mix", _choice("scroll", "flat", "noise", "mix")),
    "keyframe.mode": (str, "random", _choice("random", "fixed")),
    "keyframe.interval": (int, 10, _positive),
    "keyframe.interior": (int, 3, _non_negative),
    "fidelity.shape": (str, "random", _choice("random", "rectangle", "ellipse", "polygon")),
    "fidelity.size": (_parse_pair, (0.15, 0.45), _ordered),
    "fidelity.speed": (_parse_pair, (0.5, 3.0), _ordered),
    "fidelity.spin": (_parse_pair, (-0.05, 0.05), _ordered),
    "fidelity.scale": (_parse_pair, (1.0, 1.0), _ordered),
    "fidelity.antialias": (_parse_bool, False, None),
    "degrade.geometric_p": (float, 0.5, _probability),
    "degrade.appearance_p": (float, 0.5, _probability),
    "degrade.zoom": (_parse_pair, (0.9, 1.1), _ordered),
    "degrade.stretch": (_parse_pair, (0.95, 1.05), _ordered),
    "degrade.rotation": (_parse_pair, (-3.0, 3.0), _ordered),
    "degrade.blur_sigma": (_parse_pair, (0.5, 2.0), _ordered),
    "degrade.blob_area": (_parse_pair, (0.10, 0.40), _ordered),
    "model.dim": (int, 64, _positive),
    "model.layers": (int, 4, _positive),
    "model.heads": (int, 4, _positive),
    "model.patch": (int, 4, _positive),
    "model.patch_time": (int, 1, _positive),
    "model.timesteps": (int, 100, _positive),
    "model.mlp_ratio": (float, 4.0, _positive),
    "model.use_sparse": (_parse_bool, True, None),
    "model.use_dense": (_parse_bool, True, None),
    "model.sparse_mode": (str, "additive", _choice("additive", "query")),
    "model.dense_weights": (str, "independent", _choice("independent", "shared")),
    "model.posenc_scale": (float, 1.0, _non_negative),
    "model.embed_gain": (float, 2.0, _positive),
    "train.steps": (int, 2000, _positive),
    "train.lr": (float, 1e-3, _non_negative),
    "train.weight_decay": (float, 0.01, _non_negative),
    "train.freeze": (_parse_names, (), None),
    "train.codec": (_parse_bool, False, None),
    "train.max_interior": (int, 4, _positive),
    "sample.steps": (int, 100, _positive),
    "eval.embedder_grid": (int, 8, _positive),
}


def parse_assignment(text: str, where: str = "") -> tuple:
    """One ``key=value``; raises ConfigError naming the offending input."""
    if "=" not in text:
        raise ConfigError(f"{where}expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    if key not in CONFIG_KEYS:
        raise ConfigError(f"{where}unknown config key {key!r}")
    parser, _, validator = CONFIG_KEYS[key]
    try:
        value = parser(raw.strip())
        if validator is not None:
            validator(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}bad value for {key}: {exc}") from exc
    return key, value


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        resolved = {k: default for k, (_, default, _) in CONFIG_KEYS.items()}
        resolved.update(self.values)
        object.__setattr__(self, "values", resolved)
        self._cross_check()

    def _cross_check(self):
        span = self["data.frames"] - 1
        if self["keyframe.mode"] == "fixed":
            try:
                KeyframeSet.from_interval(span, self["keyframe.interval"])
            except DataError as exc:
                raise ConfigError(str(exc)) from exc
        if self["keyframe.interior"] > span - 1:
            raise ConfigError(
                f"keyframe.interior={self['keyframe.interior']} exceeds "
                f"{span - 1} available interior frames"
            )
        if self["data.height"] % self["model.patch"] or self["data.width"] % self["model.patch"]:
            raise ConfigError(
                f"model.patch={self['model.patch']} must divide "
                f"data.height/data.width ({self['data.height']}x{self['data.width']})"
            )
        if self["data.frames"] % self["model.patch_time"]:
            raise ConfigError(
                f"model.patch_time={self['model.patch_time']} must divide "
                f"data.frames={self['data.frames']}"
            )

    def __getitem__(self, key: str):
        if key not in self.values:
            raise ConfigError(f"unknown config key {key!r}")
        return self.values[key]

    def updated(self, assignments: dict) -> "RunConfig":
        merged = dict(self.values)
        merged.update(assignments)
        return RunConfig(merged)

    def snapshot(self) -> str:
        """Canonical text form; parsing it reproduces this config exactly."""
        return "\n".join(f"{k}={_fmt(self.values[k])}" for k in sorted(self.values)) + "\n"

    # ---- object builders ---------------------------------------------

    def scene(self, background: str | None = None) -> SceneConfig:
        """Scene generator settings; ``background`` resolves the "mix" kind.

        "mix" alternates concrete kinds across a clip set and is not a
        valid single-scene background, so callers generating one scene
        pass the resolved kind here.
        """
        return SceneConfig(
            height=self["data.height"],
            width=self["data.width"],
            num_frames=self["data.frames"],
            channels=self["data.channels"],
            num_shapes=self["data.shapes"],
            background=background or self["data.background"],
        )

    def fidelity(self) -> SourceFidelityPipeline:
        return SourceFidelityPipeline(
            seed=self["seed"],
            shape=self["fidelity.shape"],
            size_range=self["fidelity.size"],
            speed_range=self["fidelity.speed"],
            spin_range=self["fidelity.spin"],
            scale_range=self["fidelity.scale"],
            antialias=self["fidelity.antialias"],
        )

    def anchor(self) -> AnchoredControlPipeline:
        return AnchoredControlPipeline(
            seed=self["seed"],
            mode=self["keyframe.mode"],
            n_interior=self["keyframe.interior"],
            interval=self["keyframe.interval"],
            geometric_p=self["degrade.geometric_p"],
            appearance_p=self["degrade.appearance_p"],
            zoom_range=self["degrade.zoom"],
            stretch_range=self["degrade.stretch"],
            rotation_deg_range=self["degrade.rotation"],
            blur_sigma_range=self["degrade.blur_sigma"],
            blob_area_range=self["degrade.blob_area"],
        )

    def denoiser(self) -> DualBranchDenoiser:
        return DualBranchDenoiser(
            height=self["data.height"],
            width=self["data.width"],
            num_frames=self["data.frames"],
            channels=self["data.channels"],
            patch_spatial=self["model.patch"],
            patch_time=self["model.patch_time"],
            dim=self["model.dim"],
            layers=self["model.layers"],
            heads=self["model.heads"],
            mlp_ratio=self["model.mlp_ratio"],
            timesteps=self["model.timesteps"],
            use_sparse=self["model.use_sparse"],
            use_dense=self["model.use_dense"],
            sparse_mode=self["model.sparse_mode"],
            dense_weights=self["model.dense_weights"],
            posenc_scale=self["model.posenc_scale"],
            embed_gain=self["model.embed_gain"],
            seed=self["seed"],
            lr=self["train.lr"],
            weight_decay=self["train.weight_decay"],
            train_steps=self["train.steps"],
            freeze=self["train.freeze"],
            train_codec=self["train.codec"],
            max_interior_keyframes=self["train.max_interior"],
            fidelity=self.fidelity(),
            anchor=self.anchor(),
        )


def parse_assignments(text: str) -> dict:
    """Parse config text to a key→value dict; errors cite their line."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = parse_assignment(line, where=f"line {lineno}: ")
        values[key] = value
    return values


def parse_config(text: str) -> RunConfig:
    """Parse config text; unknown keys and bad values cite their line."""
    return RunConfig(parse_assignments(text))
