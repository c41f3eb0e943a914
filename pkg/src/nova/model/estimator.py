"""Training and sampling wrapper around the dual-branch network."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from sklearn.base import BaseEstimator

from ..anchor import AnchoredControlPipeline, build_degraded_reference
from ..core import Rng, Video
from ..errors import DataError, NumericError
from ..fidelity import SourceFidelityPipeline, synth_pseudo_source
from ..validation import as_video
from .network import DualBranchNet, ModelConfig
from .schedule import NoiseSchedule, cosine_schedule, respaced_timesteps

__all__ = ["TrainingSample", "diffusion_loss", "DualBranchDenoiser"]

PARAM_GROUPS = (
    "embed",
    "unembed",
    "timestep",
    "main",
    "sparse",
    "hint",
    "dense",
    "cross",
    "head",
)


@dataclass(frozen=True)
class TrainingSample:
    """One denoising example: target clip, its two conditions, t and ε."""

    target: Video
    source: Video  # pseudo-source, feeds the dense branch
    reference: Video  # degraded reference, feeds the sparse branch
    t: int
    eps: np.ndarray  # token-shaped standard normal draw
    manifest: dict | None = None


def diffusion_loss(net, schedule: NoiseSchedule, x_tokens, ref_tokens, src_tokens,
                   t: int, eps) -> torch.Tensor:
    """Noise-prediction error at timestep ``t``, weighted evenly across t.

    The noisy latent is ``sqrt(ᾱ_t)·x + sqrt(1−ᾱ_t)·ε`` in token space.
    The squared error ``(ε̂ − ε)²`` is divided by ᾱ_t: without that, the
    near-pure-noise timesteps — the only ones where the model must draw
    content from its conditioning branches rather than from the latent —
    would train with weight ᾱ_t ≈ 0 and the branches would never be
    learned at this scale.
    """
    sa, sn = schedule.signal_noise(t)
    zt = sa * x_tokens + sn * eps
    pred = net(zt, t, ref_tokens=ref_tokens, src_tokens=src_tokens)
    return ((pred - eps) ** 2).mean() / (sa * sa)


def _video_tensor(v, dtype=torch.float32) -> torch.Tensor:
    v = as_video(v)
    return torch.tensor(np.array(v.frames), dtype=dtype)[None]


class DualBranchDenoiser(BaseEstimator):
    """ε-prediction diffusion model conditioned on a reference and a source.

    ``fit`` trains on a list of clips, synthesizing the pseudo-source and
    degraded reference for every step on the fly; ``sample`` runs the
    ancestral reverse process with both conditioning stacks computed once
    and reused across steps.
    """

    def __init__(
        self,
        height: int = 16,
        width: int = 16,
        num_frames: int = 17,
        channels: int = 3,
        patch_spatial: int = 4,
        patch_time: int = 1,
        dim: int = 64,
        layers: int = 4,
        heads: int = 4,
        mlp_ratio: float = 4.0,
        timesteps: int = 100,
        use_sparse: bool = True,
        use_dense: bool = True,
        sparse_mode: str = "additive",
        dense_weights: str = "independent",
        posenc_scale: float = 1.0,
        embed_gain: float = 2.0,
        rel_bias_init: float = 3.0,
        seed: int = 0,
        lr: float = 1e-3,
        weight_decay: float = 0.01,
        train_steps: int = 2000,
        freeze: tuple = (),
        train_codec: bool = False,
        max_interior_keyframes: int = 4,
        warm_start: bool = False,
        single_thread: bool = True,
        fidelity: SourceFidelityPipeline | None = None,
        anchor: AnchoredControlPipeline | None = None,
    ):
        self.height = height
        self.width = width
        self.num_frames = num_frames
        self.channels = channels
        self.patch_spatial = patch_spatial
        self.patch_time = patch_time
        self.dim = dim
        self.layers = layers
        self.heads = heads
        self.mlp_ratio = mlp_ratio
        self.timesteps = timesteps
        self.use_sparse = use_sparse
        self.use_dense = use_dense
        self.sparse_mode = sparse_mode
        self.dense_weights = dense_weights
        self.posenc_scale = posenc_scale
        self.embed_gain = embed_gain
        self.rel_bias_init = rel_bias_init
        self.seed = seed
        self.lr = lr
        self.weight_decay = weight_decay
        self.train_steps = train_steps
        self.freeze = freeze
        self.train_codec = train_codec
        self.max_interior_keyframes = max_interior_keyframes
        self.warm_start = warm_start
        self.single_thread = single_thread
        self.fidelity = fidelity
        self.anchor = anchor

    # ---- construction ------------------------------------------------

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            height=self.height,
            width=self.width,
            num_frames=self.num_frames,
            channels=self.channels,
            patch_spatial=self.patch_spatial,
            patch_time=self.patch_time,
            dim=self.dim,
            layers=self.layers,
            heads=self.heads,
            mlp_ratio=self.mlp_ratio,
            timesteps=self.timesteps,
            use_sparse=self.use_sparse,
            use_dense=self.use_dense,
            sparse_mode=self.sparse_mode,
            dense_weights=self.dense_weights,
            posenc_scale=self.posenc_scale,
            embed_gain=self.embed_gain,
        )

    def frozen_groups(self) -> tuple:
        frozen = set(self.freeze)
        unknown = frozen.difference(PARAM_GROUPS)
        if unknown:
            raise DataError(f"unknown freeze groups {sorted(unknown)}; known: {PARAM_GROUPS}")
        if not self.train_codec:
            frozen.update(("embed", "unembed"))
        return tuple(sorted(frozen))

    def build_net(self) -> DualBranchNet:
        torch.manual_seed(Rng(self.seed).fork("init").integers(0, 2**31 - 1))
        net = DualBranchNet(self.model_config())
        frozen = self.frozen_groups()
        for name, p in net.named_parameters():
            if net.group_of(name) in frozen:
                p.requires_grad_(False)
        return net

    def _require_net(self) -> DualBranchNet:
        net = getattr(self, "net_", None)
        if net is None:
            raise DataError("model has no parameters yet; call fit() or load a checkpoint")
        return net

    def attach(self, net: DualBranchNet, schedule: NoiseSchedule | None = None):
        """Adopt externally built parameters (e.g. from a checkpoint)."""
        self.net_ = net
        self.schedule_ = schedule or cosine_schedule(net.cfg.timesteps)
        return self

    # ---- training ----------------------------------------------------

    def make_sample(self, clips, step: int, rng: Rng, net=None) -> TrainingSample:
        """Deterministic per-step sample: pick a clip, synthesize both conditions."""
        net = net or self._require_net()
        r = rng.fork(("step", step))
        idx = int(r.integers(0, len(clips)))
        clip = as_video(clips[idx])
        pool = [as_video(c) for i, c in enumerate(clips) if i != idx] or [clip]
        fid = self.fidelity or SourceFidelityPipeline()
        anc = self.anchor or AnchoredControlPipeline()
        pseudo = synth_pseudo_source(clip, pool, cfg=fid._config(), rng=r.fork("fidelity"))
        n_interior = int(r.integers(1, self.max_interior_keyframes + 1))
        degraded = build_degraded_reference(
            clip, cfg=anc._config(), mode="random", n_interior=n_interior,
            rng=r.fork("anchor"),
        )
        t = int(r.integers(0, self.timesteps))
        gen = torch.Generator().manual_seed(int(r.integers(0, 2**31 - 1)))
        with torch.no_grad():
            x_tok = net.encode(_video_tensor(clip), with_positions=False)
        eps = torch.randn(x_tok.shape, generator=gen).numpy()
        manifest = {
            "step": step,
            "clip_index": idx,
            "timestep": t,
            "n_interior_keyframes": n_interior,
            "pseudo_source": pseudo.params,
            "degradation": list(degraded.log),
        }
        return TrainingSample(
            target=clip,
            source=pseudo.video,
            reference=degraded.video,
            t=t,
            eps=eps.astype(np.float32),
            manifest=manifest,
        )

    def _sample_loss(self, net, sample: TrainingSample) -> torch.Tensor:
        dtype = net.embed.weight.dtype
        x_tok = net.encode(_video_tensor(sample.target, dtype), with_positions=False)
        ref_tok = net.encode(_video_tensor(sample.reference, dtype))
        src_tok = net.encode(_video_tensor(sample.source, dtype))
        eps = torch.tensor(sample.eps, dtype=dtype)
        return diffusion_loss(net, self.schedule_, x_tok, ref_tok, src_tok, sample.t, eps)

    def loss_and_grads(self, sample: TrainingSample):
        """(loss value, gradient per parameter); frozen groups get zeros."""
        net = self._require_net()
        net.zero_grad(set_to_none=True)
        loss = self._sample_loss(net, sample)
        loss.backward()
        grads = {}
        for name, p in net.named_parameters():
            if p.grad is None:
                grads[name] = np.zeros(tuple(p.shape), dtype=np.float32)
            else:
                grads[name] = p.grad.detach().cpu().numpy().copy()
        net.zero_grad(set_to_none=True)
        return float(loss.detach()), grads

    def fit(self, X, y=None):
        """Train for ``train_steps`` on a list of clips (videos)."""
        if self.single_thread:
            torch.set_num_threads(1)
        clips = [as_video(c) for c in X]
        if not clips:
            raise DataError("training needs at least one clip")
        for c in clips:
            if c.shape != clips[0].shape:
                raise DataError("training clips must share one shape")

        if self.warm_start and getattr(self, "net_", None) is not None:
            # continue from the current parameters under the current freeze
            # mask (e.g. staged training: base and sparse hints first, then
            # the source cross-attention pathway alone)
            net = self.net_
            frozen = self.frozen_groups()
            for name, p in net.named_parameters():
                p.requires_grad_(net.group_of(name) not in frozen)
            curve = list(getattr(self, "loss_curve_", []))
        else:
            self.net_ = net = self.build_net()
            curve = []
        self.schedule_ = cosine_schedule(self.timesteps)
        trainable = [p for p in net.parameters() if p.requires_grad]
        opt = torch.optim.AdamW(trainable, lr=self.lr, weight_decay=self.weight_decay)
        rng = Rng(self.seed).fork("train")
        start = len(curve)
        for step in range(start, start + self.train_steps):
            sample = self.make_sample(clips, step, rng, net=net)
            opt.zero_grad(set_to_none=True)
            loss = self._sample_loss(net, sample)
            value = float(loss.detach())
            if not math.isfinite(value):
                err = NumericError(
                    f"non-finite loss {value} at step {step}; sample manifest attached"
                )
                err.manifest = sample.manifest
                raise err
            loss.backward()
            if trainable:
                opt.step()
            curve.append((step, value))
        self.loss_curve_ = curve
        return self

    # ---- sampling ----------------------------------------------------

    def sample(
        self,
        reference,
        source,
        steps: int | None = None,
        seed: int = 0,
        use_sparse: bool | None = None,
        use_dense: bool | None = None,
        x0_clamp: float = 6.0,
    ) -> Video:
        """Generate a clip from noise, conditioned on reference and source."""
        if self.single_thread:
            torch.set_num_threads(1)
        net = self._require_net()
        for name, p in net.named_parameters():
            if not torch.isfinite(p).all():
                raise NumericError(f"parameter {name} contains non-finite values")
        ref = as_video(reference)
        src = as_video(source)
        if ref.shape != src.shape:
            raise DataError(f"reference {ref.shape} and source {src.shape} differ")

        schedule = self.schedule_
        ts = respaced_timesteps(schedule.steps, steps or schedule.steps)
        gen = torch.Generator().manual_seed(
            int(Rng(seed).fork("sample").integers(0, 2**31 - 1))
        )
        net.eval()
        with torch.no_grad():
            ref_tok = net.encode(_video_tensor(ref))
            src_tok = net.encode(_video_tensor(src))
            feats = net.branch_features(ref_tok, src_tok, use_sparse, use_dense)
            z = torch.randn(src_tok.shape, generator=gen)
            for i, t in enumerate(ts):
                ab_t = float(schedule.alpha_bar[t])
                ab_prev = float(schedule.alpha_bar[ts[i + 1]]) if i + 1 < len(ts) else 1.0
                eps = net(z, t, features=feats)
                x0 = (z - math.sqrt(1.0 - ab_t) * eps) / math.sqrt(ab_t)
                # near-terminal timesteps divide by a tiny signal scale,
                # amplifying prediction error without bound; clamping the
                # running clean estimate to the token range keeps the
                # chain on-distribution
                x0 = x0.clamp(-x0_clamp, x0_clamp)
                if i + 1 == len(ts):
                    z = x0
                    break
                # ancestral (η = 1) update on the respaced schedule
                var = (1.0 - ab_prev) / (1.0 - ab_t) * (1.0 - ab_t / ab_prev)
                keep = math.sqrt(max(1.0 - ab_prev - var, 0.0))
                z = (
                    math.sqrt(ab_prev) * x0
                    + keep * eps
                    + math.sqrt(max(var, 0.0)) * torch.randn(z.shape, generator=gen)
                )
            frames = net.decode(z, with_positions=False)[0].clamp(0.0, 1.0).numpy()
        net.train()
        return Video(frames.astype(np.float32))
