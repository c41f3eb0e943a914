"""Dual-branch denoising transformer over pixel-patch tokens.

The main stack denoises the target tokens. Two conditioning stacks run
once per (reference, source) pair: a sparse stack over the degraded
reference whose per-layer outputs feed zero-initialized additive hints,
and a dense stack over the pseudo-source whose per-layer outputs serve
as keys and values for zero-initialized cross-attention. After main
block l the stream becomes ``z + hint_l + cross_l``, so an untrained
model behaves exactly like its unconditioned main stack.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from ..errors import DataError
from .schedule import cosine_schedule

__all__ = ["ModelConfig", "DualBranchNet", "sinusoidal_positions", "sinusoidal_grid"]

SPARSE_MODES = ("additive", "query")
DENSE_WEIGHTS = ("independent", "shared")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; defaults are the CPU toy scale."""

    height: int = 16
    width: int = 16
    num_frames: int = 17
    channels: int = 3
    patch_spatial: int = 4
    patch_time: int = 1
    dim: int = 64
    layers: int = 4
    heads: int = 4
    mlp_ratio: float = 4.0
    timesteps: int = 100
    use_sparse: bool = True
    use_dense: bool = True
    sparse_mode: str = "additive"
    dense_weights: str = "independent"
    posenc_scale: float = 1.0
    embed_gain: float = 2.0
    rel_bias_init: float = 3.0

    def __post_init__(self):
        if self.height % self.patch_spatial or self.width % self.patch_spatial:
            raise DataError(
                f"patch size {self.patch_spatial} must divide frame "
                f"{self.height}x{self.width}"
            )
        if self.num_frames % self.patch_time:
            raise DataError(
                f"temporal patch {self.patch_time} must divide clip length "
                f"{self.num_frames}"
            )
        if self.dim % 2 or self.dim % self.heads:
            raise DataError(f"dim must be even and divisible by heads, got {self.dim}")
        if self.layers < 1 or self.timesteps < 1:
            raise DataError("layers and timesteps must be >= 1")
        if self.sparse_mode not in SPARSE_MODES:
            raise DataError(f"sparse_mode must be one of {SPARSE_MODES}")
        if self.dense_weights not in DENSE_WEIGHTS:
            raise DataError(f"dense_weights must be one of {DENSE_WEIGHTS}")
        if self.channels not in (1, 3):
            raise DataError(f"channels must be 1 or 3, got {self.channels}")
        if not math.isfinite(self.rel_bias_init):
            raise DataError(f"rel_bias_init must be finite, got {self.rel_bias_init}")

    @property
    def grid(self) -> tuple:
        return (
            self.num_frames // self.patch_time,
            self.height // self.patch_spatial,
            self.width // self.patch_spatial,
        )

    @property
    def num_tokens(self) -> int:
        nt, ny, nx = self.grid
        return nt * ny * nx

    @property
    def patch_dim(self) -> int:
        return self.patch_time * self.patch_spatial**2 * self.channels

    def to_dict(self) -> dict:
        return asdict(self)


def sinusoidal_positions(n: int, dim: int) -> np.ndarray:
    """Classic transformer sin/cos table, shape (n, dim), float64."""
    if dim % 2:
        raise DataError(f"sinusoidal width must be even, got {dim}")
    pos = np.arange(n, dtype=np.float64)[:, None]
    idx = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * idx / dim)
    out = np.empty((n, dim), dtype=np.float64)
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


def sinusoidal_grid(nt: int, ny: int, nx: int, dim: int) -> np.ndarray:
    """Fixed (t, y, x) position code of width ``dim``, flattened t-major.

    The width splits into three even sub-widths, one per axis, with the
    remainder assigned to the temporal part.
    """
    part = 2 * ((dim // 3) // 2)
    dx = dy = part
    dt = dim - dx - dy
    et = sinusoidal_positions(nt, dt)
    ey = sinusoidal_positions(ny, dy) if dy else np.zeros((ny, 0))
    ex = sinusoidal_positions(nx, dx) if dx else np.zeros((nx, 0))
    out = np.empty((nt, ny, nx, dim), dtype=np.float64)
    out[..., :dt] = et[:, None, None, :]
    out[..., dt : dt + dy] = ey[None, :, None, :]
    out[..., dt + dy :] = ex[None, None, :, :]
    return out.reshape(nt * ny * nx, dim)


class SelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x):
        b, n, d = x.shape
        h = self.heads
        q, k, v = self.qkv(x).view(b, n, 3, h, d // h).permute(2, 0, 3, 1, 4)
        attn = torch.softmax(q @ k.transpose(-2, -1) / math.sqrt(d // h), dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.proj(out)


def _offset_index(n: int, max_off: int) -> np.ndarray:
    """(n, n) table of clamped relative offsets shifted to [0, 2*max_off]."""
    pos = np.arange(n)
    return np.clip(pos[None, :] - pos[:, None], -max_off, max_off) + max_off


class CrossAttention(nn.Module):
    """Queries from the main stream, keys/values from a conditioning stack.

    The output projection starts at exactly zero so the module is silent
    until trained. With a token ``grid``, a learnable per-head bias over
    relative (t, y, x) offsets is added to the attention logits; its only
    nonzero initial entry is a same-position bonus, so retrieving the
    conditioning token at the query's own position is available from the
    first step rather than having to emerge from the query/key weights.
    Offsets beyond the build-time grid are clamped, so longer clips still
    index the table.
    """

    def __init__(self, dim: int, heads: int, grid: tuple | None = None,
                 rel_bias_init: float = 0.0):
        super().__init__()
        self.heads = heads
        self.q = nn.Linear(dim, dim)
        self.kv = nn.Linear(dim, 2 * dim)
        self.proj = nn.Linear(dim, dim)
        nn.init.zeros_(self.proj.weight)
        nn.init.zeros_(self.proj.bias)
        self.grid = grid
        self._index_cache: dict = {}
        if grid is not None:
            nt, ny, nx = grid
            self.table_shape = (2 * nt - 1, 2 * ny - 1, 2 * nx - 1)
            table = torch.zeros(heads, math.prod(self.table_shape))
            center = int(np.ravel_multi_index((nt - 1, ny - 1, nx - 1), self.table_shape))
            table[:, center] = rel_bias_init
            self.rel_bias = nn.Parameter(table)

    def _rel_index(self, grid: tuple) -> torch.Tensor:
        if grid not in self._index_cache:
            bt, by, bx = self.grid
            qt, qy, qx = grid
            it = _offset_index(qt, bt - 1)
            iy = _offset_index(qy, by - 1)
            ix = _offset_index(qx, bx - 1)
            st, sx = self.table_shape[1] * self.table_shape[2], self.table_shape[2]
            idx = (
                it[:, None, None, :, None, None] * st
                + iy[None, :, None, None, :, None] * sx
                + ix[None, None, :, None, None, :]
            ).reshape(qt * qy * qx, qt * qy * qx)
            self._index_cache[grid] = torch.tensor(idx, dtype=torch.long)
        return self._index_cache[grid]

    def forward(self, x, context, grid: tuple | None = None):
        b, n, d = x.shape
        m = context.shape[1]
        h = self.heads
        q = self.q(x).view(b, n, h, d // h).transpose(1, 2)
        k, v = self.kv(context).view(b, m, 2, h, d // h).permute(2, 0, 3, 1, 4)
        logits = q @ k.transpose(-2, -1) / math.sqrt(d // h)
        if grid is not None and self.grid is not None:
            if n != m or n != math.prod(grid):
                raise DataError(
                    f"relative bias needs matching token grids, got {n} queries, "
                    f"{m} keys for grid {grid}"
                )
            logits = logits + self.rel_bias[:, self._rel_index(grid)]
        attn = torch.softmax(logits, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.proj(out)


class Block(nn.Module):
    """Pre-norm transformer block: self-attention then MLP, both residual."""

    def __init__(self, dim: int, heads: int, mlp_ratio: float):
        super().__init__()
        hidden = int(dim * mlp_ratio)
        self.norm1 = nn.LayerNorm(dim)
        self.attn = SelfAttention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim)
        )

    def forward(self, x):
        x = x + self.attn(self.norm1(x))
        x = x + self.mlp(self.norm2(x))
        return x


def _stack(cfg: ModelConfig) -> nn.ModuleList:
    return nn.ModuleList(
        Block(cfg.dim, cfg.heads, cfg.mlp_ratio) for _ in range(cfg.layers)
    )


class DualBranchNet(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.dim

        # token codec: a scaled linear isometry (orthogonal init) with its
        # transpose as the decoder, so encode/decode invert each other up
        # to float rounding whenever dim >= patch_dim
        self.embed = nn.Linear(cfg.patch_dim, d)
        self.unembed = nn.Linear(d, cfg.patch_dim)
        with torch.no_grad():
            q = torch.empty(d, cfg.patch_dim)
            nn.init.orthogonal_(q)
            self.embed.weight.copy_(q * cfg.embed_gain)
            self.unembed.weight.copy_(q.t() / cfg.embed_gain)
            nn.init.zeros_(self.embed.bias)
            nn.init.zeros_(self.unembed.bias)
        self._posenc_cache = {}
        # learnable timestep table, sinusoidal at init; index 0 doubles as
        # the clean-input condition for both conditioning stacks
        self.time_emb = nn.Parameter(
            torch.tensor(sinusoidal_positions(cfg.timesteps, d), dtype=torch.float32)
        )

        self.main_blocks = _stack(cfg)
        self.sparse_blocks = _stack(cfg)
        if cfg.sparse_mode == "additive":
            self.hints = nn.ModuleList(nn.Linear(d, d) for _ in range(cfg.layers))
            for lin in self.hints:
                nn.init.zeros_(lin.weight)
                nn.init.zeros_(lin.bias)
        else:
            self.hints = nn.ModuleList(
                CrossAttention(d, cfg.heads, grid=cfg.grid, rel_bias_init=cfg.rel_bias_init)
                for _ in range(cfg.layers)
            )
        if cfg.dense_weights == "independent":
            self.dense_blocks = _stack(cfg)
        else:
            self.dense_blocks = None  # reuse main blocks, grad-detached
        self.cross_attns = nn.ModuleList(
            CrossAttention(d, cfg.heads, grid=cfg.grid, rel_bias_init=cfg.rel_bias_init)
            for _ in range(cfg.layers)
        )

        self.head_norm = nn.LayerNorm(d)
        self.head = nn.Linear(d, d)
        nn.init.normal_(self.head.weight, std=0.02)
        nn.init.zeros_(self.head.bias)
        # the head predicts the velocity v = sqrt(ᾱ)·ε − sqrt(1−ᾱ)·x and
        # the noise estimate is assembled as ε̂ = sqrt(1−ᾱ)·z + sqrt(ᾱ)·v̂;
        # near-terminal timesteps then get the dominant identity part of
        # ε̂ from the parameterization instead of having to learn it
        self.register_buffer(
            "alpha_bar_table",
            torch.tensor(cosine_schedule(cfg.timesteps).alpha_bar, dtype=torch.float32),
        )

    # ---- token codec -------------------------------------------------

    def position_code(self, nt: int, ny: int, nx: int) -> torch.Tensor:
        """Fixed (t, y, x) code for any grid; cached per shape and dtype."""
        dtype = self.embed.weight.dtype
        key = (nt, ny, nx, dtype)
        if key not in self._posenc_cache:
            grid = sinusoidal_grid(nt, ny, nx, self.cfg.dim) * self.cfg.posenc_scale
            self._posenc_cache[key] = torch.tensor(grid, dtype=dtype)
        return self._posenc_cache[key]

    def _check_video(self, v: torch.Tensor) -> torch.Tensor:
        if v.ndim == 4:
            v = v[None]
        c = self.cfg
        if v.ndim != 5 or tuple(v.shape[2:]) != (c.height, c.width, c.channels):
            raise DataError(
                f"expected frames shaped ({c.height}, {c.width}, {c.channels}), "
                f"got {tuple(v.shape)}"
            )
        if v.shape[1] < 1 or v.shape[1] % c.patch_time:
            raise DataError(
                f"temporal patch {c.patch_time} must divide clip length {v.shape[1]}"
            )
        return v

    def encode(self, video: torch.Tensor, with_positions: bool = True) -> torch.Tensor:
        """(N?, T, H, W, C) pixels → (N, L, d) tokens.

        Conditioning inputs keep the default and carry the position code;
        the diffused variable is encoded without it (``with_positions=
        False``) — the code is re-injected inside :meth:`forward` at full
        strength instead, so positional identity survives any noise level.
        The clip length may differ from the configured training length;
        the sinusoidal position code extends to any number of frames.
        """
        v = self._check_video(video)
        c = self.cfg
        n = v.shape[0]
        nt = v.shape[1] // c.patch_time
        ny, nx = c.height // c.patch_spatial, c.width // c.patch_spatial
        p = v.reshape(n, nt, c.patch_time, ny, c.patch_spatial, nx, c.patch_spatial, c.channels)
        p = p.permute(0, 1, 3, 5, 2, 4, 6, 7).reshape(n, nt * ny * nx, c.patch_dim)
        tokens = self.embed(p)
        if with_positions:
            tokens = tokens + self.position_code(nt, ny, nx)
        return tokens

    def _token_grid(self, num_tokens: int) -> tuple:
        c = self.cfg
        ny, nx = c.height // c.patch_spatial, c.width // c.patch_spatial
        if num_tokens % (ny * nx):
            raise DataError(f"token count {num_tokens} does not fill {ny}x{nx} frames")
        return num_tokens // (ny * nx), ny, nx

    def decode(self, tokens: torch.Tensor, with_positions: bool = True) -> torch.Tensor:
        """(N, L, d) tokens → (N, T, H, W, C) pixels; inverse layout of encode."""
        c = self.cfg
        n = tokens.shape[0]
        nt, ny, nx = self._token_grid(tokens.shape[1])
        if with_positions:
            tokens = tokens - self.position_code(nt, ny, nx)
        p = self.unembed(tokens)
        p = p.view(n, nt, ny, nx, c.patch_time, c.patch_spatial, c.patch_spatial, c.channels)
        p = p.permute(0, 1, 4, 2, 5, 3, 6, 7)
        return p.reshape(n, nt * c.patch_time, c.height, c.width, c.channels)

    # ---- conditioning ------------------------------------------------

    def _run_stack(self, blocks, tokens):
        outs = []
        x = tokens + self.time_emb[0]
        for block in blocks:
            x = block(x)
            outs.append(x)
        return outs

    def branch_features(self, ref_tokens=None, src_tokens=None,
                        use_sparse=None, use_dense=None):
        """Per-layer conditioning features; reusable across sampling steps."""
        use_sparse = self.cfg.use_sparse if use_sparse is None else use_sparse
        use_dense = self.cfg.use_dense if use_dense is None else use_dense
        sparse_feats = dense_feats = None
        if use_sparse and ref_tokens is not None:
            sparse_feats = self._run_stack(self.sparse_blocks, ref_tokens)
        if use_dense and src_tokens is not None:
            if self.dense_blocks is not None:
                dense_feats = self._run_stack(self.dense_blocks, src_tokens)
            else:
                with torch.no_grad():  # shared weights act as a frozen copy
                    dense_feats = self._run_stack(self.main_blocks, src_tokens)
        return sparse_feats, dense_feats

    # ---- denoising pass ----------------------------------------------

    def forward(self, zt, t, ref_tokens=None, src_tokens=None, features=None,
                use_sparse=None, use_dense=None):
        """Predict the noise in ``zt`` at timestep ``t``.

        ``features`` short-circuits the conditioning stacks with the
        output of an earlier :meth:`branch_features` call.
        """
        if zt.ndim != 3 or zt.shape[-1] != self.cfg.dim:
            raise DataError(f"tokens must be (N, L, {self.cfg.dim}), got {tuple(zt.shape)}")
        if features is None:
            features = self.branch_features(ref_tokens, src_tokens, use_sparse, use_dense)
        sparse_feats, dense_feats = features

        t = torch.as_tensor(t, dtype=torch.long, device=zt.device).reshape(-1)
        if t.numel() not in (1, zt.shape[0]):
            raise DataError(f"timestep batch {t.numel()} does not match {zt.shape[0]}")
        nt, ny, nx = self._token_grid(zt.shape[1])
        # position code at full strength regardless of the noise level, so
        # cross-attention queries keep their positional identity even when
        # the latent itself is pure noise
        z = zt + self.position_code(nt, ny, nx) + self.time_emb[t][:, None, :]

        grid = (nt, ny, nx)
        for layer, block in enumerate(self.main_blocks):
            z = block(z)
            bump = z
            if sparse_feats is not None:
                if self.cfg.sparse_mode == "additive":
                    bump = bump + self.hints[layer](sparse_feats[layer])
                else:
                    bump = bump + self.hints[layer](z, sparse_feats[layer], grid=grid)
            if dense_feats is not None:
                bump = bump + self.cross_attns[layer](z, dense_feats[layer], grid=grid)
            z = bump
        v = self.head(self.head_norm(z))
        ab = self.alpha_bar_table[t].reshape(-1, 1, 1)
        return torch.sqrt(1.0 - ab) * zt + torch.sqrt(ab) * v

    # ---- parameter grouping ------------------------------------------

    GROUP_PREFIXES = (
        ("embed.", "embed"),
        ("unembed.", "unembed"),
        ("time_emb", "timestep"),
        ("main_blocks.", "main"),
        ("sparse_blocks.", "sparse"),
        ("hints.", "hint"),
        ("dense_blocks.", "dense"),
        ("cross_attns.", "cross"),
        ("head_norm.", "head"),
        ("head.", "head"),
    )

    @classmethod
    def group_of(cls, param_name: str) -> str:
        for prefix, group in cls.GROUP_PREFIXES:
            if param_name.startswith(prefix):
                return group
        raise DataError(f"parameter {param_name!r} belongs to no group")

    def parameter_groups(self) -> dict:
        groups = {}
        for name, p in self.named_parameters():
            groups.setdefault(self.group_of(name), []).append(p)
        return groups
