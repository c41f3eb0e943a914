from .checkpoint import load_checkpoint, save_checkpoint
from .estimator import DualBranchDenoiser, TrainingSample, diffusion_loss
from .network import DualBranchNet, ModelConfig, sinusoidal_grid, sinusoidal_positions
from .schedule import NoiseSchedule, cosine_schedule, respaced_timesteps

__all__ = [
    "DualBranchDenoiser",
    "DualBranchNet",
    "ModelConfig",
    "NoiseSchedule",
    "TrainingSample",
    "cosine_schedule",
    "diffusion_loss",
    "load_checkpoint",
    "respaced_timesteps",
    "save_checkpoint",
    "sinusoidal_grid",
    "sinusoidal_positions",
]
