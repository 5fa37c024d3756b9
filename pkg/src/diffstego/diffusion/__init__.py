from .model import DiffusionModel
from .network import DenoiserParams
from .sampling import embed_sentence, predict_noise, round_tokens, sample_batch, sample_batch_ids
from .schedule import (
    NoiseSchedule,
    build_schedule,
    denoise_x0,
    forward_noise,
    forward_noise_closed,
    skip_steps,
)
from .train import TrainConfig, train

__all__ = [
    "DiffusionModel", "DenoiserParams", "NoiseSchedule", "TrainConfig",
    "build_schedule", "denoise_x0", "embed_sentence", "forward_noise",
    "forward_noise_closed", "predict_noise", "round_tokens", "sample_batch",
    "sample_batch_ids", "skip_steps", "train",
]
