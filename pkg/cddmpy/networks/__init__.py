from .adam import adam_update, learning_rate_at
from .base import Network
from .denoiser import (
    DenoiserModel,
    TimeEmbedding,
    backprop,
    init_model,
    opt_step,
    predict,
)
from .mlp import MlpLayout, backward, forward, init_params

__all__ = [
    "DenoiserModel",
    "MlpLayout",
    "Network",
    "TimeEmbedding",
    "adam_update",
    "backprop",
    "backward",
    "forward",
    "init_model",
    "init_params",
    "learning_rate_at",
    "opt_step",
    "predict",
]
