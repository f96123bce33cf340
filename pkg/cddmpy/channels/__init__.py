from .awgn import AdditiveWhiteGaussianNoiseChannel
from .base import (
    ChannelModel,
    ChannelRealization,
    lookup_channel_model,
    sigma2_to_snr_db,
    snr_db_to_sigma2,
)
from .rayleigh import RayleighFadingChannel
from .receiver import (
    mmse_equalize,
    normalize_reshape,
    prop_moments,
    receive,
    receive_reparam,
    sample_channel,
    transmit,
)

AWGN = AdditiveWhiteGaussianNoiseChannel
Rayleigh = RayleighFadingChannel

__all__ = [
    "AdditiveWhiteGaussianNoiseChannel",
    "ChannelModel",
    "ChannelRealization",
    "RayleighFadingChannel",
    "AWGN",
    "Rayleigh",
    "lookup_channel_model",
    "mmse_equalize",
    "normalize_reshape",
    "prop_moments",
    "receive",
    "receive_reparam",
    "sample_channel",
    "sigma2_to_snr_db",
    "snr_db_to_sigma2",
    "transmit",
]
