from .codec import (
    JsccDecoder,
    JsccEncoder,
    decode,
    encode,
    init_decoder,
    init_encoder,
    kl_term,
    psnr,
    stage1_loss,
    stage3_loss,
)
from .sources import (
    GaussianMixtureSource,
    SourceSampler,
    SparseSpikeSource,
    TinyImageSource,
)
from .training import JsccConfig, train_joint

__all__ = [
    "GaussianMixtureSource",
    "JsccConfig",
    "JsccDecoder",
    "JsccEncoder",
    "SourceSampler",
    "SparseSpikeSource",
    "TinyImageSource",
    "decode",
    "encode",
    "init_decoder",
    "init_encoder",
    "kl_term",
    "psnr",
    "stage1_loss",
    "stage3_loss",
    "train_joint",
]
