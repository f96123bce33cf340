from __future__ import annotations

import attrs
import numpy as np
from scipy.special import expit

import cddmpy.signals
from cddmpy.channels import ChannelRealization, receive
from cddmpy.errors import DimensionError
from cddmpy.networks.base import Network, compute_layout
from cddmpy.networks.mlp import ForwardCache, MlpLayout, backward, forward, init_params
from cddmpy.streams import RngLike, as_generator

KL_WEIGHT_DEFAULT: float = 5e-5
CODEC_WIDTHS_DEFAULT: tuple[int, ...] = (256,)


def softplus(r: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, r)


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class JsccEncoder(Network):
    """Maps `n`-dim sources to the mean and scale of a 2k-dim channel input."""

    n: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    k: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    use_sigma: bool = attrs.field(default=True, converter=bool)

    layout: MlpLayout = attrs.field(
        default=attrs.Factory(compute_layout, takes_self=True),
        init=False,
        repr=False,
    )

    def build_layout(self) -> MlpLayout:
        heads: int = 2 if self.use_sigma else 1
        return MlpLayout(
            input_dim=self.n,
            output_dim=heads * 2 * self.k,
            hidden_widths=self.hidden_widths,
        )

    @property
    def bandwidth_ratio(self) -> float:
        return self.k / self.n


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class JsccDecoder(Network):
    n: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    k: int = attrs.field(converter=int, validator=attrs.validators.ge(1))

    layout: MlpLayout = attrs.field(
        default=attrs.Factory(compute_layout, takes_self=True),
        init=False,
        repr=False,
    )

    def build_layout(self) -> MlpLayout:
        return MlpLayout(
            input_dim=2 * self.k, output_dim=self.n, hidden_widths=self.hidden_widths
        )


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class EncodedBatch:
    """Intermediate values of one encoder pass, kept for backpropagation."""

    x: np.ndarray
    x_raw: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    raw_scale: np.ndarray
    xi: np.ndarray
    power_scale: float
    cache: ForwardCache


def init_encoder(
    n: int,
    k: int,
    hidden_widths: tuple[int, ...],
    rng: RngLike,
    *,
    use_sigma: bool = True,
) -> JsccEncoder:
    heads: int = 2 if use_sigma else 1
    layout: MlpLayout = MlpLayout(
        input_dim=n, output_dim=heads * 2 * k, hidden_widths=hidden_widths
    )
    return JsccEncoder(
        n=n,
        k=k,
        use_sigma=use_sigma,
        hidden_widths=hidden_widths,
        params=init_params(layout, as_generator(rng)),
    )


def init_decoder(
    n: int, k: int, hidden_widths: tuple[int, ...], rng: RngLike
) -> JsccDecoder:
    layout: MlpLayout = MlpLayout(
        input_dim=2 * k, output_dim=n, hidden_widths=hidden_widths
    )
    return JsccDecoder(
        n=n,
        k=k,
        hidden_widths=hidden_widths,
        params=init_params(layout, as_generator(rng)),
    )


def power_cap(x_raw: np.ndarray) -> float:
    """Scale factor bringing the batch power per complex symbol down to 1."""
    power: float = cddmpy.signals.complex_symbol_power(x_raw)
    return 1.0 / np.sqrt(power) if power > 1.0 else 1.0


def encode_batch(
    enc: JsccEncoder, s: np.ndarray, rng: RngLike, *, noise_free: bool = False
) -> EncodedBatch:
    s = np.atleast_2d(np.asarray(s, dtype=np.float64))
    if s.shape[-1] != enc.n:
        raise DimensionError(f"Source length {s.shape[-1]} is not `n`={enc.n}.")

    out, cache = forward(enc.layout, enc.params, s)
    dim: int = 2 * enc.k
    mu: np.ndarray = out[:, :dim]
    if enc.use_sigma:
        raw_scale: np.ndarray = out[:, dim:]
        sigma: np.ndarray = softplus(raw_scale)
    else:
        raw_scale = np.zeros_like(mu)
        sigma = np.zeros_like(mu)

    if noise_free or not enc.use_sigma:
        xi: np.ndarray = np.zeros_like(mu)
    else:
        xi = as_generator(rng).standard_normal(mu.shape)
    x_raw: np.ndarray = mu + sigma * xi
    scale: float = power_cap(x_raw)
    return EncodedBatch(
        x=scale * x_raw,
        x_raw=x_raw,
        mu=mu,
        sigma=sigma,
        raw_scale=raw_scale,
        xi=xi,
        power_scale=scale,
        cache=cache,
    )


def encode(
    enc: JsccEncoder, s: np.ndarray, rng: RngLike, *, noise_free: bool = False
) -> np.ndarray:
    x: np.ndarray = encode_batch(enc, s, rng, noise_free=noise_free).x
    return x.reshape((*np.shape(s)[:-1], 2 * enc.k))


def decode(dec: JsccDecoder, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != 2 * dec.k:
        raise DimensionError(f"Received length {y.shape[-1]} is not 2k={2 * dec.k}.")
    s_hat, _ = forward(dec.layout, dec.params, np.atleast_2d(y))
    return s_hat.reshape((*y.shape[:-1], dec.n))


def kl_term(mu: np.ndarray, sigma: np.ndarray) -> float:
    """Batch mean of KL(N(mu, sigma^2) || N(0, I)) summed over dimensions."""
    mu = np.atleast_2d(mu)
    sigma = np.atleast_2d(sigma)
    terms: np.ndarray = 0.5 * (
        np.square(mu) + np.square(sigma) - 1.0 - 2.0 * np.log(sigma)
    )
    return float(np.mean(np.sum(terms, axis=-1)))


def reconstruction_mse(s: np.ndarray, s_hat: np.ndarray) -> float:
    return float(np.mean(np.square(np.asarray(s_hat) - np.asarray(s))))


def psnr_from_mse(mse: float, peak: float) -> float:
    """Peak signal-to-noise ratio in dB; infinite for a perfect reconstruction."""
    if mse == 0.0:
        return float(np.inf)
    return float(10.0 * np.log10(peak**2 / mse))


def psnr(s: np.ndarray, s_hat: np.ndarray, peak: float) -> float:
    return psnr_from_mse(reconstruction_mse(s, s_hat), peak)


def stage1_loss_and_grad(
    enc: JsccEncoder,
    dec: JsccDecoder,
    s_batch: np.ndarray,
    ch_batch: ChannelRealization,
    kl_weight: float,
    rng: RngLike,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Codec loss through the equalized channel, with encoder and decoder gradients."""
    if kl_weight < 0.0:
        raise ValueError("`kl_weight` must be non-negative.")
    gen: np.random.Generator = as_generator(rng)
    s_batch = np.atleast_2d(np.asarray(s_batch, dtype=np.float64))
    batch: int = s_batch.shape[0]

    encoded: EncodedBatch = encode_batch(enc, s_batch, gen)
    y_r: np.ndarray = receive(encoded.x, ch_batch, gen)
    s_hat, dec_cache = forward(dec.layout, dec.params, y_r)
    loss: float = reconstruction_mse(s_batch, s_hat)
    if enc.use_sigma:
        loss += kl_weight * kl_term(encoded.mu, encoded.sigma)

    grad_s_hat: np.ndarray = 2.0 * (s_hat - s_batch) / s_hat.size
    grad_dec, grad_y = backward(dec.layout, dec.params, dec_cache, grad_s_hat)
    grad_x: np.ndarray = grad_y * ch_batch.normalization * ch_batch.w_s

    # Chain rule through the batch power cap x = c(x_raw) * x_raw.
    c: float = encoded.power_scale
    grad_raw: np.ndarray = c * grad_x
    if c < 1.0:
        uses: int = batch * enc.k
        grad_raw -= c**3 * np.sum(grad_x * encoded.x_raw) / uses * encoded.x_raw

    grad_mu: np.ndarray = grad_raw
    if enc.use_sigma:
        grad_mu = grad_raw + kl_weight * encoded.mu / batch
        grad_sigma: np.ndarray = grad_raw * encoded.xi + kl_weight * (
            encoded.sigma - 1.0 / encoded.sigma
        ) / batch
        grad_out: np.ndarray = np.concatenate(
            [grad_mu, grad_sigma * expit(encoded.raw_scale)], axis=1
        )
    else:
        grad_out = grad_mu
    grad_enc, _ = backward(enc.layout, enc.params, encoded.cache, grad_out)
    return loss, grad_enc, grad_dec


def stage1_loss(
    enc: JsccEncoder,
    dec: JsccDecoder,
    s_batch: np.ndarray,
    ch_batch: ChannelRealization,
    kl_weight: float,
    rng: RngLike,
) -> float:
    loss, _, _ = stage1_loss_and_grad(enc, dec, s_batch, ch_batch, kl_weight, rng)
    return loss


def stage3_loss_and_grad(
    dec: JsccDecoder, s_batch: np.ndarray, y_batch: np.ndarray
) -> tuple[float, np.ndarray]:
    s_batch = np.atleast_2d(np.asarray(s_batch, dtype=np.float64))
    s_hat, cache = forward(dec.layout, dec.params, np.atleast_2d(y_batch))
    grad_dec, _ = backward(
        dec.layout, dec.params, cache, 2.0 * (s_hat - s_batch) / s_hat.size
    )
    return reconstruction_mse(s_batch, s_hat), grad_dec


def stage3_loss(dec: JsccDecoder, s_batch: np.ndarray, y_batch: np.ndarray) -> float:
    return reconstruction_mse(s_batch, decode(dec, np.atleast_2d(y_batch)))
