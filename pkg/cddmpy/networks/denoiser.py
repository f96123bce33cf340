from __future__ import annotations

import attrs
import numpy as np

import cddmpy.validators
from cddmpy.diffusion.schedule import NUM_STEPS_DEFAULT
from cddmpy.errors import DimensionError, EvaluationError
from cddmpy.streams import RngLike, as_generator

from .base import Network, compute_layout
from .mlp import MlpLayout, backward, forward, init_params

TIME_DIM_DEFAULT: int = 32
HIDDEN_WIDTHS_DEFAULT: tuple[int, ...] = (256, 256, 256)
MAX_PERIOD: float = 10_000.0


def validate_time_dim(_, __, value: int) -> None:
    if value < 2 or value % 2:
        raise ValueError("`time_dim` must be an even integer of at least 2.")


def compute_time_table(embedding: TimeEmbedding) -> np.ndarray:
    half: int = embedding.dim // 2
    freqs: np.ndarray = np.exp(-np.log(MAX_PERIOD) * np.arange(half) / half)
    steps: np.ndarray = np.arange(1, embedding.num_steps + 1, dtype=np.float64)
    angles: np.ndarray = steps[:, None] * freqs[None, :]
    table: np.ndarray = np.concatenate([np.sin(angles), np.cos(angles)], axis=1)
    table.setflags(write=False)
    return table


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class TimeEmbedding:
    """Sinusoidal features of the integer step, tabulated for `1..num_steps`."""

    dim: int = attrs.field(converter=int, validator=validate_time_dim)
    num_steps: int = attrs.field(converter=int, validator=attrs.validators.ge(1))

    table: np.ndarray = attrs.field(
        default=attrs.Factory(compute_time_table, takes_self=True),
        init=False,
        repr=False,
    )

    def __call__(self, t: int | np.ndarray) -> np.ndarray:
        t = np.asarray(t)
        cddmpy.validators.validate_step(t, 1, self.num_steps)
        return self.table[t.astype(np.int64) - 1]


def compute_time_embedding(model: DenoiserModel) -> TimeEmbedding:
    return TimeEmbedding(dim=model.time_dim, num_steps=model.num_steps)


@attrs.frozen(kw_only=True, eq=False, weakref_slot=False, getstate_setstate=False)
class DenoiserModel(Network):
    """Noise predictor `eps_theta(x_t, h_r, t)` on real 2k-vectors.

    Inputs are `x_t`, the stacked gains `h_r` and the time embedding. Every
    hidden layer also adds a learned affine map of the time embedding.
    """

    k: int = attrs.field(converter=int, validator=attrs.validators.ge(1))
    num_steps: int = attrs.field(
        default=NUM_STEPS_DEFAULT, converter=int, validator=attrs.validators.ge(1)
    )
    time_dim: int = attrs.field(
        default=TIME_DIM_DEFAULT, converter=int, validator=validate_time_dim
    )

    layout: MlpLayout = attrs.field(
        default=attrs.Factory(compute_layout, takes_self=True),
        init=False,
        repr=False,
    )
    time_embedding: TimeEmbedding = attrs.field(
        default=attrs.Factory(compute_time_embedding, takes_self=True),
        init=False,
        repr=False,
    )

    @property
    def dim(self) -> int:
        return 2 * self.k

    def build_layout(self) -> MlpLayout:
        return MlpLayout(
            input_dim=2 * self.dim + self.time_dim,
            output_dim=self.dim,
            hidden_widths=self.hidden_widths,
            cond_dim=self.time_dim,
        )

    def _inputs(
        self, x_t: np.ndarray, h_r: np.ndarray, t: int | np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
        """Flatten every leading axis into rows of [x_t, h_r, embedding]."""
        x_t = np.asarray(x_t, dtype=np.float64)
        h_r = np.asarray(h_r, dtype=np.float64)
        if x_t.ndim < 1 or x_t.shape[-1] != self.dim:
            raise DimensionError(f"`x_t` must end in {self.dim}, got {x_t.shape}.")
        if h_r.ndim < 1 or h_r.shape[-1] != self.dim:
            raise DimensionError(f"`h_r` must end in {self.dim}, got {h_r.shape}.")
        if not (np.all(np.isfinite(x_t)) and np.all(np.isfinite(h_r))):
            raise EvaluationError("Denoiser inputs must be finite.")
        try:
            batch_shape: tuple[int, ...] = np.broadcast_shapes(
                x_t.shape[:-1], h_r.shape[:-1], np.shape(t)
            )
        except ValueError as exc:
            raise DimensionError(f"Denoiser inputs do not broadcast: {exc}") from exc

        shape: tuple[int, ...] = (*batch_shape, self.dim)
        rows: np.ndarray = np.broadcast_to(x_t, shape).reshape(-1, self.dim)
        h_rows: np.ndarray = np.broadcast_to(h_r, shape).reshape(-1, self.dim)
        steps: np.ndarray = np.broadcast_to(np.asarray(t), batch_shape).reshape(-1)
        embedding: np.ndarray = self.time_embedding(steps)
        inputs: np.ndarray = np.concatenate([rows, h_rows, embedding], axis=1)
        return inputs, embedding, batch_shape

    def predict(
        self, x_t: np.ndarray, h_r: np.ndarray, t: int | np.ndarray
    ) -> np.ndarray:
        inputs, embedding, batch_shape = self._inputs(x_t, h_r, t)
        eps, _ = forward(self.layout, self.params, inputs, embedding)
        return eps.reshape(*batch_shape, self.dim)

    def loss_and_grad(
        self,
        x_t: np.ndarray,
        h_r: np.ndarray,
        t: int | np.ndarray,
        target_eps: np.ndarray,
        weights: np.ndarray | None = None,
    ) -> tuple[float, np.ndarray]:
        """Summed squared error over the batch and its parameter gradient.

        `weights` multiplies each coordinate of the residual before squaring.
        """
        inputs, embedding, batch_shape = self._inputs(x_t, h_r, t)
        eps, cache = forward(self.layout, self.params, inputs, embedding)
        shape: tuple[int, ...] = (*batch_shape, self.dim)
        target: np.ndarray = np.broadcast_to(target_eps, shape).reshape(eps.shape)
        residual: np.ndarray = eps - target
        if weights is not None:
            weights = np.broadcast_to(np.square(weights), shape).reshape(eps.shape)
            residual_sq: np.ndarray = weights * np.square(residual)
            grad_out: np.ndarray = 2.0 * weights * residual
        else:
            residual_sq = np.square(residual)
            grad_out = 2.0 * residual
        grad, _ = backward(self.layout, self.params, cache, grad_out)
        return float(residual_sq.sum()), grad


def init_model(
    k: int,
    hidden_widths: tuple[int, ...],
    rng: RngLike,
    *,
    num_steps: int = NUM_STEPS_DEFAULT,
    time_dim: int = TIME_DIM_DEFAULT,
) -> DenoiserModel:
    layout: MlpLayout = MlpLayout(
        input_dim=4 * k + time_dim,
        output_dim=2 * k,
        hidden_widths=hidden_widths,
        cond_dim=time_dim,
    )
    return DenoiserModel(
        k=k,
        num_steps=num_steps,
        time_dim=time_dim,
        hidden_widths=hidden_widths,
        params=init_params(layout, as_generator(rng)),
    )


def predict(
    model: DenoiserModel, x_t: np.ndarray, h_r: np.ndarray, t: int | np.ndarray
) -> np.ndarray:
    return model.predict(x_t, h_r, t)


def backprop(
    model: DenoiserModel,
    x_t: np.ndarray,
    h_r: np.ndarray,
    t: int | np.ndarray,
    target_eps: np.ndarray,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    _, grad = model.loss_and_grad(x_t, h_r, t, target_eps, weights)
    return grad


def opt_step(
    model: DenoiserModel, grad: np.ndarray, lr: float, stage: str = "cddm"
) -> DenoiserModel:
    return model.opt_step(grad, lr, stage)
