import unittest

import numpy as np

import cddmpy.diffusion.training
from cddmpy.channels import ChannelRealization, sample_channel
from cddmpy.diffusion import (
    DiffusionState,
    NoiseSchedule,
    estimate_x0,
    forward_closed,
    forward_step,
    linear_schedule,
    make_x0,
    reverse_step,
    sample,
    select_m,
)
from cddmpy.diffusion.training import (
    TrainConfig,
    cddm_loss,
    cddm_loss_and_grad,
    train_cddm,
)
from cddmpy.errors import DimensionError, DomainError, TrainingError
from cddmpy.networks import init_model
from cddmpy.streams import RngStream


class FixedNoise:
    """Noise predictor that always answers with the same draw."""

    def __init__(self, eps: np.ndarray) -> None:
        self.eps = eps

    def predict(self, x_t, h_r, t) -> np.ndarray:
        return np.broadcast_to(self.eps, np.shape(x_t))


class ConstantSource:
    def __init__(self, dim: int, value: float) -> None:
        self.dim = dim
        self.value = value

    def sample(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        return np.full((batch, self.dim), self.value)


def finite_difference(loss, params: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(params)
    for index in range(params.size):
        original = params[index]
        params[index] = original + h
        upper = loss()
        params[index] = original - h
        lower = loss()
        params[index] = original
        grad[index] = (upper - lower) / (2.0 * h)
    return grad


class ForwardProcessTests(unittest.TestCase):
    def setUp(self) -> None:
        self.s = linear_schedule()
        self.gen = np.random.default_rng(0)

    def test_make_x0(self) -> None:
        x = np.array([2.0, 4.0, 2.0, 4.0])
        awgn = sample_channel("awgn", 2, 0.3, RngStream(seed=0))
        half = ChannelRealization(mode="rayleigh", h_c_abs=[1.0, 1.0], sigma2=0.5)

        np.testing.assert_array_equal(make_x0(x, awgn), x)
        np.testing.assert_allclose(make_x0(x, half), [1.0, 2.0, 1.0, 2.0])
        with self.assertRaises(DimensionError):
            make_x0(np.ones(6), awgn)

    def test_rayleigh_x0_is_diagonal_scaling(self) -> None:
        x = self.gen.normal(size=8)
        ch = sample_channel("rayleigh", 4, 0.2, RngStream(seed=1))

        np.testing.assert_allclose(make_x0(x, ch), np.diag(ch.w_s) @ x)

    def test_unit_alpha_keeps_signal(self) -> None:
        s = NoiseSchedule(alpha=[1.0, 1.0])
        x = self.gen.normal(size=4)
        ch = sample_channel("awgn", 2, 0.1, RngStream(seed=2))

        np.testing.assert_array_equal(forward_step(x, 1, s, ch, RngStream(seed=3)), x)

    def test_forward_step_variance(self) -> None:
        x_prev = self.gen.normal(size=8)
        ch = sample_channel("rayleigh", 4, 0.5, RngStream(seed=4))
        batch = np.tile(x_prev, (100_000, 1))
        x_t = forward_step(batch, 1000, self.s, ch, RngStream(seed=5))

        expected_var = 0.02 * np.square(ch.w_n)
        np.testing.assert_allclose(x_t.var(axis=0, ddof=1), expected_var, rtol=0.02)
        np.testing.assert_allclose(
            x_t.mean(axis=0), np.sqrt(0.98) * x_prev, atol=5e-3
        )

    def test_forward_closed(self) -> None:
        x0 = self.gen.normal(size=6)
        ch = sample_channel("rayleigh", 3, 0.1, RngStream(seed=6))
        eps = self.gen.normal(size=6)

        np.testing.assert_allclose(
            forward_closed(x0, 10, self.s, ch, np.zeros(6)),
            np.sqrt(self.s.alpha_bar_at(10)) * x0,
        )
        np.testing.assert_allclose(
            forward_closed(x0, 1, self.s, ch, eps),
            np.sqrt(0.9999) * x0 + np.sqrt(1e-4) * ch.w_n * eps,
        )
        with self.assertRaises(DomainError):
            forward_closed(x0, 0, self.s, ch, eps)

    def test_diffusion_state_advances(self) -> None:
        x = self.gen.normal(size=4)
        ch = sample_channel("awgn", 2, 0.1, RngStream(seed=7))
        state = DiffusionState.initial(x, ch).advance(self.s, ch, RngStream(seed=8))

        self.assertEqual(state.t, 1)
        np.testing.assert_allclose(
            state.x_t,
            forward_step(x, 1, self.s, ch, RngStream(seed=8)),
        )


class ReverseProcessTests(unittest.TestCase):
    def setUp(self) -> None:
        self.s = linear_schedule()
        gen = np.random.default_rng(1)
        self.ch = sample_channel("rayleigh", 4, 0.2, RngStream(seed=9))
        self.x0 = make_x0(gen.normal(scale=np.sqrt(0.5), size=8), self.ch)
        self.eps = gen.normal(size=8)
        self.oracle = FixedNoise(self.eps)

    def test_estimate_x0_with_exact_noise(self) -> None:
        x_t = forward_closed(self.x0, 300, self.s, self.ch, self.eps)

        np.testing.assert_allclose(
            estimate_x0(self.oracle, x_t, 300, self.s, self.ch), self.x0, atol=1e-9
        )

    def test_reverse_step_stays_on_forward_path(self) -> None:
        x_t = forward_closed(self.x0, 500, self.s, self.ch, self.eps)

        np.testing.assert_allclose(
            reverse_step(self.oracle, x_t, 500, self.s, self.ch),
            forward_closed(self.x0, 499, self.s, self.ch, self.eps),
            atol=1e-9,
        )

    def test_zero_prediction_rescales(self) -> None:
        x_t = forward_closed(self.x0, 50, self.s, self.ch, self.eps)
        zero = FixedNoise(np.zeros(8))
        ratio = np.sqrt(self.s.alpha_bar_at(49) / self.s.alpha_bar_at(50))

        np.testing.assert_allclose(
            reverse_step(zero, x_t, 50, self.s, self.ch), ratio * x_t
        )

    def test_flat_schedule_is_fixed_point(self) -> None:
        s = NoiseSchedule(alpha=[0.9, 1.0])
        x_t = np.arange(8.0)

        np.testing.assert_allclose(
            reverse_step(FixedNoise(np.zeros(8)), x_t, 2, s, self.ch), x_t, rtol=1e-12
        )

    def test_reverse_step_bounds(self) -> None:
        with self.assertRaises(DomainError):
            reverse_step(self.oracle, self.x0, 1, self.s, self.ch)
        with self.assertRaises(DomainError):
            sample(self.oracle, self.x0, self.ch, self.s, 1001)

    def test_sample_with_exact_noise_recovers_x0(self) -> None:
        for m in (1, 10, 100, 1000):
            y_r = forward_closed(self.x0, m, self.s, self.ch, self.eps)
            with self.subTest(m=m):
                np.testing.assert_allclose(
                    sample(self.oracle, y_r, self.ch, self.s, m), self.x0, atol=1e-6
                )

    def test_single_step_sample_is_estimate(self) -> None:
        y_r = forward_closed(self.x0, 1, self.s, self.ch, self.eps)

        np.testing.assert_array_equal(
            sample(self.oracle, y_r, self.ch, self.s, 1),
            estimate_x0(self.oracle, y_r, 1, self.s, self.ch),
        )

    def test_noiseless_channel_error_is_bounded(self) -> None:
        model = init_model(2, (8,), RngStream(seed=10), time_dim=4)
        ch = sample_channel("awgn", 2, 0.0, RngStream(seed=11))
        x = np.random.default_rng(2).normal(size=4)
        m = select_m(self.s, 0.0)

        error = np.linalg.norm(sample(model, x, ch, self.s, m) - x)
        eps = model.predict(x, ch.h_r, 1)
        bound = np.sqrt(1e-4 / 0.9999) * np.linalg.norm(ch.w_n * eps)
        self.assertEqual(m, 1)
        self.assertLessEqual(error, bound * (1.0 + 1e-9))


class TrainingTests(unittest.TestCase):
    def setUp(self) -> None:
        self.s = linear_schedule(10, 0.999, 0.95)
        self.model = init_model(
            4, (6,), RngStream(seed=0), num_steps=10, time_dim=4
        )
        gen = np.random.default_rng(3)
        self.x = gen.normal(size=(5, 8))
        self.ch = sample_channel("rayleigh", 4, 0.3, gen, (5,))
        self.t = gen.integers(1, 11, size=5)
        self.eps = gen.normal(size=(5, 8))

    def test_oracle_loss_is_zero(self) -> None:
        self.assertEqual(
            cddm_loss(FixedNoise(self.eps), self.x, self.ch, self.t, self.eps, self.s),
            0.0,
        )

    def test_zero_prediction_loss_is_noise_energy(self) -> None:
        loss = cddm_loss(
            FixedNoise(np.zeros(8)), self.x, self.ch, self.t, self.eps, self.s
        )

        self.assertAlmostEqual(loss, np.mean(np.sum(np.square(self.eps), axis=1)))

    def test_loss_and_grad_agree_with_loss(self) -> None:
        for weighted in (False, True):
            loss, _ = cddm_loss_and_grad(
                self.model, self.x, self.ch, self.t, self.eps, self.s, weighted
            )
            with self.subTest(weighted=weighted):
                self.assertAlmostEqual(
                    loss,
                    cddm_loss(
                        self.model, self.x, self.ch, self.t, self.eps, self.s, weighted
                    ),
                )

    def test_gradient_matches_finite_differences(self) -> None:
        for weighted in (False, True):

            def loss() -> float:
                return cddm_loss_and_grad(
                    self.model, self.x, self.ch, self.t, self.eps, self.s, weighted
                )[0]

            _, grad = cddm_loss_and_grad(
                self.model, self.x, self.ch, self.t, self.eps, self.s, weighted
            )
            with self.subTest(weighted=weighted):
                np.testing.assert_allclose(
                    finite_difference(loss, self.model.params),
                    grad,
                    rtol=1e-4,
                    atol=1e-8,
                )

    def test_zero_steps_leave_model_unchanged(self) -> None:
        before = self.model.params.copy()
        train_cddm(
            self.model,
            ConstantSource(8, 0.5),
            self.s,
            TrainConfig(steps=0),
            RngStream(seed=1),
        )

        np.testing.assert_array_equal(self.model.params, before)
        self.assertEqual(self.model.steps_taken, 0)

    def test_training_is_deterministic(self) -> None:
        cfg = TrainConfig(steps=20, batch_size=8)
        first = train_cddm(
            self.model.copy(), ConstantSource(8, 0.5), self.s, cfg, RngStream(seed=2)
        )
        second = train_cddm(
            self.model.copy(), ConstantSource(8, 0.5), self.s, cfg, RngStream(seed=2)
        )

        np.testing.assert_array_equal(first.params, second.params)
        self.assertEqual(first.steps_taken, 20)

    def test_training_lowers_held_out_loss(self) -> None:
        s = linear_schedule(50, 0.999, 0.9)
        model = init_model(2, (32,), RngStream(seed=3), num_steps=50, time_dim=8)
        source = ConstantSource(4, 0.7)
        gen = np.random.default_rng(4)
        x = source.sample(256, gen)
        ch = sample_channel("awgn", 2, 0.1, gen, (256,))
        t = gen.integers(1, 51, size=256)
        eps = gen.normal(size=(256, 4))

        before = cddm_loss(model, x, ch, t, eps, s)
        reports = []
        train_cddm(
            model,
            source,
            s,
            TrainConfig(steps=300, batch_size=32),
            RngStream(seed=5),
            reports.append,
        )

        self.assertEqual(len(reports), 300)
        self.assertLess(cddm_loss(model, x, ch, t, eps, s), before)

    def test_divergence_raises(self) -> None:
        with np.errstate(all="ignore"):
            with self.assertRaises(TrainingError) as caught:
                train_cddm(
                    self.model,
                    ConstantSource(8, 1e200),
                    self.s,
                    TrainConfig(steps=3, batch_size=4),
                    RngStream(seed=6),
                )

        self.assertEqual(caught.exception.stage, "cddm")
        self.assertEqual(caught.exception.step, 0)

    def test_mismatched_source_raises(self) -> None:
        with self.assertRaises(DimensionError):
            train_cddm(
                self.model,
                ConstantSource(6, 0.5),
                self.s,
                TrainConfig(steps=1),
                RngStream(seed=7),
            )

    def test_training_never_touches_the_receiver(self) -> None:
        for name in ("receive", "receive_reparam", "transmit"):
            self.assertFalse(hasattr(cddmpy.diffusion.training, name))


if __name__ == "__main__":
    unittest.main()
