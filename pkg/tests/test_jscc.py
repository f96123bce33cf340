import unittest
from unittest import mock

import numpy as np
from scipy.stats import ortho_group

from cddmpy.channels import receive, sample_channel, snr_db_to_sigma2
from cddmpy.diffusion import linear_schedule
from cddmpy.diffusion.training import TrainConfig
from cddmpy.errors import DimensionError, TrainingError
from cddmpy.jscc import (
    GaussianMixtureSource,
    JsccConfig,
    JsccDecoder,
    JsccEncoder,
    SourceSampler,
    SparseSpikeSource,
    TinyImageSource,
    decode,
    encode,
    init_decoder,
    init_encoder,
    kl_term,
    psnr,
    stage1_loss,
    stage3_loss,
    train_joint,
)
from cddmpy.jscc.codec import (
    KL_WEIGHT_DEFAULT,
    encode_batch,
    psnr_from_mse,
    reconstruction_mse,
    stage1_loss_and_grad,
)
from cddmpy.jscc.training import (
    DENOISER_CHECKPOINT,
    ENCODER_CHECKPOINT,
    JOINT_DECODER_CHECKPOINT,
    train_stage1,
)
from cddmpy.networks import init_model
from cddmpy.signals import complex_symbol_power
from cddmpy.streams import RngStream


def identity_codec(k: int, seed: int) -> tuple[JsccEncoder, JsccDecoder]:
    q = ortho_group.rvs(2 * k, random_state=seed)
    enc = JsccEncoder(
        n=2 * k,
        k=k,
        use_sigma=False,
        hidden_widths=(),
        params=np.concatenate([q.ravel(), np.zeros(2 * k)]),
    )
    dec = JsccDecoder(
        n=2 * k,
        k=k,
        hidden_widths=(),
        params=np.concatenate([q.T.ravel(), np.zeros(2 * k)]),
    )
    return enc, dec


class CodecTests(unittest.TestCase):
    def setUp(self) -> None:
        self.enc = init_encoder(16, 4, (12,), RngStream(seed=0))
        self.dec = init_decoder(16, 4, (12,), RngStream(seed=1))
        self.s = np.random.default_rng(0).normal(size=(6, 16))

    def test_noise_free_encoding_is_the_mean(self) -> None:
        small = 1e-3 * self.s
        batch = encode_batch(self.enc, small, RngStream(seed=2), noise_free=True)

        self.assertEqual(batch.power_scale, 1.0)
        np.testing.assert_array_equal(
            encode(self.enc, small, RngStream(seed=3), noise_free=True), batch.mu
        )

    def test_encoding_is_reproducible(self) -> None:
        np.testing.assert_array_equal(
            encode(self.enc, self.s, RngStream(seed=4)),
            encode(self.enc, self.s, RngStream(seed=4)),
        )

    def test_power_is_capped(self) -> None:
        x = encode(self.enc, 100.0 * self.s, RngStream(seed=5))

        self.assertEqual(x.shape, (6, 8))
        self.assertLessEqual(complex_symbol_power(x), 1.0 + 1e-9)
        self.assertGreater(complex_symbol_power(x), 1.0 - 1e-6)

    def test_decode(self) -> None:
        y = np.random.default_rng(6).normal(size=(6, 8))

        self.assertEqual(decode(self.dec, y).shape, (6, 16))
        np.testing.assert_array_equal(decode(self.dec, y), decode(self.dec, y))
        with self.assertRaises(DimensionError):
            decode(self.dec, np.zeros(6))
        with self.assertRaises(DimensionError):
            encode(self.enc, np.zeros(15), RngStream(seed=7))

    def test_identity_codec_over_clean_channel(self) -> None:
        enc, dec = identity_codec(4, seed=8)
        s = 0.1 * np.random.default_rng(8).normal(size=(5, 8))
        ch = sample_channel("awgn", 4, 0.0, RngStream(seed=9))
        y = receive(encode(enc, s, RngStream(seed=10)), ch, RngStream(seed=11))

        np.testing.assert_allclose(decode(dec, y), s, atol=1e-12)

    def test_kl_values(self) -> None:
        self.assertEqual(kl_term(np.zeros(4), np.ones(4)), 0.0)
        self.assertAlmostEqual(kl_term(np.array([1.0]), np.array([1.0])), 0.5)

    def test_kl_matches_monte_carlo(self) -> None:
        mu, sigma = 0.7, 0.6
        z = np.random.default_rng(12).normal(mu, sigma, size=1_000_000)
        log_ratio = -np.log(sigma) - np.square(z - mu) / (2 * sigma**2) + z**2 / 2

        self.assertAlmostEqual(
            kl_term(np.array([mu]), np.array([sigma])) / np.mean(log_ratio),
            1.0,
            delta=0.02,
        )

    def test_stage3_loss(self) -> None:
        dec = JsccDecoder(
            n=4,
            k=2,
            hidden_widths=(),
            params=np.concatenate([np.eye(4).ravel(), np.full(4, 0.5)]),
        )
        s = np.random.default_rng(13).normal(size=(7, 4))

        self.assertAlmostEqual(stage3_loss(dec, s, s), 0.25)
        self.assertAlmostEqual(stage3_loss(dec, s[::-1], s[::-1]), 0.25, places=12)
        self.assertAlmostEqual(stage3_loss(dec, s + 0.5, s), 0.0, places=12)

    def test_psnr(self) -> None:
        s = np.ones((2, 3))

        self.assertEqual(psnr(s, s, 1.0), np.inf)
        self.assertAlmostEqual(psnr_from_mse(0.01, 1.0), 20.0)
        self.assertAlmostEqual(reconstruction_mse(s, s + 0.1), 0.01)
        self.assertGreater(psnr_from_mse(0.01, 1.0), psnr_from_mse(0.02, 1.0))


class Stage1GradientTests(unittest.TestCase):
    def check_gradients(
        self, enc: JsccEncoder, s: np.ndarray, mode: str, sigma2: float
    ) -> None:
        dec = init_decoder(enc.n, enc.k, (5,), RngStream(seed=20))
        ch = sample_channel(mode, enc.k, sigma2, RngStream(seed=21), (s.shape[0],))

        def loss() -> float:
            return stage1_loss(enc, dec, s, ch, 0.1, RngStream(seed=22))

        _, grad_enc, grad_dec = stage1_loss_and_grad(
            enc, dec, s, ch, 0.1, RngStream(seed=22)
        )
        for network, grad in ((enc, grad_enc), (dec, grad_dec)):
            params = network.params
            numeric = np.zeros_like(params)
            for index in range(params.size):
                original = params[index]
                params[index] = original + 1e-5
                upper = loss()
                params[index] = original - 1e-5
                lower = loss()
                params[index] = original
                numeric[index] = (upper - lower) / 2e-5
            np.testing.assert_allclose(numeric, grad, rtol=1e-4, atol=1e-6)

    def test_gradients_with_power_cap(self) -> None:
        enc = init_encoder(6, 2, (5,), RngStream(seed=23), use_sigma=True)
        s = 5.0 * np.random.default_rng(23).normal(size=(4, 6))

        self.assertLess(encode_batch(enc, s, RngStream(seed=22)).power_scale, 1.0)
        self.check_gradients(enc, s, "rayleigh", 0.2)

    def test_gradients_below_power_limit(self) -> None:
        enc = init_encoder(6, 2, (5,), RngStream(seed=24), use_sigma=False)
        s = 0.01 * np.random.default_rng(24).normal(size=(4, 6))

        self.assertEqual(encode_batch(enc, s, RngStream(seed=22)).power_scale, 1.0)
        self.check_gradients(enc, s, "awgn", 0.05)

    def test_negative_kl_weight(self) -> None:
        enc = init_encoder(6, 2, (), RngStream(seed=25))
        dec = init_decoder(6, 2, (), RngStream(seed=26))
        ch = sample_channel("awgn", 2, 0.1, RngStream(seed=27))

        with self.assertRaises(ValueError):
            stage1_loss(enc, dec, np.zeros((2, 6)), ch, -1.0, RngStream(seed=28))


class SourceTests(unittest.TestCase):
    def test_sources(self) -> None:
        for source in (
            GaussianMixtureSource(n=32),
            SparseSpikeSource(n=32, sparsity=0.2),
            TinyImageSource(side=4),
        ):
            draws = source.sample(20_000, RngStream(seed=30))
            with self.subTest(source=source.kind):
                self.assertEqual(draws.shape, (20_000, source.dim))
                self.assertAlmostEqual(
                    float(np.mean(draws.var(axis=0))) / source.variance, 1.0, delta=0.1
                )

    def test_tiny_images_stay_in_range(self) -> None:
        draws = TinyImageSource().sample(1000, RngStream(seed=31))

        self.assertTrue(np.all((draws >= 0.0) & (draws <= 1.0)))

    def test_structure_round_trip(self) -> None:
        source = SourceSampler.create(
            {"name": "sparse_spike", "args": {"n": 64, "sparsity": 0.1}}
        )

        self.assertIsInstance(source, SparseSpikeSource)
        self.assertEqual(source.dim, 64)
        self.assertEqual(SourceSampler.create(source.unstructure()).sparsity, 0.1)
        with self.assertRaises(ValueError):
            source.sample(0, RngStream(seed=32))


class JointTrainingTests(unittest.TestCase):
    def setUp(self) -> None:
        self.source = GaussianMixtureSource(n=16)
        self.s = linear_schedule(20, 0.999, 0.9)
        self.enc = init_encoder(16, 2, (8,), RngStream(seed=40))
        self.dec = init_decoder(16, 2, (8,), RngStream(seed=41))
        self.model = init_model(2, (8,), RngStream(seed=42), num_steps=20, time_dim=4)
        self.train_cfg = TrainConfig(batch_size=8)

    def run_joint(self, stage_steps: tuple[int, int, int], on_checkpoint=None) -> None:
        cfg = JsccConfig(
            encoder_widths=(8,),
            decoder_widths=(8,),
            stage_steps=stage_steps,
            batch_size=8,
        )
        train_joint(
            self.enc,
            self.dec,
            self.model,
            self.source,
            self.s,
            cfg,
            self.train_cfg,
            RngStream(seed=43, stream_id=4),
            on_checkpoint=on_checkpoint,
        )

    def test_no_steps_change_nothing(self) -> None:
        hashes = [net.param_hash() for net in (self.enc, self.dec, self.model)]
        self.run_joint((0, 0, 0))

        self.assertEqual(
            [net.param_hash() for net in (self.enc, self.dec, self.model)], hashes
        )

    def test_later_stages_freeze_earlier_networks(self) -> None:
        saved: dict[str, str] = {}

        def on_checkpoint(network, name: str) -> None:
            saved[name] = network.param_hash()

        encoder_before = self.enc.param_hash()
        self.run_joint((2, 3, 2), on_checkpoint)

        self.assertNotEqual(saved[ENCODER_CHECKPOINT], encoder_before)
        self.assertEqual(self.enc.param_hash(), saved[ENCODER_CHECKPOINT])
        self.assertEqual(self.model.param_hash(), saved[DENOISER_CHECKPOINT])
        self.assertEqual(self.dec.param_hash(), saved[JOINT_DECODER_CHECKPOINT])

    def test_stage3_changing_frozen_networks_is_an_error(self) -> None:
        def nudge_denoiser(enc, dec, model, *args) -> JsccDecoder:
            model.params[0] += 1.0
            return dec

        with mock.patch(
            "cddmpy.jscc.training.train_stage3", side_effect=nudge_denoiser
        ):
            with self.assertRaises(TrainingError) as ctx:
                self.run_joint((0, 0, 1))

        self.assertEqual(ctx.exception.stage, "stage3")
        self.assertEqual(ctx.exception.step, 1)

    def test_stage1_beats_the_source_variance(self) -> None:
        source = GaussianMixtureSource(n=32)
        enc = init_encoder(32, 4, (64,), RngStream(seed=44), use_sigma=False)
        dec = init_decoder(32, 4, (64,), RngStream(seed=45))
        cfg = JsccConfig(
            use_sigma=False, stage_steps=(2000, 0, 0), snr_db_range=(20.0, 20.0)
        )
        train_stage1(enc, dec, source, cfg, "awgn", RngStream(seed=46))

        s = source.sample(2000, RngStream(seed=47))
        sigma2 = float(snr_db_to_sigma2(20.0))
        ch = sample_channel("awgn", 4, sigma2, RngStream(seed=48), (2000,))
        y = receive(encode(enc, s, RngStream(seed=49)), ch, RngStream(seed=50))

        self.assertLess(reconstruction_mse(s, decode(dec, y)), source.variance)

    def test_default_kl_weight(self) -> None:
        self.assertEqual(JsccConfig().kl_weight, KL_WEIGHT_DEFAULT)
        self.assertEqual(KL_WEIGHT_DEFAULT, 5e-5)


if __name__ == "__main__":
    unittest.main()
