import unittest

import numpy as np

from cddmpy.bench.moments import relative_moment_errors
from cddmpy.channels import (
    ChannelRealization,
    mmse_equalize,
    normalize_reshape,
    prop_moments,
    receive,
    receive_reparam,
    sample_channel,
    sigma2_to_snr_db,
    snr_db_to_sigma2,
    transmit,
)
from cddmpy.errors import DimensionError, DomainError, SingularityError
from cddmpy.signals import (
    channel_uses,
    complex_from_real,
    complex_symbol_power,
    real_from_complex,
    satisfies_power_constraint,
)
from cddmpy.streams import RngStream

MONTE_CARLO_TRIALS = 100_000
MEAN_TOLERANCE = 0.01
VARIANCE_TOLERANCE = 0.02
FIXED_GAINS = np.array([1.0, 0.8, 1.2, 0.5, 1.5, 0.9, 1.1, 0.7])


class SignalTests(unittest.TestCase):
    def test_complex_real_layout(self) -> None:
        x = np.array([1.0, 2.0, 3.0, 4.0])
        x_c = complex_from_real(x)

        np.testing.assert_array_equal(x_c, np.array([1.0 + 3.0j, 2.0 + 4.0j]))
        np.testing.assert_array_equal(real_from_complex(x_c), x)
        self.assertEqual(channel_uses(x), 2)

    def test_odd_length_is_rejected(self) -> None:
        with self.assertRaises(DimensionError):
            complex_from_real(np.ones(5))

    def test_power_per_complex_symbol(self) -> None:
        x = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])

        self.assertAlmostEqual(complex_symbol_power(x), 1.0)
        self.assertTrue(satisfies_power_constraint(x))
        self.assertFalse(satisfies_power_constraint(1.01 * x))


class ChannelTests(unittest.TestCase):
    def test_snr_convention(self) -> None:
        self.assertAlmostEqual(float(snr_db_to_sigma2(10.0)), 0.05)
        self.assertAlmostEqual(float(sigma2_to_snr_db(0.05)), 10.0)
        self.assertEqual(float(snr_db_to_sigma2(np.inf)), 0.0)

    def test_awgn_weights_are_identity(self) -> None:
        ch = sample_channel("AWGN", 3, 0.1, RngStream(seed=1))

        np.testing.assert_array_equal(ch.w_s, np.ones(6))
        np.testing.assert_array_equal(ch.w_n, np.ones(6))
        self.assertEqual(ch.mode, "awgn")

    def test_rayleigh_weights_by_hand(self) -> None:
        ch = ChannelRealization(mode="rayleigh", h_c_abs=[1.0, 0.5], sigma2=0.25)

        np.testing.assert_allclose(ch.h_r, [1.0, 0.5, 1.0, 0.5])
        np.testing.assert_allclose(ch.w_s, [2 / 3, 1 / 3, 2 / 3, 1 / 3])
        np.testing.assert_allclose(ch.w_n, [2 / 3, 2 / 3, 2 / 3, 2 / 3])
        self.assertAlmostEqual(ch.noise_scale, np.sqrt(0.2))
        self.assertAlmostEqual(ch.normalization, 1 / np.sqrt(1.25))

    def test_rayleigh_zero_gain_without_noise_is_singular(self) -> None:
        with self.assertRaises(SingularityError):
            ChannelRealization(mode="rayleigh", h_c_abs=[0.0, 1.0], sigma2=0.0)

    def test_invalid_parameters(self) -> None:
        with self.assertRaises(DomainError):
            sample_channel("awgn", 4, -0.1, RngStream(seed=1))
        with self.assertRaises(DomainError):
            sample_channel("rician", 4, 0.1, RngStream(seed=1))

    def test_batched_realization(self) -> None:
        ch = sample_channel("rayleigh", 4, 0.1, RngStream(seed=2), batch_shape=(3,))

        self.assertEqual(ch.h_r.shape, (3, 8))
        self.assertEqual(ch.batch_shape, (3,))
        self.assertTrue(np.all(ch.h_c_abs > 0.0))

    def test_noiseless_awgn_receive_is_identity(self) -> None:
        x = np.random.default_rng(3).normal(size=(5, 8))
        ch = sample_channel("awgn", 4, 0.0, RngStream(seed=3))

        np.testing.assert_allclose(receive(x, ch, RngStream(seed=4)), x, atol=1e-15)

    def test_reparam_exposes_its_noise(self) -> None:
        x = np.random.default_rng(5).normal(size=8)
        ch = sample_channel("rayleigh", 4, 0.3, RngStream(seed=5))
        y_r, eps = receive_reparam(x, ch, RngStream(seed=6), return_noise=True)

        expected = ch.normalization * ch.w_s * x + ch.noise_scale * ch.w_n * eps
        np.testing.assert_allclose(y_r, expected)

    def test_receive_matches_closed_form_moments(self) -> None:
        x = np.where(np.arange(16) % 3 == 0, -1.0, 1.0) / np.sqrt(2.0)
        ch = ChannelRealization(mode="rayleigh", h_c_abs=FIXED_GAINS, sigma2=0.05)
        y_r = receive(np.tile(x, (MONTE_CARLO_TRIALS, 1)), ch, RngStream(seed=8))

        mean_error, var_error = relative_moment_errors(
            y_r.mean(axis=0), y_r.var(axis=0, ddof=1), *prop_moments(x, ch)
        )
        self.assertLess(mean_error, MEAN_TOLERANCE)
        self.assertLess(var_error, VARIANCE_TOLERANCE)

    def test_streams_are_reproducible(self) -> None:
        stream = RngStream(seed=11, stream_id=2)

        np.testing.assert_array_equal(
            stream.generator().normal(size=4), stream.generator().normal(size=4)
        )
        self.assertFalse(
            np.array_equal(
                stream.child(0).generator().normal(size=4),
                stream.child(1).generator().normal(size=4),
            )
        )

class ReceiverChainTests(unittest.TestCase):
    def test_rayleigh_gains_have_unit_power(self) -> None:
        ch = sample_channel(
            "rayleigh", 100, 0.1, RngStream(seed=20), batch_shape=(1_000,)
        )

        power = float(np.mean(np.square(ch.h_c_abs)))
        self.assertGreaterEqual(power, 0.99)
        self.assertLessEqual(power, 1.01)

    def test_transmit_noise_variance(self) -> None:
        sigma2 = 0.05
        ch = ChannelRealization(mode="rayleigh", h_c_abs=FIXED_GAINS, sigma2=sigma2)
        x_c = complex_from_real(np.linspace(-0.7, 0.7, 16))
        y_c = transmit(np.tile(x_c, (MONTE_CARLO_TRIALS, 1)), ch, RngStream(seed=21))
        noise = y_c - ch.h_c_abs * x_c

        for part in (noise.real, noise.imag):
            variance = part.var(axis=0, ddof=1) / sigma2
            self.assertTrue(np.all((variance >= 0.98) & (variance <= 1.02)))

    def test_transmit_of_silence_is_centred_noise(self) -> None:
        sigma2 = 0.05
        ch = sample_channel("rayleigh", 4, sigma2, RngStream(seed=22))
        y_c = transmit(np.zeros((MONTE_CARLO_TRIALS, 4)), ch, RngStream(seed=23))

        bound = 4.0 * np.sqrt(sigma2 / MONTE_CARLO_TRIALS)
        self.assertTrue(np.all(np.abs(y_c.real.mean(axis=0)) <= bound))
        self.assertTrue(np.all(np.abs(y_c.imag.mean(axis=0)) <= bound))

    def test_noiseless_transmit_is_exact(self) -> None:
        x_c = complex_from_real(np.arange(8.0))
        ch = sample_channel("awgn", 4, 0.0, RngStream(seed=24))

        np.testing.assert_array_equal(transmit(x_c, ch, RngStream(seed=25)), x_c)
        with self.assertRaises(DimensionError):
            transmit(x_c[:3], ch, RngStream(seed=25))

    def test_equalizer_by_hand(self) -> None:
        x_c = np.array([1.0 + 2.0j, -0.5 + 0.0j, 0.3 - 0.4j])

        unit = ChannelRealization(mode="rayleigh", h_c_abs=np.ones(3), sigma2=0.05)
        np.testing.assert_allclose(mmse_equalize(x_c, unit), x_c / 1.1)

        gains = np.array([0.5, 2.0, 1.3])
        noiseless = ChannelRealization(mode="rayleigh", h_c_abs=gains, sigma2=0.0)
        np.testing.assert_allclose(mmse_equalize(gains * x_c, noiseless), x_c)

        faded = ChannelRealization(
            mode="rayleigh", h_c_abs=[0.0, 1.0, 0.0], sigma2=0.2
        )
        y_eq = mmse_equalize(x_c, faded)
        np.testing.assert_array_equal(y_eq[[0, 2]], 0.0)
        self.assertAlmostEqual(y_eq[1], x_c[1] / 1.4)

        awgn = sample_channel("awgn", 3, 0.3, RngStream(seed=26))
        np.testing.assert_array_equal(mmse_equalize(x_c, awgn), x_c)

    def test_noiseless_equalizer_applies_signal_weights(self) -> None:
        x = np.random.default_rng(27).normal(size=8)
        ch = sample_channel("rayleigh", 4, 0.1, RngStream(seed=27))
        y_eq = mmse_equalize(ch.h_c_abs * complex_from_real(x), ch)

        np.testing.assert_allclose(real_from_complex(y_eq), ch.w_s * x)

    def test_normalize_reshape(self) -> None:
        y_eq = np.array([1.0 + 0.0j, 1.0 + 0.0j])

        np.testing.assert_allclose(
            normalize_reshape(y_eq, 1.0), [2**-0.5, 2**-0.5, 0.0, 0.0]
        )
        np.testing.assert_array_equal(
            normalize_reshape(y_eq, 0.0), real_from_complex(y_eq)
        )
        y = np.array([0.2 - 1.0j, 3.0 + 0.5j])
        np.testing.assert_allclose(
            normalize_reshape(2.0 * y, 0.4), 2.0 * normalize_reshape(y, 0.4)
        )

    def test_explicit_chain_and_reparameterization_agree(self) -> None:
        x = np.where(np.arange(16) % 3 == 0, -1.0, 1.0) / np.sqrt(2.0)
        batch = np.tile(x, (MONTE_CARLO_TRIALS, 1))
        ch = ChannelRealization(mode="rayleigh", h_c_abs=FIXED_GAINS, sigma2=0.05)
        expected = prop_moments(x, ch)

        y_c = transmit(complex_from_real(batch), ch, RngStream(seed=28))
        chain = normalize_reshape(mmse_equalize(y_c, ch), ch.sigma2)
        reparam = receive_reparam(batch, ch, RngStream(seed=29))

        for name, y_r in (("chain", chain), ("reparam", reparam)):
            with self.subTest(path=name):
                mean_error, var_error = relative_moment_errors(
                    y_r.mean(axis=0), y_r.var(axis=0, ddof=1), *expected
                )
                self.assertLess(mean_error, MEAN_TOLERANCE)
                self.assertLess(var_error, VARIANCE_TOLERANCE)



if __name__ == "__main__":
    unittest.main()
