import unittest

import numpy as np

from cddmpy.channels import sample_channel, snr_db_to_sigma2
from cddmpy.diffusion import (
    NoiseSchedule,
    kl_forward_vs_channel,
    linear_schedule,
    matched_alpha_bar,
    select_m,
)
from cddmpy.diffusion.process import make_x0
from cddmpy.errors import DomainError
from cddmpy.streams import RngStream


class ScheduleTests(unittest.TestCase):
    def setUp(self) -> None:
        self.s = linear_schedule()

    def test_linear_endpoints(self) -> None:
        self.assertEqual(self.s.num_steps, 1000)
        self.assertAlmostEqual(self.s.alpha_at(1), 0.9999)
        self.assertAlmostEqual(self.s.alpha_at(1000), 0.98)

    def test_alpha_bar(self) -> None:
        self.assertEqual(self.s.alpha_bar_at(0), 1.0)
        self.assertAlmostEqual(self.s.alpha_bar_at(1), 0.9999)
        self.assertAlmostEqual(self.s.alpha_bar_at(2), 0.9999 * self.s.alpha_at(2))
        self.assertTrue(np.all(np.diff(self.s.alpha_bar) < 0.0))
        self.assertTrue(1e-5 < self.s.alpha_bar_at(1000) < 1e-4)

    def test_invalid_schedules(self) -> None:
        with self.assertRaises(DomainError):
            linear_schedule(10, 0.9, 0.95)
        with self.assertRaises(DomainError):
            NoiseSchedule(alpha=[0.5, 1.5])
        with self.assertRaises(DomainError):
            self.s.alpha_at(1001)

    def test_select_m_extremes(self) -> None:
        self.assertEqual(select_m(self.s, 0.0), 1)
        self.assertEqual(select_m(self.s, 1e9), 1000)

    def test_select_m_on_grid(self) -> None:
        u = self.s.noise_to_signal()

        self.assertEqual(select_m(self.s, u[99]), 100)
        self.assertEqual(select_m(self.s, u[99] / 2, target_factor=2), 100)

    def test_select_m_rejects_bad_input(self) -> None:
        with self.assertRaises(DomainError):
            select_m(self.s, -0.1)
        with self.assertRaises(DomainError):
            select_m(self.s, 0.1, target_factor=3)

    def test_select_m_follows_noise_level(self) -> None:
        sigma2 = snr_db_to_sigma2(np.arange(25.0, -1.0, -1.0))
        steps = [select_m(self.s, float(value)) for value in sigma2]

        self.assertTrue(np.all(np.diff(steps) >= 0))

    def test_matched_alpha_bar(self) -> None:
        self.assertAlmostEqual(matched_alpha_bar(0.25), 0.8)

    def test_select_m_minimizes_kl(self) -> None:
        gen = np.random.default_rng(2024)
        u = self.s.noise_to_signal()
        steps = np.arange(1, self.s.num_steps + 1)

        for index in range(20):
            t = int(gen.integers(2, self.s.num_steps))
            jitter = gen.uniform(-0.25, 0.25)
            gap = u[t] - u[t - 1] if jitter > 0.0 else u[t - 1] - u[t - 2]
            sigma2 = float(u[t - 1] + jitter * gap)

            mode = "awgn" if index % 2 == 0 else "rayleigh"
            k = int(gen.integers(2, 9))
            ch = sample_channel(mode, k, sigma2, RngStream(seed=index))
            x0 = make_x0(gen.normal(scale=np.sqrt(0.5), size=2 * k), ch)

            kl = [kl_forward_vs_channel(self.s, step, sigma2, ch, x0) for step in steps]
            with self.subTest(t=t, mode=mode):
                self.assertEqual(select_m(self.s, sigma2), t)
                self.assertEqual(int(np.argmin(kl)) + 1, t)

    def test_single_step_schedule(self) -> None:
        s = linear_schedule(1, 0.99, 0.9)

        np.testing.assert_array_equal(s.alpha, [0.99])
        np.testing.assert_array_equal(s.alpha_bar, [0.99])
        self.assertEqual(s.num_steps, 1)
        self.assertEqual(select_m(s, 0.0), 1)
        self.assertEqual(select_m(s, 10.0), 1)

    def test_kl_vanishes_on_a_matched_step(self) -> None:
        s = NoiseSchedule(alpha=[0.8, 0.5])
        ch = sample_channel("rayleigh", 3, 0.25, RngStream(seed=3))
        x0 = make_x0(np.random.default_rng(3).normal(size=6), ch)

        self.assertAlmostEqual(kl_forward_vs_channel(s, 1, 0.25, ch, x0), 0.0, 12)
        self.assertGreater(kl_forward_vs_channel(s, 2, 0.25, ch, x0), 0.1)
        self.assertEqual(select_m(s, 0.25), 1)

    def test_kl_without_noise_is_infinite(self) -> None:
        ch = sample_channel("awgn", 2, 0.0, RngStream(seed=1))
        x0 = np.ones(4)

        self.assertEqual(kl_forward_vs_channel(self.s, 1, 0.0, ch, x0), np.inf)


if __name__ == "__main__":
    unittest.main()
