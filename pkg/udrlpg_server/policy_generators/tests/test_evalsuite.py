import csv
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from scipy.stats import spearmanr

from policy_generators.exceptions import ConfigurationError, TrainingAborted
from policy_generators.schemas import BUFFER_STRATEGIES, RunConfig
from policy_generators.services import evalsuite
from policy_generators.services.evalsuite import (
    ablation,
    dispersion,
    final_variance,
    identity_curve,
    spearman_rho,
)
from policy_generators.services.trainer import train


def bandit_config(**overrides):
    data = {
        "env": {"name": "bimodal-bandit"},
        "generator": {"hidden_sizes": [16, 16]},
        "n_init_random": 10,
        "updates_per_stage": 3,
        "batch_size": 4,
        "rollouts_per_stage": 3,
        "total_stages": 2,
    }
    data.update(overrides)
    return RunConfig.model_validate(data)


def read_rows(path):
    with Path(path).open(newline="") as handle:
        return list(csv.reader(handle))


class StatisticsTestCase(SimpleTestCase):
    """Test cases for rank correlation and dispersion"""

    def test_monotone_sequences(self):
        """Test perfectly increasing and decreasing relations"""
        self.assertAlmostEqual(spearman_rho([1, 2, 3, 4], [10, 20, 30, 1000]), 1.0)
        self.assertAlmostEqual(spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]), -1.0)

    def test_matches_scipy_with_ties(self):
        """Test tied values use average ranks like scipy's spearmanr"""
        rng = np.random.default_rng(0)
        x = rng.integers(0, 5, size=30)
        y = x + rng.integers(0, 3, size=30)
        self.assertAlmostEqual(spearman_rho(x, y), spearmanr(x, y)[0])

    def test_matches_rank_difference_formula(self):
        """Test untied data agrees with 1 - 6 sum(d^2) / (n (n^2 - 1))"""
        rng = np.random.default_rng(5)
        x = rng.permutation(12).astype(float)
        y = rng.permutation(12).astype(float)
        d = x - y
        n = len(x)
        expected = 1.0 - 6.0 * np.sum(d * d) / (n * (n * n - 1))
        self.assertAlmostEqual(spearman_rho(x, y), expected)

    def test_all_ties_is_zero(self):
        """Test a constant achieved return gives zero correlation"""
        self.assertEqual(spearman_rho([1, 2, 3], [5, 5, 5]), 0.0)

    def test_length_mismatch(self):
        """Test sequences of different lengths are rejected"""
        with self.assertRaises(ConfigurationError):
            spearman_rho([1, 2], [1, 2, 3])

    def test_dispersion_uses_sample_std(self):
        """Test dispersion reports the ddof=1 standard deviation"""
        summary = dispersion([1.0, 2.0, 3.0])
        self.assertEqual(summary["mean"], 2.0)
        self.assertAlmostEqual(summary["std"], 1.0)
        self.assertEqual((summary["min"], summary["max"]), (1.0, 3.0))


class IdentityCurveTestCase(SimpleTestCase):
    """Test cases for identity curves"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.checkpoint = train(bandit_config()).checkpoint()

    def test_commands_span_known_range(self):
        """Test commands are evenly spaced over the return range plus one probe above it"""
        curve = identity_curve(self.checkpoint, 5, episodes=2)
        np.testing.assert_allclose(curve.commands, [0.0, 2.5, 5.0, 7.5, 10.0])
        self.assertEqual(len(curve.achieved), 5)
        self.assertAlmostEqual(curve.extrapolation_command, 11.0)
        self.assertTrue(-1.0 <= curve.spearman_rho <= 1.0)

    def test_csv_rows_flag_extrapolation(self):
        """Test only the last CSV row is marked as the extrapolation probe"""
        rows = identity_curve(self.checkpoint, 3, episodes=1).csv_rows()
        self.assertEqual([row[2] for row in rows], ["0", "0", "0", "1"])

    def test_needs_two_points(self):
        """Test fewer than two commands is rejected"""
        with self.assertRaises(ConfigurationError):
            identity_curve(self.checkpoint, 1)


class SweepTestCase(SimpleTestCase):
    """Test cases for seed sweeps and the strategy ablation"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.output_dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_final_variance_writes_summary(self):
        """Test final returns over three seeds are summarized per config"""
        reports = final_variance({"bandit": bandit_config()}, [0, 1, 2], self.output_dir)
        self.assertEqual(len(reports), 1)
        report = reports[0]
        self.assertEqual(len(report.final_returns), 3)
        self.assertAlmostEqual(report.summary["std"], float(np.std(report.final_returns, ddof=1)))

        rows = read_rows(self.output_dir / "variance.csv")
        self.assertEqual(rows[0], ["config", "final_mean", "final_std", "final_min", "final_max"])
        self.assertEqual(rows[1][0], "bandit")
        self.assertTrue((self.output_dir / "bandit" / "seed_2" / "run_log.csv").exists())

    def test_duplicate_seeds_have_zero_spread(self):
        """Test repeating one seed reproduces the same final return"""
        report = final_variance([bandit_config()], [4, 4, 4])[0]
        self.assertEqual(len(set(report.final_returns)), 1)
        self.assertAlmostEqual(report.summary["std"], 0.0)
        self.assertEqual(report.summary["min"], report.summary["max"])

    def test_sweeps_need_three_seeds(self):
        """Test dispersion statistics refuse fewer than three seeds"""
        with self.assertRaises(ConfigurationError):
            final_variance([bandit_config()], [0, 1])
        with self.assertRaises(ConfigurationError):
            ablation(bandit_config(), [0, 1])

    def test_ablation_runs_every_strategy(self):
        """Test one per-stage CSV per strategy and a summary row for each"""
        report = ablation(bandit_config(), [0, 1, 2], self.output_dir)
        self.assertTrue(report.succeeded)
        self.assertEqual(sorted(report.curves), sorted(BUFFER_STRATEGIES))

        for strategy in BUFFER_STRATEGIES:
            rows = read_rows(self.output_dir / f"ablation_{strategy}.csv")
            self.assertEqual(rows[0], ["stage", "seed_0", "seed_1", "seed_2", "mean", "std"])
            self.assertEqual([row[0] for row in rows[1:]], ["1", "2"])

        summary = read_rows(self.output_dir / "ablation_summary.csv")
        self.assertEqual(summary[0][0], "strategy")
        self.assertEqual([row[-1] for row in summary[1:]], ["ok"] * 4)
        for row in summary[1:]:
            last_stage = read_rows(self.output_dir / f"ablation_{row[0]}.csv")[-1]
            self.assertEqual(row[1], last_stage[-2])

    def test_failed_strategy_does_not_stop_the_others(self):
        """Test a strategy that aborts is reported while the rest still run"""
        real_train = evalsuite.train

        def flaky_train(config, *args, **kwargs):
            if config.buffer.strategy == "flat_uniform":
                raise TrainingAborted("diverged", stage=1)
            return real_train(config, *args, **kwargs)

        with mock.patch.object(evalsuite, "train", side_effect=flaky_train):
            report = ablation(bandit_config(), [0, 1, 2], self.output_dir)

        self.assertFalse(report.succeeded)
        self.assertEqual(report.failures, {"flat_uniform": "diverged"})
        self.assertEqual(len(report.curves), 3)
        summary = {row[0]: row[-1] for row in read_rows(self.output_dir / "ablation_summary.csv")[1:]}
        self.assertEqual(summary["flat_uniform"], "failed")
        self.assertEqual(summary["buckets_weighted"], "ok")
