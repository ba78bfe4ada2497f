import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from policy_generators.exceptions import ConfigurationError, NonFiniteError, TrainingAborted
from policy_generators.schemas import RunConfig
from policy_generators.services.checkpoint_service import LATEST_NAME, load_checkpoint
from policy_generators.services.run_log_service import write_run_log
from policy_generators.services.envs import get_environment, rollout
from policy_generators.services.policy import Policy
from policy_generators.services.trainer import (
    RunLog,
    StageRecord,
    UDRLPGTrainer,
    derive_seed,
    evaluate,
    evaluation_seed,
    train,
)


def small_config(**overrides):
    data = {
        "env": {"name": "cartpole-balance"},
        "generator": {"hidden_sizes": [16, 16]},
        "n_init_random": 8,
        "updates_per_stage": 5,
        "batch_size": 8,
        "rollouts_per_stage": 4,
        "total_stages": 3,
        "seed": 1,
    }
    data.update(overrides)
    return RunConfig.model_validate(data)


class TrainerTestCase(SimpleTestCase):
    """Test cases for the training loop"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.output_dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_run_log_records_every_stage(self):
        """Test one record per stage with monotone step count and best-so-far"""
        config = small_config()
        result = train(config, self.output_dir)
        records = result.run_log.records

        self.assertEqual([record.stage for record in records], [1, 2, 3])
        steps = [record.env_steps for record in records]
        self.assertEqual(steps, sorted(steps))
        bests = [record.best_return for record in records]
        self.assertEqual(bests, sorted(bests))
        for record in records:
            self.assertGreaterEqual(record.max_return, record.mean_return)
            self.assertGreaterEqual(record.best_return, record.max_return)
            self.assertEqual(len(record.bucket_occupancy), config.buffer.n_buckets)
        self.assertEqual(sum(records[-1].bucket_occupancy), 8 + 3 * 4)

    def test_hindsight_relabelling(self):
        """Test every stored policy carries the return it achieved, never its command"""
        config = small_config()
        result = train(config)
        for stage in range(1, config.total_stages + 1):
            stored = sorted(entry.observed_return for entry in result.buffer if entry.birth_iteration == stage)
            achieved = sorted(r for s, _, r in result.inserted_commands if s == stage)
            self.assertEqual(stored, achieved)
            self.assertEqual(len(stored), config.rollouts_per_stage)

    def test_same_seed_same_csv(self):
        """Test two runs with one seed write byte-identical run logs"""
        config = small_config()
        first = write_run_log(train(config).run_log, self.output_dir / "first.csv")
        second = write_run_log(train(config).run_log, self.output_dir / "second.csv")
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_worker_count_does_not_change_results(self):
        """Test threaded rollouts reproduce the sequential run exactly"""
        sequential = train(small_config(workers=1))
        threaded = train(small_config(workers=3))
        self.assertEqual(
            [record.csv_row() for record in sequential.run_log.records],
            [record.csv_row() for record in threaded.run_log.records],
        )
        self.assertEqual(sequential.norm, threaded.norm)
        np.testing.assert_array_equal(sequential.generator.rho.values, threaded.generator.rho.values)

    def test_different_seeds_differ(self):
        """Test the master seed changes the run"""
        first = train(small_config(seed=1))
        second = train(small_config(seed=2))
        self.assertFalse(np.array_equal(first.generator.rho.values, second.generator.rho.values))

    def test_checkpoints_written(self):
        """Test stage checkpoints, the latest pointer and the config echo are written"""
        result = train(small_config(), self.output_dir)
        for stage in range(4):
            self.assertTrue((self.output_dir / f"checkpoint_stage_{stage}.json").exists())
        self.assertTrue((self.output_dir / "config.json").exists())
        self.assertEqual(result.checkpoint_path, self.output_dir / LATEST_NAME)

        checkpoint = load_checkpoint(result.checkpoint_path)
        self.assertEqual(checkpoint.stage, 3)
        self.assertEqual(checkpoint.norm, result.norm)
        np.testing.assert_array_equal(
            checkpoint.generator.generate(100.0).values, result.generator.generate(100.0).values
        )
        np.testing.assert_array_equal(checkpoint.best_policy.params.values, result.buffer.best_entry().theta.values)

    def test_latest_checkpoint_only(self):
        """Test sweeps can keep only the latest checkpoint"""
        train(small_config(), self.output_dir, keep_stage_checkpoints=False)
        names = sorted(path.name for path in self.output_dir.glob("checkpoint_*.json"))
        self.assertEqual(names, [LATEST_NAME])

    def test_zero_stages(self):
        """Test a run with no stages only initializes and checkpoints stage 0"""
        result = train(small_config(total_stages=0), self.output_dir)
        self.assertEqual(len(result.run_log), 0)
        self.assertEqual(len(result.buffer), 8)
        self.assertEqual(load_checkpoint(result.checkpoint_path).stage, 0)

    def test_zero_stages_leave_generator_untouched(self):
        """Test a run with no stages returns the freshly initialized generator"""
        result = train(small_config(total_stages=0), self.output_dir)
        fresh = UDRLPGTrainer(small_config(total_stages=0)).generator
        np.testing.assert_array_equal(result.generator.rho.values, fresh.rho.values)

    def test_fatal_error_aborts_with_partial_checkpoint(self):
        """Test a fatal error in a stage raises TrainingAborted pointing at a checkpoint"""
        trainer = UDRLPGTrainer(small_config(), self.output_dir)
        with mock.patch.object(trainer, "rollout_stage", side_effect=NonFiniteError("bad action")):
            with self.assertRaises(TrainingAborted) as raised:
                trainer.train()
        self.assertEqual(raised.exception.stage, 1)
        self.assertTrue(Path(raised.exception.checkpoint_path).exists())
        self.assertIn("bad action", raised.exception.detail)
        self.assertEqual(len(trainer.run_log), 0)

    def test_seed_streams_are_distinct(self):
        """Test derived seeds differ by purpose, stage and index"""
        draws = {
            tuple(np.random.default_rng(derive_seed(0, purpose, stage, index)).integers(0, 2**31, size=2))
            for purpose in range(3)
            for stage in range(3)
            for index in range(3)
        }
        self.assertEqual(len(draws), 27)


class EvaluateTestCase(SimpleTestCase):
    """Test cases for checkpoint evaluation"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.checkpoint = train(small_config(total_stages=1)).checkpoint()

    def test_evaluation_is_deterministic(self):
        """Test the same seed gives the same returns"""
        first = evaluate(self.checkpoint, 500.0, 3, seed=4)
        second = evaluate(self.checkpoint, 500.0, 3, seed=4)
        self.assertEqual(first, second)
        self.assertEqual(len(first[1]), 3)
        self.assertAlmostEqual(first[0], float(np.mean(first[1])))

    def test_checkpoint_norm_untouched(self):
        """Test evaluation works on a copy of the stored normalizer"""
        before = self.checkpoint.norm.copy()
        evaluate(self.checkpoint, 200.0, 2, seed=0)
        self.assertEqual(self.checkpoint.norm, before)

    def test_episodes_must_be_positive(self):
        """Test zero episodes raises ConfigurationError"""
        with self.assertRaises(ConfigurationError):
            evaluate(self.checkpoint, 200.0, 0, seed=0)

    def test_single_episode_matches_seeded_rollout(self):
        """Test one evaluation episode is exactly one rollout on the evaluation seed"""
        env = get_environment("cartpole-balance")
        theta = self.checkpoint.generator.generate(300.0)
        policy = Policy(theta, env.contract.action_low, env.contract.action_high)
        expected = rollout(env, policy, self.checkpoint.norm.copy(), evaluation_seed(7, 0))
        mean_return, returns = evaluate(self.checkpoint, 300.0, 1, seed=7)
        self.assertEqual(returns, [expected.episode_return])
        self.assertEqual(mean_return, expected.episode_return)


class RunLogTestCase(SimpleTestCase):
    """Test cases for the append-only run log"""

    def test_stages_must_be_consecutive(self):
        """Test a record skipping a stage is rejected"""
        run_log = RunLog()
        run_log.append(StageRecord(1, 10, 1.0, 2.0, 2.0, 0.5, (1, 0)))
        with self.assertRaises(ConfigurationError):
            run_log.append(StageRecord(3, 20, 1.0, 2.0, 2.0, 0.5, (1, 0)))
        self.assertEqual(len(run_log), 1)


class BanditTrainingTestCase(SimpleTestCase):
    """Test cases for a short run on the bimodal bandit"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = small_config(
            env={"name": "bimodal-bandit"},
            n_init_random=10,
            total_stages=4,
            sigma=0.02,
        )
        cls.result = train(cls.config)

    def test_initial_labels_match_later_normalization(self):
        """Test random policies are labelled under the normalizer later rollouts see"""
        initial = [entry.observed_return for entry in self.result.buffer if entry.birth_iteration == 0]
        self.assertEqual(len(initial), 10)
        # constant observation normalizes to 0 and zero biases give action 0
        self.assertEqual(initial, [0.0] * 10)

    def test_stored_policies_reproduce_their_labels(self):
        """Test rolling out any stored policy again gives its stored return"""
        env = get_environment("bimodal-bandit")
        for entry in self.result.buffer:
            policy = Policy(entry.theta, env.contract.action_low, env.contract.action_high)
            replay = rollout(env, policy, self.result.norm.copy(), evaluation_seed(0, 0))
            self.assertEqual(replay.episode_return, entry.observed_return)

    def test_generated_policies_improve_on_random(self):
        """Test training finds actions that beat the random initialization"""
        records = self.result.run_log.records
        self.assertEqual(len(records), 4)
        self.assertGreater(records[-1].best_return, 0.0)
