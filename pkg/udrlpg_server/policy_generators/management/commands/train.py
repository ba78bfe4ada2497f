"""
Django management command to train a policy generator from a TOML run config.
"""

import logging
import time

from django.core.management.base import BaseCommand, CommandError

from policy_generators.exceptions import TrainingAborted, UDRLPGError
from policy_generators.services.run_log_service import (
    BUFFER_SNAPSHOT_NAME,
    RUN_LOG_NAME,
    persist_run,
    write_buffer_snapshot,
    write_run_log,
)
from policy_generators.services.trainer import UDRLPGTrainer

from ._run_options import add_config_arguments, load_config, optional_float, resolve_output_dir

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Train a command-conditioned policy generator and write its RunLog and checkpoints"

    def add_arguments(self, parser):
        add_config_arguments(parser)
        parser.add_argument(
            "--dump-buffer",
            action="store_true",
            help=f"Write the final replay buffer to {BUFFER_SNAPSHOT_NAME}",
        )
        parser.add_argument(
            "--no-persist",
            action="store_true",
            help="Skip storing the run in the database",
        )

    def handle(self, *args, **options):
        config = load_config(options)
        output_dir = resolve_output_dir(config.output_dir)

        self.stdout.write(
            self.style.SUCCESS(
                f"Training on {config.env.name} with {config.buffer.strategy} "
                f"(seed {config.seed}, {config.total_stages} stages, {config.workers} workers)"
            )
        )
        self.stdout.write(f"Output directory: {output_dir}")

        try:
            trainer = UDRLPGTrainer(config, output_dir)
        except UDRLPGError as e:
            raise CommandError(e.detail)

        start_time = time.time()
        aborted = None
        try:
            result = trainer.train()
            checkpoint_path = result.checkpoint_path
        except TrainingAborted as e:
            aborted = e
            checkpoint_path = e.checkpoint_path
        elapsed = time.time() - start_time

        run_log_path = write_run_log(trainer.run_log, output_dir / RUN_LOG_NAME)
        if options["dump_buffer"]:
            snapshot_path = write_buffer_snapshot(trainer.buffer, output_dir / BUFFER_SNAPSHOT_NAME)
            self.stdout.write(f"Buffer snapshot: {snapshot_path}")

        if not options["no_persist"]:
            run = persist_run(
                trainer.run_log,
                config,
                checkpoint_path=checkpoint_path,
                output_dir=output_dir,
                env_steps=trainer.env_steps,
                aborted_at_stage=aborted.stage if aborted else None,
            )
            self.stdout.write(f"Stored run {run.id}")

        self.stdout.write("\n" + "=" * 50)
        self.stdout.write("TRAINING SUMMARY")
        self.stdout.write("=" * 50)
        self.stdout.write(f"Stages completed: {len(trainer.run_log)}/{config.total_stages}")
        self.stdout.write(f"Environment steps: {trainer.env_steps}")
        self.stdout.write(f"Final mean return: {optional_float(trainer.run_log.final_mean_return)}")
        self.stdout.write(f"Best return: {trainer.best_return:.4f}")
        self.stdout.write(f"Time taken: {elapsed:.1f} seconds")
        self.stdout.write(f"RunLog: {run_log_path}")
        self.stdout.write(f"Checkpoint: {checkpoint_path or 'none'}")

        if aborted is not None:
            self.stdout.write(self.style.ERROR(aborted.detail))
            raise CommandError(aborted.detail)

        self.stdout.write(self.style.SUCCESS("Training completed successfully!"))
