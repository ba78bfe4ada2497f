"""
Django management command to evaluate a checkpoint at one command.
"""

from django.core.management.base import BaseCommand, CommandError

from policy_generators.exceptions import UDRLPGError
from policy_generators.services.checkpoint_service import load_checkpoint
from policy_generators.services.trainer import evaluate


class Command(BaseCommand):
    help = "Mean return of the policy a checkpoint generates for a commanded return (no exploration noise)"

    def add_arguments(self, parser):
        parser.add_argument("--checkpoint", type=str, required=True, help="Path to a checkpoint JSON file")
        parser.add_argument("--command", type=float, required=True, help="Commanded episodic return")
        parser.add_argument(
            "--episodes",
            type=int,
            default=10,
            help="Number of evaluation episodes (default: 10)",
        )
        parser.add_argument("--seed", type=int, default=0, help="Evaluation seed (default: 0)")

    def handle(self, *args, **options):
        try:
            checkpoint = load_checkpoint(options["checkpoint"])
            mean_return, returns = evaluate(
                checkpoint, options["command"], options["episodes"], options["seed"]
            )
        except UDRLPGError as e:
            raise CommandError(e.detail)

        self.stdout.write(
            f"Checkpoint stage {checkpoint.stage} on {checkpoint.config.env.name}, "
            f"command {options['command']}"
        )
        for episode, episode_return in enumerate(returns):
            self.stdout.write(f"  episode {episode}: {episode_return:.4f}")
        self.stdout.write(self.style.SUCCESS(f"Mean return: {mean_return:.4f}"))
