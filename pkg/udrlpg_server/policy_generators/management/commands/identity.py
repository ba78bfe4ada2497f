"""
Django management command to measure a checkpoint's identity curve.
"""

from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from policy_generators.exceptions import UDRLPGError
from policy_generators.services.checkpoint_service import load_checkpoint
from policy_generators.services.evalsuite import IDENTITY_HEADER, identity_curve
from policy_generators.services.run_log_service import write_csv


class Command(BaseCommand):
    help = "Achieved versus commanded return over the known return range, plus one extrapolation probe"

    def add_arguments(self, parser):
        parser.add_argument("--checkpoint", type=str, required=True, help="Path to a checkpoint JSON file")
        parser.add_argument(
            "--points",
            type=int,
            default=10,
            help="Number of evenly spaced commands (default: 10)",
        )
        parser.add_argument(
            "--episodes",
            type=int,
            default=10,
            help="Evaluation episodes per command (default: 10)",
        )
        parser.add_argument("--seed", type=int, default=0, help="Evaluation seed (default: 0)")
        parser.add_argument(
            "--output",
            type=str,
            help="CSV path (default: identity.csv next to the checkpoint)",
        )

    def handle(self, *args, **options):
        checkpoint_path = Path(options["checkpoint"])
        output = Path(options["output"]) if options["output"] else checkpoint_path.parent / "identity.csv"

        try:
            checkpoint = load_checkpoint(checkpoint_path)
            curve = identity_curve(checkpoint, options["points"], options["episodes"], options["seed"])
        except UDRLPGError as e:
            raise CommandError(e.detail)

        write_csv(output, IDENTITY_HEADER, curve.csv_rows())

        for command, achieved in zip(curve.commands, curve.achieved):
            self.stdout.write(f"  command {command:10.3f} -> {achieved:10.3f}")
        self.stdout.write(
            self.style.WARNING(
                f"  extrapolation {curve.extrapolation_command:.3f} -> {curve.extrapolation_achieved:.3f}"
            )
        )
        self.stdout.write(self.style.SUCCESS(f"Spearman rho: {curve.spearman_rho:.4f}"))
        self.stdout.write(f"Wrote {output}")
