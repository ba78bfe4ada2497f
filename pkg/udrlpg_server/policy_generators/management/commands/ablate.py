"""
Django management command to compare the four buffer sampling strategies.
"""

from django.core.management.base import BaseCommand, CommandError

from policy_generators.exceptions import UDRLPGError
from policy_generators.services.evalsuite import ablation

from ._run_options import add_config_arguments, load_config, parse_seeds, resolve_output_dir


class Command(BaseCommand):
    help = "Train every buffer strategy on the same seeds and write per-stage and summary CSVs"

    def add_arguments(self, parser):
        add_config_arguments(parser, seeds=True)

    def handle(self, *args, **options):
        config = load_config(options)
        seeds = parse_seeds(options["seeds"])
        output_dir = resolve_output_dir(config.output_dir)

        self.stdout.write(
            self.style.SUCCESS(
                f"Ablating buffer strategies on {config.env.name} with seeds {seeds} "
                f"({config.total_stages} stages each)"
            )
        )

        try:
            report = ablation(config, seeds, output_dir)
        except UDRLPGError as e:
            raise CommandError(e.detail)

        self.stdout.write("\n" + "=" * 50)
        self.stdout.write("ABLATION SUMMARY")
        self.stdout.write("=" * 50)
        for strategy, curve in report.curves.items():
            summary = curve.final_summary()
            self.stdout.write(
                f"{strategy:18s} final mean {summary['mean']:.4f} "
                f"std {summary['std']:.4f} [{summary['min']:.4f}, {summary['max']:.4f}]"
            )
        for strategy, detail in report.failures.items():
            self.stdout.write(self.style.ERROR(f"{strategy:18s} failed: {detail}"))
        self.stdout.write(f"Wrote CSVs to {output_dir}")

        if not report.succeeded:
            raise CommandError(f"{len(report.failures)} strategies failed")
        self.stdout.write(self.style.SUCCESS("Ablation completed successfully!"))
