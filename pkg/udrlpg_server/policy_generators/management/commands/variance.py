"""
Django management command to measure final-return dispersion across seeds.
"""

from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from policy_generators.exceptions import UDRLPGError
from policy_generators.services.evalsuite import final_variance

from ._run_options import add_config_arguments, load_config, parse_seeds, resolve_output_dir


class Command(BaseCommand):
    help = "Train one config on several seeds and report mean, std, min and max of the final return"

    def add_arguments(self, parser):
        add_config_arguments(parser, seeds=True)

    def handle(self, *args, **options):
        config = load_config(options)
        seeds = parse_seeds(options["seeds"])
        output_dir = resolve_output_dir(config.output_dir)
        label = Path(options["config"]).stem

        self.stdout.write(
            self.style.SUCCESS(f"Running {label} on {config.env.name} with seeds {seeds}")
        )

        try:
            reports = final_variance({label: config}, seeds, output_dir)
        except UDRLPGError as e:
            raise CommandError(e.detail)

        for report in reports:
            for seed, final_return in zip(report.seeds, report.final_returns):
                self.stdout.write(f"  seed {seed}: final mean return {final_return:.4f}")
            self.stdout.write(
                self.style.SUCCESS(
                    f"{report.label}: mean {report.summary['mean']:.4f}, std {report.summary['std']:.4f}, "
                    f"min {report.summary['min']:.4f}, max {report.summary['max']:.4f}"
                )
            )
        self.stdout.write(f"Wrote {output_dir / 'variance.csv'}")
