from django.db import models
import uuid


class TrainingRun(models.Model):
    """One training run of a policy generator"""

    STATUS_CHOICES = [
        ("completed", "Completed"),
        ("aborted", "Aborted"),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)

    # Run identity
    env_name = models.CharField(max_length=50, db_index=True)
    strategy = models.CharField(max_length=30, db_index=True)
    seed = models.PositiveIntegerField()
    total_stages = models.PositiveIntegerField()

    # Outcome
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="completed")
    aborted_at_stage = models.PositiveIntegerField(null=True, blank=True)
    final_mean_return = models.FloatField(null=True, blank=True)
    best_return = models.FloatField(null=True, blank=True)
    env_steps = models.BigIntegerField(default=0)

    # Artifacts
    config = models.JSONField(help_text="Resolved run config echo")
    output_dir = models.CharField(max_length=500, blank=True)
    checkpoint_path = models.CharField(max_length=500, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at"]
        indexes = [
            models.Index(fields=["env_name", "strategy"], name="run_env_strategy_idx"),
        ]

    def __str__(self):
        return f"{self.env_name} / {self.strategy} / seed {self.seed} ({self.status})"


class StageRecord(models.Model):
    """Per-stage summary of a training run"""

    run = models.ForeignKey(
        TrainingRun, on_delete=models.CASCADE, related_name="stages"
    )
    stage = models.PositiveIntegerField()
    env_steps = models.BigIntegerField()
    mean_return = models.FloatField()
    max_return = models.FloatField()
    best_return = models.FloatField()
    loss_mean = models.FloatField(null=True, blank=True)
    bucket_occupancy = models.JSONField(help_text="Entry count per bucket")
    wall_time_seconds = models.FloatField()

    class Meta:
        ordering = ["stage"]
        unique_together = ["run", "stage"]

    def __str__(self):
        return f"Stage {self.stage} of run {self.run_id}"
