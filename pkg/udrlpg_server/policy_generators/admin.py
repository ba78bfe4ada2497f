from django.contrib import admin
from .models import TrainingRun, StageRecord


class StageRecordInline(admin.TabularInline):
    model = StageRecord
    extra = 0
    readonly_fields = [
        "stage",
        "env_steps",
        "mean_return",
        "max_return",
        "best_return",
        "loss_mean",
        "bucket_occupancy",
        "wall_time_seconds",
    ]


@admin.register(TrainingRun)
class TrainingRunAdmin(admin.ModelAdmin):
    list_display = ["env_name", "strategy", "seed", "status", "final_mean_return", "best_return", "created_at"]
    list_filter = ["env_name", "strategy", "status"]
    inlines = [StageRecordInline]


admin.site.register(StageRecord)
