from rest_framework import serializers
from .models import TrainingRun, StageRecord


class StageRecordSerializer(serializers.ModelSerializer):
    """Serializer for StageRecord model"""

    class Meta:
        model = StageRecord
        fields = [
            "stage",
            "env_steps",
            "mean_return",
            "max_return",
            "best_return",
            "loss_mean",
            "bucket_occupancy",
            "wall_time_seconds",
        ]
        read_only_fields = fields


class TrainingRunListSerializer(serializers.ModelSerializer):
    """Compact run summary for list views"""

    stages_completed = serializers.SerializerMethodField()

    class Meta:
        model = TrainingRun
        fields = [
            "id",
            "env_name",
            "strategy",
            "seed",
            "total_stages",
            "stages_completed",
            "status",
            "aborted_at_stage",
            "final_mean_return",
            "best_return",
            "created_at",
        ]
        read_only_fields = fields

    def get_stages_completed(self, obj):
        count = getattr(obj, "stage_count", None)
        return count if count is not None else obj.stages.count()


class TrainingRunDetailSerializer(TrainingRunListSerializer):
    """Full run with config echo, artifact paths and every stage record"""

    stages = StageRecordSerializer(many=True, read_only=True)

    class Meta(TrainingRunListSerializer.Meta):
        fields = TrainingRunListSerializer.Meta.fields + [
            "env_steps",
            "config",
            "output_dir",
            "checkpoint_path",
            "stages",
        ]
        read_only_fields = fields
