from django.db.models import Count
from django.shortcuts import get_object_or_404
from rest_framework.views import APIView
from rest_framework.response import Response
from .models import TrainingRun
from .serializers import TrainingRunListSerializer, TrainingRunDetailSerializer


class TrainingRunListView(APIView):
    """
    List stored training runs, newest first.
    GET /api/runs/?env=<env_name>&strategy=<strategy>
    """

    def get(self, request):
        runs = TrainingRun.objects.annotate(stage_count=Count("stages"))

        env_name = request.query_params.get("env", None)
        if env_name:
            runs = runs.filter(env_name=env_name)

        strategy = request.query_params.get("strategy", None)
        if strategy:
            runs = runs.filter(strategy=strategy)

        serializer = TrainingRunListSerializer(runs, many=True)
        return Response({
            "count": len(serializer.data),
            "results": serializer.data
        })


class TrainingRunDetailView(APIView):
    """
    Retrieve one run with its stage records in stage order.
    GET /api/runs/{id}/
    """

    def get(self, request, run_id):
        run = get_object_or_404(TrainingRun.objects.prefetch_related("stages"), pk=run_id)
        serializer = TrainingRunDetailSerializer(run)
        return Response(serializer.data)
