from django.urls import path
from .views import TrainingRunListView, TrainingRunDetailView

app_name = "policy_generators"

urlpatterns = [
    path("runs/", TrainingRunListView.as_view(), name="run-list"),
    path("runs/<uuid:run_id>/", TrainingRunDetailView.as_view(), name="run-detail"),
]
