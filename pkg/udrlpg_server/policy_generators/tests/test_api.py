import uuid

from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase

from policy_generators.models import StageRecord, TrainingRun


class TrainingRunApiTestCase(APITestCase):
    """Test cases for the read-only runs API"""

    def setUp(self):
        self.cartpole = TrainingRun.objects.create(
            env_name="cartpole-balance",
            strategy="buckets_weighted",
            seed=0,
            total_stages=2,
            final_mean_return=950.0,
            best_return=1000.0,
            env_steps=12000,
            config={"seed": 0},
        )
        for stage in (2, 1):
            StageRecord.objects.create(
                run=self.cartpole,
                stage=stage,
                env_steps=6000 * stage,
                mean_return=900.0 + stage,
                max_return=1000.0,
                best_return=1000.0,
                loss_mean=0.01,
                bucket_occupancy=[0] * 9 + [8 * stage],
                wall_time_seconds=1.5,
            )
        self.reacher = TrainingRun.objects.create(
            env_name="point-reacher",
            strategy="flat_uniform",
            seed=1,
            total_stages=5,
            status="aborted",
            aborted_at_stage=3,
            config={"seed": 1},
        )

    def test_list_runs(self):
        """Test every run is listed with its completed stage count"""
        response = self.client.get(reverse("policy_generators:run-list"))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data["count"], 2)
        by_env = {run["env_name"]: run for run in response.data["results"]}
        self.assertEqual(by_env["cartpole-balance"]["stages_completed"], 2)
        self.assertEqual(by_env["point-reacher"]["status"], "aborted")

    def test_filter_by_env_and_strategy(self):
        """Test env and strategy query parameters narrow the list"""
        url = reverse("policy_generators:run-list")
        response = self.client.get(url, {"env": "point-reacher"})
        self.assertEqual(response.data["count"], 1)
        self.assertEqual(response.data["results"][0]["strategy"], "flat_uniform")

        response = self.client.get(url, {"strategy": "buckets_weighted"})
        self.assertEqual(response.data["count"], 1)
        self.assertEqual(response.data["results"][0]["env_name"], "cartpole-balance")

        response = self.client.get(url, {"env": "bimodal-bandit"})
        self.assertEqual(response.data["count"], 0)

    def test_detail_has_ordered_stages(self):
        """Test run detail returns its stage records in stage order"""
        url = reverse("policy_generators:run-detail", args=[self.cartpole.id])
        response = self.client.get(url)
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual([stage["stage"] for stage in response.data["stages"]], [1, 2])
        self.assertEqual(response.data["stages"][1]["bucket_occupancy"][-1], 16)
        self.assertEqual(response.data["config"], {"seed": 0})

    def test_unknown_run(self):
        """Test an unknown run id returns 404"""
        url = reverse("policy_generators:run-detail", args=[uuid.uuid4()])
        self.assertEqual(self.client.get(url).status_code, status.HTTP_404_NOT_FOUND)

    def test_read_only(self):
        """Test the API rejects writes"""
        response = self.client.post(reverse("policy_generators:run-list"), {"seed": 3})
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
