# Generated by Django 4.2.23 on 2026-10-18 12:00

from django.db import migrations, models
import django.db.models.deletion
import uuid


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('env_name', models.CharField(db_index=True, max_length=50)),
                ('strategy', models.CharField(db_index=True, max_length=30)),
                ('seed', models.PositiveIntegerField()),
                ('total_stages', models.PositiveIntegerField()),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('aborted', 'Aborted')], default='completed', max_length=20)),
                ('aborted_at_stage', models.PositiveIntegerField(blank=True, null=True)),
                ('final_mean_return', models.FloatField(blank=True, null=True)),
                ('best_return', models.FloatField(blank=True, null=True)),
                ('env_steps', models.BigIntegerField(default=0)),
                ('config', models.JSONField(help_text='Resolved run config echo')),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('checkpoint_path', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['env_name', 'strategy'], name='run_env_strategy_idx')],
            },
        ),
        migrations.CreateModel(
            name='StageRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('stage', models.PositiveIntegerField()),
                ('env_steps', models.BigIntegerField()),
                ('mean_return', models.FloatField()),
                ('max_return', models.FloatField()),
                ('best_return', models.FloatField()),
                ('loss_mean', models.FloatField(blank=True, null=True)),
                ('bucket_occupancy', models.JSONField(help_text='Entry count per bucket')),
                ('wall_time_seconds', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='stages', to='policy_generators.trainingrun')),
            ],
            options={
                'ordering': ['stage'],
                'unique_together': {('run', 'stage')},
            },
        ),
    ]
