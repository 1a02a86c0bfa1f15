# Generated by Django 5.2.6 on 2026-10-19 12:00

import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                (
                    "subcommand",
                    models.CharField(
                        help_text="Subcomando executado (ex.: clt, scenario switching)",
                        max_length=40,
                    ),
                ),
                (
                    "config",
                    models.JSONField(default=dict, help_text="RunConfig validado, em JSON"),
                ),
                (
                    "seed",
                    models.CharField(help_text="Semente em decimal", max_length=20),
                ),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pendente", "Pendente"),
                            ("executando", "Executando"),
                            ("concluida", "Concluída"),
                            ("falhou", "Falhou"),
                        ],
                        default="pendente",
                        max_length=12,
                    ),
                ),
                (
                    "exit_code",
                    models.PositiveSmallIntegerField(
                        blank=True,
                        help_text="0 sucesso, 1 configuração, 2 pré-condição, 3 guarda numérica",
                        null=True,
                    ),
                ),
                ("output_path", models.CharField(blank=True, max_length=500)),
                (
                    "sha256",
                    models.CharField(blank=True, help_text="SHA-256 dos bytes do CSV", max_length=64),
                ),
                ("message", models.TextField(blank=True)),
                ("celery_task_id", models.CharField(blank=True, max_length=255)),
                ("iniciado_em", models.DateTimeField(blank=True, null=True)),
                ("concluido_em", models.DateTimeField(blank=True, null=True)),
                ("criado_em", models.DateTimeField(auto_now_add=True)),
                ("atualizado_em", models.DateTimeField(auto_now=True)),
            ],
            options={
                "verbose_name": "Execução de Experimento",
                "verbose_name_plural": "Execuções de Experimentos",
                "ordering": ["-criado_em"],
                "indexes": [
                    models.Index(fields=["subcommand", "status"], name="harness_exp_subcomm_6f1c2a_idx"),
                    models.Index(fields=["sha256"], name="harness_exp_sha256_9b3e4d_idx"),
                ],
            },
        ),
    ]
