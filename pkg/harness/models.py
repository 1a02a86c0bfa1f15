from django.db import models
import uuid


class ExperimentRun(models.Model):
    """
    Registro de uma execução de subcomando: configuração validada, semente,
    situação e a impressão digital do CSV emitido.
    """
    STATUS_PENDING = 'pendente'
    STATUS_RUNNING = 'executando'
    STATUS_DONE = 'concluida'
    STATUS_FAILED = 'falhou'

    STATUS_CHOICES = [
        (STATUS_PENDING, 'Pendente'),
        (STATUS_RUNNING, 'Executando'),
        (STATUS_DONE, 'Concluída'),
        (STATUS_FAILED, 'Falhou'),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    subcommand = models.CharField(
        max_length=40,
        help_text="Subcomando executado (ex.: clt, scenario switching)"
    )
    config = models.JSONField(
        default=dict,
        help_text="RunConfig validado, em JSON"
    )
    # 64 bits não cabem em BigIntegerField com sinal
    seed = models.CharField(
        max_length=20,
        help_text="Semente em decimal"
    )
    status = models.CharField(
        max_length=12,
        choices=STATUS_CHOICES,
        default=STATUS_PENDING
    )
    exit_code = models.PositiveSmallIntegerField(
        null=True,
        blank=True,
        help_text="0 sucesso, 1 configuração, 2 pré-condição, 3 guarda numérica"
    )
    output_path = models.CharField(max_length=500, blank=True)
    sha256 = models.CharField(
        max_length=64,
        blank=True,
        help_text="SHA-256 dos bytes do CSV"
    )
    message = models.TextField(blank=True)
    celery_task_id = models.CharField(max_length=255, blank=True)

    iniciado_em = models.DateTimeField(null=True, blank=True)
    concluido_em = models.DateTimeField(null=True, blank=True)
    criado_em = models.DateTimeField(auto_now_add=True)
    atualizado_em = models.DateTimeField(auto_now=True)

    class Meta:
        verbose_name = "Execução de Experimento"
        verbose_name_plural = "Execuções de Experimentos"
        ordering = ['-criado_em']
        indexes = [
            models.Index(fields=['subcommand', 'status'], name='harness_exp_subcomm_6f1c2a_idx'),
            models.Index(fields=['sha256'], name='harness_exp_sha256_9b3e4d_idx'),
        ]

    def __str__(self):
        return f"{self.subcommand} seed={self.seed} ({self.get_status_display()})"

    @property
    def duracao(self):
        """Duração em segundos, quando a execução terminou."""
        if self.iniciado_em and self.concluido_em:
            return (self.concluido_em - self.iniciado_em).total_seconds()
        return None
