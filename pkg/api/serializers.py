"""
Serializers da API de consulta do registro de execuções.
"""
from rest_framework import serializers
from harness.models import ExperimentRun


class ExperimentRunSerializer(serializers.ModelSerializer):
    """Serializer para execuções de experimentos."""
    status_display = serializers.CharField(source='get_status_display', read_only=True)
    duracao = serializers.ReadOnlyField()

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'subcommand', 'seed', 'status', 'status_display', 'exit_code',
            'output_path', 'sha256', 'message', 'celery_task_id',
            'iniciado_em', 'concluido_em', 'duracao', 'criado_em'
        ]
        read_only_fields = fields


class ExperimentRunDetailSerializer(ExperimentRunSerializer):
    """Inclui a configuração validada."""

    class Meta(ExperimentRunSerializer.Meta):
        fields = ExperimentRunSerializer.Meta.fields + ['config']
        read_only_fields = fields
