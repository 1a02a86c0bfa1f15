"""
Administração do registro de execuções.
"""
from django.contrib import admin
from django.utils.html import format_html
from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = [
        'subcommand', 'seed', 'status_badge', 'exit_code',
        'sha256_curto', 'criado_em'
    ]
    list_filter = ['subcommand', 'status', 'exit_code', 'criado_em']
    search_fields = ['subcommand', 'seed', 'sha256', 'output_path']
    readonly_fields = [
        'id', 'config', 'sha256', 'celery_task_id',
        'iniciado_em', 'concluido_em', 'criado_em', 'atualizado_em'
    ]
    fieldsets = [
        ('Execução', {
            'fields': ('subcommand', 'seed', 'status', 'exit_code', 'message')
        }),
        ('Saída', {
            'fields': ('output_path', 'sha256')
        }),
        ('Configuração', {
            'fields': ('config',),
            'classes': ('collapse',)
        }),
        ('Metadados', {
            'fields': (
                'id', 'celery_task_id', 'iniciado_em', 'concluido_em',
                'criado_em', 'atualizado_em'
            ),
            'classes': ('collapse',)
        }),
    ]

    def status_badge(self, obj):
        cores = {
            ExperimentRun.STATUS_PENDING: '#6c757d',
            ExperimentRun.STATUS_RUNNING: '#0d6efd',
            ExperimentRun.STATUS_DONE: '#198754',
            ExperimentRun.STATUS_FAILED: '#dc3545',
        }
        return format_html(
            '<span style="background-color: {}; color: white; padding: 2px 8px; border-radius: 3px;">{}</span>',
            cores.get(obj.status, '#6c757d'),
            obj.get_status_display()
        )
    status_badge.short_description = 'Situação'

    def sha256_curto(self, obj):
        return obj.sha256[:12] if obj.sha256 else '-'
    sha256_curto.short_description = 'SHA-256'
