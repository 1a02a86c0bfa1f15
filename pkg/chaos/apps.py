"""
Configuração da app chaos.
"""
from django.apps import AppConfig


class ChaosConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'chaos'
    verbose_name = 'Integrais múltiplas'
