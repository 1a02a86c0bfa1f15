"""
Configuração da app rmeasure.
"""
from django.apps import AppConfig


class RmeasureConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'rmeasure'
    verbose_name = 'Medidas aleatórias'
