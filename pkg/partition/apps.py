"""
Configuração da app partition.
"""
from django.apps import AppConfig


class PartitionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'partition'
    verbose_name = 'Partições e resoluções'
