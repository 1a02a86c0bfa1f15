"""
Configuração da app poc.
"""
from django.apps import AppConfig


class PocConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'poc'
    verbose_name = 'Princípio do condicionamento'
