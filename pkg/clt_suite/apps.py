"""
Configuração da app clt_suite.
"""
from django.apps import AppConfig


class CltSuiteConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'clt_suite'
    verbose_name = 'Critérios de CLT'
