"""
Configuração do Celery para execução assíncrona de experimentos.
"""
import os
from celery import Celery
from django.conf import settings

# Configuração do Django
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chaoslab.settings.development')

# Instância do Celery
app = Celery('chaoslab')

# Configuração usando settings do Django
app.config_from_object('django.conf:settings', namespace='CELERY')

# Autodiscovery de tasks
app.autodiscover_tasks()

app.conf.update(
    # Formato de serialização
    task_serializer='json',
    accept_content=['json'],
    result_serializer='json',

    timezone=settings.TIME_ZONE,
    enable_utc=True,

    # Simulações longas: limites generosos
    task_soft_time_limit=3600,
    task_time_limit=4 * 3600,

    task_routes={
        'harness.tasks.run_experiment': {'queue': 'experimentos'},
    },

    # Um experimento por vez por worker
    worker_prefetch_multiplier=1,
    task_acks_late=True,

    result_expires=24 * 3600,
)
