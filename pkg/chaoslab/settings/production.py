"""
Settings para produção (servidor de experimentos com workers Celery)
"""

from pathlib import Path

import dj_database_url
from decouple import config, Csv

from .base import *

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=False, cast=bool)

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY')

ALLOWED_HOSTS = config('ALLOWED_HOSTS', cast=Csv(), default='')

DATABASES = {
    'default': dj_database_url.config(
        default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}",
        conn_max_age=600,
    )
}

WSGI_APPLICATION = "chaoslab.wsgi.application"

# Security settings
SECURE_CONTENT_TYPE_NOSNIFF = True
X_FRAME_OPTIONS = 'DENY'

if config('USE_HTTPS', default=False, cast=bool):
    SECURE_SSL_REDIRECT = True
    SESSION_COOKIE_SECURE = True
    CSRF_COOKIE_SECURE = True

STATIC_ROOT = config('STATIC_ROOT', default=str(BASE_DIR / 'staticfiles'))

LOG_DIR = Path(config('CHAOSLAB_LOG_DIR', default=str(BASE_DIR / 'logs')))

# Logging para produção
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': LOG_DIR / 'django.log',
            'maxBytes': 1024*1024*5,  # 5 MB
            'backupCount': 5,
            'formatter': 'verbose',
        },
        'experimentos': {
            'level': 'INFO',
            'class': 'logging.handlers.RotatingFileHandler',
            'filename': LOG_DIR / 'experimentos.log',
            'maxBytes': 1024*1024*5,  # 5 MB
            'backupCount': 5,
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['file'],
            'level': 'INFO',
            'propagate': False,
        },
        'harness': {
            'handlers': ['experimentos'],
            'level': 'INFO',
            'propagate': False,
        },
        'clt_suite': {
            'handlers': ['experimentos'],
            'level': 'INFO',
            'propagate': False,
        },
        'scenarios': {
            'handlers': ['experimentos'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}
