"""
Django settings base para o projeto chaoslab.
"""

from pathlib import Path

from decouple import config, Csv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Application definition
INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",

    # Third party apps
    "rest_framework",

    # Local apps
    "partition",
    "rmeasure",
    "kernels",
    "chaos",
    "poc",
    "clt_suite",
    "scenarios",
    "harness",
    "api",
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

ROOT_URLCONF = "chaoslab.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.debug",
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]

# Internationalization
LANGUAGE_CODE = "pt-br"
TIME_ZONE = "America/Sao_Paulo"
USE_I18N = True
USE_TZ = True

# Static files
STATIC_URL = "/static/"

# Default primary key field type
DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# REST Framework
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [
        'rest_framework.authentication.SessionAuthentication',
    ],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.IsAuthenticated',
    ],
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 20,
}

# Celery
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default='redis://127.0.0.1:6379/0')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default='redis://127.0.0.1:6379/0')

# Motor de simulação
CHAOSLAB = {
    # Semente padrão quando --seed não é informado
    'DEFAULT_SEED': config('CHAOSLAB_SEED', default=0, cast=int),
    # Tamanho fixo dos blocos de ensaios (determina a ordem da soma)
    'CHUNK_SIZE': config('CHAOSLAB_CHUNK_SIZE', default=1024, cast=int),
    'WORKERS': config('CHAOSLAB_WORKERS', default=1, cast=int),
    'LAMBDA_GRID': config('CHAOSLAB_LAMBDA_GRID', default='-3:3:21'),
    'OUTPUT_DIR': Path(config('CHAOSLAB_OUTPUT_DIR', default=str(BASE_DIR / 'resultados'))),
    'SCHEMA_VERSION': 1,
    # Rota de condicionamento do CLT
    'POC_REFINEMENT': config('CHAOSLAB_POC_REFINEMENT', default=8, cast=int),
    'POC_TRIALS': config('CHAOSLAB_POC_TRIALS', default=10000, cast=int),
    # Cenário de chaveamento
    'SWITCHING_STEPS': config('CHAOSLAB_SWITCHING_STEPS', default=2000, cast=int),
    'SWITCHING_EPSILON': config('CHAOSLAB_SWITCHING_EPSILON', default=0.75, cast=float),
    'SWITCHING_GAMMAS': config('CHAOSLAB_SWITCHING_GAMMAS', default='0,1', cast=Csv(float)),
    # Limiares de aceitação (ver DESIGN.md)
    'KS_THRESHOLD': config('CHAOSLAB_KS_THRESHOLD', default=0.06, cast=float),
    'FOURTH_MOMENT_TOLERANCE': config('CHAOSLAB_FOURTH_MOMENT_TOLERANCE', default=0.4, cast=float),
    'TAIL_LEVELS': (3.0, 5.0, 8.0),
}
