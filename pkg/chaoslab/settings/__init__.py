"""
Settings do projeto chaoslab.

Use ``chaoslab.settings.development`` ou ``chaoslab.settings.production``
em DJANGO_SETTINGS_MODULE.
"""
