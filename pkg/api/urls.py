"""
URLs da API REST do chaoslab.
"""
from django.urls import path, include
from rest_framework.routers import DefaultRouter

from .views import ExperimentRunViewSet

router = DefaultRouter()
router.register(r'runs', ExperimentRunViewSet)

app_name = 'api'

urlpatterns = [
    path('', include(router.urls)),
]
