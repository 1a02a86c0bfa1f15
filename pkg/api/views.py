"""
Views da API REST: consulta somente leitura do registro de execuções.
"""
from rest_framework import viewsets, filters
from rest_framework.decorators import action
from rest_framework.response import Response
from rest_framework.permissions import IsAuthenticated
from django.db.models import Count

from harness.models import ExperimentRun

from .serializers import ExperimentRunSerializer, ExperimentRunDetailSerializer


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    """Execuções registradas pelos comandos e pelo worker."""

    queryset = ExperimentRun.objects.all()
    serializer_class = ExperimentRunSerializer
    permission_classes = [IsAuthenticated]
    filter_backends = [filters.SearchFilter, filters.OrderingFilter]
    search_fields = ['subcommand', 'seed', 'sha256']
    ordering_fields = ['criado_em', 'subcommand', 'status']
    ordering = ['-criado_em']

    def get_serializer_class(self):
        if self.action == 'retrieve':
            return ExperimentRunDetailSerializer
        return ExperimentRunSerializer

    def get_queryset(self):
        queryset = super().get_queryset()
        status_param = self.request.query_params.get('status')
        if status_param:
            queryset = queryset.filter(status=status_param)
        subcommand = self.request.query_params.get('subcommand')
        if subcommand:
            queryset = queryset.filter(subcommand=subcommand)
        return queryset

    @action(detail=False, methods=['get'])
    def resumo(self, request):
        """Contagem de execuções por subcomando e situação."""
        contagens = (
            ExperimentRun.objects.values('subcommand', 'status')
            .annotate(total=Count('id'))
            .order_by('subcommand', 'status')
        )
        return Response(list(contagens))
