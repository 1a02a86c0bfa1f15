"""
Amostragem da medida aleatória numa partição.
"""
from pathlib import Path

from harness.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Média e variância MC do incremento de cada célula'
    subcommand = 'simulate'

    def add_experiment_arguments(self, parser):
        parser.add_argument('--partition', type=Path, required=True, help='Partição (JSON)')

    def experiment_options(self, options):
        return {'partition_path': options['partition']}
