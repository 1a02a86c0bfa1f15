"""
Verificações de uma integral múltipla: isometria, Clark–Ocone, fórmula do
produto e identidade de martingale.
"""
from pathlib import Path

from harness.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Verifica as identidades de I_d(f) para um núcleo de ordem 1 ou 2'
    subcommand = 'chaos_check'

    def add_experiment_arguments(self, parser):
        parser.add_argument('--kernel', type=Path, required=True, help='Núcleo (JSON)')
        parser.add_argument('--partition', type=Path, help='Partição (JSON), se não estiver no núcleo')
        parser.add_argument('--t', type=float, default=0.5, help='Instante da identidade de martingale')
        parser.add_argument('--reversed', action='store_true', help='Resolução no sentido invertido')

    def experiment_options(self, options):
        return {
            'kernel_path': options['kernel'],
            'partition_path': options['partition'],
            'head_time': options['t'],
            'direction': 'reversed' if options['reversed'] else 'forward',
        }
