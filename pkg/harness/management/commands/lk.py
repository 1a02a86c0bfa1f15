"""
Expoente de Lévy–Khinchine de um núcleo de ordem 1 e, com --trials, a CF
empírica de X(h).
"""
from pathlib import Path

from harness.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Tabela de psi(h; lambda) e, opcionalmente, a CF empírica de X(h)'
    subcommand = 'lk'
    default_trials = None

    def add_experiment_arguments(self, parser):
        parser.add_argument('--kernel', type=Path, required=True, help='Núcleo de ordem 1 (JSON)')
        parser.add_argument('--partition', type=Path, help='Partição (JSON), se não estiver no núcleo')
        parser.add_argument('--law-file', type=Path, help='Descritor estendido da lei (JSON)')

    def experiment_options(self, options):
        return {
            'kernel_path': options['kernel'],
            'partition_path': options['partition'],
            'law_path': options['law_file'],
        }
