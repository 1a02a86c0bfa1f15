"""
Relatório do princípio de condicionamento ao longo de n.
"""
from pathlib import Path

from harness.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Distâncias da cabeça, da CF condicional desacoplada e da CF dos totais'
    subcommand = 'poc_verify'

    def add_experiment_arguments(self, parser):
        parser.add_argument(
            '--family',
            choices=['block', 'deterministic'],
            default='block',
            help='Integrandos ao longo de n (ignorado com --kernel)',
        )
        parser.add_argument('--n', type=int, nargs='+', default=[4, 16, 64], help='Valores de n')
        parser.add_argument('--kernel', type=Path, help='Núcleo próprio (JSON); relatório em n = 1')
        parser.add_argument('--partition', type=Path, help='Partição (JSON), se não estiver no núcleo')
        parser.add_argument('--head-time', type=float, default=0.5, help='t_n da cabeça (determinístico e --kernel)')
        parser.add_argument('--refinement', type=int, help='Subcélulas por bloco (padrão CHAOSLAB_POC_REFINEMENT)')
        parser.add_argument('--reversed', action='store_true', help='Resolução no sentido invertido')

    def experiment_options(self, options):
        return {
            'family': options['family'],
            'n_values': options['n'],
            'kernel_path': options['kernel'],
            'partition_path': options['partition'],
            'head_time': options['head_time'],
            'refinement': options['refinement'],
            'direction': 'reversed' if options['reversed'] else 'forward',
        }
