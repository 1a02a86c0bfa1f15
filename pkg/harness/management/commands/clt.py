"""
Pipeline do CLT de integrais duplas de Poisson.
"""
from clt_suite.families import FAMILIES
from harness.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Condições analíticas, momentos MC, distância KS e rota de condicionamento por n'
    subcommand = 'clt'

    def add_experiment_arguments(self, parser):
        parser.add_argument('--family', choices=sorted(FAMILIES), default='block', help='Família de núcleos')
        parser.add_argument('--n', type=int, nargs='+', default=[4, 16, 64, 256], help='Valores de n')
        parser.add_argument('--poc-trials', type=int, help='Ensaios da rota de condicionamento; 0 desliga')
        parser.add_argument('--refinement', type=int, help='Subcélulas por bloco na rota de condicionamento')

    def experiment_options(self, options):
        return {
            'family': options['family'],
            'n_values': options['n'],
            'poc_trials': options['poc_trials'],
            'refinement': options['refinement'],
        }
