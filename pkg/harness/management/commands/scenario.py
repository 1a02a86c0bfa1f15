"""
Cenários de demonstração: sequência em blocos e funcional com chaveamento.
"""
from harness.management.base import ExperimentCommand

DEFAULT_N = {
    'block': [4, 16, 64, 256],
    'switching': [25, 100, 200],
}


class Command(ExperimentCommand):
    help = 'Executa o cenário em blocos ou o funcional browniano com chaveamento'
    subcommand = 'scenario'

    def add_experiment_arguments(self, parser):
        parser.add_argument('scenario', choices=sorted(DEFAULT_N), help='Cenário')
        parser.add_argument('--n', type=int, nargs='+', help='Valores de n (padrão por cenário)')
        parser.add_argument('--steps', type=int, help='Passos m da grade browniana')
        parser.add_argument('--gamma', type=float, nargs='+', help='Pesos Z = exp(i gamma W_1)')
        parser.add_argument('--epsilon', type=float, help='t_n = epsilon^(1/sqrt(n))')
        parser.add_argument('--no-switch', action='store_true', help='W^(n) = W para todo n')
        parser.add_argument('--poc-trials', type=int, help='Ensaios da rota de condicionamento (blocos)')
        parser.add_argument('--refinement', type=int, help='Subcélulas por bloco (blocos)')

    def experiment_options(self, options):
        cenario = options['scenario']
        return {
            'scenario': cenario,
            'n_values': options['n'] or DEFAULT_N[cenario],
            'steps': options['steps'],
            'gammas': options['gamma'],
            'epsilon': options['epsilon'],
            'switching': not options['no_switch'],
            'poc_trials': options['poc_trials'],
            'refinement': options['refinement'],
        }
