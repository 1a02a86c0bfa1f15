"""
Base comum dos comandos de experimento.

Cada subcomando declara só as próprias opções e como elas entram no
``RunConfig``; validação, execução, registro e tradução de erros em códigos
de saída ficam aqui.
"""
import logging
import sys
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from utils.exceptions import ChaosLabError, ConfigurationError

from ..config import LambdaGrid, build_run_config
from ..services import create_run, run_and_record

logger = logging.getLogger(__name__)


class ExperimentCommand(BaseCommand):
    subcommand = None
    default_trials = 10000
    default_law = 'cpoisson'

    def add_arguments(self, parser):
        conf = settings.CHAOSLAB
        parser.add_argument(
            '--seed',
            type=int,
            default=conf['DEFAULT_SEED'],
            help='Semente de 64 bits (padrão CHAOSLAB_SEED)',
        )
        parser.add_argument(
            '--trials',
            type=int,
            default=self.default_trials,
            help='Ensaios Monte Carlo',
        )
        parser.add_argument(
            '--workers',
            type=int,
            default=conf['WORKERS'],
            help='Processos do executor; não altera os bytes da saída',
        )
        parser.add_argument(
            '--out',
            type=Path,
            help='Arquivo CSV de saída; caminho relativo fica sob CHAOSLAB_OUTPUT_DIR (sem ele o CSV vai para stdout)',
        )
        parser.add_argument(
            '--lambda',
            dest='lambda_grid',
            default=None,
            help='Grade min:max:count (padrão CHAOSLAB_LAMBDA_GRID)',
        )
        parser.add_argument(
            '--chunk-size',
            type=int,
            default=conf['CHUNK_SIZE'],
            help='Ensaios por bloco da soma em ordem fixa',
        )
        parser.add_argument(
            '--law',
            choices=['gaussian', 'cpoisson'],
            default=self.default_law,
            help='Lei da medida aleatória',
        )
        parser.add_argument(
            '--progress',
            action='store_true',
            help='Barra de progresso no stderr',
        )
        parser.add_argument(
            '--no-record',
            action='store_true',
            help='Não grava a execução no banco',
        )
        parser.add_argument(
            '--enqueue',
            action='store_true',
            help='Envia a execução para a fila do Celery em vez de rodar aqui',
        )
        self.add_experiment_arguments(parser)

    def add_experiment_arguments(self, parser):
        """Opções próprias do subcomando."""

    def experiment_options(self, options) -> dict:
        """Campos do ``RunConfig`` vindos das opções próprias."""
        return {}

    def build_config(self, options):
        valores = dict(
            subcommand=self.subcommand,
            seed=options['seed'],
            trials=options['trials'],
            workers=options['workers'],
            out=options['out'],
            lambda_grid=LambdaGrid.from_text(options['lambda_grid']),
            chunk_size=options['chunk_size'],
            law=options['law'],
            progress=options['progress'],
        )
        valores.update(self.experiment_options(options))
        return build_run_config(**valores)

    def handle(self, *args, **options):
        try:
            config = self.build_config(options)
            if options['enqueue']:
                self._enqueue(config)
                return
            resultado = run_and_record(config, record=not options['no_record'])
        except ChaosLabError as exc:
            logger.error(f"{self.subcommand}: {exc}")
            raise CommandError(str(exc), returncode=exc.exit_code)

        if resultado.path is None:
            self.stdout.write(resultado.report.text, ending='')
            sys.stderr.write(f"sha256 {resultado.sha256}\n")
        else:
            self.stdout.write(
                self.style.SUCCESS(
                    f'{config.name}: {resultado.report.n_rows} linhas em {resultado.path} (sha256 {resultado.sha256})'
                )
            )

    def _enqueue(self, config):
        from ..tasks import run_experiment

        try:
            experimento = create_run(config)
        except DatabaseError as exc:
            raise ConfigurationError(f"--enqueue exige o banco do registro: {exc}") from exc
        tarefa = run_experiment.delay(str(experimento.id))
        experimento.celery_task_id = tarefa.id or ''
        experimento.save(update_fields=['celery_task_id', 'atualizado_em'])
        self.stdout.write(self.style.WARNING(f'Execução {experimento.id} enfileirada (tarefa {tarefa.id})'))
