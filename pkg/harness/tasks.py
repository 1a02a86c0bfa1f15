"""
Execução de experimentos enfileirados num worker Celery.
"""
from celery import shared_task
import logging

from utils.exceptions import ChaosLabError

from .config import run_config_from_json
from .models import ExperimentRun
from .services import run_and_record

logger = logging.getLogger(__name__)


@shared_task(bind=True, max_retries=0)
def run_experiment(self, experiment_id):
    """
    Executa uma ``ExperimentRun`` pendente.

    Erros do motor são determinísticos e não são reexecutados; a falha fica
    gravada no próprio registro.

    Args:
        experiment_id: UUID do registro

    Returns:
        dict: Situação final, código de saída e SHA-256
    """
    try:
        experimento = ExperimentRun.objects.get(id=experiment_id)
    except ExperimentRun.DoesNotExist:
        logger.error(f"Execução {experiment_id} não encontrada")
        return {'status': 'erro', 'message': 'execução não encontrada'}

    if experimento.status != ExperimentRun.STATUS_PENDING:
        logger.warning(f"Execução {experiment_id} já está em '{experimento.status}'")
        return {'status': experimento.status, 'exit_code': experimento.exit_code}

    try:
        config = run_config_from_json(experimento.config)
        resultado = run_and_record(config, experiment=experimento)
    except ChaosLabError as exc:
        if experimento.status == ExperimentRun.STATUS_PENDING:
            # configuração gravada ilegível: run_and_record nem começou
            experimento.status = ExperimentRun.STATUS_FAILED
            experimento.exit_code = exc.exit_code
            experimento.message = str(exc)
            experimento.save(update_fields=['status', 'exit_code', 'message', 'atualizado_em'])
        logger.error(f"Execução {experiment_id} falhou (código {exc.exit_code}): {exc}")
        return {'status': ExperimentRun.STATUS_FAILED, 'exit_code': exc.exit_code}

    logger.info(f"Execução {experiment_id} concluída: sha256 {resultado.sha256}")
    return {'status': ExperimentRun.STATUS_DONE, 'exit_code': 0, 'sha256': resultado.sha256}
