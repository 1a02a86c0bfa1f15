"""
Execução dos ensaios em blocos fixos, serial ou com ``billiard.Pool``.

Cada job recebe ``(start, count)`` e devolve um array com ``count`` linhas
(ou uma tupla de arrays). Os blocos são definidos só pelo índice do ensaio,
e os resultados voltam na ordem dos blocos, qualquer que seja o número de
workers.
"""
import logging
import sys
from typing import Callable, List, Optional, Tuple

import numpy as np
from billiard import Pool
from django.conf import settings
from tqdm import tqdm

from utils.validators import validate_trials

logger = logging.getLogger(__name__)

Job = Callable[[int, int], object]


def _call(argumentos):
    job, start, count = argumentos
    return job(start, count)


def _concatenate(partes: List[object]):
    if isinstance(partes[0], tuple):
        return tuple(np.concatenate([parte[i] for parte in partes]) for i in range(len(partes[0])))
    return np.concatenate(partes)


class TrialRunner:
    """
    Distribui ensaios em blocos.

    Args:
        chunk_size: Ensaios por bloco (padrão ``CHAOSLAB['CHUNK_SIZE']``)
        workers: Processos; 1 executa no próprio processo
        progress: Exibe barra ``tqdm`` no stderr
    """

    def __init__(self, chunk_size: Optional[int] = None, workers: Optional[int] = None, progress: bool = False):
        conf = settings.CHAOSLAB
        self.chunk_size = int(chunk_size or conf['CHUNK_SIZE'])
        self.workers = max(1, int(workers or conf['WORKERS']))
        self.progress = progress

    def chunks(self, trials: int) -> List[Tuple[int, int]]:
        trials = validate_trials(trials)
        return [(inicio, min(self.chunk_size, trials - inicio)) for inicio in range(0, trials, self.chunk_size)]

    def map(self, job: Job, trials: int, desc: str = 'ensaios'):
        """Executa ``job`` em todos os blocos e concatena na ordem dos ensaios."""
        blocos = self.chunks(trials)
        tarefas = [(job, inicio, quantidade) for inicio, quantidade in blocos]
        barra = tqdm(total=len(blocos), desc=desc, disable=not self.progress, file=sys.stderr, leave=False)

        logger.debug(f"{desc}: {trials} ensaios em {len(blocos)} blocos, {self.workers} worker(s)")
        partes = []
        try:
            if self.workers == 1 or len(blocos) == 1:
                for tarefa in tarefas:
                    partes.append(_call(tarefa))
                    barra.update()
            else:
                with Pool(processes=min(self.workers, len(blocos))) as pool:
                    # imap preserva a ordem dos blocos
                    for parte in pool.imap(_call, tarefas):
                        partes.append(parte)
                        barra.update()
        finally:
            barra.close()
        return _concatenate(partes)
