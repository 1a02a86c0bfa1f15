"""
Agregação Monte Carlo com soma em ordem fixa.

Os ensaios são agrupados em blocos de tamanho fixo pelo índice do ensaio;
cada bloco é somado com ``np.sum`` e as somas parciais são combinadas na
ordem dos blocos. O resultado não depende de quantos workers produziram os
valores nem da ordem em que chegaram.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from utils.exceptions import MonteCarloBudgetError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 1024


def _chunked_sum(valores: np.ndarray, chunk: int):
    total = valores.dtype.type(0)
    for inicio in range(0, len(valores), chunk):
        total = total + np.sum(valores[inicio:inicio + chunk])
    return total


def mc_aggregate(
    values, chunk: int = DEFAULT_CHUNK, trial_index: Optional[np.ndarray] = None,
) -> Tuple:
    """
    Média e erro padrão de valores por ensaio.

    O erro padrão é o desvio amostral (ddof=1) dividido por raiz de N; para
    complexos usa var(Re) + var(Im). Com um único ensaio o erro é NaN.

    Args:
        values: Valores por ensaio, reais ou complexos
        chunk: Tamanho fixo dos blocos
        trial_index: Índice do ensaio de cada valor; quando informado os
            valores são reordenados por ele antes da soma

    Returns:
        Tuple: (média, erro padrão)
    """
    valores = np.asarray(values)
    if valores.ndim != 1:
        valores = valores.reshape(-1)
    if valores.size == 0:
        raise MonteCarloBudgetError("agregação de uma amostra vazia")
    if chunk < 1:
        raise PreconditionError(f"tamanho de bloco deve ser positivo, recebido {chunk}")

    if trial_index is not None:
        indices = np.asarray(trial_index)
        if indices.shape != valores.shape:
            raise PreconditionError("trial_index precisa ter um índice por valor")
        valores = valores[np.argsort(indices, kind='stable')]

    complexo = np.iscomplexobj(valores)
    valores = valores.astype(np.complex128 if complexo else np.float64)
    n = len(valores)
    media = _chunked_sum(valores, chunk) / n

    if n == 1:
        return (complex(media) if complexo else float(media)), math.nan

    desvios = valores - media
    if complexo:
        quadrados = desvios.real * desvios.real + desvios.imag * desvios.imag
    else:
        quadrados = desvios * desvios
    variancia = float(_chunked_sum(quadrados, chunk)) / (n - 1)
    erro = math.sqrt(variancia / n)
    return (complex(media) if complexo else float(media)), erro
