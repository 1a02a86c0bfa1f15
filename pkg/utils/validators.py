"""
Validadores numéricos compartilhados pelos apps do motor.
"""
import logging
import math
from typing import Tuple

import numpy as np

from .exceptions import MonteCarloBudgetError, NumericalGuardError, PreconditionError

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64


def ensure_finite(nome: str, valores) -> np.ndarray:
    """
    Garante que um array de valores por ensaio não contenha NaN nem infinitos.

    Args:
        nome: Rótulo da grandeza (aparece na mensagem de erro)
        valores: Array real ou complexo

    Returns:
        np.ndarray: O próprio array, convertido com ``np.asarray``
    """
    array = np.asarray(valores)
    finitos = np.isfinite(array)
    if not finitos.all():
        ruins = int(array.size - np.count_nonzero(finitos))
        logger.error(f"Guarda numérica: {ruins} valores não finitos em '{nome}'")
        raise NumericalGuardError(f"{ruins} valores não finitos em '{nome}'")
    return array


def validate_seed(seed: int) -> int:
    """Aceita apenas sementes inteiras em [0, 2^64)."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise PreconditionError(f"semente deve ser inteira, recebido {seed!r}")
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise PreconditionError(f"semente fora de [0, 2^64): {seed}")
    return seed


def validate_trials(trials: int) -> int:
    """Número de ensaios precisa ser positivo."""
    if int(trials) < 1:
        raise MonteCarloBudgetError(f"número de ensaios deve ser positivo, recebido {trials}")
    return int(trials)


def parse_lambda_grid(texto: str) -> Tuple[float, float, int]:
    """
    Interpreta a grade de λ no formato ``min:max:count``.

    Args:
        texto: Ex. ``"-3:3:21"``

    Returns:
        Tuple[float, float, int]: (mínimo, máximo, quantidade de pontos)
    """
    partes = str(texto).split(':')
    if len(partes) != 3:
        raise ValueError(f"grade de lambda deve ser min:max:count, recebido '{texto}'")
    minimo, maximo, quantidade = float(partes[0]), float(partes[1]), int(partes[2])
    if not (math.isfinite(minimo) and math.isfinite(maximo)):
        raise ValueError("limites da grade de lambda devem ser finitos")
    if quantidade < 1:
        raise ValueError("grade de lambda precisa de ao menos um ponto")
    if quantidade > 1 and maximo < minimo:
        raise ValueError("grade de lambda com máximo menor que o mínimo")
    return minimo, maximo, quantidade


def lambda_points(texto: str) -> np.ndarray:
    """Pontos da grade ``min:max:count`` com ``np.linspace``."""
    minimo, maximo, quantidade = parse_lambda_grid(texto)
    return np.linspace(minimo, maximo, quantidade)
