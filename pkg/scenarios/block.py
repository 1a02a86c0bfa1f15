"""
Sequência explícita de núcleos em blocos para a integral dupla de Poisson.

f_n vale (2n)^{-1/2} em cada bloco B_j x B_j (fora da diagonal pontual),
com n células de massa 1. Então 2||f_n||^2 = 1 e

    I_2(f_n) = n^{-1/2} * soma_j 2^{-1/2} (M_j^2 - M_j - 1).
"""
import logging
import math

import numpy as np

from kernels.tables import SymmetricKernel
from partition.cells import CellPartition, build_partition
from rmeasure.sampling import LawMismatchError, MeasureLaw, MeasureSample
from utils.exceptions import PreconditionError

logger = logging.getLogger(__name__)


def block_partition(n: int, refinement: int = 1) -> CellPartition:
    """
    n blocos de massa 1, cada um em ``refinement`` subcélulas de massa 1/s.

    A subcélula k do bloco j entra em (j + (k+1)/s) / n.
    """
    if n < 1:
        raise PreconditionError(f"n deve ser >= 1, recebido {n}")
    if refinement < 1:
        raise PreconditionError(f"refinamento deve ser >= 1, recebido {refinement}")
    s = int(refinement)
    return build_partition(
        (1.0 / s, (j * s + k + 1) / (n * s)) for j in range(n) for k in range(s)
    )


def block_example_kernel(n: int, refinement: int = 1) -> SymmetricKernel:
    """
    Núcleo f_n sobre ``block_partition(n, refinement)``.

    Com refinamento, o valor do bloco se repete em todos os pares de
    subcélulas do mesmo bloco; a integral é a mesma trajetória a trajetória.
    """
    partition = block_partition(n, refinement)
    valor = 1.0 / math.sqrt(2.0 * n)
    s = int(refinement)
    dense = np.kron(np.eye(n), np.ones((s, s))) * valor
    return SymmetricKernel(partition, 2, dense=dense)


def block_example_closed_form(sample: MeasureSample, n: int):
    """n^{-1/2} soma_j 2^{-1/2} (M_j^2 - M_j - 1), direto dos incrementos."""
    if sample.law is not MeasureLaw.CPOISSON:
        raise LawMismatchError(f"forma fechada definida para Poisson compensada, recebido {sample.law.value}")
    if len(sample.partition) != n:
        raise PreconditionError(f"amostra com {len(sample.partition)} células para n = {n}")
    M = sample.increments
    termos = (M * M - M - 1.0) / math.sqrt(2.0)
    resultado = termos.sum(axis=-1) / math.sqrt(n)
    if sample.is_batch:
        return np.asarray(resultado, dtype=np.float64)
    return float(resultado)
