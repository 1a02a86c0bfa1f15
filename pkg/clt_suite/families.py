"""
Famílias de núcleos n -> f_n usadas pelo pipeline do CLT.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from kernels.tables import SymmetricKernel
from partition.cells import uniform_partition
from scenarios.block import block_example_kernel
from utils.exceptions import PreconditionError

logger = logging.getLogger(__name__)

# E[Y^4] com Y = (M^2 - M - 1) / sqrt(2), M Poisson(1) compensada
BLOCK_ATOM_FOURTH_MOMENT = 53.0


@dataclass(frozen=True)
class KernelFamily:
    """
    Sequência de núcleos de ordem 2.

    Attributes:
        name: Nome usado na linha de comando
        builder: (n, refinement) -> SymmetricKernel
        refinable: Se o refinamento em subcélulas preserva a integral
        fourth_moment: E[F_n^4] analítico na Poisson compensada, quando conhecido
        min_n: Menor n aceito
    """

    name: str
    builder: Callable[[int, int], SymmetricKernel]
    refinable: bool = False
    fourth_moment: Optional[Callable[[int], float]] = None
    min_n: int = 1
    description: str = ''

    def kernel(self, n: int, refinement: int = 1) -> SymmetricKernel:
        if n < self.min_n:
            raise PreconditionError(f"família '{self.name}' exige n >= {self.min_n}, recebido {n}")
        return self.builder(int(n), int(refinement) if self.refinable else 1)


def block_fourth_moment(n: int) -> float:
    """3 + (E Y^4 - 3)/n para a soma normalizada de n átomos independentes."""
    return 3.0 + (BLOCK_ATOM_FOURTH_MOMENT - 3.0) / n


def fixed_pair_kernel(n: int = 1, refinement: int = 1) -> SymmetricKernel:
    """f = 1/2 no par {0, 1} de duas células unitárias: F = M_0 M_1 para todo n."""
    partition = uniform_partition(2)
    return SymmetricKernel(partition, 2, dense=np.array([[0.0, 0.5], [0.5, 0.0]]), offdiag_only=True)


def complete_kernel(n: int, refinement: int = 1) -> SymmetricKernel:
    """Constante 1/sqrt(2n(n-1)) fora da diagonal em n células unitárias."""
    if n < 2:
        raise PreconditionError(f"núcleo completo exige n >= 2, recebido {n}")
    partition = uniform_partition(n)
    dense = np.full((n, n), 1.0 / math.sqrt(2.0 * n * (n - 1)))
    np.fill_diagonal(dense, 0.0)
    return SymmetricKernel(partition, 2, dense=dense, offdiag_only=True)


FAMILIES: Dict[str, KernelFamily] = {
    'block': KernelFamily(
        'block', block_example_kernel, refinable=True, fourth_moment=block_fourth_moment,
        description='exemplo em blocos; converge para N(0, 1)',
    ),
    'fixed': KernelFamily(
        'fixed', fixed_pair_kernel, fourth_moment=lambda n: 16.0,
        description='controle negativo: F = M_0 M_1 fixo',
    ),
    'complete': KernelFamily(
        'complete', complete_kernel, min_n=2,
        description='controle negativo: limite qui-quadrado centrado',
    ),
}


def get_family(name: str) -> KernelFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise PreconditionError(f"família desconhecida '{name}'; opções: {', '.join(sorted(FAMILIES))}") from None
