"""
Espaço de medida discretizado e resolução da identidade.

Uma ``CellPartition`` é uma lista finita de células com massa positiva e
instante de entrada ``tau`` em (0, 1]. A ``Resolution`` lê esses instantes
como a família crescente Z_t = {c : tau(c) <= t}, no sentido direto ou
invertido, e induz a ordem estrita entre células.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import FrozenSet, Iterable, Sequence, Tuple

import numpy as np

from utils.exceptions import PreconditionError

logger = logging.getLogger(__name__)


class PartitionError(PreconditionError):
    """Especificação de partição inválida."""


class PartitionMismatchError(PreconditionError):
    """Objetos construídos sobre partições diferentes."""


class Direction(str, Enum):
    FORWARD = 'forward'
    REVERSED = 'reversed'


@dataclass(frozen=True)
class Cell:
    id: int
    mass: float
    tau: float


@dataclass(frozen=True)
class CellPartition:
    """Partição imutável; pode ser compartilhada entre workers sem cópia."""

    cells: Tuple[Cell, ...]
    total_mass: float

    def __len__(self) -> int:
        return len(self.cells)

    @cached_property
    def masses(self) -> np.ndarray:
        massas = np.array([cell.mass for cell in self.cells], dtype=np.float64)
        massas.setflags(write=False)
        return massas

    @cached_property
    def taus(self) -> np.ndarray:
        taus = np.array([cell.tau for cell in self.cells], dtype=np.float64)
        taus.setflags(write=False)
        return taus

    def same_as(self, other: 'CellPartition') -> bool:
        return self is other or self == other

    def require_same(self, other: 'CellPartition', contexto: str = '') -> None:
        if not self.same_as(other):
            raise PartitionMismatchError(
                f"partições diferentes{': ' + contexto if contexto else ''} "
                f"({len(self)} vs {len(other)} células)"
            )


def build_partition(spec: Iterable[Sequence[float]]) -> CellPartition:
    """
    Constrói a partição a partir de pares (massa, tau).

    A ordem dos pares define os ids 0..n-1; a massa total é acumulada nessa
    mesma ordem.

    Args:
        spec: Iterável de pares (mass, tau)

    Returns:
        CellPartition: Partição validada
    """
    cells = []
    vistos = set()
    total = 0.0
    for indice, par in enumerate(spec):
        try:
            mass, tau = float(par[0]), float(par[1])
        except (TypeError, ValueError, IndexError) as exc:
            raise PartitionError(f"célula {indice}: par (massa, tau) ilegível: {par!r}") from exc
        if not np.isfinite(mass) or mass <= 0:
            raise PartitionError(f"célula {indice}: massa deve ser positiva, recebido {mass}")
        if not 0.0 < tau <= 1.0:
            raise PartitionError(f"célula {indice}: tau fora de (0, 1]: {tau}")
        # taus distintos: a ordem de entrada precisa ser estrita
        if tau in vistos:
            raise PartitionError(f"célula {indice}: tau duplicado {tau}")
        vistos.add(tau)
        total += mass
        cells.append(Cell(id=indice, mass=mass, tau=tau))

    if not cells:
        raise PartitionError("partição vazia")

    logger.debug(f"Partição com {len(cells)} células, massa total {total}")
    return CellPartition(cells=tuple(cells), total_mass=total)


def uniform_partition(n: int, mass: float = 1.0) -> CellPartition:
    """n células de mesma massa com tau = (j+1)/n."""
    if n < 1:
        raise PartitionError(f"número de células deve ser positivo, recebido {n}")
    return build_partition((mass, (j + 1) / n) for j in range(n))


@dataclass(frozen=True)
class Resolution:
    """
    Resolução da identidade sobre uma partição.

    No sentido invertido o instante efetivo é 1 - tau + g, com g o menor
    entre o menor tau e o menor espaçamento entre taus consecutivos; as
    células são as mesmas, só a ordem se inverte.
    """

    partition: CellPartition
    direction: Direction = Direction.FORWARD

    @cached_property
    def effective_taus(self) -> np.ndarray:
        taus = self.partition.taus
        if self.direction == Direction.FORWARD:
            efetivos = taus.copy()
        else:
            # invertido: 1 - tau + folga, limitado a 1
            ordenados = np.sort(taus)
            folga = ordenados[0]
            if len(ordenados) > 1:
                folga = min(folga, float(np.diff(ordenados).min()))
            efetivos = np.minimum(1.0 - taus + folga, 1.0)
        efetivos.setflags(write=False)
        return efetivos

    @cached_property
    def order(self) -> np.ndarray:
        """Ids das células em ordem crescente de tempo efetivo."""
        ordem = np.argsort(self.effective_taus, kind='stable')
        ordem.setflags(write=False)
        return ordem

    def slice_mask(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= 1.0:
            raise PreconditionError(f"t fora de [0, 1]: {t}")
        return self.effective_taus <= t

    def reversed(self) -> 'Resolution':
        oposta = Direction.REVERSED if self.direction == Direction.FORWARD else Direction.FORWARD
        return Resolution(self.partition, oposta)


def time_slice(resolution: Resolution, t: float) -> FrozenSet[int]:
    """Células já presentes em Z_t."""
    return frozenset(int(c) for c in np.flatnonzero(resolution.slice_mask(t)))


def precedes(resolution: Resolution, a: int, b: int) -> bool:
    """Verdadeiro sse a célula ``a`` entra estritamente antes de ``b``."""
    n = len(resolution.partition)
    if not (0 <= a < n and 0 <= b < n):
        raise PreconditionError(f"ids fora da partição: {a}, {b}")
    efetivos = resolution.effective_taus
    return bool(efetivos[a] < efetivos[b])
