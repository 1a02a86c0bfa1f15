"""
Integrais de primeira ordem e expoente de Lévy–Khinchine.
"""
import logging
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from partition.cells import CellPartition
from utils.exceptions import PreconditionError

from .sampling import MeasureLaw, MeasureSample

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FirstOrderKernel:
    """Função constante em cada célula, h_i em B_i."""

    partition: CellPartition
    values: np.ndarray

    def __post_init__(self):
        valores = np.array(self.values, dtype=np.float64)
        if valores.shape != (len(self.partition),):
            raise PreconditionError(
                f"núcleo de ordem 1 precisa de {len(self.partition)} valores, recebido {valores.shape}"
            )
        valores.setflags(write=False)
        object.__setattr__(self, 'values', valores)

    @classmethod
    def indicator(cls, partition: CellPartition, cell: int) -> 'FirstOrderKernel':
        valores = np.zeros(len(partition))
        valores[cell] = 1.0
        return cls(partition, valores)

    @property
    def norm_sq(self) -> float:
        """Soma de h_i^2 mu_i na ordem das células."""
        total = 0.0
        for termo in self.values * self.values * self.partition.masses:
            total += float(termo)
        return total


@dataclass(frozen=True)
class LevyCharacteristics:
    """
    Descritor estendido da lei: densidade de variância gaussiana por célula e
    medida de saltos com átomos finitos (salto x_a, peso w_a).
    """

    gaussian_variance: Union[float, Tuple[float, ...]] = 0.0
    atoms: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    @classmethod
    def for_law(cls, law: MeasureLaw) -> 'LevyCharacteristics':
        if MeasureLaw(law) is MeasureLaw.GAUSSIAN:
            return cls(gaussian_variance=1.0)
        return cls(gaussian_variance=0.0, atoms=((1.0, 1.0),))

    def __post_init__(self):
        for salto, peso in self.atoms:
            if peso < 0:
                raise PreconditionError(f"peso de átomo negativo: {peso}")
        variancia = np.asarray(self.gaussian_variance, dtype=np.float64)
        if np.any(variancia < 0):
            raise PreconditionError("densidade de variância gaussiana negativa")


def _compensated_jump(x: np.ndarray) -> np.ndarray:
    """e^{ix} - 1 - ix sem cancelamento na parte real."""
    seno_meio = np.sin(0.5 * x)
    return -2.0 * seno_meio * seno_meio + 1j * (np.sin(x) - x)


def levy_exponent_values(
    law: Union[MeasureLaw, LevyCharacteristics], values: np.ndarray, masses: np.ndarray, lam: float,
) -> np.ndarray:
    """
    psi(h; lambda) para vários h empilhados no último eixo.

    Args:
        law: Lei de amostragem ou descritor estendido
        values: Valores por célula, formato (..., n)
        masses: Massas das células, formato (n,)
        lam: Parâmetro real lambda

    Returns:
        np.ndarray: Complexos de formato ``values.shape[:-1]``
    """
    valores = np.asarray(values, dtype=np.float64)
    if isinstance(law, LevyCharacteristics):
        caracteristicas = law
    else:
        caracteristicas = LevyCharacteristics.for_law(law)

    variancia = np.asarray(caracteristicas.gaussian_variance, dtype=np.float64)
    gaussiana = -0.5 * lam * lam * ((valores * valores) * (variancia * masses)).sum(axis=-1)
    resultado = gaussiana.astype(np.complex128)
    for salto, peso in caracteristicas.atoms:
        resultado = resultado + peso * (masses * _compensated_jump(lam * salto * valores)).sum(axis=-1)
    return resultado


def levy_exponent(
    law: Union[MeasureLaw, LevyCharacteristics], h: FirstOrderKernel, lam,
):
    """
    Expoente psi(h; lambda) com exp(psi) = E[exp(i lambda X(h))].

    Gaussiana: -lambda^2 ||h||^2 / 2. Poisson compensada:
    soma de mu_i (e^{i lambda h_i} - 1 - i lambda h_i).

    Aceita ``lam`` escalar (retorna complex) ou sequência (retorna array).
    """
    if np.ndim(lam) == 0:
        return complex(levy_exponent_values(law, h.values, h.partition.masses, float(lam)))
    return np.array(
        [complex(levy_exponent_values(law, h.values, h.partition.masses, float(valor))) for valor in lam],
        dtype=np.complex128,
    )


def integrate_first_order(sample: MeasureSample, h: FirstOrderKernel):
    """X(h) = soma de h_i M_i; float para um ensaio, array para lotes."""
    sample.partition.require_same(h.partition, 'integral de primeira ordem')
    resultado = sample.increments @ h.values
    if sample.is_batch:
        return resultado
    return float(resultado)


def covariance(h: FirstOrderKernel, g: FirstOrderKernel) -> float:
    """(h, g) = soma de h_i g_i mu_i."""
    h.partition.require_same(g.partition, 'covariância')
    return float(np.dot(h.values * g.values, h.partition.masses))
