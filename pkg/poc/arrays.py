"""
Arranjos adaptados e arranjos tangentes desacoplados.

Um integrando elementar associa a cada célula um coeficiente Phi_j que só
pode depender dos incrementos das células anteriores na resolução. O arranjo
original tem parcelas Phi_j * M_j; o desacoplado usa os mesmos Phi_j com os
incrementos de uma cópia independente (fluxo ``STREAM_COPY``).
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from chaos.adapted import adapted_integrand
from kernels.tables import SymmetricKernel
from partition.cells import CellPartition, Resolution
from rmeasure.sampling import MeasureLaw, MeasureSample, sample_measure_batch
from rmeasure.streams import STREAM_COPY, STREAM_MAIN, STREAM_REPLAY
from utils.exceptions import PreconditionError

logger = logging.getLogger(__name__)

# Posições verificadas por ensaio na checagem de adaptação
ADAPTATION_POSITIONS = 8


class NonAdaptedIntegrandError(PreconditionError):
    """Coeficiente depende de incrementos da própria célula ou posteriores."""


class ElementaryIntegrand(ABC):
    """
    Gerador de coeficientes adaptados.

    Subclasses definem ``coefficients``; ``head_time`` é o instante t_n que
    separa a cabeça do arranjo.
    """

    def __init__(self, resolution: Resolution, head_time: float = 0.0, label: str = ''):
        if not 0.0 <= head_time <= 1.0:
            raise PreconditionError(f"head_time fora de [0, 1]: {head_time}")
        self.resolution = resolution
        self.head_time = float(head_time)
        self.label = label or type(self).__name__

    @property
    def partition(self) -> CellPartition:
        return self.resolution.partition

    @property
    def boundary(self) -> int:
        """Parcelas da cabeça: células com tempo efetivo <= head_time."""
        return int(np.count_nonzero(self.resolution.effective_taus <= self.head_time))

    @abstractmethod
    def coefficients(self, sample: MeasureSample) -> np.ndarray:
        """Phi por célula (ordem dos ids), com o formato de ``sample.increments``."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r}, head_time={self.head_time})"


class DeterministicIntegrand(ElementaryIntegrand):
    """Coeficientes fixos, sem dependência da amostra."""

    def __init__(self, values, resolution: Resolution, head_time: float = 0.0, label: str = ''):
        super().__init__(resolution, head_time, label)
        valores = np.array(values, dtype=np.float64)
        if valores.shape != (len(resolution.partition),):
            raise PreconditionError(f"esperados {len(resolution.partition)} coeficientes, recebido {valores.shape}")
        valores.setflags(write=False)
        self.values = valores

    def coefficients(self, sample: MeasureSample) -> np.ndarray:
        return np.broadcast_to(self.values, sample.increments.shape).copy()


class ChaosIntegrand(ElementaryIntegrand):
    """Integrando de Clark–Ocone h_pi(f) de um núcleo de ordem 1 ou 2."""

    def __init__(self, kernel: SymmetricKernel, resolution: Resolution, head_time: float = 0.0, label: str = ''):
        super().__init__(resolution, head_time, label or f"clark-ocone ordem {kernel.order}")
        kernel.partition.require_same(resolution.partition, 'integrando de caos')
        self.kernel = kernel

    def coefficients(self, sample: MeasureSample) -> np.ndarray:
        return np.array(adapted_integrand(self.kernel, self.resolution, sample).values)


@dataclass(frozen=True, eq=False)
class AdaptedArray:
    """
    Parcelas X_{n,j} = Phi_j * Delta M_j na ordem da resolução.

    ``rows`` tem formato (T, n); as primeiras ``boundary`` colunas formam a
    cabeça (células com tempo efetivo <= t_n).
    """

    rows: np.ndarray
    boundary: int
    law: MeasureLaw

    @property
    def totals(self) -> np.ndarray:
        return self.rows.sum(axis=1)

    @property
    def head_sums(self) -> np.ndarray:
        return self.rows[:, :self.boundary].sum(axis=1)

    def partial_sum(self, count: int) -> np.ndarray:
        """Soma das ``count`` primeiras parcelas de cada ensaio."""
        return self.rows[:, :count].sum(axis=1)


@dataclass(frozen=True, eq=False)
class TangentArrayPair:
    """Arranjo original e arranjo desacoplado com os mesmos coeficientes."""

    original: AdaptedArray
    decoupled: AdaptedArray
    coefficients: np.ndarray
    masses: np.ndarray
    integrand: ElementaryIntegrand
    main: MeasureSample
    seed: int
    start: int

    @property
    def n_trials(self) -> int:
        return self.coefficients.shape[0]

    @property
    def law(self) -> MeasureLaw:
        return self.original.law

    @property
    def boundary(self) -> int:
        return self.original.boundary

    def realized_norm_sq(self, part: str = 'total') -> np.ndarray:
        """||u||^2 realizado por ensaio, na cabeça ou no total."""
        coeficientes = self.coefficients[:, :self.boundary] if part == 'head' else self.coefficients
        massas = self.masses[:self.boundary] if part == 'head' else self.masses
        return (coeficientes * coeficientes) @ massas


def check_adapted(integrand: ElementaryIntegrand, sample: MeasureSample, positions: int = ADAPTATION_POSITIONS) -> None:
    """
    Confere a adaptação por perturbação: trocar os incrementos a partir da
    posição k não pode alterar Phi na posição k.

    Raises:
        NonAdaptedIntegrandError: Se algum coeficiente muda
    """
    linha = sample.row(0)
    base = np.asarray(integrand.coefficients(linha), dtype=np.float64)
    ordem = integrand.resolution.order
    n = len(ordem)
    rng = np.random.default_rng(n)
    posicoes = np.unique(np.linspace(0, n - 1, min(positions, n)).astype(int))
    for posicao in posicoes:
        # perturba a célula na posição e todas as posteriores
        alterados = np.array(linha.increments)
        posteriores = ordem[posicao:]
        alterados[posteriores] = alterados[posteriores] + rng.normal(size=len(posteriores)) + 1.0
        perturbada = MeasureSample.from_increments(linha.partition, linha.law, alterados)
        novo = np.asarray(integrand.coefficients(perturbada), dtype=np.float64)
        cell = ordem[posicao]
        if not np.isclose(novo[cell], base[cell], rtol=1e-12, atol=1e-12):
            raise NonAdaptedIntegrandError(
                f"{integrand!r}: coeficiente da célula {cell} depende de incrementos não anteriores"
            )


def _ordered_rows(coeficientes: np.ndarray, incrementos: np.ndarray, ordem: np.ndarray) -> np.ndarray:
    linhas = (coeficientes * incrementos)[:, ordem]
    linhas.setflags(write=False)
    return linhas


def build_tangent_pair(
    integrand: ElementaryIntegrand, partition: CellPartition, resolution: Resolution,
    law: MeasureLaw, seed: int, start: int, count: int = 1,
) -> TangentArrayPair:
    """
    Constrói o par (original, desacoplado) para os ensaios ``start .. start + count - 1``.

    Args:
        integrand: Gerador dos coeficientes Phi
        partition: Partição das células
        resolution: Resolução que ordena as parcelas
        law: Lei da medida
        seed: Semente
        start: Primeiro ensaio
        count: Quantidade de ensaios

    Returns:
        TangentArrayPair: Arranjos de formato (count, n)
    """
    partition.require_same(resolution.partition, 'arranjo tangente')
    partition.require_same(integrand.partition, 'arranjo tangente')
    if integrand.resolution != resolution:
        raise NonAdaptedIntegrandError(f"{integrand!r} foi construído para outra resolução")
    law = MeasureLaw(law)

    # Mesmos ensaios em dois fluxos independentes: principal e cópia
    principal = sample_measure_batch(partition, law, seed, start, count, stream=STREAM_MAIN)
    copia = sample_measure_batch(partition, law, seed, start, count, stream=STREAM_COPY)
    coeficientes = np.asarray(integrand.coefficients(principal), dtype=np.float64)
    if coeficientes.shape != principal.increments.shape:
        raise NonAdaptedIntegrandError(
            f"{integrand!r} devolveu formato {coeficientes.shape}, esperado {principal.increments.shape}"
        )
    check_adapted(integrand, principal)

    # Parcelas na ordem da resolução; as primeiras `fronteira` formam a cabeça
    ordem = resolution.order
    fronteira = integrand.boundary
    ordenados = coeficientes[:, ordem]
    ordenados.setflags(write=False)
    massas = partition.masses[ordem]

    return TangentArrayPair(
        original=AdaptedArray(_ordered_rows(coeficientes, principal.increments, ordem), fronteira, law),
        decoupled=AdaptedArray(_ordered_rows(coeficientes, copia.increments, ordem), fronteira, law),
        coefficients=ordenados, masses=massas, integrand=integrand, main=principal,
        seed=seed, start=start,
    )


def tangency_samples(
    integrand: ElementaryIntegrand, law: MeasureLaw, seed: int, trial: int, position: int,
    count: int, copy_seed: Optional[int] = None,
):
    """
    Amostras da parcela na posição ``position`` com o prefixo fixo.

    O original regenera os incrementos das posições >= ``position`` pelo
    fluxo de reamostragem; o desacoplado usa Phi do ensaio principal com
    incrementos da cópia.

    Returns:
        Tuple: (parcelas originais, parcelas desacopladas), ``count`` cada
    """
    resolution = integrand.resolution
    partition = resolution.partition
    law = MeasureLaw(law)
    ordem = resolution.order
    cell = int(ordem[position])

    principal = sample_measure_batch(partition, law, seed, trial, 1).row(0)
    novos = sample_measure_batch(partition, law, seed, 0, count, stream=STREAM_REPLAY)
    incrementos = np.broadcast_to(principal.increments, (count, len(partition))).copy()
    # prefixo fixo, sufixo do fluxo de reamostragem
    posteriores = ordem[position:]
    incrementos[:, posteriores] = novos.increments[:, posteriores]
    reamostrada = MeasureSample.from_increments(partition, law, incrementos)
    originais = integrand.coefficients(reamostrada)[:, cell] * incrementos[:, cell]

    copias = sample_measure_batch(
        partition, law, seed if copy_seed is None else copy_seed, 0, count, stream=STREAM_COPY,
    )
    phi = integrand.coefficients(principal)[cell]
    desacopladas = phi * copias.increments[:, cell]
    return originais, desacopladas
