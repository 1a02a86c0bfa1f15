"""
Amostragem de medidas aleatórias independentemente espalhadas.

Cada célula B recebe um incremento M(B) independente:

* gaussiana: M(B) ~ Normal(0, mu(B)), por inversão da normal padrão;
* Poisson compensada: M(B) = N - mu(B), N ~ Poisson(mu(B)); inversão por
  busca sequencial quando mu(B) <= 30 e rejeição transformada (PTRS) acima.

Os dois algoritmos consomem palavras de ``rmeasure.streams`` em ordem fixa,
então os resultados são idênticos bit a bit para o mesmo (seed, ensaio).
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import gammaln, ndtri

from partition.cells import CellPartition
from utils.exceptions import PreconditionError
from utils.validators import validate_trials

from .streams import (
    STREAM_EXTERNAL, STREAM_MAIN, WORDS_PER_CELL, cell_words, stream_key,
    trial_words, words_to_uniform,
)

logger = logging.getLogger(__name__)

INVERSION_LIMIT = 30.0


class LawMismatchError(PreconditionError):
    """Operação exige outra lei da medida."""


class StreamCollisionError(PreconditionError):
    """Cópia desacoplada gerada pelo mesmo fluxo da amostra principal."""


class MeasureLaw(str, Enum):
    GAUSSIAN = 'gaussian'
    CPOISSON = 'cpoisson'

    @property
    def tag(self) -> int:
        return 1 if self is MeasureLaw.GAUSSIAN else 2

    def chaos_atom(self, increments: np.ndarray, masses: np.ndarray) -> np.ndarray:
        """
        Átomo de caos de ordem 2 dentro da célula, I_2(1_{B x B}).

        Pela fórmula do produto, I_1(1_B)^2 = I_2(1_{B^2}) + I_1(1_B) + mu(B)
        na lei de Poisson; na gaussiana o termo do meio desaparece.
        """
        quadrado = increments * increments
        if self is MeasureLaw.GAUSSIAN:
            return quadrado - masses
        return quadrado - increments - masses


@dataclass(frozen=True, eq=False)
class MeasureSample:
    """
    Realização dos incrementos sobre as células.

    ``increments`` tem formato (n,) para um ensaio ou (T, n) para os ensaios
    ``trial .. trial + T - 1`` do mesmo fluxo.
    """

    law: MeasureLaw
    partition: CellPartition
    increments: np.ndarray
    seed: int
    trial: int
    stream: int = STREAM_MAIN

    @property
    def n_trials(self) -> int:
        return 1 if self.increments.ndim == 1 else self.increments.shape[0]

    @property
    def is_batch(self) -> bool:
        return self.increments.ndim == 2

    def chaos_atoms(self) -> np.ndarray:
        return self.law.chaos_atom(self.increments, self.partition.masses)

    def row(self, index: int) -> 'MeasureSample':
        """Ensaio individual de um lote."""
        if not self.is_batch:
            return self
        return MeasureSample(
            law=self.law, partition=self.partition,
            increments=self.increments[index], seed=self.seed,
            trial=self.trial + index, stream=self.stream,
        )

    @classmethod
    def from_increments(cls, partition: CellPartition, law: MeasureLaw, increments) -> 'MeasureSample':
        """Envolve incrementos fornecidos pelo chamador (testes, dados externos)."""
        valores = np.array(increments, dtype=np.float64)
        if valores.shape[-1] != len(partition):
            raise PreconditionError(
                f"esperados {len(partition)} incrementos por ensaio, recebido {valores.shape[-1]}"
            )
        valores.setflags(write=False)
        return cls(law=MeasureLaw(law), partition=partition, increments=valores,
                   seed=0, trial=0, stream=STREAM_EXTERNAL)


def _poisson_inversion(uniform: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Menor k com u <= F(k), vetorizado; lam <= 30."""
    lam = np.broadcast_to(lam, uniform.shape)
    prob = np.exp(-lam)
    acumulada = prob.copy()
    resultado = np.zeros(uniform.shape, dtype=np.int64)
    ativos = uniform > acumulada
    k = 0
    while ativos.any():
        k += 1
        prob = prob * lam / k
        nova = acumulada + prob
        resultado[ativos] = k
        # soma saturada em ponto flutuante: o restante da cauda fica neste k
        ativos &= (uniform > nova) & (nova > acumulada)
        acumulada = nova
    return resultado


class _PtrsConstants:
    __slots__ = ('lam', 'log_lam', 'a', 'b', 'log_inv_alpha', 'v_r')

    def __init__(self, lam: float):
        sqrt_lam = math.sqrt(lam)
        self.lam = lam
        self.log_lam = math.log(lam)
        self.b = 0.931 + 2.53 * sqrt_lam
        self.a = -0.059 + 0.02483 * self.b
        self.log_inv_alpha = math.log(1.1239 + 1.1328 / (self.b - 3.4))
        self.v_r = 0.9277 - 3.6224 / (self.b - 2.0)


def _ptrs_attempt(const: _PtrsConstants, u_word: np.uint64, v_word: np.uint64) -> Optional[int]:
    """Uma tentativa da rejeição transformada de Hörmann; None se rejeitada."""
    u = float(words_to_uniform(u_word)) - 0.5
    v = float(words_to_uniform(v_word))
    us = 0.5 - abs(u)
    k = math.floor((2.0 * const.a / us + const.b) * u + const.lam + 0.43)
    # aceitação rápida na região central
    if us >= 0.07 and v <= const.v_r:
        return k
    if k < 0 or (us < 0.013 and v > us):
        return None
    lado_esquerdo = math.log(v) + const.log_inv_alpha - math.log(const.a / (us * us) + const.b)
    lado_direito = -const.lam + k * const.log_lam - float(gammaln(k + 1.0))
    if lado_esquerdo <= lado_direito:
        return k
    return None


def _poisson_ptrs(lam: float, first_block: np.ndarray, key: int, trial: int, cell: int) -> int:
    """Duas tentativas por bloco de 4 palavras; blocos seguintes sob demanda."""
    const = _PtrsConstants(lam)
    palavras = first_block
    bloco = 0
    while True:
        for inicio in (0, 2):
            k = _ptrs_attempt(const, palavras[inicio], palavras[inicio + 1])
            if k is not None:
                return k
        bloco += 1
        palavras = cell_words(key, trial, cell, bloco)


def _increments_from_words(
    words: np.ndarray, masses: np.ndarray, law: MeasureLaw, key: int, trial: int,
) -> np.ndarray:
    """Incrementos de um ensaio a partir das palavras (n, 4)."""
    # primeira palavra de cada célula; as outras três ficam para o PTRS
    uniformes = words_to_uniform(words[:, 0])
    if law is MeasureLaw.GAUSSIAN:
        return np.sqrt(masses) * ndtri(uniformes)

    contagens = np.zeros(len(masses), dtype=np.int64)
    pequenas = masses <= INVERSION_LIMIT
    if pequenas.any():
        contagens[pequenas] = _poisson_inversion(uniformes[pequenas], masses[pequenas])
    # massas grandes: rejeição célula a célula
    for cell in np.flatnonzero(~pequenas):
        contagens[cell] = _poisson_ptrs(float(masses[cell]), words[cell], key, trial, int(cell))
    return contagens.astype(np.float64) - masses


def sample_measure(
    partition: CellPartition, law: MeasureLaw, seed: int, trial: int, stream: int = STREAM_MAIN,
) -> MeasureSample:
    """
    Sorteia os incrementos de um ensaio.

    Args:
        partition: Partição das células
        law: Lei da medida
        seed: Semente de 64 bits
        trial: Índice do ensaio
        stream: Fluxo (principal, cópia, reamostragem)

    Returns:
        MeasureSample: Incrementos de formato (n,)
    """
    law = MeasureLaw(law)
    key = stream_key(seed, stream, law.tag)
    palavras = trial_words(key, trial, len(partition))
    incrementos = _increments_from_words(palavras, partition.masses, law, key, trial)
    incrementos.setflags(write=False)
    return MeasureSample(law=law, partition=partition, increments=incrementos,
                         seed=seed, trial=int(trial), stream=stream)


def sample_measure_batch(
    partition: CellPartition, law: MeasureLaw, seed: int, start: int, count: int,
    stream: int = STREAM_MAIN,
) -> MeasureSample:
    """Ensaios ``start .. start + count - 1`` empilhados em (count, n)."""
    law = MeasureLaw(law)
    count = validate_trials(count)
    key = stream_key(seed, stream, law.tag)
    n = len(partition)
    incrementos = np.empty((count, n), dtype=np.float64)
    # cada linha é o ensaio isolado: o lote não muda os bits
    for linha in range(count):
        trial = start + linha
        palavras = trial_words(key, trial, n)
        incrementos[linha] = _increments_from_words(palavras, partition.masses, law, key, trial)
    incrementos.setflags(write=False)
    return MeasureSample(law=law, partition=partition, increments=incrementos,
                         seed=seed, trial=int(start), stream=stream)


def sample_cell(
    partition: CellPartition, law: MeasureLaw, seed: int, trial: int, cell: int,
    stream: int = STREAM_MAIN,
) -> float:
    """Incremento de uma única célula, sem gerar as demais."""
    law = MeasureLaw(law)
    key = stream_key(seed, stream, law.tag)
    palavras = cell_words(key, trial, cell).reshape(1, WORDS_PER_CELL)
    massa = partition.masses[cell:cell + 1]
    if law is MeasureLaw.CPOISSON and massa[0] > INVERSION_LIMIT:
        k = _poisson_ptrs(float(massa[0]), palavras[0], key, trial, int(cell))
        return float(k) - float(massa[0])
    return float(_increments_from_words(palavras, massa, law, key, trial)[0])
