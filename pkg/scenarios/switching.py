"""
Funcional quadrático browniano com chaveamento de sentido do tempo.

Para cada n, W^(n) é o próprio W (n ímpar) ou o reverso W*_t = W_1 - W_{1-t}
(n par). O funcional é

    A_n = integral de 0 a 1 de t^{2n} [(W^(n)_1)^2 - (W^(n)_t)^2] dt

e sua versão escalada A' = sqrt(n) (2n+1) A_n converge estavelmente para
W_1 vezes uma normal independente. As integrais no tempo usam a regra do
trapézio na grade k/m.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from partition.cells import CellPartition, Direction, Resolution, uniform_partition
from poc.arrays import ElementaryIntegrand
from rmeasure.sampling import MeasureLaw, MeasureSample, sample_measure, sample_measure_batch
from utils.exceptions import PreconditionError

logger = logging.getLogger(__name__)

MIN_STEPS = 100


def brownian_partition(m: int) -> CellPartition:
    """m células de massa 1/m: incrementos gaussianos são os de W."""
    return uniform_partition(int(m), mass=1.0 / m)


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """
    Trajetória em m passos; ``increments`` tem formato (m,) ou (T, m).

    ``values`` inclui W_0 = 0 e, quando omitido, acumula os incrementos em
    ordem fixa.
    """

    increments: np.ndarray
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.values is None:
            formato = self.increments.shape[:-1] + (1,)
            valores = np.concatenate([np.zeros(formato), np.cumsum(self.increments, axis=-1)], axis=-1)
            object.__setattr__(self, 'values', valores)

    @property
    def m(self) -> int:
        return self.increments.shape[-1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m

    @property
    def terminal(self) -> np.ndarray:
        return np.asarray(self.values[..., -1])

    def reversed(self) -> 'BrownianPath':
        """W*_t = W_1 - W_{1-t}, com W*_0 = 0 e W*_1 = W_1 exatos."""
        valores = self.terminal[..., None] - self.values[..., ::-1]
        return BrownianPath(np.diff(valores, axis=-1), valores)

    @classmethod
    def from_sample(cls, sample: MeasureSample) -> 'BrownianPath':
        if sample.law is not MeasureLaw.GAUSSIAN:
            raise PreconditionError("trajetória browniana exige incrementos gaussianos")
        return cls(np.asarray(sample.increments))


def sample_brownian_path(m: int, seed: int, start: int, count: int = 1) -> BrownianPath:
    """Trajetórias dos ensaios ``start .. start + count - 1``; formato (m,) quando count = 1."""
    if count == 1:
        return BrownianPath.from_sample(sample_measure(brownian_partition(m), MeasureLaw.GAUSSIAN, seed, start))
    lote = sample_measure_batch(brownian_partition(m), MeasureLaw.GAUSSIAN, seed, start, count)
    return BrownianPath.from_sample(lote)


def switched_path(path: BrownianPath, n: int, switching: bool = True) -> BrownianPath:
    """W^(n): reverso para n par quando há chaveamento."""
    if switching and n % 2 == 0:
        return path.reversed()
    return path


def switching_resolution(n: int, m: int, switching: bool = True) -> Resolution:
    direcao = Direction.REVERSED if switching and n % 2 == 0 else Direction.FORWARD
    return Resolution(brownian_partition(m), direcao)


def _check_grid(n: int, m: int):
    if n < 1:
        raise PreconditionError(f"n deve ser >= 1, recebido {n}")
    if m < MIN_STEPS:
        raise PreconditionError(f"grade degenerada: m = {m} < {MIN_STEPS}")


def quadratic_functional(path: BrownianPath, n: int, switching: bool = True):
    """A_n pela regra do trapézio (já com o chaveamento aplicado)."""
    caminho = switched_path(path, n, switching)
    t = caminho.times
    W = caminho.values
    integrando = t ** (2 * n) * (caminho.terminal[..., None] ** 2 - W * W)
    return trapezoid(integrando, dx=1.0 / caminho.m, axis=-1)


def scaled_functional(path: BrownianPath, n: int, switching: bool = True):
    """A' = sqrt(n) (2n + 1) A_n."""
    return math.sqrt(n) * (2 * n + 1) * quadratic_functional(path, n, switching)


def simulate_switching_functional(n: int, m: int, seed: int, trial: int, switching: bool = True):
    """
    Simula um ensaio do cenário.

    Args:
        n: Índice da sequência
        m: Passos da grade (>= 100)
        seed: Semente
        trial: Índice do ensaio
        switching: False usa W^(n) = W para todo n

    Returns:
        Tuple: (W_1, A')
    """
    _check_grid(n, m)
    path = sample_brownian_path(m, seed, trial)
    return float(path.terminal), float(scaled_functional(path, n, switching))


def switching_norm_limit(path: BrownianPath, n: int, switching: bool = True):
    """||u_n||^2 = 4n integral de (W^(n)_s)^2 s^{4n+2} ds, pelo trapézio."""
    caminho = switched_path(path, n, switching)
    s = caminho.times
    integrando = caminho.values ** 2 * s ** (4 * n + 2)
    return 4 * n * trapezoid(integrando, dx=1.0 / caminho.m, axis=-1)


def ito_cross_check(path: BrownianPath, n: int, switching: bool = True):
    """
    2 sqrt(n) soma_j W_{t_{j-1}} t_{j-1}^{2n+1} Delta W_j + sqrt(n)/(2n+2).

    Aproxima A' pela soma de Itô mais o termo determinístico explícito.
    """
    caminho = switched_path(path, n, switching)
    esquerda = caminho.times[:-1]
    W = caminho.values[..., :-1]
    incrementos = np.diff(caminho.values, axis=-1)
    soma = (W * esquerda ** (2 * n + 1) * incrementos).sum(axis=-1)
    return 2.0 * math.sqrt(n) * soma + math.sqrt(n) / (2 * n + 2)


def trapezoid_tolerance(n: int, m: int) -> float:
    """Folga do trapézio para s^{4n+4}: dobro de (4n)(4n+4)/(12 m^2)."""
    return 2.0 * (4 * n) * (4 * n + 4) / (12.0 * m * m)


def switching_target_cf(gamma: float, lam: float) -> complex:
    """E[exp(i gamma W_1 - lambda^2 W_1^2 / 2)] = (1+lambda^2)^{-1/2} exp(-gamma^2 / (2(1+lambda^2)))."""
    escala = 1.0 + lam * lam
    return complex(math.exp(-gamma * gamma / (2.0 * escala)) / math.sqrt(escala))


def head_time(n: int, epsilon: float) -> float:
    """t_n = epsilon^{1/sqrt(n)}."""
    if not 0.0 < epsilon < 1.0:
        raise PreconditionError(f"epsilon fora de (0, 1): {epsilon}")
    return epsilon ** (1.0 / math.sqrt(n))


class SwitchingIntegrand(ElementaryIntegrand):
    """
    u_n(s) = 2 sqrt(n) W^(n)_s s^{2n+1} no extremo esquerdo de cada passo.

    Na resolução de ``switching_resolution`` os incrementos em ordem de
    resolução são os de W^(n), então a soma de Itô é a integral adaptada.
    """

    def __init__(self, n: int, m: int, epsilon: float, switching: bool = True):
        _check_grid(n, m)
        super().__init__(switching_resolution(n, m, switching), head_time(n, epsilon), f"switching n={n}")
        self.n = n
        self.m = m

    def coefficients(self, sample: MeasureSample) -> np.ndarray:
        ordem = self.resolution.order
        ordenados = np.asarray(sample.increments)[..., ordem]
        formato = ordenados.shape[:-1] + (1,)
        anteriores = np.concatenate([np.zeros(formato), np.cumsum(ordenados[..., :-1], axis=-1)], axis=-1)
        esquerda = np.arange(self.m) / self.m
        phi = 2.0 * math.sqrt(self.n) * anteriores * esquerda ** (2 * self.n + 1)
        coeficientes = np.empty_like(phi)
        coeficientes[..., ordem] = phi
        return coeficientes
