"""
Condições analíticas do CLT para integrais duplas de Poisson.

Todas as normas vêm das contrações do app kernels sobre núcleos densos de
ordem 2; nada aqui sorteia, exceto ``findev_identity``.

Notação: f ★_r^l f identifica r argumentos e integra l deles contra mu.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import ndtr

from chaos.integrals import eval_multiple_integral
from harness.aggregation import DEFAULT_CHUNK, mc_aggregate
from harness.runner import TrialRunner
from kernels.tables import SymmetricKernel, UnsupportedOrderError, contract
from rmeasure.sampling import LawMismatchError, MeasureLaw, sample_measure_batch
from utils.exceptions import PreconditionError
from utils.validators import ensure_finite, validate_trials

logger = logging.getLogger(__name__)

# Desvio padrão da distribuição de Kolmogorov: sqrt(pi^2/12 - (pi/2) ln(2)^2)
KOLMOGOROV_SD = math.sqrt(math.pi ** 2 / 12.0 - (math.pi / 2.0) * math.log(2.0) ** 2)


@dataclass(frozen=True)
class AssumptionNRecord:
    """
    Testemunhas das condições de integrabilidade, normalização e quarto momento.

    Attributes:
        integrability: integral de (integral de f(z, .)^2 dmu(z))^2 dmu, finita
        norm_half: 2 ||f||^2, alvo 1
        fourth_power_integral: integral dupla de f^4, alvo 0 ao longo da sequência
    """

    integrability: float
    norm_half: float
    fourth_power_integral: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.integrability, self.norm_half, self.fourth_power_integral)


def _require_order_two(f: SymmetricKernel) -> np.ndarray:
    if f.order != 2 or f.dense is None:
        raise UnsupportedOrderError(f"condições do CLT exigem núcleo denso de ordem 2, recebido ordem {f.order}")
    return f.dense


def _mass_weights(f: SymmetricKernel) -> np.ndarray:
    massas = f.partition.masses
    return np.multiply.outer(massas, massas)


def check_assumption_n(f: SymmetricKernel) -> AssumptionNRecord:
    """
    Calcula as três testemunhas da hipótese N.

    Args:
        f: Núcleo simétrico de ordem 2

    Returns:
        AssumptionNRecord: (integrabilidade, 2||f||^2, integral de f^4)
    """
    dense = _require_order_two(f)
    quadrado = dense * dense
    integrabilidade = contract(f, f, 2, 1).norm_sq()
    quarta = float(np.sum(quadrado * quadrado * _mass_weights(f)))
    registro = AssumptionNRecord(float(integrabilidade), 2.0 * f.norm_sq(), quarta)
    logger.debug(f"Hipótese N: {registro}")
    return registro


def check_gstar(f: SymmetricKernel) -> Tuple[float, float]:
    """(||f ★_1^1 f||^2 em L^2(mu^2), ||f ★_2^1 f||^2 em L^2(mu))."""
    _require_order_two(f)
    return float(contract(f, f, 1, 1).norm_sq()), float(contract(f, f, 2, 1).norm_sq())


def symmetrized_star10_norm_sq(f: SymmetricKernel) -> float:
    """
    ||sym(f ★_1^0 f)||^2 sem montar o núcleo de ordem 3.

    Com h(a, b, c) = f(a, b) f(a, c), a simetrização tem três termos
    distintos e

        ||sym h||^2 = ||f ★_2^1 f||^2 / 3 + 2 <f^2, f ★_1^1 f>_{mu^2} / 3.
    """
    dense = _require_order_two(f)
    pesos = _mass_weights(f)
    estrela11 = contract(f, f, 1, 1).dense
    estrela21 = contract(f, f, 2, 1).norm_sq()
    cruzado = float(np.sum(dense * dense * estrela11 * pesos))
    return estrela21 / 3.0 + 2.0 * cruzado / 3.0


def findev_rhs(f: SymmetricKernel) -> float:
    """
    Lado analítico da expansão de variância:

        3 (2||f||^2)^2 + 48 ||f ★_1^1 f||^2 + 96 ||sym(f ★_1^0 f)||^2 + 16 ||f ★_2^1 f||^2.
    """
    estrela11, estrela21 = check_gstar(f)
    metade = 2.0 * f.norm_sq()
    return 3.0 * metade * metade + 48.0 * estrela11 + 96.0 * symmetrized_star10_norm_sq(f) + 16.0 * estrela21


class FindevJob:
    """Por ensaio: (F, G) com F = I_2(f) e G = I_2(f ★_2^0 f), f ★_2^0 f = f^2 ponto a ponto."""

    def __init__(self, f: SymmetricKernel, law: MeasureLaw, seed: int):
        dense = _require_order_two(f)
        self.f = f
        self.square = SymmetricKernel(f.partition, 2, dense=dense * dense)
        self.law = MeasureLaw(law)
        self.seed = seed

    def __call__(self, start: int, count: int):
        lote = sample_measure_batch(self.f.partition, self.law, self.seed, start, count)
        return eval_multiple_integral(lote, self.f), eval_multiple_integral(lote, self.square)


def findev_statistic(F, G) -> np.ndarray:
    """(F^2 - 2G)^2 por ensaio."""
    F = np.asarray(F, dtype=np.float64)
    return (F * F - 2.0 * np.asarray(G, dtype=np.float64)) ** 2


def findev_identity(
    f: SymmetricKernel, trials: int, seed: int, law: MeasureLaw = MeasureLaw.CPOISSON,
    runner: Optional[TrialRunner] = None, chunk: int = DEFAULT_CHUNK,
) -> Tuple[Tuple[float, float], float]:
    """
    Compara E[(F^2 - 2 I_2(f ★_2^0 f))^2] por MC com o lado analítico.

    Args:
        f: Núcleo de ordem 2
        trials: Orçamento de ensaios
        seed: Semente
        law: Precisa ser a Poisson compensada
        runner: Executor dos blocos (serial quando omitido)
        chunk: Bloco da agregação

    Returns:
        Tuple: ((lhs, erro padrão), rhs)
    """
    trials = validate_trials(trials)
    law = MeasureLaw(law)
    if law is not MeasureLaw.CPOISSON:
        raise LawMismatchError(f"identidade de variância definida para Poisson compensada, recebido {law.value}")

    rhs = findev_rhs(f)
    runner = runner or TrialRunner(workers=1)
    F, G = runner.map(FindevJob(f, law, seed), trials, desc='findev')
    lhs = mc_aggregate(ensure_finite('findev', findev_statistic(F, G)), chunk)
    logger.info(f"findev: lhs = {lhs[0]:.6g} ± {lhs[1]:.2g}, rhs = {rhs:.6g}")
    return lhs, rhs


def ks_to_normal(samples) -> float:
    """
    Distância de Kolmogorov–Smirnov entre a amostra e a normal padrão.

    Avalia os dois lados em cada salto da CDF empírica:
    max(i/N - Phi(x_i), Phi(x_i) - (i-1)/N) sobre a amostra ordenada.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    if x.size == 0:
        raise PreconditionError("distância KS de uma amostra vazia")
    n = x.size
    cdf = ndtr(x)
    acima = np.arange(1, n + 1) / n - cdf
    abaixo = cdf - np.arange(n) / n
    return float(max(acima.max(), abaixo.max()))


def ks_std_err(trials: int) -> float:
    """Escala do ruído da distância KS sob a hipótese nula."""
    return KOLMOGOROV_SD / math.sqrt(trials)
