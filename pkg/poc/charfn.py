"""
Funções características condicionais e estimativa da convergência estável.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from harness.aggregation import DEFAULT_CHUNK, mc_aggregate
from rmeasure.exponent import levy_exponent_values
from utils.exceptions import PreconditionError

from .arrays import TangentArrayPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CharFnEstimate:
    """E[Z exp(i lambda X)] estimada em cada ponto da grade."""

    lambda_grid: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    weight: Optional[np.ndarray] = None


def conditional_cf_decoupled(pair: TangentArrayPair, lam: float, part: str = 'total') -> np.ndarray:
    """
    E[exp(i lambda S~) | fluxo principal] = exp(psi(u; lambda)) por ensaio.

    Forma fechada sobre o integrando realizado, sem MC interno.

    Args:
        pair: Par tangente
        lam: Parâmetro lambda
        part: ``'total'`` (todas as parcelas) ou ``'head'`` (só a cabeça)

    Returns:
        np.ndarray: Complexos de formato (T,)
    """
    if part not in ('total', 'head'):
        raise PreconditionError(f"parte desconhecida: {part}")
    coeficientes, massas = pair.coefficients, pair.masses
    if part == 'head':
        coeficientes, massas = coeficientes[:, :pair.boundary], massas[:pair.boundary]
    return np.exp(levy_exponent_values(pair.law, coeficientes, massas, float(lam)))


def estimate_stable_cf(
    x_samples, z_samples, lambda_grid: Sequence[float], chunk: int = DEFAULT_CHUNK,
) -> CharFnEstimate:
    """
    Média de Z exp(i lambda X) com erro padrão; Z = None é a CF empírica.

    Args:
        x_samples: Valores reais por ensaio
        z_samples: Pesos complexos por ensaio ou None
        lambda_grid: Pontos lambda
        chunk: Tamanho dos blocos da agregação

    Returns:
        CharFnEstimate: Valores e erros por ponto
    """
    x = np.asarray(x_samples, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise PreconditionError("amostra de X deve ser um vetor não vazio")
    z = None
    if z_samples is not None:
        z = np.asarray(z_samples, dtype=np.complex128)
        if z.shape != x.shape:
            raise PreconditionError(f"X tem {x.size} ensaios e Z tem {z.size}")

    grade = np.asarray(lambda_grid, dtype=np.float64)
    valores = np.empty(len(grade), dtype=np.complex128)
    erros = np.empty(len(grade), dtype=np.float64)
    for indice, lam in enumerate(grade):
        termos = np.exp(1j * lam * x)
        if z is not None:
            termos = z * termos
        valores[indice], erros[indice] = mc_aggregate(termos, chunk)
    return CharFnEstimate(lambda_grid=grade, values=valores, std_errors=erros, weight=z)
