"""
Avaliação exata de integrais múltiplas I_d(f) para núcleos em blocos.

Regras de avaliação (por ensaio, M_i o incremento e D_i o átomo de caos
de ordem 2 da célula i):

* d = 0: a constante;
* d = 1: soma de f_i M_i;
* d = 2: soma sobre i != j de f_ij M_i M_j, mais soma de f_ii D_i;
* d em {3, 4}: para cada multiconjunto m com multiplicidades k_c <= 2,
  f(m) * d!/prod k_c! * prod A_c, com A_c = M_c (k = 1) ou D_c (k = 2).

O átomo D vem da fórmula do produto: M^2 - mu na gaussiana e
M^2 - M - mu na Poisson compensada.
"""
import logging
import math
from collections import Counter
from typing import Tuple

import numpy as np
from scipy import sparse

from kernels.tables import (
    SymmetricKernel, UnsupportedOrderError, contract, symmetrize,
)
from partition.cells import Resolution
from rmeasure.sampling import MeasureLaw, MeasureSample

logger = logging.getLogger(__name__)


def right_multiply(increments: np.ndarray, operator) -> np.ndarray:
    """increments @ operator, com operador denso ou esparso."""
    if sparse.issparse(operator):
        if increments.ndim == 1:
            return np.asarray(operator.T @ increments)
        return np.asarray((operator.T @ increments.T).T)
    return increments @ operator


def _multiset_term(ids, valor, increments, atoms, order):
    contagens = Counter(ids)
    if max(contagens.values()) > 2:
        raise UnsupportedOrderError(
            f"multiplicidade {max(contagens.values())} em {ids}: sem avaliação exata em blocos"
        )
    coeficiente = math.factorial(order)
    produto = None
    for cell, k in sorted(contagens.items()):
        coeficiente //= math.factorial(k)
        # célula simples usa M_c; repetida usa o átomo de ordem 2
        fator = increments[..., cell] if k == 1 else atoms[..., cell]
        produto = fator if produto is None else produto * fator
    return valor * coeficiente * produto


def eval_multiple_integral(sample: MeasureSample, f: SymmetricKernel):
    """
    I_d(f) na amostra; float para um ensaio, array (T,) para lotes.

    Args:
        sample: Incrementos da medida
        f: Núcleo simétrico de ordem 0..4

    Returns:
        Valor da integral múltipla por ensaio
    """
    sample.partition.require_same(f.partition, 'integral múltipla')
    M = sample.increments
    formato = M.shape[:-1]

    if f.order == 0:
        resultado = np.full(formato, float(f.dense))
    elif f.order == 1:
        resultado = M @ f.dense
    elif f.order == 2:
        # fora da diagonal: M^T F M, cada par ordenado uma vez
        diagonal, fora = f.split_diagonal()
        resultado = (right_multiply(M, fora) * M).sum(axis=-1)
        # valor em {c, c}: átomo dentro da célula
        if np.any(diagonal != 0.0):
            resultado = resultado + sample.chaos_atoms() @ diagonal
    else:
        atoms = sample.chaos_atoms()
        resultado = np.zeros(formato)
        for ids, valor in f.multiset_items():
            resultado = resultado + _multiset_term(ids, valor, M, atoms, f.order)

    if sample.is_batch:
        return np.asarray(resultado, dtype=np.float64)
    return float(resultado)


def product_formula_check(sample: MeasureSample, f: SymmetricKernel, g: SymmetricKernel) -> Tuple:
    """
    Os dois lados da fórmula do produto na mesma amostra.

    Poisson: I_p(f) I_q(g) = soma em r de r! C(p,r) C(q,r) soma em l de
    C(r,l) I_{p+q-r-l}(sym(f ★_r^l g)). Gaussiana: só os termos l = r.

    Returns:
        Tuple: (lhs, rhs), floats ou arrays por ensaio
    """
    p, q = f.order, g.order
    if p not in (1, 2) or q not in (1, 2):
        raise UnsupportedOrderError(f"fórmula do produto suportada para p, q em {{1, 2}}, recebido {p}, {q}")

    lhs = eval_multiple_integral(sample, f) * eval_multiple_integral(sample, g)
    rhs = 0.0
    gaussiana = sample.law is MeasureLaw.GAUSSIAN
    for r in range(min(p, q) + 1):
        peso_r = math.factorial(r) * math.comb(p, r) * math.comb(q, r)
        for l in range(r + 1):
            # gaussiana: sem termos com l < r
            if gaussiana and l != r:
                continue
            termo = symmetrize(contract(f, g, r, l))
            rhs = rhs + peso_r * math.comb(r, l) * eval_multiple_integral(sample, termo)
    return lhs, rhs


def conditional_projection(f: SymmetricKernel, resolution: Resolution, t: float) -> SymmetricKernel:
    """E[I_d(f) | F_t] = I_d(f restrito a Z_t^d)."""
    f.partition.require_same(resolution.partition, 'projeção condicional')
    return f.restricted_to(resolution.slice_mask(t))
