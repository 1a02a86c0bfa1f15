"""
Integrando adaptado (representação de Clark–Ocone) e integrais adaptadas.

Para f de ordem 2, h(c) = 2 * soma sobre b < c (na ordem da resolução) de
f(b, c) M_b: depende só das células anteriores a c. Valores dentro da
mesma célula (f_cc) não entram em h; para núcleos com massa na diagonal de
células a identidade J(h) = I_2(f) vale só depois de refinar as células.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from kernels.tables import SymmetricKernel, UnsupportedOrderError
from partition.cells import CellPartition, Resolution
from rmeasure.sampling import MeasureLaw, MeasureSample, StreamCollisionError
from utils.exceptions import PreconditionError

from .integrals import right_multiply

logger = logging.getLogger(__name__)


class StreamMismatchError(PreconditionError):
    """Integrando e amostra vêm de realizações diferentes."""


@dataclass(frozen=True, eq=False)
class AdaptedIntegrand:
    """Integrando por célula, formato (n,) ou (T, n), com a origem registrada."""

    partition: CellPartition
    resolution: Resolution
    values: np.ndarray
    source: str
    law: MeasureLaw
    seed: Optional[int]
    trial: Optional[int]
    # None: integrando determinístico, sem realização de origem
    stream: Optional[int]

    @property
    def norm_sq(self):
        """||u||^2 = soma de u_c^2 mu_c por ensaio."""
        return (self.values * self.values) @ self.partition.masses


def strictly_earlier_operator(f: SymmetricKernel, resolution: Resolution):
    """Matriz F[b, c] * 1(b < c na resolução), sem a diagonal."""
    _, fora = f.split_diagonal()
    efetivos = resolution.effective_taus
    if sparse.issparse(fora):
        coo = fora.tocoo()
        manter = efetivos[coo.row] < efetivos[coo.col]
        return sparse.csr_matrix(
            (coo.data[manter], (coo.row[manter], coo.col[manter])), shape=fora.shape,
        )
    return np.where(efetivos[:, None] < efetivos[None, :], fora, 0.0)


def adapted_integrand(f: SymmetricKernel, resolution: Resolution, sample: MeasureSample) -> AdaptedIntegrand:
    """
    h_pi(f)(c) = d * I_{d-1}(f(c, .) restrito às células anteriores a c).

    Args:
        f: Núcleo de ordem 1 ou 2
        resolution: Resolução que define "anterior"
        sample: Amostra principal

    Returns:
        AdaptedIntegrand: Valores por célula (e por ensaio, em lotes)
    """
    f.partition.require_same(sample.partition, 'integrando adaptado')
    f.partition.require_same(resolution.partition, 'integrando adaptado')
    formato = sample.increments.shape

    if f.order == 1:
        valores = np.broadcast_to(f.dense, formato).copy()
    elif f.order == 2:
        # 2 I_1(f(c, .) nas células anteriores); diagonal não entra
        operador = strictly_earlier_operator(f, resolution)
        valores = 2.0 * right_multiply(sample.increments, operador)
    else:
        raise UnsupportedOrderError(f"integrando adaptado definido para d em {{1, 2}}, recebido {f.order}")

    valores.setflags(write=False)
    return AdaptedIntegrand(
        partition=sample.partition, resolution=resolution, values=valores,
        source=f"clark-ocone ordem {f.order}", law=sample.law,
        seed=sample.seed, trial=sample.trial, stream=sample.stream,
    )


def _resultado(valor):
    return np.asarray(valor, dtype=np.float64) if np.ndim(valor) else float(valor)


def adapted_integral(u: AdaptedIntegrand, sample: MeasureSample):
    """J(u) = soma de u(c) M_c, com u e M da mesma realização."""
    u.partition.require_same(sample.partition, 'integral adaptada')
    if u.law is not sample.law:
        raise StreamMismatchError(f"integrando de lei {u.law.value} com amostra {sample.law.value}")
    if u.stream is not None and (u.seed, u.trial, u.stream) != (sample.seed, sample.trial, sample.stream):
        raise StreamMismatchError(
            f"integrando de (seed={u.seed}, trial={u.trial}, stream={u.stream}) "
            f"com amostra de (seed={sample.seed}, trial={sample.trial}, stream={sample.stream})"
        )
    return _resultado((u.values * sample.increments).sum(axis=-1))


def decoupled_adapted_integral(u: AdaptedIntegrand, copy: MeasureSample):
    """
    J~(u) = soma de u(c) M~_c, com M~ de um fluxo independente.

    ``u`` de formato (n,) contra uma cópia em lote (K, n) devolve K valores:
    é a distribuição condicional dado o fluxo principal.
    """
    u.partition.require_same(copy.partition, 'integral desacoplada')
    if u.stream is not None and copy.stream == u.stream:
        raise StreamCollisionError(f"cópia usa o mesmo fluxo {copy.stream} do integrando")
    if copy.law is not u.law:
        raise PreconditionError(f"lei da cópia ({copy.law.value}) difere da principal ({u.law.value})")
    return _resultado((u.values * copy.increments).sum(axis=-1))


def deterministic_integrand(values, resolution: Resolution, law: MeasureLaw) -> AdaptedIntegrand:
    """Integrando determinístico (não depende de incremento algum)."""
    valores = np.array(values, dtype=np.float64)
    valores.setflags(write=False)
    return AdaptedIntegrand(
        partition=resolution.partition, resolution=resolution, values=valores,
        source='determinístico', law=MeasureLaw(law), seed=None, trial=None, stream=None,
    )
