"""
Álgebra de núcleos em blocos.

Um núcleo de ordem d é constante em cada produto de células
B_{i1} x ... x B_{id}. Valor em {i, i} (mesma célula) representa a função
constante na parte fora da diagonal de B_i x B_i; como mu não tem átomos,
essa parte tem medida mu_i^2 e as contas em L^2 usam o quadrado inteiro.

Armazenamento: denso para d <= 2 (escalar, vetor, matriz) e dicionário
esparso para d em {3, 4}. Ordens >= 5 são rejeitadas.
"""
import logging
import math
from collections import Counter, defaultdict
from typing import Dict, Iterable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from more_itertools import distinct_permutations
from scipy import sparse

from partition.cells import CellPartition
from rmeasure.exponent import FirstOrderKernel
from utils.exceptions import PreconditionError

logger = logging.getLogger(__name__)

MAX_ORDER = 4
DENSE_MAX_ORDER = 2
# Fração de entradas não nulas abaixo da qual o núcleo vira matriz esparsa
SPARSE_DENSITY = 0.1

Index = Tuple[int, ...]


class KernelError(PreconditionError):
    """Núcleo malformado."""


class UnsupportedOrderError(KernelError):
    """Ordem ou combinação de diagonais fora do suportado."""


def _check_order(order: int) -> int:
    if not 0 <= int(order) <= MAX_ORDER:
        raise UnsupportedOrderError(f"ordem {order} fora de 0..{MAX_ORDER}")
    return int(order)


def _check_ids(partition: CellPartition, ids: Index) -> Index:
    n = len(partition)
    for cell in ids:
        if not 0 <= cell < n:
            raise KernelError(f"id de célula {cell} fora de 0..{n - 1}")
    return ids


def _mass_product(masses: np.ndarray, ids: Index) -> float:
    produto = 1.0
    for cell in ids:
        produto *= float(masses[cell])
    return produto


def _arrangements(counts: Iterable[int], order: int) -> int:
    """Número de ordenações distintas de um multiconjunto: d! / prod k!."""
    resultado = math.factorial(order)
    for k in counts:
        resultado //= math.factorial(k)
    return resultado


class KernelTable:
    """
    Tabela indexada por tuplas ordenadas, possivelmente assimétrica.

    É o resultado natural de ``contract``; ``symmetrize`` a converte em
    ``SymmetricKernel``.
    """

    def __init__(
        self, partition: CellPartition, order: int,
        dense: Optional[np.ndarray] = None, entries: Optional[Dict[Index, float]] = None,
    ):
        self.partition = partition
        self.order = _check_order(order)
        n = len(partition)
        if self.order <= DENSE_MAX_ORDER:
            if dense is None:
                dense = np.zeros((n,) * self.order)
                for ids, valor in (entries or {}).items():
                    dense[_check_ids(partition, ids)] += valor
            dense = np.array(dense, dtype=np.float64)
            if dense.shape != (n,) * self.order:
                raise KernelError(f"formato {dense.shape} incompatível com ordem {self.order} e {n} células")
            dense.setflags(write=False)
            self.dense = dense
            self.entries = None
        else:
            if dense is not None:
                raise KernelError(f"ordem {self.order} usa armazenamento esparso")
            self.dense = None
            self.entries = {
                _check_ids(partition, tuple(int(i) for i in ids)): float(valor)
                for ids, valor in sorted((entries or {}).items())
                if valor != 0.0
            }

    @classmethod
    def from_entries(cls, partition: CellPartition, order: int, entries: Iterable[Tuple[Index, float]]) -> 'KernelTable':
        tabela: Dict[Index, float] = {}
        for ids, valor in entries:
            ids = tuple(int(i) for i in ids)
            if len(ids) != order:
                raise KernelError(f"entrada {ids} não tem ordem {order}")
            if ids in tabela:
                raise KernelError(f"entrada repetida {ids}")
            tabela[ids] = float(valor)
        return cls(partition, order, entries=tabela)

    def items(self) -> Iterator[Tuple[Index, float]]:
        """Entradas não nulas em ordem lexicográfica dos índices."""
        if self.dense is None:
            yield from self.entries.items()
            return
        if self.order == 0:
            if self.dense != 0.0:
                yield (), float(self.dense)
            return
        for ids in zip(*np.nonzero(self.dense)):
            ids = tuple(int(i) for i in ids)
            yield ids, float(self.dense[ids])

    def value(self, ids: Sequence[int]) -> float:
        ids = tuple(int(i) for i in ids)
        if self.dense is not None:
            return float(self.dense[ids])
        return self.entries.get(ids, 0.0)

    def norm_sq(self) -> float:
        masses = self.partition.masses
        if self.dense is not None:
            return _dense_norm_sq(self.dense, masses)
        total = 0.0
        for ids, valor in self.entries.items():
            total += valor * valor * _mass_product(masses, ids)
        return total


def _dense_norm_sq(dense: np.ndarray, masses: np.ndarray) -> float:
    order = dense.ndim
    if order == 0:
        return float(dense) ** 2
    if order == 1:
        return float(np.sum(dense * dense * masses))
    return float(np.sum(dense * dense * np.multiply.outer(masses, masses)))


class SymmetricKernel:
    """
    Núcleo simétrico de ordem d.

    Args:
        partition: Partição das células
        order: Ordem d (0..4)
        dense: Array simétrico (d <= 2)
        multisets: Valores por multiconjunto ordenado (d em {3, 4})
        offdiag_only: Garante valor nulo em qualquer id repetido
    """

    def __init__(
        self, partition: CellPartition, order: int,
        dense: Optional[np.ndarray] = None,
        multisets: Optional[Dict[Index, float]] = None,
        offdiag_only: bool = False,
    ):
        self.partition = partition
        self.order = _check_order(order)
        self.offdiag_only = bool(offdiag_only)
        self._split = None
        n = len(partition)

        if self.order <= DENSE_MAX_ORDER:
            if dense is None:
                dense = np.zeros((n,) * self.order)
            dense = np.array(dense, dtype=np.float64)
            if dense.shape != (n,) * self.order:
                raise KernelError(f"formato {dense.shape} incompatível com ordem {self.order} e {n} células")
            if self.order == 2 and not np.array_equal(dense, dense.T):
                raise KernelError("matriz de núcleo de ordem 2 não é simétrica")
            if self.offdiag_only and self.order == 2 and np.any(np.diag(dense) != 0.0):
                raise KernelError("offdiag_only exige diagonal nula")
            dense.setflags(write=False)
            self.dense = dense
            self.multisets = None
        else:
            self.dense = None
            self.multisets = {}
            for ids, valor in sorted((multisets or {}).items()):
                ids = tuple(sorted(int(i) for i in ids))
                _check_ids(partition, ids)
                if valor == 0.0:
                    continue
                if self.offdiag_only and len(set(ids)) < len(ids):
                    raise KernelError(f"offdiag_only com id repetido em {ids}")
                self.multisets[ids] = float(valor)

    # Construção

    @classmethod
    def zeros(cls, partition: CellPartition, order: int) -> 'SymmetricKernel':
        return cls(partition, order, offdiag_only=order >= 2)

    @classmethod
    def from_entries(
        cls, partition: CellPartition, order: int, entries: Iterable[Sequence[float]],
        offdiag_only: bool = False,
    ) -> 'SymmetricKernel':
        """
        Constrói a partir de entradas não ordenadas ``[i, j, ..., valor]``.

        Cada multiconjunto pode aparecer uma única vez.
        """
        order = _check_order(order)
        valores: Dict[Index, float] = {}
        for entrada in entries:
            entrada = list(entrada)
            if len(entrada) != order + 1:
                raise KernelError(f"entrada {entrada} não tem ordem {order}")
            ids = tuple(sorted(int(i) for i in entrada[:-1]))
            if ids in valores:
                raise KernelError(f"multiconjunto repetido {ids}")
            valores[_check_ids(partition, ids)] = float(entrada[-1])

        if order > DENSE_MAX_ORDER:
            return cls(partition, order, multisets=valores, offdiag_only=offdiag_only)

        # ordem <= 2: espelha cada entrada na matriz simétrica
        n = len(partition)
        dense = np.zeros((n,) * order)
        for ids, valor in valores.items():
            if order == 0:
                dense = np.array(valor)
            elif order == 1:
                dense[ids[0]] = valor
            else:
                dense[ids[0], ids[1]] = valor
                dense[ids[1], ids[0]] = valor
        return cls(partition, order, dense=dense, offdiag_only=offdiag_only)

    # Acesso

    @property
    def is_dense(self) -> bool:
        return self.dense is not None

    def value(self, ids: Sequence[int]) -> float:
        ids = tuple(int(i) for i in ids)
        if self.dense is not None:
            return float(self.dense[ids])
        return self.multisets.get(tuple(sorted(ids)), 0.0)

    def multiset_items(self) -> Iterator[Tuple[Index, float]]:
        """Pares (multiconjunto ordenado, valor) não nulos."""
        if self.dense is None:
            yield from self.multisets.items()
            return
        if self.order == 0:
            if self.dense != 0.0:
                yield (), float(self.dense)
        elif self.order == 1:
            for i in np.flatnonzero(self.dense):
                yield (int(i),), float(self.dense[i])
        else:
            # triângulo superior: cada par {i, j} uma vez
            linhas, colunas = np.nonzero(np.triu(self.dense))
            for i, j in zip(linhas, colunas):
                yield (int(i), int(j)), float(self.dense[i, j])

    def ordered_items(self) -> Iterator[Tuple[Index, float]]:
        """Todas as tuplas ordenadas com valor não nulo."""
        if self.dense is not None:
            yield from self.as_table().items()
            return
        for ids, valor in self.multisets.items():
            for permutacao in distinct_permutations(ids):
                yield tuple(permutacao), valor

    def as_table(self) -> KernelTable:
        if self.dense is not None:
            return KernelTable(self.partition, self.order, dense=self.dense)
        return KernelTable(self.partition, self.order, entries=dict(self.ordered_items()))

    def as_first_order(self) -> FirstOrderKernel:
        if self.order != 1:
            raise UnsupportedOrderError(f"núcleo de ordem {self.order} não é de primeira ordem")
        return FirstOrderKernel(self.partition, self.dense)

    def norm_sq(self) -> float:
        """Soma sobre tuplas ordenadas de f^2 vezes o produto das massas."""
        masses = self.partition.masses
        if self.dense is not None:
            return _dense_norm_sq(self.dense, masses)
        total = 0.0
        for ids, valor in self.multisets.items():
            # cada multiconjunto vale por todas as suas ordenações
            total += _arrangements(Counter(ids).values(), self.order) * valor * valor * _mass_product(masses, ids)
        return total

    def split_diagonal(self):
        """
        (diagonal, operador fora da diagonal) de um núcleo de ordem 2.

        O operador é ``scipy.sparse.csr_matrix`` quando a matriz é esparsa;
        calculado uma vez por núcleo.
        """
        if self.order != 2:
            raise UnsupportedOrderError(f"split_diagonal exige ordem 2, recebido {self.order}")
        if self._split is None:
            diagonal = np.diag(self.dense).copy()
            fora = self.dense.copy()
            np.fill_diagonal(fora, 0.0)
            # Poucos pares fora da diagonal: operador esparso
            if np.count_nonzero(fora) <= SPARSE_DENSITY * fora.size:
                fora = sparse.csr_matrix(fora)
            self._split = (diagonal, fora)
        return self._split

    def max_multiplicity(self) -> int:
        if self.order == 0:
            return 0
        if self.dense is not None:
            if self.order == 2 and np.any(np.diag(self.dense) != 0.0):
                return 2
            return 1
        return max((max(Counter(ids).values()) for ids in self.multisets), default=1)

    def restricted_to(self, mask: np.ndarray) -> 'SymmetricKernel':
        """Zera as entradas com alguma célula fora de ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        if self.dense is not None:
            if self.order == 0:
                return self
            if self.order == 1:
                dense = np.where(mask, self.dense, 0.0)
            else:
                dense = np.where(np.logical_and.outer(mask, mask), self.dense, 0.0)
            return SymmetricKernel(self.partition, self.order, dense=dense, offdiag_only=self.offdiag_only)
        multisets = {ids: v for ids, v in self.multisets.items() if all(mask[i] for i in ids)}
        return SymmetricKernel(self.partition, self.order, multisets=multisets, offdiag_only=self.offdiag_only)

    # Álgebra linear

    def _combine(self, other: 'SymmetricKernel', a: float, b: float) -> 'SymmetricKernel':
        self.partition.require_same(other.partition, 'soma de núcleos')
        if self.order != other.order:
            raise KernelError(f"ordens diferentes: {self.order} e {other.order}")
        offdiag = self.offdiag_only and other.offdiag_only
        if self.dense is not None:
            return SymmetricKernel(self.partition, self.order, dense=a * self.dense + b * other.dense,
                                   offdiag_only=offdiag)
        multisets: Dict[Index, float] = defaultdict(float)
        for ids, valor in self.multisets.items():
            multisets[ids] += a * valor
        for ids, valor in other.multisets.items():
            multisets[ids] += b * valor
        return SymmetricKernel(self.partition, self.order, multisets=dict(multisets), offdiag_only=offdiag)

    def __add__(self, other: 'SymmetricKernel') -> 'SymmetricKernel':
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other: 'SymmetricKernel') -> 'SymmetricKernel':
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, fator: float) -> 'SymmetricKernel':
        fator = float(fator)
        if self.dense is not None:
            return SymmetricKernel(self.partition, self.order, dense=self.dense * fator,
                                   offdiag_only=self.offdiag_only)
        multisets = {ids: v * fator for ids, v in self.multisets.items()}
        return SymmetricKernel(self.partition, self.order, multisets=multisets, offdiag_only=self.offdiag_only)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SymmetricKernel(order={self.order}, cells={len(self.partition)}, offdiag_only={self.offdiag_only})"


AnyKernel = Union[SymmetricKernel, KernelTable]


def symmetrize(f: AnyKernel) -> SymmetricKernel:
    """
    Simetrização: média sobre as d! permutações dos argumentos.

    No multiconjunto m, o valor é (prod k! / d!) vezes a soma da tabela sobre
    as ordenações distintas de m.
    """
    if isinstance(f, SymmetricKernel):
        return f
    if f.dense is not None:
        if f.order <= 1:
            return SymmetricKernel(f.partition, f.order, dense=f.dense)
        return SymmetricKernel(f.partition, 2, dense=0.5 * (f.dense + f.dense.T))

    # Esparso: soma por multiconjunto e divide pelo número de ordenações
    somas: Dict[Index, float] = defaultdict(float)
    for ids, valor in f.items():
        somas[tuple(sorted(ids))] += valor
    multisets = {}
    for ids, soma in somas.items():
        multisets[ids] = soma / _arrangements(Counter(ids).values(), f.order)
    return SymmetricKernel(f.partition, f.order, multisets=multisets)


def _dense_contract(f: np.ndarray, g: np.ndarray, r: int, l: int, masses: np.ndarray) -> np.ndarray:
    p, q = f.ndim, g.ndim
    # índices: integrados, identificados mantidos, livres de f, livres de g
    integrados = 'ab'[:l]
    mantidos = 'cd'[:r - l]
    livres_f = 'ef'[:p - r]
    livres_g = 'gh'[:q - r]
    sub_f = integrados + mantidos + livres_f
    sub_g = integrados + mantidos + livres_g
    saida = mantidos + livres_f + livres_g
    operandos = [f, g] + [masses] * l
    subscritos = ','.join([sub_f, sub_g] + list(integrados))
    return np.einsum(f'{subscritos}->{saida}', *operandos, optimize=True)


def _sparse_contract(f: AnyKernel, g: AnyKernel, r: int, l: int) -> KernelTable:
    masses = f.partition.masses
    itens_f = f.ordered_items() if isinstance(f, SymmetricKernel) else f.items()
    itens_g = g.ordered_items() if isinstance(g, SymmetricKernel) else g.items()

    # Agrupa g pelos r primeiros ids para casar com f
    grupos: Dict[Index, list] = defaultdict(list)
    for ids, valor in itens_g:
        grupos[ids[:r]].append((ids[r:], valor))

    saida: Dict[Index, float] = defaultdict(float)
    for ids, valor in itens_f:
        chave = ids[:r]
        parceiros = grupos.get(chave)
        if not parceiros:
            continue
        # as l variáveis integradas levam a massa das suas células
        peso = _mass_product(masses, chave[:l])
        prefixo = chave[l:] + ids[r:]
        for resto, valor_g in parceiros:
            saida[prefixo + resto] += valor * valor_g * peso
    return KernelTable(f.partition, f.order + g.order - r - l, entries=dict(saida))


def contract(f: AnyKernel, g: AnyKernel, r: int, l: int) -> KernelTable:
    """
    Contração f ★_r^l g.

    Identifica as r primeiras variáveis de f e g e integra as l primeiras
    delas contra mu. A saída tem argumentos (identificadas restantes, livres
    de f, livres de g) e em geral não é simétrica. Dentro de uma célula a
    integração cobre a célula inteira.

    Args:
        f: Núcleo de ordem p
        g: Núcleo de ordem q
        r: Variáveis identificadas, 0 <= r <= min(p, q)
        l: Variáveis integradas, 0 <= l <= r

    Returns:
        KernelTable: Tabela de ordem p + q - r - l
    """
    f.partition.require_same(g.partition, 'contração')
    p, q = f.order, g.order
    if not 0 <= r <= min(p, q):
        raise KernelError(f"r = {r} fora de 0..{min(p, q)}")
    if not 0 <= l <= r:
        raise KernelError(f"l = {l} fora de 0..{r}")
    ordem = p + q - r - l
    if ordem > MAX_ORDER:
        raise UnsupportedOrderError(f"contração produziria ordem {ordem}")

    # Caminho denso com einsum; o resto cai no dicionário
    if f.dense is not None and g.dense is not None and ordem <= DENSE_MAX_ORDER:
        dense = _dense_contract(f.dense, g.dense, r, l, f.partition.masses)
        return KernelTable(f.partition, ordem, dense=dense)
    return _sparse_contract(f, g, r, l)


def tensor(f: AnyKernel, g: AnyKernel) -> KernelTable:
    """f ★_0^0 g: produto nos argumentos concatenados, sem simetrizar."""
    return contract(f, g, 0, 0)


def kernel_norm_sq(f: AnyKernel) -> float:
    """Norma ao quadrado em L^2(mu^d)."""
    return f.norm_sq()


def zero_diagonal(f: SymmetricKernel, level: str = 'cell') -> SymmetricKernel:
    """
    Remove a diagonal.

    ``level='cell'`` remove entradas com id de célula repetido.
    ``level='point'`` remove só a diagonal pontual, que tem medida nula
    para núcleos em blocos: o núcleo volta inalterado.
    """
    if level == 'point':
        return f
    if level != 'cell':
        raise KernelError(f"nível de diagonal desconhecido: {level}")
    if f.order < 2:
        return SymmetricKernel(f.partition, f.order, dense=f.dense, offdiag_only=True)
    if f.dense is not None:
        dense = f.dense.copy()
        np.fill_diagonal(dense, 0.0)
        return SymmetricKernel(f.partition, 2, dense=dense, offdiag_only=True)
    multisets = {ids: v for ids, v in f.multisets.items() if len(set(ids)) == len(ids)}
    return SymmetricKernel(f.partition, f.order, multisets=multisets, offdiag_only=True)
