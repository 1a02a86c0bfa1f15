"""
Testes para a app kernels.
"""
import itertools

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from kernels.tables import (
    KernelError, KernelTable, SymmetricKernel, UnsupportedOrderError, contract,
    kernel_norm_sq, symmetrize, tensor, zero_diagonal,
)
from partition.cells import build_partition, uniform_partition


def _random_partition(rng, n):
    taus = rng.permutation(np.arange(1, n + 1)) / n
    return build_partition([(float(rng.uniform(0.2, 2.0)), float(t)) for t in taus])


def _random_symmetric(rng, partition, diagonal=True):
    n = len(partition)
    matriz = rng.normal(size=(n, n))
    matriz = matriz + matriz.T
    if not diagonal:
        np.fill_diagonal(matriz, 0.0)
    return SymmetricKernel(partition, 2, dense=matriz, offdiag_only=not diagonal)


def _block_kernel(n):
    partition = uniform_partition(n)
    return SymmetricKernel(partition, 2, dense=np.eye(n) / np.sqrt(2 * n))


def _brute_force_contract(f, g, r, l):
    """Soma direta sobre todas as tuplas ordenadas."""
    partition = f.partition
    n = len(partition)
    masses = partition.masses
    p, q = f.order, g.order
    ordem = p + q - r - l
    resultado = {}
    for saida in itertools.product(range(n), repeat=ordem):
        mantidos = saida[:r - l]
        livres_f = saida[r - l:r - l + p - r]
        livres_g = saida[r - l + p - r:]
        total = 0.0
        for integrados in itertools.product(range(n), repeat=l):
            peso = np.prod([masses[z] for z in integrados]) if l else 1.0
            ids_f = integrados + mantidos + livres_f
            ids_g = integrados + mantidos + livres_g
            total += f.value(ids_f) * g.value(ids_g) * peso
        resultado[saida] = total
    return resultado


class SymmetrizeTest(SimpleTestCase):
    """Testes de simetrização."""

    def setUp(self):
        self.partition = uniform_partition(4)

    def test_idempotente(self):
        rng = np.random.default_rng(1)
        f = _random_symmetric(rng, self.partition)
        self.assertIs(symmetrize(f), f)
        tabela = f.as_table()
        np.testing.assert_array_equal(symmetrize(tabela).dense, f.dense)

    def test_media_de_permutacoes(self):
        """input(1,2)=2, input(2,1)=0 dá valor 1 em {1,2}."""
        tabela = KernelTable.from_entries(self.partition, 2, [((1, 2), 2.0), ((2, 1), 0.0)])
        simetrico = symmetrize(tabela)
        self.assertEqual(simetrico.value((1, 2)), 1.0)
        self.assertEqual(simetrico.value((2, 1)), 1.0)

    def test_ordem_tres_com_repeticao(self):
        """Multiconjunto {0,0,1}: (2!/3!) vezes a soma das 3 ordenações."""
        tabela = KernelTable.from_entries(self.partition, 3, [((0, 0, 1), 3.0), ((0, 1, 0), 1.5)])
        simetrico = symmetrize(tabela)
        self.assertAlmostEqual(simetrico.value((1, 0, 0)), (3.0 + 1.5) / 3.0)

    def test_norma_nao_aumenta(self):
        """||sym f|| <= ||f|| para 100 tabelas aleatórias."""
        rng = np.random.default_rng(2)
        for _ in range(50):
            tabela = KernelTable(self.partition, 2, dense=rng.normal(size=(4, 4)))
            self.assertLessEqual(kernel_norm_sq(symmetrize(tabela)), kernel_norm_sq(tabela) + 1e-12)
        for _ in range(50):
            entradas = {
                tuple(int(i) for i in rng.integers(0, 4, size=3)): float(rng.normal())
                for _ in range(6)
            }
            tabela = KernelTable(self.partition, 3, entries=entradas)
            self.assertLessEqual(kernel_norm_sq(symmetrize(tabela)), kernel_norm_sq(tabela) + 1e-12)

    def test_norma_esparsa_coincide_com_tabela(self):
        f = SymmetricKernel(self.partition, 3, multisets={(0, 1, 1): 2.0, (0, 1, 2): -1.0})
        self.assertAlmostEqual(f.norm_sq(), f.as_table().norm_sq(), places=12)
        self.assertAlmostEqual(f.norm_sq(), 3 * 4.0 + 6 * 1.0, places=12)


class ConstructionTest(SimpleTestCase):
    """Validação de entradas."""

    def setUp(self):
        self.partition = uniform_partition(3)

    def test_entradas_nao_ordenadas(self):
        f = SymmetricKernel.from_entries(self.partition, 2, [[0, 2, 1.5], [1, 1, 0.5]])
        self.assertEqual(f.value((2, 0)), 1.5)
        self.assertEqual(f.value((1, 1)), 0.5)
        self.assertEqual(f.max_multiplicity(), 2)

    def test_multiconjunto_repetido(self):
        with self.assertRaises(KernelError):
            SymmetricKernel.from_entries(self.partition, 2, [[0, 2, 1.0], [2, 0, 1.0]])

    def test_ordem_cinco_rejeitada(self):
        with self.assertRaises(UnsupportedOrderError):
            SymmetricKernel(self.partition, 5)

    def test_matriz_assimetrica(self):
        with self.assertRaises(KernelError):
            SymmetricKernel(self.partition, 2, dense=np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))

    def test_offdiag_com_diagonal(self):
        with self.assertRaises(KernelError):
            SymmetricKernel.from_entries(self.partition, 2, [[1, 1, 1.0]], offdiag_only=True)

    def test_id_fora_da_particao(self):
        with self.assertRaises(KernelError):
            SymmetricKernel.from_entries(self.partition, 1, [[7, 1.0]])


class ZeroDiagonalTest(SimpleTestCase):
    """Remoção de diagonais."""

    def test_ids_distintos_inalterados(self):
        partition = uniform_partition(3)
        f = SymmetricKernel.from_entries(partition, 2, [[0, 1, 2.0], [1, 2, -1.0]])
        g = zero_diagonal(f)
        np.testing.assert_array_equal(g.dense, f.dense)
        self.assertTrue(g.offdiag_only)

    def test_somente_diagonal_vira_zero(self):
        partition = uniform_partition(3)
        f = SymmetricKernel.from_entries(partition, 2, [[1, 1, 2.0]])
        self.assertEqual(kernel_norm_sq(zero_diagonal(f)), 0.0)

    def test_ordem_quatro(self):
        partition = uniform_partition(4)
        f = SymmetricKernel(partition, 4, multisets={(0, 1, 2, 3): 1.0, (0, 0, 1, 2): 1.0})
        g = zero_diagonal(f)
        self.assertEqual(list(g.multisets), [(0, 1, 2, 3)])

    def test_nucleo_em_blocos_no_nivel_pontual(self):
        """No nível pontual o núcleo em blocos já é fora da diagonal."""
        f = _block_kernel(5)
        self.assertIs(zero_diagonal(f, level='point'), f)

    def test_nivel_desconhecido(self):
        with self.assertRaises(KernelError):
            zero_diagonal(_block_kernel(2), level='linha')


class TensorTest(SimpleTestCase):
    """Produto tensorial."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.2), (2.0, 0.5), (0.5, 0.9)])

    def test_indicadora_de_par(self):
        f = KernelTable.from_entries(self.partition, 2, [((0, 1), 1.0)])
        produto = tensor(f, f)
        self.assertEqual(produto.order, 4)
        self.assertEqual(list(produto.items()), [((0, 1, 0, 1), 1.0)])

    def test_norma_fatora(self):
        rng = np.random.default_rng(3)
        f = _random_symmetric(rng, self.partition)
        g = SymmetricKernel(self.partition, 1, dense=rng.normal(size=3))
        self.assertAlmostEqual(
            kernel_norm_sq(tensor(f, g)), kernel_norm_sq(f) * kernel_norm_sq(g), places=10,
        )

    def test_simetrizado_de_duas_indicadoras(self):
        um = SymmetricKernel.from_entries(self.partition, 1, [[0, 1.0]])
        dois = SymmetricKernel.from_entries(self.partition, 1, [[2, 1.0]])
        simetrico = symmetrize(tensor(um, dois))
        self.assertEqual(simetrico.value((0, 2)), 0.5)
        self.assertEqual(simetrico.value((2, 0)), 0.5)
        self.assertEqual(simetrico.value((0, 0)), 0.0)


class ContractTest(SimpleTestCase):
    """Contrações f ★_r^l g."""

    def test_contracao_total_e_norma(self):
        rng = np.random.default_rng(4)
        partition = _random_partition(rng, 5)
        f = _random_symmetric(rng, partition)
        total = contract(f, f, 2, 2)
        self.assertEqual(total.order, 0)
        self.assertAlmostEqual(total.value(()), kernel_norm_sq(f), places=10)

    def test_exemplo_em_blocos(self):
        for n in (1, 10, 100):
            f = _block_kernel(n)
            um_um = contract(f, f, 1, 1)
            self.assertAlmostEqual(um_um.value((0, 0)), 1.0 / (2 * n), places=14)
            self.assertAlmostEqual(kernel_norm_sq(um_um) * 4 * n, 1.0, places=12)
            dois_um = contract(f, f, 2, 1)
            self.assertAlmostEqual(kernel_norm_sq(dois_um) * 4 * n, 1.0, places=12)
            quadrado = contract(f, f, 2, 0)
            self.assertAlmostEqual(kernel_norm_sq(quadrado) * 4 * n, 1.0, places=12)

    def test_oraculo_forca_bruta(self):
        """Todas as (r, l) contra a soma direta em núcleos aleatórios."""
        rng = np.random.default_rng(5)
        for tamanho in (2, 4, 6):
            partition = _random_partition(rng, tamanho)
            f = _random_symmetric(rng, partition)
            g = _random_symmetric(rng, partition, diagonal=False)
            um = SymmetricKernel(partition, 1, dense=rng.normal(size=tamanho))
            for a, b in ((f, g), (g, f), (f, um), (um, g)):
                for r in range(min(a.order, b.order) + 1):
                    for l in range(r + 1):
                        obtido = contract(a, b, r, l)
                        esperado = _brute_force_contract(a, b, r, l)
                        escala = max(1.0, max(abs(v) for v in esperado.values()))
                        for ids, valor in esperado.items():
                            self.assertLessEqual(abs(obtido.value(ids) - valor), 1e-12 * escala)

    def test_caminho_esparso_de_ordem_tres(self):
        partition = uniform_partition(3)
        f = SymmetricKernel(partition, 3, multisets={(0, 1, 2): 1.0, (0, 0, 1): 0.5})
        g = SymmetricKernel.from_entries(partition, 1, [[0, 2.0]])
        saida = contract(f, g, 1, 1)
        self.assertEqual(saida.order, 2)
        self.assertAlmostEqual(saida.value((1, 2)), 2.0)
        self.assertAlmostEqual(saida.value((0, 1)), 1.0)

    def test_indices_invalidos(self):
        f = _block_kernel(2)
        with self.assertRaises(KernelError):
            contract(f, f, 3, 0)
        with self.assertRaises(KernelError):
            contract(f, f, 1, 2)

    def test_ordem_excedida(self):
        partition = uniform_partition(3)
        f = SymmetricKernel(partition, 3, multisets={(0, 1, 2): 1.0})
        with self.assertRaises(UnsupportedOrderError):
            tensor(f, f)

    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            partition = _random_partition(rng, int(rng.integers(2, 7)))
            f = _random_symmetric(rng, partition)
            g = _random_symmetric(rng, partition)
            esquerda = np.sqrt(kernel_norm_sq(contract(f, g, 1, 1)))
            self.assertLessEqual(esquerda, np.sqrt(kernel_norm_sq(f) * kernel_norm_sq(g)) * (1 + 1e-12))

    @settings(max_examples=30, deadline=None)
    @given(
        a=st.floats(min_value=-5, max_value=5, allow_nan=False),
        b=st.floats(min_value=-5, max_value=5, allow_nan=False),
        semente=st.integers(min_value=0, max_value=2 ** 32 - 1),
        r=st.integers(min_value=0, max_value=2),
    )
    def test_bilinearidade(self, a, b, semente, r):
        rng = np.random.default_rng(semente)
        partition = _random_partition(rng, 4)
        f1, f2, g = (_random_symmetric(rng, partition) for _ in range(3))
        for l in range(r + 1):
            combinada = contract(a * f1 + b * f2, g, r, l)
            separada_1 = contract(f1, g, r, l)
            separada_2 = contract(f2, g, r, l)
            for ids, _ in itertools.chain(combinada.items(), separada_1.items(), separada_2.items()):
                esperado = a * separada_1.value(ids) + b * separada_2.value(ids)
                escala = 1.0 + abs(a * separada_1.value(ids)) + abs(b * separada_2.value(ids))
                self.assertLessEqual(abs(combinada.value(ids) - esperado), 1e-10 * escala)
