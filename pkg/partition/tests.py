"""
Testes para a app partition.
"""
import itertools

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from partition.cells import (
    Direction, PartitionError, Resolution, build_partition, precedes,
    time_slice, uniform_partition,
)
from utils.exceptions import PreconditionError


class BuildPartitionTest(SimpleTestCase):
    """Testes de construção de partições."""

    def test_celula_unica(self):
        """Testa partição com uma célula."""
        partition = build_partition([(1.0, 0.5)])
        self.assertEqual(len(partition), 1)
        self.assertEqual(partition.total_mass, 1.0)
        self.assertEqual(partition.cells[0].id, 0)

    def test_aditividade_da_massa(self):
        """Testa massa total de n células unitárias."""
        n = 37
        partition = build_partition([(1.0, (j + 1) / n) for j in range(n)])
        self.assertEqual(partition.total_mass, float(n))
        self.assertEqual([cell.id for cell in partition.cells], list(range(n)))

    def test_tau_duplicado(self):
        """Testa rejeição de tau repetido."""
        with self.assertRaises(PartitionError):
            build_partition([(1.0, 0.3), (1.0, 0.3)])

    def test_massa_nao_positiva(self):
        """Testa rejeição de massa zero ou negativa."""
        with self.assertRaises(PartitionError):
            build_partition([(0.0, 0.3)])
        with self.assertRaises(PartitionError):
            build_partition([(-1.0, 0.3)])

    def test_tau_fora_do_intervalo(self):
        """Testa rejeição de tau fora de (0, 1]."""
        with self.assertRaises(PartitionError):
            build_partition([(1.0, 0.0)])
        with self.assertRaises(PartitionError):
            build_partition([(1.0, 1.5)])

    def test_erro_e_de_precondicao(self):
        """Erros de partição carregam código de saída 2."""
        with self.assertRaises(PreconditionError) as ctx:
            build_partition([])
        self.assertEqual(ctx.exception.exit_code, 2)


class ResolutionTest(SimpleTestCase):
    """Testes da resolução da identidade."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.2), (2.0, 0.7), (0.5, 0.45)])
        self.forward = Resolution(self.partition)
        self.backward = Resolution(self.partition, Direction.REVERSED)

    def test_extremos(self):
        """Z_0 é vazio e Z_1 é tudo, nos dois sentidos."""
        for resolution in (self.forward, self.backward):
            self.assertEqual(time_slice(resolution, 0.0), frozenset())
            self.assertEqual(time_slice(resolution, 1.0), frozenset({0, 1, 2}))

    def test_fatia_intermediaria(self):
        """Testa fatia com taus {0.2, 0.7} em t = 0.5."""
        partition = build_partition([(1.0, 0.2), (1.0, 0.7)])
        self.assertEqual(time_slice(Resolution(partition), 0.5), frozenset({0}))

    def test_t_fora_do_dominio(self):
        with self.assertRaises(PreconditionError):
            time_slice(self.forward, 1.2)

    def test_monotonia(self):
        """Fatias crescem com t numa grade densa."""
        for resolution in (self.forward, self.backward):
            anterior = frozenset()
            for t in np.linspace(0.0, 1.0, 1000):
                atual = time_slice(resolution, float(t))
                self.assertTrue(anterior <= atual)
                anterior = atual

    def test_irreflexiva(self):
        self.assertFalse(precedes(self.forward, 1, 1))

    def test_sentidos_opostos(self):
        """O sentido invertido troca todas as comparações."""
        for a, b in itertools.permutations(range(3), 2):
            self.assertNotEqual(precedes(self.forward, a, b), precedes(self.backward, a, b))
        self.assertTrue(precedes(self.forward, 0, 1))
        self.assertFalse(precedes(self.forward, 1, 0))

    def test_ordem(self):
        self.assertEqual(list(self.forward.order), [0, 2, 1])
        self.assertEqual(list(self.backward.order), [1, 2, 0])

    def test_tempos_invertidos_no_intervalo(self):
        partition = uniform_partition(50)
        efetivos = Resolution(partition, Direction.REVERSED).effective_taus
        self.assertTrue(np.all(efetivos > 0.0))
        self.assertTrue(np.all(efetivos <= 1.0))
        self.assertEqual(len(set(efetivos.tolist())), 50)


class OrdemTotalTest(SimpleTestCase):
    """Propriedades da ordem induzida."""

    @settings(max_examples=40, deadline=None)
    @given(
        taus=st.lists(
            st.integers(min_value=1, max_value=1000), min_size=1, max_size=12, unique=True,
        ),
        reversed_=st.booleans(),
    )
    def test_ordem_total_estrita(self, taus, reversed_):
        """Exatamente uma de precedes(a,b), precedes(b,a) vale para a != b."""
        partition = build_partition([(1.0, tau / 1000) for tau in taus])
        direction = Direction.REVERSED if reversed_ else Direction.FORWARD
        resolution = Resolution(partition, direction)
        n = len(taus)
        for a, b in itertools.product(range(n), repeat=2):
            if a == b:
                self.assertFalse(precedes(resolution, a, b))
                continue
            self.assertNotEqual(precedes(resolution, a, b), precedes(resolution, b, a))
        for a, b, c in itertools.permutations(range(n), 3):
            if precedes(resolution, a, b) and precedes(resolution, b, c):
                self.assertTrue(precedes(resolution, a, c))
