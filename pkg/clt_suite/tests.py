"""
Testes para a app clt_suite.
"""
import itertools

import numpy as np
from django.test import SimpleTestCase, tag

from chaos.integrals import eval_multiple_integral
from clt_suite.conditions import (
    KOLMOGOROV_SD, check_assumption_n, check_gstar, findev_identity, findev_rhs,
    ks_to_normal, symmetrized_star10_norm_sq,
)
from clt_suite.families import FAMILIES, block_fourth_moment, get_family
from clt_suite.pipeline import clt_pipeline
from harness.runner import TrialRunner
from kernels.tables import SymmetricKernel, UnsupportedOrderError, contract, symmetrize
from partition.cells import build_partition, uniform_partition
from rmeasure.sampling import LawMismatchError, MeasureLaw, sample_measure_batch
from scenarios.block import block_example_kernel
from utils.exceptions import MonteCarloBudgetError, PreconditionError


def _random_block_kernel(rng, n):
    partition = build_partition((float(rng.uniform(0.2, 1.0)), (j + 1) / n) for j in range(n))
    matriz = rng.normal(size=(n, n)) / n
    return SymmetricKernel(partition, 2, dense=matriz + matriz.T)


def _relativo(self, valor, alvo):
    self.assertLessEqual(abs(valor - alvo), 1e-12 * abs(alvo))


class AssumptionTest(SimpleTestCase):
    """Hipótese N e condição G* em núcleos conhecidos."""

    def test_valores_exatos_do_bloco(self):
        for n in (1, 10, 100, 1000):
            f = block_example_kernel(n)
            integrabilidade, metade, quarta = check_assumption_n(f).as_tuple()
            estrela11, estrela21 = check_gstar(f)
            _relativo(self, metade, 1.0)
            _relativo(self, quarta, 1.0 / (4 * n))
            _relativo(self, estrela11, 1.0 / (4 * n))
            _relativo(self, estrela21, 1.0 / (4 * n))
            _relativo(self, integrabilidade, 1.0 / (4 * n))

    def test_refinamento_preserva_condicoes(self):
        base = block_example_kernel(3)
        refinado = block_example_kernel(3, refinement=4)
        np.testing.assert_allclose(check_assumption_n(refinado).as_tuple(), check_assumption_n(base).as_tuple(),
                                   rtol=1e-12)
        np.testing.assert_allclose(check_gstar(refinado), check_gstar(base), rtol=1e-12)

    def test_par_fora_da_diagonal(self):
        """Valor a no par {0, 1}: as duas normas valem 2 a^4, conferidas por soma em tuplas."""
        a = 0.7
        partition = uniform_partition(2)
        matriz = np.array([[0.0, a], [a, 0.0]])
        f = SymmetricKernel(partition, 2, dense=matriz, offdiag_only=True)

        estrela11 = sum(
            sum(matriz[z, x] * matriz[z, y] for z in range(2)) ** 2
            for x, y in itertools.product(range(2), repeat=2)
        )
        estrela21 = sum(sum(matriz[z, x] ** 2 for z in range(2)) ** 2 for x in range(2))
        obtido = check_gstar(f)
        self.assertAlmostEqual(obtido[0], estrela11, places=14)
        self.assertAlmostEqual(obtido[1], estrela21, places=14)
        self.assertAlmostEqual(obtido[0], 2 * a ** 4, places=14)

    def test_nucleo_nulo(self):
        f = SymmetricKernel.zeros(uniform_partition(3), 2)
        self.assertEqual(check_assumption_n(f).as_tuple(), (0.0, 0.0, 0.0))
        self.assertEqual(check_gstar(f), (0.0, 0.0))
        self.assertEqual(findev_rhs(f), 0.0)

    def test_ordem_errada(self):
        f = SymmetricKernel(uniform_partition(2), 1, dense=np.ones(2))
        with self.assertRaises(UnsupportedOrderError):
            check_assumption_n(f)
        with self.assertRaises(UnsupportedOrderError):
            check_gstar(f)


class VarianceExpansionTest(SimpleTestCase):
    """Lado analítico da expansão de variância."""

    def test_star10_contra_contracao_generica(self):
        rng = np.random.default_rng(31)
        for n in (2, 3, 5):
            f = _random_block_kernel(rng, n)
            generico = symmetrize(contract(f, f, 1, 0)).norm_sq()
            self.assertAlmostEqual(symmetrized_star10_norm_sq(f), generico, places=12)

    def test_familia_em_blocos(self):
        for n in (1, 10, 100):
            f = block_example_kernel(n)
            _relativo(self, symmetrized_star10_norm_sq(f), 1.0 / (4 * n))
            _relativo(self, findev_rhs(f), 3.0 + 40.0 / n)

    def test_nucleo_nulo(self):
        f = SymmetricKernel.zeros(uniform_partition(2), 2)
        (media, erro), rhs = findev_identity(f, 50, 1)
        self.assertEqual((media, erro, rhs), (0.0, 0.0, 0.0))

    def test_lei_gaussiana(self):
        with self.assertRaises(LawMismatchError):
            findev_identity(block_example_kernel(2), 10, 1, law=MeasureLaw.GAUSSIAN)

    def test_orcamento_invalido(self):
        with self.assertRaises(MonteCarloBudgetError):
            findev_identity(block_example_kernel(2), 0, 1)

    @tag('slow')
    def test_bloco_n1(self):
        """n = 1: E[(D^2/2 - D)^2] = 43 com D = M^2 - M - 1."""
        (media, erro), rhs = findev_identity(block_example_kernel(1), 200000, 7)
        self.assertEqual(rhs, 43.0)
        self.assertLessEqual(abs(media - rhs), 4.0 * erro)

    @tag('slow')
    def test_nucleos_aleatorios(self):
        rng = np.random.default_rng(2024)
        runner = TrialRunner(chunk_size=4096, workers=1)
        for indice in range(10):
            f = _random_block_kernel(rng, int(rng.integers(2, 7)))
            (media, erro), rhs = findev_identity(f, 40000, 100 + indice, runner=runner)
            self.assertLessEqual(abs(media - rhs), 4.0 * erro, msg=f"núcleo {indice}")


class KolmogorovSmirnovTest(SimpleTestCase):
    """Distância KS à normal padrão."""

    def test_amostra_nula(self):
        self.assertEqual(ks_to_normal(np.zeros(10)), 0.5)
        self.assertEqual(ks_to_normal([0.0]), 0.5)

    def test_massa_escapando(self):
        self.assertEqual(ks_to_normal([-40.0, 40.0]), 0.5)

    def test_amostra_vazia(self):
        with self.assertRaises(PreconditionError):
            ks_to_normal([])

    def test_amostra_normal(self):
        amostra = np.random.default_rng(0).standard_normal(100000)
        self.assertLess(ks_to_normal(amostra), 0.01)

    def test_desvio_de_kolmogorov(self):
        self.assertAlmostEqual(KOLMOGOROV_SD, 0.2603, places=4)


class FamilyTest(SimpleTestCase):
    """Famílias de núcleos."""

    def test_normalizacao(self):
        for nome, n in (('block', 5), ('fixed', 7), ('complete', 2), ('complete', 40)):
            f = get_family(nome).kernel(n)
            self.assertAlmostEqual(2.0 * f.norm_sq(), 1.0, places=12)

    def test_refinamento_so_no_bloco(self):
        self.assertEqual(len(FAMILIES['block'].kernel(4, refinement=3).partition), 12)
        self.assertEqual(len(FAMILIES['complete'].kernel(4, refinement=3).partition), 4)

    def test_par_fixo(self):
        f = get_family('fixed').kernel(100)
        lote = sample_measure_batch(f.partition, MeasureLaw.CPOISSON, 3, 0, 200)
        esperado = lote.increments[:, 0] * lote.increments[:, 1]
        np.testing.assert_allclose(eval_multiple_integral(lote, f), esperado, rtol=1e-12, atol=1e-12)

    def test_erros(self):
        with self.assertRaises(PreconditionError):
            get_family('inexistente')
        with self.assertRaises(PreconditionError):
            get_family('complete').kernel(1)

    def test_quarto_momento_do_bloco(self):
        self.assertEqual(block_fourth_moment(1), 53.0)
        self.assertEqual(block_fourth_moment(50), 4.0)


class CltPipelineTest(SimpleTestCase):
    """Pipeline completo em orçamentos pequenos."""

    def _executa(self, workers=1, **kwargs):
        parametros = dict(
            family=FAMILIES['block'], n_values=[4, 1], trials=3000, seed=11,
            runner=TrialRunner(chunk_size=1000, workers=workers), lambda_grid=[0.5, 1.0],
            poc_trials=300, refinement=2,
        )
        parametros.update(kwargs)
        return clt_pipeline(**parametros)

    def test_linhas_analiticas_e_mc(self):
        report = self._executa()
        self.assertEqual(report.n_values, [1, 4])
        for registro in report.records:
            n = registro.n
            linhas = {linha.metric: linha for linha in registro.rows()}
            self.assertAlmostEqual(linhas['norm_half'].analytic_value, 1.0, places=12)
            self.assertAlmostEqual(linhas['fourth_power_integral'].analytic_value, 1.0 / (4 * n), places=12)
            self.assertAlmostEqual(linhas['findev'].analytic_value, 3.0 + 40.0 / n, places=10)
            self.assertAlmostEqual(linhas['n_minus1'].analytic_value, 1.0 / (4 * n), places=12)
            self.assertEqual(linhas['fourth_moment'].analytic_value, block_fourth_moment(n))
            segundo = linhas['second_moment']
            self.assertLessEqual(abs(segundo.mc_value - 1.0), 4.0 * segundo.std_err)
            media = linhas['mean']
            self.assertLessEqual(abs(media.mc_value), 4.0 * media.std_err)
            self.assertIn('tail_3', linhas)
            self.assertIn('poc_distance', linhas)

        metricas = {linha.metric for linha in report.rows}
        self.assertTrue({'ks_trend', 'ks_below_threshold', 'fourth_moment_near_gaussian'} <= metricas)

    def test_sem_rota_de_condicionamento(self):
        report = self._executa(poc_trials=0, n_values=[2])
        self.assertIsNone(report.record(2).poc_distance)

    def test_determinismo_entre_workers(self):
        serial = [linha.as_tuple() for linha in self._executa(n_values=[2]).rows]
        paralelo = [linha.as_tuple() for linha in self._executa(workers=2, n_values=[2]).rows]
        self.assertEqual(serial, paralelo)

    def test_controle_negativo(self):
        """F = M_0 M_1 para todo n: a distância KS não cai."""
        report = clt_pipeline(
            FAMILIES['fixed'], [4, 16, 64], 2000, 5, runner=TrialRunner(workers=1), poc_trials=0,
        )
        for registro in report.records:
            self.assertGreater(registro.ks_to_normal, 0.1)

    @tag('slow')
    def test_tendencia_ks_do_bloco(self):
        report = clt_pipeline(
            FAMILIES['block'], [4, 16, 64], 5000, 17, runner=TrialRunner(workers=1), poc_trials=0,
        )
        self.assertTrue(report.trends['ks_trend'])
        ks = [registro.ks_to_normal for registro in report.records]
        self.assertLess(ks[-1], ks[0])

    @tag('slow')
    def test_rota_de_condicionamento_decresce(self):
        report = self._executa(n_values=[1, 16], trials=200, poc_trials=4000, refinement=4,
                               lambda_grid=[0.5, 1.0, 2.0])
        distancias = [registro.poc_distance[0] for registro in report.records]
        self.assertLess(distancias[-1], distancias[0])
