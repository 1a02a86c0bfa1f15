"""
Testes para a app scenarios.
"""
import math

import numpy as np
from django.test import SimpleTestCase, tag
from scipy.integrate import quad
from scipy.stats import norm

from chaos.integrals import eval_multiple_integral
from harness.runner import TrialRunner
from kernels.tables import zero_diagonal
from poc.arrays import build_tangent_pair
from rmeasure.sampling import LawMismatchError, MeasureLaw, MeasureSample, sample_measure_batch
from scenarios.block import block_example_closed_form, block_example_kernel, block_partition
from scenarios.pipelines import (
    BLOCK_COLUMNS, SWITCHING_COLUMNS, run_block_scenario, run_switching_scenario,
)
from scenarios.switching import (
    BrownianPath, SwitchingIntegrand, head_time, ito_cross_check, quadratic_functional,
    sample_brownian_path, scaled_functional, simulate_switching_functional,
    switching_norm_limit, switching_target_cf, trapezoid_tolerance,
)
from utils.exceptions import PreconditionError


class BlockExampleTest(SimpleTestCase):
    """Sequência explícita em blocos."""

    def test_n1(self):
        f = block_example_kernel(1)
        self.assertEqual(len(f.partition), 1)
        self.assertAlmostEqual(f.value((0, 0)), 2 ** -0.5, places=15)
        self.assertEqual(f.partition.taus.tolist(), [1.0])

    def test_normalizacao(self):
        for n in (1, 7, 64):
            self.assertAlmostEqual(2.0 * block_example_kernel(n).norm_sq(), 1.0, places=12)

    def test_diagonal_pontual(self):
        """O valor dentro da célula representa o bloco fora da diagonal pontual."""
        f = block_example_kernel(3)
        self.assertIs(zero_diagonal(f, level='point'), f)
        self.assertEqual(zero_diagonal(f).norm_sq(), 0.0)

    def test_n_invalido(self):
        with self.assertRaises(PreconditionError):
            block_example_kernel(0)
        with self.assertRaises(PreconditionError):
            block_partition(2, refinement=0)

    def test_forma_fechada_igual_a_integral(self):
        for n in (1, 5, 20):
            f = block_example_kernel(n)
            lote = sample_measure_batch(f.partition, MeasureLaw.CPOISSON, 80 + n, 0, 1000)
            esperado = eval_multiple_integral(lote, f)
            obtido = block_example_closed_form(lote, n)
            np.testing.assert_allclose(obtido, esperado, rtol=1e-10, atol=1e-12)

    def test_todos_os_incrementos_menos_um(self):
        for n in (1, 4, 9):
            amostra = MeasureSample.from_increments(block_partition(n), MeasureLaw.CPOISSON, -np.ones(n))
            self.assertAlmostEqual(block_example_closed_form(amostra, n), math.sqrt(n / 2.0), places=12)
        amostra = MeasureSample.from_increments(block_partition(1), MeasureLaw.CPOISSON, [-1.0])
        self.assertAlmostEqual(block_example_closed_form(amostra, 1), 2 ** -0.5, places=15)

    def test_erros_da_forma_fechada(self):
        lote = sample_measure_batch(block_partition(3), MeasureLaw.GAUSSIAN, 1, 0, 5)
        with self.assertRaises(LawMismatchError):
            block_example_closed_form(lote, 3)
        lote = sample_measure_batch(block_partition(3), MeasureLaw.CPOISSON, 1, 0, 5)
        with self.assertRaises(PreconditionError):
            block_example_closed_form(lote, 4)

    def test_refinamento_trajetoria_a_trajetoria(self):
        """Com as somas por bloco, o núcleo refinado dá a mesma integral."""
        n, s = 4, 3
        refinado = block_example_kernel(n, refinement=s)
        lote = sample_measure_batch(refinado.partition, MeasureLaw.CPOISSON, 6, 0, 500)
        somas = lote.increments.reshape(500, n, s).sum(axis=2)
        blocos = MeasureSample.from_increments(block_partition(n), MeasureLaw.CPOISSON, somas)
        np.testing.assert_allclose(
            eval_multiple_integral(lote, refinado), block_example_closed_form(blocos, n), rtol=1e-10, atol=1e-12,
        )

    @tag('slow')
    def test_variancia_unitaria(self):
        f = block_example_kernel(8)
        valores = block_example_closed_form(sample_measure_batch(f.partition, MeasureLaw.CPOISSON, 5, 0, 100000), 8)
        quadrados = valores * valores
        erro = quadrados.std(ddof=1) / math.sqrt(len(quadrados))
        self.assertLessEqual(abs(quadrados.mean() - 1.0), 4.0 * erro)


class SwitchingFunctionalTest(SimpleTestCase):
    """Funcional quadrático com chaveamento."""

    def setUp(self):
        self.path = sample_brownian_path(500, 21, 3)

    def test_caminho_nulo(self):
        nulo = BrownianPath(np.zeros(200))
        for n in (1, 2, 7):
            self.assertEqual(float(scaled_functional(nulo, n)), 0.0)
            self.assertEqual(float(switching_norm_limit(nulo, n)), 0.0)

    def test_formato_do_caminho(self):
        """Um ensaio dá trajetória (m,); vários dão (count, m) com as mesmas linhas."""
        self.assertEqual(self.path.increments.shape, (500,))
        self.assertEqual(self.path.terminal.shape, ())
        lote = sample_brownian_path(500, 21, 3, count=2)
        self.assertEqual(lote.increments.shape, (2, 500))
        np.testing.assert_array_equal(lote.increments[0], self.path.increments)

    def test_reversao_preserva_extremos(self):
        reverso = self.path.reversed()
        self.assertEqual(float(reverso.terminal), float(self.path.terminal))
        self.assertEqual(float(reverso.values[0]), 0.0)
        np.testing.assert_allclose(reverso.reversed().values, self.path.values, atol=1e-12)

    def test_identidade_de_reversao(self):
        for n in (2, 4, 10):
            self.assertEqual(
                float(quadratic_functional(self.path, n)),
                float(quadratic_functional(self.path.reversed(), n, switching=False)),
            )
        self.assertEqual(float(quadratic_functional(self.path, 3)),
                         float(quadratic_functional(self.path, 3, switching=False)))

    def test_terminal_igual_para_n_par_e_impar(self):
        w_par, _ = simulate_switching_functional(4, 300, 8, 2)
        w_impar, _ = simulate_switching_functional(5, 300, 8, 2)
        self.assertEqual(w_par, w_impar)
        self.assertAlmostEqual(w_par, float(np.sum(sample_brownian_path(300, 8, 2).increments)), places=12)

    def test_grade_degenerada(self):
        with self.assertRaises(PreconditionError):
            simulate_switching_functional(3, 99, 1, 0)
        with self.assertRaises(PreconditionError):
            simulate_switching_functional(0, 200, 1, 0)

    def test_caminho_linear(self):
        """W_s = s: ||u_n||^2 = 4n/(4n+5) a menos do erro do trapézio."""
        m = 2000
        linear = BrownianPath(np.full(m, 1.0 / m))
        for n in (1, 5, 25):
            esperado = 4 * n / (4 * n + 5)
            self.assertLessEqual(abs(float(switching_norm_limit(linear, n)) - esperado), trapezoid_tolerance(n, m))

    def test_funcao_caracteristica_alvo(self):
        for gamma in (0.0, 1.0, 2.5):
            self.assertAlmostEqual(switching_target_cf(gamma, 0.0).real, math.exp(-gamma * gamma / 2), places=15)
        self.assertAlmostEqual(switching_target_cf(0.0, 1.0).real, 2 ** -0.5, places=15)
        self.assertEqual(switching_target_cf(0.0, 0.0), 1.0)

        for gamma, lam in ((0.0, 1.0), (1.0, 0.5), (1.0, 2.0)):
            real, _ = quad(lambda x: math.cos(gamma * x) * math.exp(-0.5 * lam * lam * x * x) * norm.pdf(x),
                           -np.inf, np.inf, epsabs=1e-13)
            self.assertAlmostEqual(switching_target_cf(gamma, lam).real, real, places=10)

    def test_head_time(self):
        self.assertAlmostEqual(head_time(4, 0.25), 0.5, places=15)
        with self.assertRaises(PreconditionError):
            head_time(4, 1.0)


class SwitchingIntegrandTest(SimpleTestCase):
    """Integrando adaptado u_n sobre a grade."""

    def test_coeficientes(self):
        m = 200
        for n in (3, 4):
            integrando = SwitchingIntegrand(n, m, 0.75)
            lote = sample_measure_batch(integrando.partition, MeasureLaw.GAUSSIAN, 2, 0, 3)
            path = BrownianPath.from_sample(lote)
            chaveado = path.reversed() if n % 2 == 0 else path
            ordem = integrando.resolution.order
            esquerda = np.arange(m) / m
            esperado = 2.0 * math.sqrt(n) * chaveado.values[:, :-1] * esquerda ** (2 * n + 1)
            obtido = integrando.coefficients(lote)[:, ordem]
            np.testing.assert_allclose(obtido, esperado, rtol=1e-9, atol=1e-12)

    def test_soma_de_ito_igual_ao_arranjo(self):
        m = 200
        for n in (2, 3):
            integrando = SwitchingIntegrand(n, m, 0.75)
            pair = build_tangent_pair(integrando, integrando.partition, integrando.resolution,
                                      MeasureLaw.GAUSSIAN, 14, 0, 20)
            path = BrownianPath.from_sample(pair.main)
            np.testing.assert_allclose(
                pair.original.totals + math.sqrt(n) / (2 * n + 2), ito_cross_check(path, n), rtol=1e-9, atol=1e-12,
            )

    def test_fronteira(self):
        integrando = SwitchingIntegrand(1, 200, 0.25)
        self.assertEqual(integrando.boundary, 50)


class ScenarioPipelineTest(SimpleTestCase):
    """Cenários completos em orçamentos pequenos."""

    def test_cenario_em_blocos(self):
        report = run_block_scenario([4, 1], 2000, 3, runner=TrialRunner(chunk_size=700, workers=1),
                                    lambda_grid=[0.5, 1.0], poc_trials=200, refinement=2)
        self.assertEqual(report.columns, BLOCK_COLUMNS)
        self.assertTrue(all(len(linha) == len(BLOCK_COLUMNS) for linha in report.rows))
        for linha in report.rows:
            if linha[2] == 'closed_form_gap':
                self.assertLess(linha[3], 1e-9)
            if linha[2] == 'second_moment':
                self.assertLessEqual(abs(linha[3] - 1.0), 4.0 * linha[4])
        metricas = {linha[2] for linha in report.rows}
        self.assertTrue({'cf_distance', 'ks_to_normal', 'cp2_distance', 'conclusion_distance'} <= metricas)
        self.assertIn('head_trend', report.trends)
        self.assertEqual([linha[0] for linha in report.rows][0], 1)

    def test_cenario_com_chaveamento(self):
        report = run_switching_scenario([3, 4], 300, 9, runner=TrialRunner(chunk_size=128, workers=1),
                                        steps=200, gammas=[0.0, 1.0], lambda_grid=[0.5, 1.0])
        self.assertEqual(report.columns, SWITCHING_COLUMNS)
        self.assertEqual(report.scenario, 'switching')
        self.assertTrue(all(len(linha) == len(SWITCHING_COLUMNS) for linha in report.rows))
        metricas = {linha[3] for linha in report.rows}
        for nome in ('second_moment', 'norm_gap', 'ito_gap', 'head_mass', 'stable_cf_distance',
                     'stable_cf_max', 'poc_cf_distance', 'cp2_distance', 'stable_cf_trend'):
            self.assertIn(nome, metricas)

        # phi = exp(-lambda^2 W_1^2 / 2) nunca fica abaixo do corte aqui
        self.assertNotIn('clipped_fraction', metricas)

    def test_sem_chaveamento(self):
        report = run_switching_scenario([4], 200, 9, runner=TrialRunner(workers=1), steps=150,
                                        gammas=[0.0], lambda_grid=[1.0], switching=False)
        self.assertEqual(report.scenario, 'no-switch')

    def test_determinismo_entre_workers(self):
        def executa(workers):
            return run_switching_scenario([3], 256, 4, runner=TrialRunner(chunk_size=64, workers=workers),
                                          steps=120, gammas=[1.0], lambda_grid=[0.5]).rows

        self.assertEqual(executa(1), executa(3))

    def test_lista_vazia(self):
        with self.assertRaises(PreconditionError):
            run_block_scenario([], 10, 1, runner=TrialRunner(workers=1), poc_trials=0)

    @tag('slow')
    def test_tendencias_do_chaveamento(self):
        report = run_switching_scenario([5, 50], 4000, 31, runner=TrialRunner(workers=1), steps=1000,
                                        gammas=[0.0, 1.0], lambda_grid=[0.5, 1.0, 2.0])
        lacunas = report.series('norm_gap')
        self.assertLess(lacunas[1], lacunas[0])
        segundo = [linha for linha in report.rows if linha[0] == 50 and linha[3] == 'second_moment'][0]
        self.assertLessEqual(abs(segundo[4] - 1.0), 4.0 * segundo[5])
