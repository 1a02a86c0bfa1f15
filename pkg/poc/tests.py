"""
Testes para a app poc.
"""
import numpy as np
from django.test import SimpleTestCase, tag

from chaos.integrals import eval_multiple_integral
from harness.runner import TrialRunner
from kernels.tables import SymmetricKernel
from partition.cells import Direction, Resolution, build_partition, uniform_partition
from poc.arrays import (
    ChaosIntegrand, DeterministicIntegrand, ElementaryIntegrand,
    NonAdaptedIntegrandError, build_tangent_pair, tangency_samples,
)
from poc.charfn import conditional_cf_decoupled, estimate_stable_cf
from poc.verdict import (
    PairSummary, VerdictTolerances, gaussian_target, poc_verdict, summarize_pair, summarize_trials,
    trend_ok,
)
from rmeasure.sampling import MeasureLaw, sample_measure_batch
from rmeasure.streams import STREAM_COPY
from utils.exceptions import PreconditionError


class _PeekingIntegrand(ElementaryIntegrand):
    """Usa o incremento da própria célula: não adaptado."""

    def coefficients(self, sample):
        return np.array(sample.increments)


def _offdiag_kernel(partition, seed):
    rng = np.random.default_rng(seed)
    n = len(partition)
    matriz = rng.normal(size=(n, n))
    matriz = matriz + matriz.T
    np.fill_diagonal(matriz, 0.0)
    return SymmetricKernel(partition, 2, dense=matriz, offdiag_only=True)


class TangentPairTest(SimpleTestCase):
    """Construção dos arranjos tangentes."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.25), (0.5, 0.5), (2.0, 0.75), (1.5, 1.0)])
        self.resolution = Resolution(self.partition)

    def test_coeficientes_deterministicos(self):
        valores = [0.5, -1.0, 2.0, 0.25]
        integrando = DeterministicIntegrand(valores, self.resolution)
        pair = build_tangent_pair(integrando, self.partition, self.resolution, 'gaussian', 3, 0, 20)
        principal = sample_measure_batch(self.partition, 'gaussian', 3, 0, 20)
        copia = sample_measure_batch(self.partition, 'gaussian', 3, 0, 20, stream=STREAM_COPY)
        np.testing.assert_array_equal(pair.original.rows, principal.increments * valores)
        np.testing.assert_array_equal(pair.decoupled.rows, copia.increments * valores)

    def test_parcela_unica(self):
        partition = build_partition([(1.0, 1.0)])
        resolucao = Resolution(partition)
        integrando = DeterministicIntegrand([2.0], resolucao)
        pair = build_tangent_pair(integrando, partition, resolucao, 'cpoisson', 1, 0, 5)
        self.assertEqual(pair.original.rows.shape, (5, 1))
        np.testing.assert_array_equal(pair.coefficients, np.full((5, 1), 2.0))

    def test_ordem_da_resolucao(self):
        """As colunas seguem a ordem da resolução, não a dos ids."""
        partition = build_partition([(1.0, 0.9), (1.0, 0.3), (1.0, 0.6)])
        resolucao = Resolution(partition)
        integrando = DeterministicIntegrand([1.0, 2.0, 3.0], resolucao)
        pair = build_tangent_pair(integrando, partition, resolucao, 'gaussian', 2, 0, 3)
        np.testing.assert_array_equal(pair.coefficients[0], [2.0, 3.0, 1.0])

    def test_fronteira_da_cabeca(self):
        partition = uniform_partition(4)
        resolucao = Resolution(partition)
        integrando = DeterministicIntegrand(np.ones(4), resolucao, head_time=0.5)
        pair = build_tangent_pair(integrando, partition, resolucao, 'gaussian', 2, 0, 3)
        self.assertEqual(pair.boundary, 2)
        np.testing.assert_allclose(pair.original.head_sums, pair.original.partial_sum(2))

    def test_totais_iguais_a_integral_multipla(self):
        """Com h_pi(f), o total original reproduz I_2(f) por ensaio."""
        f = _offdiag_kernel(self.partition, 8)
        for direcao in Direction:
            resolucao = Resolution(self.partition, direcao)
            pair = build_tangent_pair(ChaosIntegrand(f, resolucao), self.partition, resolucao, 'cpoisson', 5, 0, 200)
            alvo = eval_multiple_integral(sample_measure_batch(self.partition, 'cpoisson', 5, 0, 200), f)
            np.testing.assert_allclose(pair.original.totals, alvo, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(pair.original.partial_sum(4), pair.original.totals)

    def test_integrando_nao_adaptado(self):
        with self.assertRaises(NonAdaptedIntegrandError):
            build_tangent_pair(_PeekingIntegrand(self.resolution), self.partition, self.resolution, 'gaussian', 1, 0, 4)

    def test_resolucao_diferente(self):
        integrando = DeterministicIntegrand(np.ones(4), self.resolution.reversed())
        with self.assertRaises(NonAdaptedIntegrandError):
            build_tangent_pair(integrando, self.partition, self.resolution, 'gaussian', 1, 0, 4)

    def test_head_time_invalido(self):
        with self.assertRaises(PreconditionError):
            DeterministicIntegrand(np.ones(4), self.resolution, head_time=1.5)


class ConditionalCfTest(SimpleTestCase):
    """CF condicional do arranjo desacoplado."""

    def setUp(self):
        self.partition = uniform_partition(2)
        self.resolution = Resolution(self.partition)

    def _pair(self, valores, law='gaussian', count=3):
        integrando = DeterministicIntegrand(valores, self.resolution, head_time=0.5)
        return build_tangent_pair(integrando, self.partition, self.resolution, law, 9, 0, count)

    def test_integrando_nulo(self):
        for law in MeasureLaw:
            pair = self._pair([0.0, 0.0], law)
            np.testing.assert_array_equal(conditional_cf_decoupled(pair, 1.7), np.ones(3))

    def test_gaussiana_norma_dois(self):
        pair = self._pair([1.0, 1.0])
        np.testing.assert_allclose(conditional_cf_decoupled(pair, 1.0), np.exp(-1.0), rtol=1e-15)

    def test_cabeca(self):
        pair = self._pair([1.0, 3.0])
        np.testing.assert_allclose(conditional_cf_decoupled(pair, 1.0, part='head'), np.exp(-0.5), rtol=1e-15)

    def test_parte_desconhecida(self):
        with self.assertRaises(PreconditionError):
            conditional_cf_decoupled(self._pair([1.0, 1.0]), 1.0, part='meio')

    @tag('slow')
    def test_mc_sobre_copias(self):
        """No ensaio principal fixo, a CF das cópias bate com a forma fechada."""
        partition = build_partition([(1.0, 0.25), (0.5, 0.5), (2.0, 0.75), (1.5, 1.0)])
        resolucao = Resolution(partition)
        f = _offdiag_kernel(partition, 21)
        for law in MeasureLaw:
            pair = build_tangent_pair(ChaosIntegrand(f, resolucao), partition, resolucao, law, 77, 4, 1)
            copias = sample_measure_batch(partition, law, 78, 0, 100000, stream=STREAM_COPY)
            valores = copias.increments[:, resolucao.order] @ pair.coefficients[0]
            for lam in (-2.0, -0.5, 0.3, 1.0, 2.5):
                termos = np.exp(1j * lam * valores)
                erro = np.sqrt(termos.real.var(ddof=1) + termos.imag.var(ddof=1)) / np.sqrt(len(termos))
                alvo = conditional_cf_decoupled(pair, lam)[0]
                self.assertLessEqual(abs(termos.mean() - alvo), 4.0 * erro + 1e-12)


class StableCfTest(SimpleTestCase):
    """Estimativa de E[Z exp(i lambda X)]."""

    def test_x_nulo(self):
        estimativa = estimate_stable_cf(np.zeros(50), None, np.linspace(-3, 3, 7))
        np.testing.assert_array_equal(estimativa.values, np.ones(7))
        np.testing.assert_array_equal(estimativa.std_errors, np.zeros(7))

    def test_peso_unitario_igual_a_cf_empirica(self):
        x = np.random.default_rng(1).normal(size=500)
        grade = np.linspace(-3, 3, 21)
        plana = estimate_stable_cf(x, None, grade)
        pesada = estimate_stable_cf(x, np.ones(500), grade)
        np.testing.assert_allclose(pesada.values, plana.values, rtol=0, atol=1e-15)

    def test_tamanhos_diferentes(self):
        with self.assertRaises(PreconditionError):
            estimate_stable_cf(np.zeros(5), np.ones(4), [1.0])

    def test_normal_padrao(self):
        x = np.random.default_rng(2).normal(size=20000)
        grade = np.linspace(-3, 3, 21)
        estimativa = estimate_stable_cf(x, None, grade)
        desvios = np.abs(estimativa.values - np.exp(-grade ** 2 / 2))
        self.assertTrue(np.all(desvios <= 4.0 * estimativa.std_errors + 1e-12))


class TangencyTest(SimpleTestCase):
    """Tangência e independência condicional."""

    def setUp(self):
        self.partition = build_partition([(0.8, 1 / 6), (1.2, 2 / 6), (0.5, 3 / 6), (1.0, 4 / 6), (2.0, 5 / 6), (0.7, 1.0)])
        self.resolution = Resolution(self.partition)
        self.integrando = ChaosIntegrand(_offdiag_kernel(self.partition, 4), self.resolution)

    def test_coeficiente_identico_nas_reamostragens(self):
        originais, desacopladas = tangency_samples(self.integrando, 'cpoisson', 3, 2, 3, 50)
        self.assertEqual(originais.shape, (50,))
        self.assertEqual(desacopladas.shape, (50,))

    @tag('slow')
    def test_tangencia(self):
        for law in MeasureLaw:
            for posicao in range(6):
                originais, desacopladas = tangency_samples(self.integrando, law, 3, 2, posicao, 10000)
                for lam in (0.5, 1.0, 2.0):
                    a = np.exp(1j * lam * originais)
                    b = np.exp(1j * lam * desacopladas)
                    erro = np.sqrt(
                        (a.real.var(ddof=1) + a.imag.var(ddof=1) + b.real.var(ddof=1) + b.imag.var(ddof=1)) / 10000
                    )
                    self.assertLessEqual(abs(a.mean() - b.mean()), 4.0 * erro + 1e-12)

    @tag('slow')
    def test_independencia_condicional(self):
        pair = build_tangent_pair(self.integrando, self.partition, self.resolution, 'gaussian', 6, 0, 1)
        copias = sample_measure_batch(self.partition, 'gaussian', 6, 0, 50000, stream=STREAM_COPY)
        parcelas = copias.increments[:, self.resolution.order] * pair.coefficients[0]
        for j, k in ((1, 2), (2, 5), (3, 4)):
            produto = parcelas[:, j] * parcelas[:, k]
            erro = produto.std(ddof=1) / np.sqrt(len(produto))
            self.assertLessEqual(abs(produto.mean()), 4.0 * erro)


class VerdictTest(SimpleTestCase):
    """Relatório do princípio de condicionamento."""

    def test_tendencia(self):
        self.assertTrue(trend_ok([3, 2, 1]))
        self.assertTrue(trend_ok([3, 4, 1]))
        self.assertFalse(trend_ok([1, 2, 3]))
        self.assertFalse(trend_ok([3, 4, 1], allowed_violations=0))

    def _deterministic_sequence(self):
        sequencia = []
        for n in (2, 4, 8):
            partition = uniform_partition(n, mass=1.0 / n)
            resolucao = Resolution(partition)
            integrando = DeterministicIntegrand(np.ones(n), resolucao, head_time=0.0)
            sequencia.append((n, build_tangent_pair(integrando, partition, resolucao, 'gaussian', n, 0, 4000)))
        return sequencia

    def test_controle_deterministico(self):
        """Phi determinístico gaussiano: CP2 exatamente zero e conclusão no ruído."""
        def alvo(pair, lam):
            return np.exp(-0.5 * lam * lam * pair.realized_norm_sq())

        report = poc_verdict(self._deterministic_sequence(), alvo, [0.5, 1.0, 2.0])
        for linha in report.rows:
            if linha.metric == 'cp2_distance':
                self.assertAlmostEqual(linha.value, 0.0, places=12)
            if linha.metric == 'conclusion_distance':
                self.assertLessEqual(linha.value, 4.0 * linha.std_err + 1e-12)
            if linha.metric == 'head_second_moment_original':
                self.assertEqual(linha.value, 0.0)
        self.assertEqual(set(report.trends), {'head_trend', 'cp2_trend', 'conclusion_trend'})
        self.assertFalse(report.clipped)

    def test_corte_de_phi(self):
        def alvo(pair, lam):
            return np.zeros(pair.n_trials, dtype=np.complex128)

        report = poc_verdict(self._deterministic_sequence()[:1], alvo, [1.0], VerdictTolerances(clip=1e-6))
        self.assertTrue(report.clipped)
        metricas = {linha.metric for linha in report.rows}
        self.assertIn('clipped_fraction', metricas)
        self.assertNotIn('cp2_distance', metricas)

    def test_limite_degenerado(self):
        """phi = 1 com u_n -> 0: distância da conclusão diminui com n."""
        sequencia = []
        for n in (1, 4, 16, 64):
            partition = uniform_partition(4)
            resolucao = Resolution(partition)
            integrando = DeterministicIntegrand(np.full(4, 1.0 / n), resolucao)
            sequencia.append((n, build_tangent_pair(integrando, partition, resolucao, 'cpoisson', 1, 0, 2000)))

        def alvo(pair, lam):
            return np.ones(pair.n_trials, dtype=np.complex128)

        report = poc_verdict(sequencia, alvo, [1.0])
        conclusao = report.series('conclusion_max')
        self.assertLess(conclusao[-1], conclusao[0])
        self.assertLess(conclusao[-1], 0.01)

    def test_resumo_em_blocos_igual_ao_par_inteiro(self):
        partition = uniform_partition(6, mass=0.5)
        resolucao = Resolution(partition, Direction.REVERSED)
        integrando = ChaosIntegrand(_offdiag_kernel(partition, 3), resolucao, head_time=0.5)
        grade = [0.5, 1.5]
        inteiro = build_tangent_pair(integrando, partition, resolucao, 'cpoisson', 9, 0, 600)

        partes = [
            summarize_pair(build_tangent_pair(integrando, partition, resolucao, 'cpoisson', 9, inicio, 200),
                           gaussian_target, grade).as_arrays()
            for inicio in (0, 200, 400)
        ]
        arrays = tuple(np.concatenate([parte[i] for parte in partes]) for i in range(len(partes[0])))
        resumo = PairSummary.from_arrays(grade, inteiro.boundary, arrays)

        esperado = poc_verdict([(6, inteiro)], gaussian_target, grade)
        obtido = poc_verdict([(6, resumo)], None, grade)
        self.assertEqual(len(esperado.rows), len(obtido.rows))
        for linha, outra in zip(esperado.rows, obtido.rows):
            self.assertEqual(linha.as_tuple()[:3], outra.as_tuple()[:3])
            self.assertAlmostEqual(linha.value, outra.value, places=12)

    def test_resumo_em_outra_grade(self):
        partition = uniform_partition(3)
        resolucao = Resolution(partition)
        integrando = DeterministicIntegrand(np.ones(3), resolucao)
        par = build_tangent_pair(integrando, partition, resolucao, 'gaussian', 1, 0, 10)
        resumo = summarize_pair(par, gaussian_target, [1.0])
        with self.assertRaises(PreconditionError):
            poc_verdict([(3, resumo)], None, [1.0, 2.0])

    def test_resumo_pelo_executor(self):
        partition = uniform_partition(5, mass=0.4)
        resolucao = Resolution(partition)
        integrando = ChaosIntegrand(_offdiag_kernel(partition, 8), resolucao, head_time=0.6)
        inteiro = build_tangent_pair(integrando, partition, resolucao, 'gaussian', 4, 0, 500)
        resumo = summarize_trials(integrando, 'gaussian', 4, 500, gaussian_target, [1.0],
                                  TrialRunner(chunk_size=150, workers=1))
        self.assertEqual(resumo.n_trials, 500)
        self.assertEqual(resumo.boundary, inteiro.boundary)
        np.testing.assert_allclose(resumo.totals, inteiro.original.totals, rtol=1e-12)
        np.testing.assert_allclose(resumo.head_decoupled, inteiro.decoupled.head_sums, rtol=1e-12)
