"""
Testes para a app rmeasure.
"""
import numpy as np
from django.test import SimpleTestCase, tag

from partition.cells import PartitionMismatchError, build_partition, uniform_partition
from rmeasure.exponent import (
    FirstOrderKernel, LevyCharacteristics, covariance, integrate_first_order,
    levy_exponent,
)
from rmeasure.sampling import (
    MeasureLaw, MeasureSample, _increments_from_words, sample_cell, sample_measure,
    sample_measure_batch,
)
from rmeasure.streams import STREAM_COPY, STREAM_MAIN, stream_key, words_to_uniform


def _z_score(estimativa, alvo, erro_padrao):
    if erro_padrao == 0:
        return 0.0 if estimativa == alvo else np.inf
    return abs(estimativa - alvo) / erro_padrao


class StreamTest(SimpleTestCase):
    """Testes do gerador baseado em contador."""

    def test_chaves_distintas_por_fluxo_e_lei(self):
        chaves = {
            stream_key(7, stream, tag_)
            for stream in (STREAM_MAIN, STREAM_COPY)
            for tag_ in (1, 2)
        }
        self.assertEqual(len(chaves), 4)

    def test_uniformes_no_intervalo_aberto(self):
        palavras = np.array([0, 2 ** 64 - 1], dtype=np.uint64)
        uniformes = words_to_uniform(palavras)
        self.assertGreater(uniformes[0], 0.0)
        self.assertLess(uniformes[1], 1.0)

    def test_palavras_extremas_geram_incrementos_finitos(self):
        palavras = np.zeros((2, 4), dtype=np.uint64)
        palavras[:, 0] = [0, 2 ** 64 - 1]
        massas = np.array([1.0, 1.0])
        gauss = _increments_from_words(palavras, massas, MeasureLaw.GAUSSIAN, 0, 0)
        self.assertTrue(np.all(np.isfinite(gauss)))
        self.assertGreater(gauss[1], 7.0)
        self.assertLess(gauss[0], -7.0)
        poisson = _increments_from_words(palavras, massas, MeasureLaw.CPOISSON, 0, 0)
        # F(k) do Poisson(1) passa de 1 - 2^-53 bem antes de k = 40
        self.assertEqual(poisson[0], -1.0)
        self.assertLess(poisson[1], 40.0)


class SampleMeasureTest(SimpleTestCase):
    """Testes de amostragem de incrementos."""

    def setUp(self):
        self.partition = build_partition([(4.0, 0.25), (1.0, 0.5), (0.3, 0.75), (50.0, 1.0)])

    def test_determinismo(self):
        """Mesmo (seed, trial) reproduz os incrementos bit a bit."""
        for law in MeasureLaw:
            a = sample_measure(self.partition, law, 123, 9)
            b = sample_measure(self.partition, law, 123, 9)
            np.testing.assert_array_equal(a.increments, b.increments)

    def test_ensaios_diferentes(self):
        a = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 123, 0)
        b = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 123, 1)
        self.assertFalse(np.array_equal(a.increments, b.increments))

    def test_lote_igual_a_ensaios_isolados(self):
        """Linhas do lote coincidem com ensaios e células gerados isoladamente."""
        for law in MeasureLaw:
            lote = sample_measure_batch(self.partition, law, 55, 10, 6)
            for linha in range(6):
                isolado = sample_measure(self.partition, law, 55, 10 + linha)
                np.testing.assert_array_equal(lote.increments[linha], isolado.increments)
                for cell in range(len(self.partition)):
                    self.assertEqual(
                        sample_cell(self.partition, law, 55, 10 + linha, cell),
                        lote.increments[linha, cell],
                    )

    def test_fluxo_copia_independente(self):
        principal = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 1, 0)
        copia = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 1, 0, stream=STREAM_COPY)
        self.assertFalse(np.array_equal(principal.increments, copia.increments))

    def test_incrementos_somente_leitura(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 1, 0)
        with self.assertRaises(ValueError):
            amostra.increments[0] = 1.0

    def test_suporte_poisson(self):
        """Incrementos de Poisson compensada são N - mu com N inteiro >= 0."""
        lote = sample_measure_batch(self.partition, MeasureLaw.CPOISSON, 3, 0, 500)
        contagens = lote.increments + self.partition.masses
        np.testing.assert_allclose(contagens, np.round(contagens), atol=1e-9)
        self.assertTrue(np.all(np.round(contagens) >= 0))

    @tag('slow')
    def test_variancia_gaussiana(self):
        """Célula de massa 4: variância amostral dentro de 4 sigma de 4."""
        lote = sample_measure_batch(self.partition, MeasureLaw.GAUSSIAN, 2024, 0, 100000)
        x = lote.increments[:, 0]
        desvios = (x - x.mean()) ** 2
        erro = desvios.std(ddof=1) / np.sqrt(len(x))
        self.assertLess(_z_score(desvios.mean(), 4.0, erro), 4.0)

    @tag('slow')
    def test_media_e_variancia_poisson(self):
        """Média zero e variância mu, inclusive no ramo de rejeição (mu = 50)."""
        lote = sample_measure_batch(self.partition, MeasureLaw.CPOISSON, 77, 0, 40000)
        for cell, massa in enumerate(self.partition.masses):
            x = lote.increments[:, cell]
            erro_media = x.std(ddof=1) / np.sqrt(len(x))
            self.assertLess(_z_score(x.mean(), 0.0, erro_media), 4.0)
            quadrados = x * x
            erro_var = quadrados.std(ddof=1) / np.sqrt(len(x))
            self.assertLess(_z_score(quadrados.mean(), massa, erro_var), 4.0)

    @tag('slow')
    def test_independencia_entre_celulas(self):
        lote = sample_measure_batch(self.partition, MeasureLaw.CPOISSON, 5, 0, 40000)
        x, y = lote.increments[:, 1], lote.increments[:, 2]
        produto = x * y
        erro = produto.std(ddof=1) / np.sqrt(len(produto))
        self.assertLess(_z_score(produto.mean(), 0.0, erro), 4.0)


class FirstOrderTest(SimpleTestCase):
    """Integrais de primeira ordem."""

    def setUp(self):
        self.partition = uniform_partition(5, mass=0.5)

    def test_indicadora(self):
        amostra = sample_measure(self.partition, MeasureLaw.CPOISSON, 8, 3)
        h = FirstOrderKernel.indicator(self.partition, 2)
        self.assertEqual(integrate_first_order(amostra, h), amostra.increments[2])

    def test_nucleo_nulo(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 8, 3)
        h = FirstOrderKernel(self.partition, np.zeros(5))
        self.assertEqual(integrate_first_order(amostra, h), 0.0)

    def test_linearidade(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 8, 3)
        h = FirstOrderKernel(self.partition, [1.0, -2.0, 0.5, 0.0, 3.0])
        g = FirstOrderKernel(self.partition, [0.3, 0.1, -1.0, 2.0, 0.0])
        soma = FirstOrderKernel(self.partition, 2.0 * h.values - g.values)
        self.assertAlmostEqual(
            integrate_first_order(amostra, soma),
            2.0 * integrate_first_order(amostra, h) - integrate_first_order(amostra, g),
            places=12,
        )

    def test_particao_diferente(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 8, 3)
        h = FirstOrderKernel(uniform_partition(5, mass=1.0), np.ones(5))
        with self.assertRaises(PartitionMismatchError):
            integrate_first_order(amostra, h)

    def test_incrementos_externos(self):
        amostra = MeasureSample.from_increments(self.partition, 'gaussian', [1, 2, 3, 4, 5])
        h = FirstOrderKernel(self.partition, [1, 1, 1, 1, 1])
        self.assertEqual(integrate_first_order(amostra, h), 15.0)

    @tag('slow')
    def test_covariancia(self):
        """Covariância empírica de X(h), X(g) dentro de 4 sigma de (h, g)."""
        h = FirstOrderKernel(self.partition, [1.0, -2.0, 0.5, 0.0, 3.0])
        g = FirstOrderKernel(self.partition, [0.3, 0.1, -1.0, 2.0, 1.0])
        for law in MeasureLaw:
            lote = sample_measure_batch(self.partition, law, 99, 0, 50000)
            produto = integrate_first_order(lote, h) * integrate_first_order(lote, g)
            erro = produto.std(ddof=1) / np.sqrt(len(produto))
            self.assertLess(_z_score(produto.mean(), covariance(h, g), erro), 4.0)


class LevyExponentTest(SimpleTestCase):
    """Expoente de Lévy–Khinchine."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.3), (2.0, 0.6), (0.5, 0.9)])
        self.h = FirstOrderKernel(self.partition, [0.7, -0.4, 1.5])

    def test_gaussiana(self):
        esperado = -(1.3 ** 2) / 2 * self.h.norm_sq
        self.assertAlmostEqual(levy_exponent(MeasureLaw.GAUSSIAN, self.h, 1.3), esperado, places=13)

    def test_nucleo_nulo(self):
        zero = FirstOrderKernel(self.partition, np.zeros(3))
        for law in MeasureLaw:
            self.assertEqual(levy_exponent(law, zero, 2.0), 0.0)

    def test_poisson_em_pi(self):
        partition = build_partition([(1.0, 1.0)])
        h = FirstOrderKernel.indicator(partition, 0)
        psi = levy_exponent(MeasureLaw.CPOISSON, h, np.pi)
        self.assertAlmostEqual(psi.real, -2.0, places=13)
        self.assertAlmostEqual(psi.imag, -np.pi, places=13)

    def test_simetria_hermitiana(self):
        for law in MeasureLaw:
            for lam in np.linspace(0.1, 3.0, 7):
                mais = levy_exponent(law, self.h, lam)
                menos = levy_exponent(law, self.h, -lam)
                self.assertAlmostEqual(menos, mais.conjugate(), places=13)

    def test_descritor_estendido(self):
        """O descritor estendido reproduz as duas leis e soma as partes."""
        for law in MeasureLaw:
            self.assertAlmostEqual(
                levy_exponent(LevyCharacteristics.for_law(law), self.h, 0.8),
                levy_exponent(law, self.h, 0.8),
                places=14,
            )
        misto = LevyCharacteristics(gaussian_variance=1.0, atoms=((1.0, 1.0),))
        self.assertAlmostEqual(
            levy_exponent(misto, self.h, 0.8),
            levy_exponent(MeasureLaw.GAUSSIAN, self.h, 0.8) + levy_exponent(MeasureLaw.CPOISSON, self.h, 0.8),
            places=13,
        )

    def test_grade_de_lambda(self):
        grade = np.linspace(-3, 3, 5)
        valores = levy_exponent(MeasureLaw.CPOISSON, self.h, grade)
        self.assertEqual(valores.shape, (5,))
        self.assertAlmostEqual(valores[2], 0.0)

    @tag('slow')
    def test_funcao_caracteristica_empirica(self):
        """|ECF de X(h) - exp(psi)| <= 4 erros padrão em 21 pontos."""
        grade = np.linspace(-3, 3, 21)
        for law in MeasureLaw:
            lote = sample_measure_batch(self.partition, law, 31337, 0, 50000)
            x = integrate_first_order(lote, self.h)
            for lam in grade:
                termos = np.exp(1j * lam * x)
                erro = np.sqrt(termos.real.var(ddof=1) + termos.imag.var(ddof=1)) / np.sqrt(len(x))
                alvo = np.exp(levy_exponent(law, self.h, lam))
                self.assertLessEqual(abs(termos.mean() - alvo), 4.0 * erro + 1e-12)
