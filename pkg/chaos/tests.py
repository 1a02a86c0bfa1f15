"""
Testes para a app chaos.
"""
import numpy as np
from django.test import SimpleTestCase, tag

from chaos.adapted import (
    StreamMismatchError, adapted_integral, adapted_integrand,
    decoupled_adapted_integral, deterministic_integrand,
)
from chaos.integrals import (
    conditional_projection, eval_multiple_integral, product_formula_check,
)
from kernels.tables import SymmetricKernel, UnsupportedOrderError
from partition.cells import Direction, Resolution, build_partition, uniform_partition
from rmeasure.exponent import FirstOrderKernel, integrate_first_order, levy_exponent_values
from rmeasure.sampling import (
    MeasureLaw, MeasureSample, StreamCollisionError, sample_measure,
    sample_measure_batch,
)
from rmeasure.streams import STREAM_COPY, STREAM_REPLAY


def _random_partition(rng, n):
    taus = rng.permutation(np.arange(1, n + 1)) / n
    return build_partition([(float(rng.uniform(0.3, 2.0)), float(t)) for t in taus])


def _random_kernel(rng, partition, diagonal=False):
    n = len(partition)
    matriz = rng.normal(size=(n, n))
    matriz = matriz + matriz.T
    if not diagonal:
        np.fill_diagonal(matriz, 0.0)
    return SymmetricKernel(partition, 2, dense=matriz, offdiag_only=not diagonal)


def _pair_kernel(partition, valor=1.0):
    matriz = np.zeros((len(partition), len(partition)))
    matriz[0, 1] = matriz[1, 0] = valor
    return SymmetricKernel(partition, 2, dense=matriz, offdiag_only=True)


def _z_score(estimativa, alvo, erro_padrao):
    if erro_padrao == 0:
        return 0.0 if estimativa == alvo else np.inf
    return abs(estimativa - alvo) / erro_padrao


class EvalMultipleIntegralTest(SimpleTestCase):
    """Avaliação exata de I_d(f) em núcleos em blocos."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.2), (0.5, 0.7), (2.0, 0.9)])

    def test_indicadora_simetrizada(self):
        """f = 1 em B1 x B2 e B2 x B1 dá 2 M(B1) M(B2) por ensaio."""
        f = _pair_kernel(self.partition)
        for law in MeasureLaw:
            lote = sample_measure_batch(self.partition, law, 4, 0, 50)
            esperado = 2.0 * lote.increments[:, 0] * lote.increments[:, 1]
            np.testing.assert_allclose(eval_multiple_integral(lote, f), esperado, rtol=1e-14)

    def test_bloco_dentro_da_celula_poisson(self):
        partition = build_partition([(1.0, 1.0)])
        f = SymmetricKernel(partition, 2, dense=[[1.0]])
        lote = sample_measure_batch(partition, MeasureLaw.CPOISSON, 11, 0, 200)
        M = lote.increments[:, 0]
        np.testing.assert_allclose(eval_multiple_integral(lote, f), M * M - M - 1.0, rtol=1e-14, atol=1e-14)

    def test_bloco_dentro_da_celula_gaussiana(self):
        partition = build_partition([(1.0, 1.0)])
        f = SymmetricKernel(partition, 2, dense=[[1.0]])
        lote = sample_measure_batch(partition, MeasureLaw.GAUSSIAN, 11, 0, 200)
        M = lote.increments[:, 0]
        np.testing.assert_allclose(eval_multiple_integral(lote, f), M * M - 1.0, rtol=1e-14, atol=1e-14)

    def test_nucleo_nulo(self):
        amostra = sample_measure(self.partition, MeasureLaw.CPOISSON, 1, 0)
        for ordem in range(5):
            zero = SymmetricKernel.zeros(self.partition, ordem)
            self.assertEqual(eval_multiple_integral(amostra, zero), 0.0)

    def test_ordem_zero_constante(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 1, 0)
        constante = SymmetricKernel(self.partition, 0, dense=2.5)
        self.assertEqual(eval_multiple_integral(amostra, constante), 2.5)

    def test_ordem_um(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 1, 0)
        f = SymmetricKernel(self.partition, 1, dense=[1.0, -2.0, 0.5])
        h = FirstOrderKernel(self.partition, [1.0, -2.0, 0.5])
        self.assertAlmostEqual(eval_multiple_integral(amostra, f), integrate_first_order(amostra, h), places=14)

    def test_ordem_tres_ids_distintos(self):
        f = SymmetricKernel(self.partition, 3, multisets={(0, 1, 2): 0.5}, offdiag_only=True)
        amostra = sample_measure(self.partition, MeasureLaw.CPOISSON, 2, 5)
        M = amostra.increments
        self.assertAlmostEqual(eval_multiple_integral(amostra, f), 6 * 0.5 * M[0] * M[1] * M[2], places=12)

    def test_ordem_tres_com_celula_repetida(self):
        """Multiconjunto (0, 0, 1): 3!/2! vezes o átomo D_0 vezes M_1."""
        f = SymmetricKernel(self.partition, 3, multisets={(0, 0, 1): 2.0})
        amostra = sample_measure(self.partition, MeasureLaw.CPOISSON, 2, 5)
        D = amostra.chaos_atoms()
        M = amostra.increments
        self.assertAlmostEqual(eval_multiple_integral(amostra, f), 3 * 2.0 * D[0] * M[1], places=12)

    def test_multiplicidade_tres_rejeitada(self):
        f = SymmetricKernel(self.partition, 3, multisets={(1, 1, 1): 1.0})
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 2, 5)
        with self.assertRaises(UnsupportedOrderError):
            eval_multiple_integral(amostra, f)

    def test_linearidade(self):
        rng = np.random.default_rng(3)
        f = _random_kernel(rng, self.partition, diagonal=True)
        g = _random_kernel(rng, self.partition, diagonal=True)
        lote = sample_measure_batch(self.partition, MeasureLaw.CPOISSON, 8, 0, 100)
        np.testing.assert_allclose(
            eval_multiple_integral(lote, 2.0 * f - g),
            2.0 * eval_multiple_integral(lote, f) - eval_multiple_integral(lote, g),
            rtol=1e-10, atol=1e-10,
        )

    def test_lote_igual_a_ensaio_isolado(self):
        rng = np.random.default_rng(5)
        f = _random_kernel(rng, self.partition, diagonal=True)
        lote = sample_measure_batch(self.partition, MeasureLaw.CPOISSON, 8, 20, 10)
        for linha in range(10):
            self.assertAlmostEqual(
                eval_multiple_integral(lote.row(linha), f),
                eval_multiple_integral(lote, f)[linha],
                places=12,
            )


class ProductFormulaTest(SimpleTestCase):
    """Fórmula do produto, por ensaio."""

    def test_indicadora_mesma_celula(self):
        """p = q = 1, f = g = 1_B, mu(B) = 1: M^2 = (M^2 - M - 1) + M + 1."""
        partition = build_partition([(1.0, 1.0)])
        f = SymmetricKernel(partition, 1, dense=[1.0])
        lote = sample_measure_batch(partition, MeasureLaw.CPOISSON, 21, 0, 300)
        lhs, rhs = product_formula_check(lote, f, f)
        np.testing.assert_allclose(lhs, lote.increments[:, 0] ** 2, rtol=1e-14)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_celulas_disjuntas(self):
        partition = uniform_partition(2)
        f = SymmetricKernel(partition, 1, dense=[1.0, 0.0])
        g = SymmetricKernel(partition, 1, dense=[0.0, 1.0])
        amostra = sample_measure(partition, MeasureLaw.CPOISSON, 21, 3)
        lhs, rhs = product_formula_check(amostra, f, g)
        self.assertAlmostEqual(lhs, amostra.increments[0] * amostra.increments[1], places=14)
        self.assertAlmostEqual(lhs, rhs, places=12)

    def _verifica(self, law, p, q, seed):
        rng = np.random.default_rng(seed)
        partition = _random_partition(rng, 5)

        def nucleo(ordem):
            if ordem == 1:
                return SymmetricKernel(partition, 1, dense=rng.normal(size=5))
            return _random_kernel(rng, partition)

        f, g = nucleo(p), nucleo(q)
        lote = sample_measure_batch(partition, law, seed, 0, 1000)
        lhs, rhs = product_formula_check(lote, f, g)
        escala = np.maximum(np.abs(lhs), 1.0)
        self.assertLessEqual(float(np.max(np.abs(lhs - rhs) / escala)), 1e-10)

    def test_poisson_ordens_um_e_dois(self):
        for p, q in ((1, 1), (1, 2), (2, 1), (2, 2)):
            with self.subTest(p=p, q=q):
                self._verifica(MeasureLaw.CPOISSON, p, q, seed=100 + 10 * p + q)

    def test_gaussiana_ordens_um_e_dois(self):
        for p, q in ((1, 1), (1, 2), (2, 2)):
            with self.subTest(p=p, q=q):
                self._verifica(MeasureLaw.GAUSSIAN, p, q, seed=200 + 10 * p + q)

    def test_ordem_nao_suportada(self):
        partition = uniform_partition(3)
        f = SymmetricKernel(partition, 3, multisets={(0, 1, 2): 1.0})
        amostra = sample_measure(partition, MeasureLaw.CPOISSON, 1, 0)
        with self.assertRaises(UnsupportedOrderError):
            product_formula_check(amostra, f, f)


class ConditionalProjectionTest(SimpleTestCase):
    """Projeção condicional em Z_t."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.2), (1.0, 0.7)])
        self.resolution = Resolution(self.partition)
        self.f = _pair_kernel(self.partition)

    def test_t_um_preserva(self):
        projetado = conditional_projection(self.f, self.resolution, 1.0)
        np.testing.assert_array_equal(projetado.dense, self.f.dense)

    def test_t_zero_zera(self):
        projetado = conditional_projection(self.f, self.resolution, 0.0)
        self.assertEqual(projetado.norm_sq(), 0.0)

    def test_exige_as_duas_celulas(self):
        projetado = conditional_projection(self.f, self.resolution, 0.5)
        self.assertEqual(projetado.norm_sq(), 0.0)

    def test_diagonal_dentro_do_recorte(self):
        f = SymmetricKernel(self.partition, 2, dense=[[1.0, 1.0], [1.0, 3.0]])
        projetado = conditional_projection(f, self.resolution, 0.5)
        np.testing.assert_array_equal(projetado.dense, [[1.0, 0.0], [0.0, 0.0]])


class AdaptedIntegrandTest(SimpleTestCase):
    """Integrando de Clark–Ocone."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.2), (1.0, 0.7)])
        self.f = _pair_kernel(self.partition)
        self.amostra = sample_measure(self.partition, MeasureLaw.CPOISSON, 17, 2)

    def test_ordem_um_deterministica(self):
        f = SymmetricKernel(self.partition, 1, dense=[0.3, -1.2])
        u = adapted_integrand(f, Resolution(self.partition), self.amostra)
        np.testing.assert_array_equal(u.values, [0.3, -1.2])

    def test_ordem_dois_direta(self):
        u = adapted_integrand(self.f, Resolution(self.partition), self.amostra)
        np.testing.assert_allclose(u.values, [0.0, 2.0 * self.amostra.increments[0]])

    def test_ordem_dois_invertida(self):
        resolucao = Resolution(self.partition, Direction.REVERSED)
        u = adapted_integrand(self.f, resolucao, self.amostra)
        np.testing.assert_allclose(u.values, [2.0 * self.amostra.increments[1], 0.0])

    def test_adaptacao(self):
        """Alterar incrementos de células posteriores não muda h(c)."""
        rng = np.random.default_rng(1)
        partition = _random_partition(rng, 6)
        f = _random_kernel(rng, partition)
        resolucao = Resolution(partition)
        base = rng.normal(size=6)
        u = adapted_integrand(f, resolucao, MeasureSample.from_increments(partition, 'gaussian', base))
        for posicao, cell in enumerate(resolucao.order):
            alterado = base.copy()
            posteriores = resolucao.order[posicao:]
            alterado[posteriores] = rng.normal(size=len(posteriores))
            v = adapted_integrand(f, resolucao, MeasureSample.from_increments(partition, 'gaussian', alterado))
            self.assertAlmostEqual(u.values[cell], v.values[cell], places=12)

    def test_ordem_tres_rejeitada(self):
        f = SymmetricKernel(self.partition, 3, multisets={(0, 0, 1): 1.0})
        with self.assertRaises(UnsupportedOrderError):
            adapted_integrand(f, Resolution(self.partition), self.amostra)

    def test_clark_ocone_exato(self):
        """J(h(f)) = I_2(f) por ensaio para núcleos fora da diagonal."""
        rng = np.random.default_rng(2024)
        for n in (2, 5, 10):
            partition = _random_partition(rng, n)
            f = _random_kernel(rng, partition)
            for law in MeasureLaw:
                lote = sample_measure_batch(partition, law, n, 0, 1000)
                alvo = eval_multiple_integral(lote, f)
                for direcao in Direction:
                    u = adapted_integrand(f, Resolution(partition, direcao), lote)
                    obtido = adapted_integral(u, lote)
                    escala = np.maximum(np.abs(alvo), 1.0)
                    self.assertLessEqual(float(np.max(np.abs(obtido - alvo) / escala)), 1e-10)

    def test_clark_ocone_esparso(self):
        """Mesmo resultado quando o operador anterior é esparso."""
        n = 40
        partition = uniform_partition(n, mass=0.25)
        matriz = np.zeros((n, n))
        for j in range(n - 1):
            matriz[j, j + 1] = matriz[j + 1, j] = 1.0 + j / n
        f = SymmetricKernel(partition, 2, dense=matriz, offdiag_only=True)
        lote = sample_measure_batch(partition, MeasureLaw.CPOISSON, 6, 0, 200)
        u = adapted_integrand(f, Resolution(partition, Direction.REVERSED), lote)
        np.testing.assert_allclose(adapted_integral(u, lote), eval_multiple_integral(lote, f), rtol=1e-10, atol=1e-10)


class AdaptedIntegralTest(SimpleTestCase):
    """Integrais adaptadas e desacopladas."""

    def setUp(self):
        self.partition = build_partition([(1.0, 0.25), (0.5, 0.5), (2.0, 0.75), (1.5, 1.0)])
        self.resolution = Resolution(self.partition)
        self.f = _random_kernel(np.random.default_rng(4), self.partition)

    def test_integrando_deterministico(self):
        amostra = sample_measure(self.partition, MeasureLaw.CPOISSON, 3, 1)
        valores = [0.5, -1.0, 2.0, 0.25]
        u = deterministic_integrand(valores, self.resolution, MeasureLaw.CPOISSON)
        h = FirstOrderKernel(self.partition, valores)
        self.assertAlmostEqual(adapted_integral(u, amostra), integrate_first_order(amostra, h), places=14)

    def test_ensaio_diferente(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 3, 1)
        outra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 3, 2)
        u = adapted_integrand(self.f, self.resolution, amostra)
        with self.assertRaises(StreamMismatchError):
            adapted_integral(u, outra)

    def test_lei_diferente(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 3, 1)
        u = deterministic_integrand(np.ones(4), self.resolution, MeasureLaw.CPOISSON)
        with self.assertRaises(StreamMismatchError):
            adapted_integral(u, amostra)

    def test_colisao_de_fluxo(self):
        amostra = sample_measure(self.partition, MeasureLaw.GAUSSIAN, 3, 1)
        u = adapted_integrand(self.f, self.resolution, amostra)
        with self.assertRaises(StreamCollisionError):
            decoupled_adapted_integral(u, amostra)

    def test_integrando_nulo(self):
        copia = sample_measure(self.partition, MeasureLaw.CPOISSON, 3, 1, stream=STREAM_COPY)
        u = deterministic_integrand(np.zeros(4), self.resolution, MeasureLaw.CPOISSON)
        self.assertEqual(decoupled_adapted_integral(u, copia), 0.0)

    def test_copias_em_lote(self):
        """u de um ensaio contra K cópias devolve K valores."""
        amostra = sample_measure(self.partition, MeasureLaw.CPOISSON, 3, 1)
        u = adapted_integrand(self.f, self.resolution, amostra)
        copias = sample_measure_batch(self.partition, MeasureLaw.CPOISSON, 3, 0, 25, stream=STREAM_COPY)
        valores = decoupled_adapted_integral(u, copias)
        self.assertEqual(valores.shape, (25,))
        self.assertAlmostEqual(valores[4], float(u.values @ copias.increments[4]), places=12)

    @tag('slow')
    def test_isometria_e_ortogonalidade(self):
        """Var I_d(f) ~ d! ||f||^2 e Cov(I_1, I_2) ~ 0 dentro de 4 sigma."""
        rng = np.random.default_rng(77)
        h = SymmetricKernel(self.partition, 1, dense=rng.normal(size=4))
        f = _random_kernel(rng, self.partition, diagonal=True)
        for law in MeasureLaw:
            lote = sample_measure_batch(self.partition, law, 5150, 0, 100000)
            um = eval_multiple_integral(lote, h)
            dois = eval_multiple_integral(lote, f)
            for valores, alvo in ((um, h.norm_sq()), (dois, 2.0 * f.norm_sq())):
                quadrados = valores * valores
                erro = quadrados.std(ddof=1) / np.sqrt(len(quadrados))
                self.assertLess(_z_score(quadrados.mean(), alvo, erro), 4.0)
            produto = um * dois
            erro = produto.std(ddof=1) / np.sqrt(len(produto))
            self.assertLess(_z_score(produto.mean(), 0.0, erro), 4.0)

    @tag('slow')
    def test_isometria_da_integral_adaptada(self):
        lote = sample_measure_batch(self.partition, MeasureLaw.CPOISSON, 909, 0, 100000)
        u = adapted_integrand(self.f, self.resolution, lote)
        quadrados = adapted_integral(u, lote) ** 2
        erro = quadrados.std(ddof=1) / np.sqrt(len(quadrados))
        self.assertLess(_z_score(quadrados.mean(), float(np.mean(u.norm_sq)), erro), 4.0)

    @tag('slow')
    def test_identidade_de_martingale(self):
        """E[Phi I_2(f)] = E[Phi I_2(f 1_{Z_t^2})] com Phi mensurável em Z_t."""
        rng = np.random.default_rng(12)
        f = _random_kernel(rng, self.partition, diagonal=True)
        mascara = self.resolution.slice_mask(0.5)
        projetado = conditional_projection(f, self.resolution, 0.5)
        for law in MeasureLaw:
            lote = sample_measure_batch(self.partition, law, 4242, 0, 100000)
            phi = np.cos(lote.increments[:, mascara].sum(axis=1))
            diferenca = phi * (eval_multiple_integral(lote, f) - eval_multiple_integral(lote, projetado))
            erro = diferenca.std(ddof=1) / np.sqrt(len(diferenca))
            self.assertLess(_z_score(diferenca.mean(), 0.0, erro), 4.0)

    @tag('slow')
    def test_funcao_caracteristica_condicional(self):
        """Dado o fluxo principal, a CF das cópias é exp(psi(u; lambda))."""
        for law in MeasureLaw:
            principal = sample_measure(self.partition, law, 31, 7)
            u = adapted_integrand(self.f, self.resolution, principal)
            copias = sample_measure_batch(self.partition, law, 31, 0, 100000, stream=STREAM_COPY)
            valores = decoupled_adapted_integral(u, copias)
            for lam in np.linspace(-3, 3, 21):
                termos = np.exp(1j * lam * valores)
                erro = np.sqrt(termos.real.var(ddof=1) + termos.imag.var(ddof=1)) / np.sqrt(len(valores))
                alvo = np.exp(levy_exponent_values(law, u.values, self.partition.masses, lam))
                self.assertLessEqual(abs(termos.mean() - alvo), 4.0 * erro + 1e-12)

    @tag('slow')
    def test_integrando_deterministico_mesma_lei(self):
        """Cópia desacoplada de u determinístico tem a mesma lei que a original."""
        valores = np.array([0.5, -1.0, 2.0, 0.25])
        u = deterministic_integrand(valores, self.resolution, MeasureLaw.CPOISSON)
        original = adapted_integral(u, sample_measure_batch(self.partition, 'cpoisson', 8, 0, 50000))
        copia = decoupled_adapted_integral(
            u, sample_measure_batch(self.partition, 'cpoisson', 8, 0, 50000, stream=STREAM_REPLAY),
        )
        diferenca = original.mean() - copia.mean()
        erro = np.sqrt(original.var(ddof=1) / len(original) + copia.var(ddof=1) / len(copia))
        self.assertLess(_z_score(diferenca, 0.0, erro), 4.0)
