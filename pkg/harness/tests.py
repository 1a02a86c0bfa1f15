"""
Testes para a app harness.
"""
import io
import json
import math
import tempfile
from pathlib import Path
from unittest import mock

import factory
import numpy as np
from django.conf import settings as django_settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from hypothesis import given, settings, strategies as st

from harness.aggregation import mc_aggregate
from harness.config import (
    LambdaGrid, RunConfig, build_run_config, load_kernel, load_law, load_partition,
)
from harness.models import ExperimentRun
from harness.reports import format_value, render_csv, resolve_output, schema_header, write_report
from harness.runner import TrialRunner
from harness.services import run, run_and_record
from harness.tasks import run_experiment
from rmeasure.exponent import LevyCharacteristics
from rmeasure.sampling import MeasureLaw
from utils.exceptions import ConfigurationError, MonteCarloBudgetError, PreconditionError

PARTITION = {'cells': [{'mass': 1.0, 'tau': 0.5}, {'mass': 1.0, 'tau': 1.0}]}
PARTITION_3 = {'cells': [[1.0, 1 / 3], [0.5, 2 / 3], [2.0, 1.0]]}
FIRST_ORDER = {'order': 1, 'entries': [[0, 0.5], [1, -1.0]], 'partition': PARTITION}
OFFDIAGONAL = {
    'order': 2, 'entries': [[0, 1, 0.5], [1, 2, 0.25], [0, 2, -0.3]], 'offdiag_only': True,
    'partition': PARTITION_3,
}


class ExperimentRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = ExperimentRun

    subcommand = 'lk'
    seed = factory.Sequence(lambda n: str(n))
    status = ExperimentRun.STATUS_PENDING
    config = factory.LazyAttribute(lambda obj: {'subcommand': 'lk', 'seed': int(obj.seed)})


class _JsonFiles:
    """Diretório temporário com os arquivos de entrada."""

    def setUp(self):
        super().setUp()
        self._dir = tempfile.TemporaryDirectory()
        self.addCleanup(self._dir.cleanup)
        self.dir = Path(self._dir.name)

    def write(self, nome, conteudo):
        caminho = self.dir / nome
        caminho.write_text(conteudo if isinstance(conteudo, str) else json.dumps(conteudo), encoding='utf-8')
        return caminho


class _SquareJob:
    def __call__(self, start, count):
        indices = np.arange(start, start + count, dtype=np.float64)
        return indices * indices, -indices


class AggregationTest(SimpleTestCase):
    """Média e erro padrão com soma em blocos de ordem fixa."""

    def test_sequencia_constante(self):
        media, erro = mc_aggregate(np.full(1000, 2.5), chunk=64)
        self.assertEqual(media, 2.5)
        self.assertEqual(erro, 0.0)

    def test_alternada(self):
        n = 1000
        valores = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        media, erro = mc_aggregate(valores, chunk=100)
        self.assertEqual(media, 0.0)
        self.assertAlmostEqual(erro, 1.0 / math.sqrt(n - 1), places=14)

    def test_um_ensaio(self):
        media, erro = mc_aggregate([3.0])
        self.assertEqual(media, 3.0)
        self.assertTrue(math.isnan(erro))

    def test_vazio(self):
        with self.assertRaises(MonteCarloBudgetError):
            mc_aggregate([])

    def test_complexos(self):
        media, erro = mc_aggregate(np.full(10, 1 + 2j))
        self.assertEqual(media, 1 + 2j)
        self.assertEqual(erro, 0.0)

    @settings(max_examples=40, deadline=None)
    @given(
        valores=st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=300),
        chunk=st.integers(min_value=1, max_value=64),
        semente=st.integers(min_value=0, max_value=2 ** 32 - 1),
    )
    def test_permutacao_com_indice(self, valores, chunk, semente):
        """Valores embaralhados com o índice do ensaio somam nos mesmos bits."""
        valores = np.array(valores)
        permutacao = np.random.default_rng(semente).permutation(len(valores))
        referencia = mc_aggregate(valores, chunk)
        embaralhado = mc_aggregate(valores[permutacao], chunk, trial_index=permutacao)
        self.assertEqual(referencia[0], embaralhado[0])
        self.assertEqual(referencia[1], embaralhado[1])


class RunnerTest(SimpleTestCase):
    """Execução em blocos fixos."""

    def test_blocos(self):
        runner = TrialRunner(chunk_size=4, workers=1)
        self.assertEqual(runner.chunks(10), [(0, 4), (4, 4), (8, 2)])
        with self.assertRaises(MonteCarloBudgetError):
            runner.chunks(0)

    def test_concatena_na_ordem(self):
        quadrados, negativos = TrialRunner(chunk_size=3, workers=1).map(_SquareJob(), 10)
        np.testing.assert_array_equal(quadrados, np.arange(10.0) ** 2)
        np.testing.assert_array_equal(negativos, -np.arange(10.0))

    def test_workers_nao_alteram_resultado(self):
        serial = TrialRunner(chunk_size=7, workers=1).map(_SquareJob(), 50)
        paralelo = TrialRunner(chunk_size=7, workers=3).map(_SquareJob(), 50)
        for a, b in zip(serial, paralelo):
            np.testing.assert_array_equal(a, b)


class ConfigTest(_JsonFiles, SimpleTestCase):
    """Validação da configuração e dos arquivos JSON."""

    def test_grade_de_lambda(self):
        grade = LambdaGrid.from_text('0:3:7')
        np.testing.assert_allclose(grade.points(), [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
        self.assertEqual(str(grade), '0.0:3.0:7')

    def test_grade_padrao_simetrica(self):
        pontos = LambdaGrid.from_text().points()
        self.assertEqual(len(pontos), 21)
        np.testing.assert_allclose(pontos, -pontos[::-1])

    def test_grade_invalida(self):
        for texto in ('1:2', '0:inf:3', '3:0:5', '0:1:0', 'a:b:c'):
            with self.assertRaises(ConfigurationError, msg=texto):
                LambdaGrid.from_text(texto)

    def test_ensaios_invalidos(self):
        with self.assertRaises(ConfigurationError):
            build_run_config(subcommand='simulate', partition_path='p.json', trials=0)

    def test_arquivo_obrigatorio(self):
        with self.assertRaises(ConfigurationError) as contexto:
            build_run_config(subcommand='lk')
        self.assertIn('kernel_path', str(contexto.exception))

    def test_cenario_sem_n(self):
        with self.assertRaises(ConfigurationError):
            build_run_config(subcommand='scenario', scenario='block', trials=10)

    def test_semente_fora_do_intervalo(self):
        with self.assertRaises(ConfigurationError):
            build_run_config(subcommand='clt', n_values=[4], trials=10, seed=2 ** 64)

    def test_nome_do_registro(self):
        config = build_run_config(subcommand='scenario', scenario='switching', switching=False,
                                  n_values=[25], trials=10)
        self.assertEqual(config.name, 'scenario no-switch')
        self.assertEqual(RunConfig.model_validate(config.to_json()), config)

    def test_arquivo_ausente(self):
        caminho = self.dir / 'nao_existe.json'
        with self.assertRaises(ConfigurationError) as contexto:
            load_kernel(caminho)
        self.assertEqual(contexto.exception.exit_code, 1)
        self.assertIn(str(caminho), str(contexto.exception))

    def test_json_malformado(self):
        caminho = self.write('k.json', '{"order": 1, "entries": [')
        with self.assertRaises(ConfigurationError):
            load_kernel(caminho)

    def test_campo_desconhecido(self):
        caminho = self.write('p.json', {'cells': [[1.0, 1.0]], 'extra': 1})
        with self.assertRaises(ConfigurationError):
            load_partition(caminho)

    def test_nucleo_com_particao_embutida(self):
        f = load_kernel(self.write('k.json', FIRST_ORDER))
        self.assertEqual(f.order, 1)
        np.testing.assert_array_equal(f.dense, [0.5, -1.0])

    def test_nucleo_sem_particao(self):
        caminho = self.write('k.json', {'order': 1, 'entries': [[0, 1.0]]})
        with self.assertRaises(ConfigurationError):
            load_kernel(caminho)
        f = load_kernel(caminho, load_partition(self.write('p.json', PARTITION)))
        self.assertEqual(len(f.partition), 2)

    def test_particao_com_celulas_em_objeto(self):
        """Células como objetos {mass, tau}; a ordem no arquivo define os ids."""
        particao = load_partition(self.write('p.json', PARTITION))
        self.assertEqual(len(particao), 2)
        np.testing.assert_array_equal(particao.masses, [1.0, 1.0])
        np.testing.assert_array_equal(particao.taus, [0.5, 1.0])

    def test_particao_com_pares_equivale_a_objetos(self):
        pares = load_partition(self.write('pares.json', {'cells': [[1.0, 0.5], [1.0, 1.0]]}))
        objetos = load_partition(self.write('objetos.json', PARTITION))
        self.assertTrue(pares.same_as(objetos))

    def test_celula_incompleta(self):
        for cells in ([{'mass': 1.0}], [[1.0, 0.5, 2.0]], [{'mass': 1.0, 'tau': 0.5, 'id': 3}]):
            with self.subTest(cells=cells):
                with self.assertRaises(ConfigurationError) as contexto:
                    load_partition(self.write('p.json', {'cells': cells}))
                self.assertEqual(contexto.exception.exit_code, 1)

    def test_particao_invalida_e_precondicao(self):
        caminho = self.write('p.json', {'cells': [[1.0, 0.5], [1.0, 0.5]]})
        with self.assertRaises(PreconditionError) as contexto:
            load_partition(caminho)
        self.assertEqual(contexto.exception.exit_code, 2)

    def test_lei_estendida(self):
        self.assertIs(load_law(self.write('l.json', {'law': 'gaussian'})), MeasureLaw.GAUSSIAN)
        lei = load_law(self.write('e.json', {'gaussian_variance': 0.5, 'atoms': [[1.0, 2.0]]}))
        self.assertIsInstance(lei, LevyCharacteristics)
        self.assertEqual(lei.atoms, ((1.0, 2.0),))


class ReportTest(_JsonFiles, SimpleTestCase):
    """Formato dos CSVs."""

    def test_cabecalho_e_campos(self):
        report = render_csv(('a', 'b', 'c'), [(1, 0.1, None), (2, True, 'x')])
        linhas = report.text.splitlines()
        self.assertEqual(linhas[0], schema_header())
        self.assertEqual(linhas[0], '# chaoslab v0.1.0 schema=1')
        self.assertEqual(linhas[1], 'a,b,c')
        self.assertEqual(linhas[2], '1,0.1,')
        self.assertEqual(linhas[3], '2,1,x')
        self.assertEqual(report.n_rows, 2)

    def test_floats_com_repr(self):
        self.assertEqual(format_value(np.float64(1 / 3)), repr(1 / 3))
        self.assertEqual(format_value(np.int64(7)), '7')
        self.assertEqual(format_value(None), '')

    def test_linha_com_campos_faltando(self):
        with self.assertRaises(ValueError):
            render_csv(('a', 'b'), [(1,)])

    def test_caminho_relativo_sob_output_dir(self):
        conf = {**django_settings.CHAOSLAB, 'OUTPUT_DIR': self.dir}
        report = render_csv(('a',), [(1,)])
        with override_settings(CHAOSLAB=conf):
            destino = write_report(report, Path('lk') / 'saida.csv')
            self.assertEqual(resolve_output(self.dir / 'x.csv'), self.dir / 'x.csv')
        self.assertEqual(destino, self.dir / 'lk' / 'saida.csv')
        self.assertEqual(destino.read_text(encoding='utf-8'), report.text)


class ServicesTest(_JsonFiles, SimpleTestCase):
    """Subcomandos de ponta a ponta, sem registro no banco."""

    def _config(self, **valores):
        valores.setdefault('chunk_size', 500)
        return build_run_config(**valores)

    def _linhas(self, report):
        return [linha.split(',') for linha in report.text.splitlines()[2:]]

    def test_lk_analitico(self):
        kernel = self.write('k.json', FIRST_ORDER)
        resultado = run(self._config(subcommand='lk', kernel_path=kernel, law='gaussian',
                                     lambda_grid=LambdaGrid.from_text('0:3:7')))
        self.assertEqual(resultado.report.columns, ('lambda', 're_psi', 'im_psi'))
        for lam, re_psi, im_psi in self._linhas(resultado.report):
            self.assertAlmostEqual(float(re_psi), -0.625 * float(lam) ** 2, places=14)
            self.assertEqual(float(im_psi), 0.0)

    def test_lk_empirico(self):
        kernel = self.write('k.json', FIRST_ORDER)
        resultado = run(self._config(subcommand='lk', kernel_path=kernel, law='cpoisson', trials=20000,
                                     lambda_grid=LambdaGrid.from_text('-3:3:7'), seed=5))
        for lam, re_psi, im_psi, emp_re, emp_im, erro in self._linhas(resultado.report):
            alvo = np.exp(complex(float(re_psi), float(im_psi)))
            distancia = abs(complex(float(emp_re), float(emp_im)) - alvo)
            self.assertLessEqual(distancia, 4.0 * float(erro) + 1e-12, msg=f"lambda={lam}")

    def test_lk_descritor_estendido_sem_amostragem(self):
        kernel = self.write('k.json', FIRST_ORDER)
        lei = self.write('l.json', {'gaussian_variance': 1.0})
        resultado = run(self._config(subcommand='lk', kernel_path=kernel, law_path=lei,
                                     lambda_grid=LambdaGrid.from_text('1:1:1')))
        self.assertAlmostEqual(float(self._linhas(resultado.report)[0][1]), -0.625, places=14)
        with self.assertRaises(PreconditionError):
            run(self._config(subcommand='lk', kernel_path=kernel, law_path=lei, trials=10))

    def test_simulate(self):
        particao = self.write('p.json', PARTITION_3)
        resultado = run(self._config(subcommand='simulate', partition_path=particao, trials=20000, seed=3))
        linhas = self._linhas(resultado.report)
        self.assertEqual(len(linhas), 3)
        for cell, massa, tau, media, erro_media, variancia, erro_variancia in linhas:
            self.assertLessEqual(abs(float(media)), 4.0 * float(erro_media))
            self.assertLessEqual(abs(float(variancia) - float(massa)), 4.0 * float(erro_variancia))

    def test_chaos_check_fora_da_diagonal(self):
        kernel = self.write('k.json', OFFDIAGONAL)
        resultado = run(self._config(subcommand='chaos_check', kernel_path=kernel, trials=4000, seed=9))
        linhas = {linha[0]: linha[1:] for linha in self._linhas(resultado.report)}
        self.assertEqual(set(linhas), {
            'mean', 'variance', 'clark_ocone_max_rel_err', 'product_formula_max_rel_err', 'martingale_gap',
        })
        self.assertLess(float(linhas['clark_ocone_max_rel_err'][0]), 1e-10)
        self.assertLess(float(linhas['product_formula_max_rel_err'][0]), 1e-10)
        for nome in ('mean', 'variance', 'martingale_gap'):
            valor, erro, alvo = (float(x) for x in linhas[nome])
            self.assertLessEqual(abs(valor - alvo), 4.0 * erro, msg=nome)

    def test_chaos_check_com_diagonal(self):
        kernel = self.write('k.json', {'order': 2, 'entries': [[0, 0, 1.0], [0, 1, 0.5]], 'partition': PARTITION})
        resultado = run(self._config(subcommand='chaos_check', kernel_path=kernel, trials=1000))
        checagens = [linha[0] for linha in self._linhas(resultado.report)]
        self.assertEqual(checagens, ['mean', 'variance', 'martingale_gap'])

    def test_poc_verify_deterministico(self):
        resultado = run(self._config(subcommand='poc_verify', family='deterministic', law='gaussian',
                                     n_values=[4, 16], trials=2000, lambda_grid=LambdaGrid.from_text('0.5:2:4')))
        linhas = self._linhas(resultado.report)
        cp2 = [float(linha[3]) for linha in linhas if linha[2] == 'cp2_max']
        self.assertEqual(len(cp2), 2)
        for valor in cp2:
            self.assertLess(valor, 1e-12)

    def test_bytes_identicos_entre_workers(self):
        kernel = self.write('k.json', OFFDIAGONAL)
        textos = {
            workers: run(self._config(subcommand='chaos_check', kernel_path=kernel, trials=3000, seed=21,
                                      workers=workers)).report.text
            for workers in (1, 2, 4)
        }
        self.assertEqual(textos[1], textos[2])
        self.assertEqual(textos[1], textos[4])

    def test_bytes_identicos_entre_execucoes(self):
        particao = self.write('p.json', PARTITION)
        config = self._config(subcommand='simulate', partition_path=particao, trials=1500, seed=4)
        self.assertEqual(run(config).sha256, run(config).sha256)

    def test_grava_arquivo(self):
        kernel = self.write('k.json', FIRST_ORDER)
        destino = self.dir / 'saida' / 'lk.csv'
        resultado = run(self._config(subcommand='lk', kernel_path=kernel, out=destino))
        self.assertEqual(resultado.path, destino)
        self.assertEqual(destino.read_text(encoding='utf-8'), resultado.report.text)


class CommandTest(_JsonFiles, TestCase):
    """Comandos de gerenciamento e registro das execuções."""

    def test_lk_grava_e_registra(self):
        kernel = self.write('k.json', FIRST_ORDER)
        destino = self.dir / 'lk.csv'
        saida = io.StringIO()
        call_command('lk', '--kernel', str(kernel), '--lambda', '0:3:7', '--out', str(destino), stdout=saida)
        self.assertIn('7 linhas', saida.getvalue())

        execucao = ExperimentRun.objects.get()
        self.assertEqual(execucao.status, ExperimentRun.STATUS_DONE)
        self.assertEqual(execucao.exit_code, 0)
        self.assertEqual(execucao.subcommand, 'lk')
        self.assertEqual(execucao.output_path, str(destino))
        self.assertEqual(len(execucao.sha256), 64)
        self.assertEqual(execucao.config['lambda_grid']['count'], 7)

    def test_csv_no_stdout(self):
        kernel = self.write('k.json', FIRST_ORDER)
        saida = io.StringIO()
        call_command('lk', '--kernel', str(kernel), '--lambda', '1:1:1', '--no-record', stdout=saida)
        self.assertTrue(saida.getvalue().startswith('# chaoslab v0.1.0 schema=1\nlambda,re_psi,im_psi\n'))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_arquivo_ausente_sai_com_1(self):
        caminho = self.dir / 'ausente.json'
        with self.assertRaises(CommandError) as contexto:
            call_command('lk', '--kernel', str(caminho), stdout=io.StringIO())
        self.assertEqual(contexto.exception.returncode, 1)
        self.assertIn(str(caminho), str(contexto.exception))
        execucao = ExperimentRun.objects.get()
        self.assertEqual(execucao.status, ExperimentRun.STATUS_FAILED)
        self.assertEqual(execucao.exit_code, 1)

    def test_ensaios_invalidos_saem_com_1(self):
        particao = self.write('p.json', PARTITION)
        with self.assertRaises(CommandError) as contexto:
            call_command('simulate', '--partition', str(particao), '--trials', '0', stdout=io.StringIO())
        self.assertEqual(contexto.exception.returncode, 1)

    def test_precondicao_sai_com_2(self):
        particao = self.write('p.json', {'cells': [[1.0, 0.5], [1.0, 0.5]]})
        with self.assertRaises(CommandError) as contexto:
            call_command('simulate', '--partition', str(particao), '--trials', '10', stdout=io.StringIO())
        self.assertEqual(contexto.exception.returncode, 2)

    def test_ordem_nao_suportada_sai_com_2(self):
        kernel = self.write('k.json', {'order': 2, 'entries': [[0, 1, 1.0]], 'partition': PARTITION})
        with self.assertRaises(CommandError) as contexto:
            call_command('lk', '--kernel', str(kernel), '--no-record', stdout=io.StringIO())
        self.assertEqual(contexto.exception.returncode, 2)

    def test_cenario_em_blocos(self):
        destino = self.dir / 'bloco.csv'
        call_command('scenario', 'block', '--n', '1', '4', '--trials', '500', '--poc-trials', '0',
                     '--lambda', '0.5:1:2', '--out', str(destino), '--no-record', stdout=io.StringIO())
        linhas = destino.read_text(encoding='utf-8').splitlines()
        self.assertEqual(linhas[1], 'n,lambda,metric,value,std_err')
        self.assertTrue(any(',closed_form_gap,' in linha for linha in linhas))

    def test_clt_bytes_identicos_entre_workers(self):
        textos = []
        for workers in ('1', '2'):
            saida = io.StringIO()
            call_command('clt', '--n', '2', '--trials', '2000', '--poc-trials', '200', '--refinement', '2',
                         '--lambda', '0.5:1:2', '--chunk-size', '500', '--workers', workers, '--no-record',
                         stdout=saida)
            textos.append(saida.getvalue())
        self.assertEqual(textos[0], textos[1])

    def test_enfileirar_cria_registro(self):
        kernel = self.write('k.json', FIRST_ORDER)

        with mock.patch('harness.tasks.run_experiment.delay') as delay:
            delay.return_value = mock.Mock(id='tarefa-1')
            call_command('lk', '--kernel', str(kernel), '--enqueue', stdout=io.StringIO())
        execucao = ExperimentRun.objects.get()
        delay.assert_called_once_with(str(execucao.id))
        self.assertEqual(execucao.celery_task_id, 'tarefa-1')
        self.assertEqual(execucao.status, ExperimentRun.STATUS_PENDING)


class TaskTest(_JsonFiles, TestCase):
    """Execução enfileirada de um registro pendente."""

    def test_executa_registro_pendente(self):
        kernel = self.write('k.json', FIRST_ORDER)
        config = build_run_config(subcommand='lk', kernel_path=kernel, lambda_grid=LambdaGrid.from_text('0:1:3'))
        execucao = ExperimentRunFactory(config=config.to_json(), seed=str(config.seed))
        resultado = run_experiment(str(execucao.id))

        execucao.refresh_from_db()
        self.assertEqual(resultado['status'], ExperimentRun.STATUS_DONE)
        self.assertEqual(execucao.status, ExperimentRun.STATUS_DONE)
        self.assertEqual(execucao.sha256, run(config).sha256)
        self.assertIsNotNone(execucao.duracao)

    def test_configuracao_gravada_invalida(self):
        execucao = ExperimentRunFactory(config={'subcommand': 'desconhecido'})
        resultado = run_experiment(str(execucao.id))
        execucao.refresh_from_db()
        self.assertEqual(resultado['exit_code'], 1)
        self.assertEqual(execucao.status, ExperimentRun.STATUS_FAILED)

    def test_registro_ja_executado(self):
        execucao = ExperimentRunFactory(status=ExperimentRun.STATUS_DONE, exit_code=0)
        self.assertEqual(run_experiment(str(execucao.id))['status'], ExperimentRun.STATUS_DONE)

    def test_registro_inexistente(self):
        self.assertEqual(run_experiment('00000000-0000-0000-0000-000000000000')['status'], 'erro')

    def test_falha_do_motor_fica_gravada(self):
        config = build_run_config(subcommand='lk', kernel_path=self.dir / 'sumiu.json')
        with self.assertRaises(ConfigurationError):
            run_and_record(config)
        execucao = ExperimentRun.objects.get()
        self.assertEqual((execucao.status, execucao.exit_code), (ExperimentRun.STATUS_FAILED, 1))
