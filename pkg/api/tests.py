"""
Testes para a API de consulta do registro.
"""
from django.contrib.auth.models import User
from django.test import TestCase
from django.urls import reverse
from rest_framework.test import APIClient

from harness.models import ExperimentRun
from harness.tests import ExperimentRunFactory


class ExperimentRunAPITest(TestCase):
    """Listagem, detalhe e resumo das execuções."""

    def setUp(self):
        self.client = APIClient()
        self.user = User.objects.create_user(username='analista', password='senha-de-teste')
        self.concluida = ExperimentRunFactory(subcommand='clt', status=ExperimentRun.STATUS_DONE,
                                              exit_code=0, sha256='a' * 64)
        self.falha = ExperimentRunFactory(subcommand='lk', status=ExperimentRun.STATUS_FAILED, exit_code=1)

    def test_exige_autenticacao(self):
        response = self.client.get(reverse('api:experimentrun-list'))
        self.assertIn(response.status_code, (401, 403))

    def test_listagem(self):
        self.client.force_authenticate(self.user)
        response = self.client.get(reverse('api:experimentrun-list'))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.data['count'], 2)
        self.assertNotIn('config', response.data['results'][0])

    def test_filtro_por_situacao(self):
        self.client.force_authenticate(self.user)
        response = self.client.get(reverse('api:experimentrun-list'), {'status': ExperimentRun.STATUS_FAILED})
        self.assertEqual(response.data['count'], 1)
        self.assertEqual(response.data['results'][0]['exit_code'], 1)

    def test_detalhe_traz_configuracao(self):
        self.client.force_authenticate(self.user)
        response = self.client.get(reverse('api:experimentrun-detail', args=[self.concluida.id]))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response.data['sha256'], 'a' * 64)
        self.assertIn('config', response.data)

    def test_somente_leitura(self):
        self.client.force_authenticate(self.user)
        response = self.client.post(reverse('api:experimentrun-list'), {'subcommand': 'lk'})
        self.assertEqual(response.status_code, 405)

    def test_resumo(self):
        self.client.force_authenticate(self.user)
        response = self.client.get(reverse('api:experimentrun-resumo'))
        self.assertEqual(response.status_code, 200)
        self.assertEqual({(linha['subcommand'], linha['total']) for linha in response.data}, {('clt', 1), ('lk', 1)})
