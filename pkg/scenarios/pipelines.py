"""
Execução ponta a ponta dos dois cenários: sequência em blocos de Poisson e
funcional browniano com chaveamento.

Cada cenário devolve um ``ScenarioReport`` com linhas já na ordem das
colunas do CSV.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from chaos.integrals import eval_multiple_integral
from clt_suite.conditions import ks_std_err, ks_to_normal
from harness.aggregation import DEFAULT_CHUNK, mc_aggregate
from harness.runner import TrialRunner
from partition.cells import Resolution
from poc.arrays import ChaosIntegrand, build_tangent_pair
from poc.charfn import estimate_stable_cf
from poc.verdict import (
    PairSummary, VerdictTolerances, gaussian_target, poc_verdict, summarize_pair,
    summarize_trials, trend_ok,
)
from rmeasure.sampling import MeasureLaw, sample_measure_batch
from utils.exceptions import PreconditionError
from utils.validators import ensure_finite, lambda_points, validate_trials

from .block import block_example_closed_form, block_example_kernel
from .switching import (
    BrownianPath, SwitchingIntegrand, ito_cross_check, scaled_functional,
    switching_norm_limit, switching_target_cf,
)

logger = logging.getLogger(__name__)

BLOCK_COLUMNS = ('n', 'lambda', 'metric', 'value', 'std_err')
SWITCHING_COLUMNS = ('n', 'gamma', 'lambda', 'metric', 'value', 'std_err')


@dataclass
class ScenarioReport:
    scenario: str
    columns: Tuple[str, ...]
    rows: List[Tuple] = field(default_factory=list)
    trends: Dict[str, bool] = field(default_factory=dict)

    def series(self, metric: str) -> List[float]:
        posicao = self.columns.index('value')
        return [linha[posicao] for linha in self.rows if linha[self.columns.index('metric')] == metric]


def _n_values(n_values) -> List[int]:
    valores = sorted(int(n) for n in n_values)
    if not valores:
        raise PreconditionError("lista de n vazia")
    return valores


def _lambda_grid(lambda_grid):
    if lambda_grid is None:
        return lambda_points(settings.CHAOSLAB['LAMBDA_GRID'])
    return np.asarray(lambda_grid, dtype=np.float64)


# Cenário em blocos


class BlockJob:
    """Por ensaio: I_2(f_n) e |I_2(f_n) - forma fechada|."""

    def __init__(self, n: int, seed: int):
        self.n = n
        self.seed = seed
        self.kernel = block_example_kernel(n)

    def __call__(self, start: int, count: int):
        lote = sample_measure_batch(self.kernel.partition, MeasureLaw.CPOISSON, self.seed, start, count)
        valores = eval_multiple_integral(lote, self.kernel)
        return valores, np.abs(valores - block_example_closed_form(lote, self.n))


def run_block_scenario(
    n_values: Sequence[int], trials: int, seed: int, runner: Optional[TrialRunner] = None,
    lambda_grid: Optional[Sequence[float]] = None, poc_trials: Optional[int] = None,
    refinement: Optional[int] = None, chunk: int = DEFAULT_CHUNK,
) -> ScenarioReport:
    """
    Sequência em blocos: forma fechada, isometria, KS, CF empírica e o
    relatório de condicionamento sobre o núcleo refinado.

    Args:
        n_values: Valores de n
        trials: Ensaios por n para I_2(f_n)
        seed: Semente
        runner: Executor dos blocos de ensaios
        lambda_grid: Pontos lambda
        poc_trials: Ensaios da rota de condicionamento; 0 desliga
        refinement: Subcélulas por bloco na rota de condicionamento

    Returns:
        ScenarioReport: Linhas (n, lambda, metric, value, std_err)
    """
    conf = settings.CHAOSLAB
    trials = validate_trials(trials)
    runner = runner or TrialRunner()
    grade = _lambda_grid(lambda_grid)
    poc_trials = conf['POC_TRIALS'] if poc_trials is None else int(poc_trials)
    refinement = conf['POC_REFINEMENT'] if refinement is None else int(refinement)

    report = ScenarioReport('block', BLOCK_COLUMNS)
    sequencia = []
    for n in _n_values(n_values):
        valores, diferencas = runner.map(BlockJob(n, seed), trials, desc=f'bloco n={n}')
        valores = ensure_finite('I_2(f_n)', valores)
        report.rows.append((n, None, 'closed_form_gap', float(np.max(diferencas)), 0.0))
        report.rows.append((n, None, 'second_moment', *mc_aggregate(valores * valores, chunk)))
        report.rows.append((n, None, 'ks_to_normal', ks_to_normal(valores), ks_std_err(len(valores))))

        empirica = estimate_stable_cf(valores, None, grade, chunk)
        for indice, lam in enumerate(grade):
            distancia = abs(empirica.values[indice] - math.exp(-0.5 * lam * lam))
            report.rows.append((n, float(lam), 'cf_distance', distancia, float(empirica.std_errors[indice])))

        # Rota de condicionamento sobre o núcleo refinado
        if poc_trials > 0:
            kernel = block_example_kernel(n, refinement)
            integrand = ChaosIntegrand(kernel, Resolution(kernel.partition), head_time=n ** -0.5,
                                       label=f"bloco n={n}")
            resumo = summarize_trials(integrand, MeasureLaw.CPOISSON, seed, validate_trials(poc_trials),
                                      gaussian_target, grade, runner)
            sequencia.append((n, resumo))
        logger.info(f"Cenário em blocos n={n}: KS = {ks_to_normal(valores):.4f}")

    report.trends['ks_trend'] = trend_ok(report.series('ks_to_normal'))
    ultimo = _n_values(n_values)[-1]
    report.rows.append((ultimo, None, 'ks_trend', 1.0 if report.trends['ks_trend'] else 0.0, 0.0))
    if sequencia:
        verdict = poc_verdict(sequencia, None, grade, VerdictTolerances(chunk=chunk))
        report.rows.extend(linha.as_tuple() for linha in verdict.rows)
        report.trends.update(verdict.trends)
    return report


# Cenário com chaveamento


def switching_phi_target(pair, lam: float) -> np.ndarray:
    """exp(-lambda^2 W_1^2 / 2): CF condicional do limite W_1 N'."""
    terminal = BrownianPath.from_sample(pair.main).terminal
    return np.exp(-0.5 * lam * lam * terminal * terminal).astype(np.complex128)


class SwitchingJob:
    """
    Por ensaio e a partir do mesmo fluxo principal: W_1, A', ||u_n||^2,
    soma de Itô, ||pi_{t_n} u_n||^2 e o resumo do par tangente.
    """

    def __init__(self, integrand: SwitchingIntegrand, seed: int, lambda_grid, switching: bool):
        self.integrand = integrand
        self.seed = seed
        self.lambda_grid = np.asarray(lambda_grid, dtype=np.float64)
        self.switching = switching

    def __call__(self, start: int, count: int) -> Tuple:
        integrand = self.integrand
        pair = build_tangent_pair(
            integrand, integrand.partition, integrand.resolution, MeasureLaw.GAUSSIAN, self.seed, start, count,
        )
        path = BrownianPath.from_sample(pair.main)
        n = integrand.n
        resumo = summarize_pair(pair, switching_phi_target, self.lambda_grid)
        return (
            path.terminal,
            scaled_functional(path, n, self.switching),
            switching_norm_limit(path, n, self.switching),
            ito_cross_check(path, n, self.switching),
            pair.realized_norm_sq('head'),
            pair.realized_norm_sq(),
        ) + resumo.as_arrays()


def run_switching_scenario(
    n_values: Sequence[int], trials: int, seed: int, runner: Optional[TrialRunner] = None,
    steps: Optional[int] = None, gammas: Optional[Sequence[float]] = None,
    lambda_grid: Optional[Sequence[float]] = None, epsilon: Optional[float] = None,
    switching: bool = True, chunk: int = DEFAULT_CHUNK,
) -> ScenarioReport:
    """
    Funcional quadrático com chaveamento.

    Args:
        n_values: Valores de n
        trials: Ensaios por n
        seed: Semente
        runner: Executor dos blocos de ensaios
        steps: Passos m da grade (padrão ``CHAOSLAB['SWITCHING_STEPS']``)
        gammas: Pesos Z = exp(i gamma W_1)
        lambda_grid: Pontos lambda
        epsilon: t_n = epsilon^{1/sqrt(n)}
        switching: False usa W^(n) = W para todo n

    Returns:
        ScenarioReport: Linhas (n, gamma, lambda, metric, value, std_err)
    """
    conf = settings.CHAOSLAB
    trials = validate_trials(trials)
    runner = runner or TrialRunner()
    m = int(steps or conf['SWITCHING_STEPS'])
    gammas = [float(g) for g in (conf['SWITCHING_GAMMAS'] if gammas is None else gammas)]
    epsilon = conf['SWITCHING_EPSILON'] if epsilon is None else float(epsilon)
    grade = _lambda_grid(lambda_grid)

    report = ScenarioReport('switching' if switching else 'no-switch', SWITCHING_COLUMNS)
    sequencia = []
    for n in _n_values(n_values):
        integrand = SwitchingIntegrand(n, m, epsilon, switching)
        partes = runner.map(SwitchingJob(integrand, seed, grade, switching), trials, desc=f'chaveamento n={n}')
        terminal, escalado, norma, ito, cabeca, realizada = (ensure_finite(nome, valores) for nome, valores in zip(
            ('W_1', "A'", '||u_n||^2', 'soma de Itô', 'massa da cabeça', 'norma realizada'), partes[:6]))
        sequencia.append((n, PairSummary.from_arrays(grade, integrand.boundary, partes[6:])))

        report.rows.append((n, None, None, 'second_moment', *mc_aggregate(escalado * escalado, chunk)))
        report.rows.append((n, None, None, 'norm_gap', *mc_aggregate(np.abs(norma - terminal * terminal), chunk)))
        report.rows.append((n, None, None, 'ito_gap', *mc_aggregate(np.abs(escalado - ito), chunk)))
        report.rows.append((n, None, None, 'head_mass', *mc_aggregate(cabeca, chunk)))

        maximo = (0.0, 0.0)
        for gamma in gammas:
            peso = np.exp(1j * gamma * terminal)
            estimativa = estimate_stable_cf(escalado, peso, grade, chunk)
            for indice, lam in enumerate(grade):
                distancia = abs(estimativa.values[indice] - switching_target_cf(gamma, lam))
                erro = float(estimativa.std_errors[indice])
                report.rows.append((n, gamma, float(lam), 'stable_cf_distance', distancia, erro))
                if distancia > maximo[0]:
                    maximo = (distancia, erro)
        report.rows.append((n, None, None, 'stable_cf_max', *maximo))

        # CF condicional desacoplada é exp(-lambda^2 ||u_n||^2 / 2) na gaussiana
        for lam in grade:
            media, erro = mc_aggregate(np.exp(-0.5 * lam * lam * realizada), chunk)
            report.rows.append((n, 0.0, float(lam), 'poc_cf_distance', abs(media - switching_target_cf(0.0, lam)), erro))
        logger.info(f"Cenário com chaveamento n={n}, m={m}: distância máxima {maximo[0]:.4f}")

    report.trends['stable_cf_trend'] = trend_ok(report.series('stable_cf_max'))
    report.trends['norm_gap_trend'] = trend_ok(report.series('norm_gap'))
    verdict = poc_verdict(sequencia, None, grade, VerdictTolerances(chunk=chunk))
    report.rows.extend((linha.n, None, linha.lam, linha.metric, linha.value, linha.std_err) for linha in verdict.rows)
    report.trends.update(verdict.trends)
    for nome in ('stable_cf_trend', 'norm_gap_trend'):
        report.rows.append((sequencia[-1][0], None, None, nome, 1.0 if report.trends[nome] else 0.0, 0.0))
    return report
