"""
Execução dos subcomandos: cada um é uma função pura de (config, semente)
que devolve as linhas do CSV.

``run`` despacha, renderiza e grava; ``run_and_record`` também registra a
execução no ``ExperimentRun`` quando há banco disponível.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone

from chaos.integrals import conditional_projection, eval_multiple_integral, product_formula_check
from clt_suite.families import get_family
from clt_suite.pipeline import clt_pipeline
from kernels.tables import SymmetricKernel, UnsupportedOrderError
from partition.cells import CellPartition, Resolution, uniform_partition
from poc.arrays import ChaosIntegrand, DeterministicIntegrand, ElementaryIntegrand, TangentArrayPair
from poc.charfn import estimate_stable_cf
from poc.verdict import VerdictTolerances, gaussian_target, poc_verdict, summarize_trials
from rmeasure.exponent import FirstOrderKernel, LevyCharacteristics, integrate_first_order, levy_exponent
from rmeasure.sampling import MeasureLaw, sample_measure_batch
from scenarios.block import block_example_kernel
from scenarios.pipelines import run_block_scenario, run_switching_scenario
from utils.exceptions import ChaosLabError, PreconditionError
from utils.validators import ensure_finite

from .aggregation import mc_aggregate
from .config import RunConfig, load_kernel, load_law, load_partition
from .reports import CsvReport, render_csv, write_report
from .runner import TrialRunner

logger = logging.getLogger(__name__)

LK_COLUMNS = ('lambda', 're_psi', 'im_psi')
LK_EMPIRICAL_COLUMNS = LK_COLUMNS + ('emp_re', 'emp_im', 'std_err')
SIMULATE_COLUMNS = ('cell', 'mass', 'tau', 'mean', 'mean_std_err', 'variance', 'variance_std_err')
CHAOS_CHECK_COLUMNS = ('check', 'value', 'std_err', 'target')
POC_COLUMNS = ('n', 'lambda', 'metric', 'value', 'std_err')
CLT_COLUMNS = ('n', 'metric', 'analytic_value', 'mc_value', 'std_err')

# n padrão do poc_verify
POC_DEFAULT_N = (4, 16, 64)

Rows = Tuple[Tuple[str, ...], list]


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    report: CsvReport
    path: Optional[Path]

    @property
    def sha256(self) -> str:
        return self.report.sha256


def _partition(config: RunConfig) -> Optional[CellPartition]:
    return load_partition(config.partition_path) if config.partition_path else None


def _kernel(config: RunConfig) -> SymmetricKernel:
    return load_kernel(config.kernel_path, _partition(config))


def _law(config: RunConfig) -> Union[MeasureLaw, LevyCharacteristics]:
    return load_law(config.law_path) if config.law_path else config.law


def _sampling_law(config: RunConfig) -> MeasureLaw:
    law = _law(config)
    if isinstance(law, LevyCharacteristics):
        raise PreconditionError("amostragem exige lei 'gaussian' ou 'cpoisson'; descritor estendido só no expoente")
    return law


# lk


class FirstOrderJob:
    """X(h) por ensaio."""

    def __init__(self, h: FirstOrderKernel, law: MeasureLaw, seed: int):
        self.h = h
        self.law = law
        self.seed = seed

    def __call__(self, start: int, count: int) -> np.ndarray:
        lote = sample_measure_batch(self.h.partition, self.law, self.seed, start, count)
        return integrate_first_order(lote, self.h)


def run_lk(config: RunConfig, runner: TrialRunner) -> Rows:
    """psi(h; lambda) na grade e, com ``trials``, a CF empírica de X(h)."""
    h = _kernel(config).as_first_order()
    law = _law(config)
    grade = config.lambda_grid.points()
    psi = ensure_finite('psi', levy_exponent(law, h, grade))

    # Sem ensaios: só o expoente analítico
    if config.trials is None:
        return LK_COLUMNS, [(float(lam), p.real, p.imag) for lam, p in zip(grade, psi)]

    amostras = runner.map(FirstOrderJob(h, _sampling_law(config), config.seed), config.trials, desc='lk')
    empirica = estimate_stable_cf(ensure_finite('X(h)', amostras), None, grade, config.chunk_size)
    linhas = [
        (float(lam), p.real, p.imag, e.real, e.imag, float(erro))
        for lam, p, e, erro in zip(grade, psi, empirica.values, empirica.std_errors)
    ]
    return LK_EMPIRICAL_COLUMNS, linhas


# simulate


class IncrementsJob:
    def __init__(self, partition: CellPartition, law: MeasureLaw, seed: int):
        self.partition = partition
        self.law = law
        self.seed = seed

    def __call__(self, start: int, count: int) -> np.ndarray:
        return sample_measure_batch(self.partition, self.law, self.seed, start, count).increments


def run_simulate(config: RunConfig, runner: TrialRunner) -> Rows:
    """Média e variância MC do incremento de cada célula."""
    partition = load_partition(config.partition_path)
    incrementos = runner.map(IncrementsJob(partition, _sampling_law(config), config.seed), config.trials,
                             desc='simulate')
    incrementos = ensure_finite('incrementos', incrementos)
    linhas = []
    for cell in partition.cells:
        coluna = incrementos[:, cell.id]
        # lei centrada: a variância é E[M^2]
        linhas.append((cell.id, cell.mass, cell.tau,
                       *mc_aggregate(coluna, config.chunk_size),
                       *mc_aggregate(coluna * coluna, config.chunk_size)))
    return SIMULATE_COLUMNS, linhas


# chaos_check


def _offdiagonal(f: SymmetricKernel) -> bool:
    return f.order == 1 or f.max_multiplicity() == 1


def _relative_error(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))


class ChaosCheckJob:
    """
    Por ensaio: I_d(f), erro relativo de Clark–Ocone, erro relativo da
    fórmula do produto e Phi (I_d(f) - I_d(f_t)).
    """

    def __init__(self, f: SymmetricKernel, law: MeasureLaw, seed: int, resolution: Resolution, t: float):
        self.f = f
        self.law = law
        self.seed = seed
        self.resolution = resolution
        self.t = t
        self.projected = conditional_projection(f, resolution, t)
        self.slice = resolution.slice_mask(t)
        self.integrand = ChaosIntegrand(f, resolution, head_time=t) if _offdiagonal(f) else None

    def __call__(self, start: int, count: int) -> Tuple:
        lote = sample_measure_batch(self.f.partition, self.law, self.seed, start, count)
        integral = eval_multiple_integral(lote, self.f)

        clark_ocone = np.zeros(count)
        produto = np.zeros(count)
        # Clark–Ocone e fórmula do produto só valem fora da diagonal
        if self.integrand is not None:
            adaptada = (self.integrand.coefficients(lote) * lote.increments).sum(axis=-1)
            clark_ocone = _relative_error(integral, adaptada)
            lhs, rhs = product_formula_check(lote, self.f, self.f)
            produto = _relative_error(lhs, rhs)

        # Phi mensurável em Z_t: E[Phi (I - I_t)] = 0
        phi = np.cos(lote.increments[:, self.slice].sum(axis=-1))
        martingale = phi * (integral - eval_multiple_integral(lote, self.projected))
        return integral, clark_ocone, produto, martingale


def run_chaos_check(config: RunConfig, runner: TrialRunner) -> Rows:
    """Média, isometria, Clark–Ocone, fórmula do produto e identidade de martingale."""
    f = _kernel(config)
    if f.order not in (1, 2):
        raise UnsupportedOrderError(f"chaos_check aceita núcleos de ordem 1 ou 2, recebido {f.order}")
    resolution = Resolution(f.partition, config.direction)
    job = ChaosCheckJob(f, _sampling_law(config), config.seed, resolution, config.head_time)
    integral, clark_ocone, produto, martingale = (
        ensure_finite(nome, valores) for nome, valores in zip(
            ('I_d(f)', 'Clark–Ocone', 'fórmula do produto', 'martingale'),
            runner.map(job, config.trials, desc='chaos_check'),
        )
    )
    chunk = config.chunk_size
    linhas = [
        ('mean', *mc_aggregate(integral, chunk), 0.0),
        ('variance', *mc_aggregate(integral * integral, chunk), math.factorial(f.order) * f.norm_sq()),
    ]
    if job.integrand is not None:
        linhas.append(('clark_ocone_max_rel_err', float(np.max(clark_ocone)), 0.0, 0.0))
        linhas.append(('product_formula_max_rel_err', float(np.max(produto)), 0.0, 0.0))
    else:
        logger.warning("Núcleo com valores na diagonal: Clark–Ocone e fórmula do produto omitidos")
    linhas.append(('martingale_gap', *mc_aggregate(martingale, chunk), 0.0))
    return CHAOS_CHECK_COLUMNS, linhas


# poc_verify


class GaussianVarianceTarget:
    """exp(-lambda^2 sigma^2 / 2) por ensaio."""

    def __init__(self, variance: float):
        self.variance = float(variance)

    def __call__(self, pair: TangentArrayPair, lam: float) -> np.ndarray:
        return np.full(pair.n_trials, math.exp(-0.5 * lam * lam * self.variance), dtype=np.complex128)


def _poc_integrand(config: RunConfig, n: int) -> Tuple[ElementaryIntegrand, MeasureLaw]:
    if config.family == 'block':
        refinement = config.refinement or settings.CHAOSLAB['POC_REFINEMENT']
        kernel = block_example_kernel(n, refinement)
        resolution = Resolution(kernel.partition, config.direction)
        return ChaosIntegrand(kernel, resolution, head_time=n ** -0.5, label=f"bloco n={n}"), MeasureLaw.CPOISSON
    if config.family == 'deterministic':
        resolution = Resolution(uniform_partition(n), config.direction)
        integrand = DeterministicIntegrand(np.full(n, n ** -0.5), resolution, head_time=config.head_time,
                                           label=f"determinístico n={n}")
        return integrand, _sampling_law(config)
    raise PreconditionError(f"família de poc_verify desconhecida '{config.family}'; opções: block, deterministic")


def run_poc_verify(config: RunConfig, runner: TrialRunner) -> Rows:
    """
    Relatório de condicionamento.

    Com ``kernel_path``: o integrando de Clark–Ocone do núcleo (n = 1) contra
    a normal de variância d!||f||^2. Sem ele: a família ``block`` (núcleo
    refinado, Poisson) ou ``deterministic`` (coeficientes n^{-1/2}).
    """
    grade = config.lambda_grid.points()
    tolerancias = VerdictTolerances(chunk=config.chunk_size)
    sequencia = []
    # Núcleo do usuário: um único ponto da sequência
    if config.kernel_path is not None:
        f = _kernel(config)
        integrand = ChaosIntegrand(f, Resolution(f.partition, config.direction), head_time=config.head_time)
        alvo = GaussianVarianceTarget(math.factorial(f.order) * f.norm_sq())
        sequencia.append((1, summarize_trials(integrand, _sampling_law(config), config.seed, config.trials,
                                              alvo, grade, runner)))
    else:
        for n in sorted(config.n_values or POC_DEFAULT_N):
            integrand, law = _poc_integrand(config, n)
            sequencia.append((n, summarize_trials(integrand, law, config.seed, config.trials,
                                                  gaussian_target, grade, runner)))
    report = poc_verdict(sequencia, None, grade, tolerancias)
    if report.clipped:
        logger.warning("Alvo phi com módulo abaixo do corte em alguns ensaios (ver clipped_fraction)")
    return POC_COLUMNS, [linha.as_tuple() for linha in report.rows]


# clt e cenários


def run_clt(config: RunConfig, runner: TrialRunner) -> Rows:
    report = clt_pipeline(
        get_family(config.family), config.n_values, config.trials, config.seed, runner=runner,
        lambda_grid=config.lambda_grid.points(), poc_trials=config.poc_trials,
        refinement=config.refinement, chunk=config.chunk_size,
    )
    return CLT_COLUMNS, [linha.as_tuple() for linha in report.rows]


def run_scenario(config: RunConfig, runner: TrialRunner) -> Rows:
    grade = config.lambda_grid.points()
    if config.scenario == 'block':
        report = run_block_scenario(
            config.n_values, config.trials, config.seed, runner=runner, lambda_grid=grade,
            poc_trials=config.poc_trials, refinement=config.refinement, chunk=config.chunk_size,
        )
    else:
        report = run_switching_scenario(
            config.n_values, config.trials, config.seed, runner=runner, steps=config.steps,
            gammas=config.gammas, lambda_grid=grade, epsilon=config.epsilon,
            switching=config.switching, chunk=config.chunk_size,
        )
    return report.columns, report.rows


DISPATCH: Dict[str, Callable[[RunConfig, TrialRunner], Rows]] = {
    'lk': run_lk,
    'simulate': run_simulate,
    'chaos_check': run_chaos_check,
    'poc_verify': run_poc_verify,
    'clt': run_clt,
    'scenario': run_scenario,
}


def run(config: RunConfig) -> RunResult:
    """
    Executa o subcomando, renderiza o CSV e grava em ``config.out``.

    Raises:
        ChaosLabError: Com ``exit_code`` 1 (configuração), 2 (pré-condição)
            ou 3 (guarda numérica)
    """
    # Executor por bloco de ensaios; os bytes não dependem de workers
    runner = TrialRunner(chunk_size=config.chunk_size, workers=config.workers, progress=config.progress)
    logger.info(f"Executando {config.name}: seed={config.seed}, trials={config.trials}, workers={config.workers}")
    colunas, linhas = DISPATCH[config.subcommand](config, runner)
    report = render_csv(colunas, linhas)
    path = write_report(report, config.out)
    return RunResult(config=config, report=report, path=path)


# Registro


def _ledger_call(acao: str, funcao, *args):
    """Registro é opcional: falha de banco só gera aviso."""
    try:
        return funcao(*args)
    except DatabaseError as exc:
        logger.warning(f"Registro da execução indisponível ({acao}): {exc}")
        return None


def create_run(config: RunConfig):
    from .models import ExperimentRun

    return ExperimentRun.objects.create(
        subcommand=config.name, config=config.to_json(), seed=str(config.seed),
        status=ExperimentRun.STATUS_PENDING,
    )


def _start(experiment):
    experiment.status = experiment.STATUS_RUNNING
    experiment.iniciado_em = timezone.now()
    experiment.save(update_fields=['status', 'iniciado_em', 'atualizado_em'])


def _finish(experiment, result: Optional[RunResult], error: Optional[ChaosLabError]):
    if error is None:
        experiment.status = experiment.STATUS_DONE
        experiment.exit_code = 0
        experiment.output_path = str(result.path or '')
        experiment.sha256 = result.sha256
        experiment.message = f"{result.report.n_rows} linhas"
    else:
        experiment.status = experiment.STATUS_FAILED
        experiment.exit_code = error.exit_code
        experiment.message = str(error)
    experiment.concluido_em = timezone.now()
    experiment.save()


def run_and_record(config: RunConfig, record: bool = True, experiment=None) -> RunResult:
    """
    ``run`` com o ciclo de vida gravado em ``ExperimentRun``.

    Args:
        config: Configuração validada
        record: False não toca no banco
        experiment: Registro já criado (execução enfileirada)

    Returns:
        RunResult: Mesmo resultado de ``run``
    """
    # Execução enfileirada já chega com o registro criado
    if record and experiment is None:
        experiment = _ledger_call('criação', create_run, config)
    if experiment is not None:
        _ledger_call('início', _start, experiment)
    try:
        result = run(config)
    except ChaosLabError as exc:
        if experiment is not None:
            _ledger_call('falha', _finish, experiment, None, exc)
        raise
    if experiment is not None:
        _ledger_call('conclusão', _finish, experiment, result, None)
    return result
