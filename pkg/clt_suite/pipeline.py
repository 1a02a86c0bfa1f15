"""
Pipeline do CLT de integrais duplas de Poisson ao longo de uma família f_n.

Para cada n: condições analíticas (hipótese N, G*, expansão de variância),
momentos MC de F_n = I_2(f_n), distância KS à normal, diagnóstico de
caudas e a distância da rota de condicionamento.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from harness.aggregation import DEFAULT_CHUNK, mc_aggregate
from harness.runner import TrialRunner
from partition.cells import Resolution
from poc.arrays import ChaosIntegrand, build_tangent_pair
from poc.charfn import conditional_cf_decoupled
from poc.verdict import trend_ok
from rmeasure.sampling import MeasureLaw
from utils.validators import ensure_finite, lambda_points, validate_trials

from .conditions import (
    AssumptionNRecord, FindevJob, check_assumption_n, check_gstar, findev_rhs,
    findev_statistic, ks_std_err, ks_to_normal, symmetrized_star10_norm_sq,
)
from .families import KernelFamily

logger = logging.getLogger(__name__)

Estimate = Tuple[float, float]


@dataclass(frozen=True)
class CltRow:
    n: int
    metric: str
    analytic_value: Optional[float]
    mc_value: Optional[float]
    std_err: Optional[float]

    def as_tuple(self) -> Tuple:
        return (self.n, self.metric, self.analytic_value, self.mc_value, self.std_err)


@dataclass(frozen=True)
class CltRecord:
    """Condições analíticas e estimativas MC de um n."""

    n: int
    assumption: AssumptionNRecord
    gstar: Tuple[float, float]
    sym_star10: float
    findev_rhs: float
    findev_lhs: Estimate
    mean: Estimate
    second_moment: Estimate
    fourth_moment: Estimate
    fourth_moment_analytic: Optional[float]
    ks_to_normal: float
    ks_std_err: float
    tails: Dict[float, Estimate]
    poc_distance: Optional[Estimate] = None

    def rows(self) -> List[CltRow]:
        n = self.n
        linhas = [
            CltRow(n, 'norm_half', self.assumption.norm_half, None, None),
            CltRow(n, 'second_moment', self.assumption.norm_half, *self.second_moment),
            CltRow(n, 'n_minus1', self.assumption.integrability, None, None),
            CltRow(n, 'fourth_power_integral', self.assumption.fourth_power_integral, None, None),
            CltRow(n, 'gstar_11', self.gstar[0], None, None),
            CltRow(n, 'gstar_21', self.gstar[1], None, None),
            CltRow(n, 'sym_star10', self.sym_star10, None, None),
            CltRow(n, 'mean', 0.0, *self.mean),
            CltRow(n, 'fourth_moment', self.fourth_moment_analytic, *self.fourth_moment),
            CltRow(n, 'findev', self.findev_rhs, *self.findev_lhs),
            CltRow(n, 'ks_to_normal', None, self.ks_to_normal, self.ks_std_err),
        ]
        for nivel, (valor, erro) in self.tails.items():
            linhas.append(CltRow(n, f'tail_{nivel:g}', None, valor, erro))
        if self.poc_distance is not None:
            linhas.append(CltRow(n, 'poc_distance', None, *self.poc_distance))
        return linhas


@dataclass
class CltReport:
    family: str
    n_values: List[int]
    records: List[CltRecord] = field(default_factory=list)
    trends: Dict[str, bool] = field(default_factory=dict)
    checks: Dict[str, Tuple[float, bool]] = field(default_factory=dict)

    def record(self, n: int) -> CltRecord:
        for registro in self.records:
            if registro.n == n:
                return registro
        raise KeyError(n)

    @property
    def rows(self) -> List[CltRow]:
        linhas = [linha for registro in self.records for linha in registro.rows()]
        if self.records:
            ultimo = self.records[-1].n
            for nome, ok in self.trends.items():
                linhas.append(CltRow(ultimo, nome, None, 1.0 if ok else 0.0, 0.0))
            for nome, (limiar, ok) in self.checks.items():
                linhas.append(CltRow(ultimo, nome, limiar, 1.0 if ok else 0.0, 0.0))
        return linhas


class PocDistanceJob:
    """|exp(psi(h_pi(f_n); lambda)) - e^{-lambda^2/2}| por ensaio e por lambda."""

    def __init__(self, integrand: ChaosIntegrand, law: MeasureLaw, seed: int, lambda_grid):
        self.integrand = integrand
        self.law = MeasureLaw(law)
        self.seed = seed
        self.lambda_grid = np.asarray(lambda_grid, dtype=np.float64)

    def __call__(self, start: int, count: int) -> np.ndarray:
        partition = self.integrand.partition
        pair = build_tangent_pair(
            self.integrand, partition, self.integrand.resolution, self.law, self.seed, start, count,
        )
        colunas = [
            np.abs(conditional_cf_decoupled(pair, lam) - math.exp(-0.5 * lam * lam))
            for lam in self.lambda_grid
        ]
        return np.stack(colunas, axis=1)


def poc_route_distance(
    family: KernelFamily, n: int, trials: int, seed: int, lambda_grid: Sequence[float],
    refinement: int, runner: TrialRunner, chunk: int = DEFAULT_CHUNK,
) -> Estimate:
    """
    Máximo em lambda da média MC de |exp(psi(h_pi(f_n); lambda)) - e^{-lambda^2/2}|.

    O núcleo é refinado em ``refinement`` subcélulas (quando a família
    permite) para que o integrando de Clark–Ocone não se anule; a cabeça vai
    até t_n = n^{-1/2}.
    """
    kernel = family.kernel(n, refinement)
    resolution = Resolution(kernel.partition)
    integrand = ChaosIntegrand(kernel, resolution, head_time=n ** -0.5, label=f"{family.name} n={n}")
    distancias = runner.map(PocDistanceJob(integrand, MeasureLaw.CPOISSON, seed, lambda_grid), trials,
                            desc=f'poc n={n}')
    distancias = ensure_finite('distância POC', distancias)
    # pior lambda da grade
    melhor = (0.0, 0.0)
    for indice in range(distancias.shape[1]):
        media, erro = mc_aggregate(distancias[:, indice], chunk)
        if media > melhor[0]:
            melhor = (media, erro)
    return melhor


def _moments(F: np.ndarray, G: np.ndarray, tail_levels, chunk: int):
    quartas = F ** 4
    caudas = {
        float(nivel): mc_aggregate(np.where(np.abs(F) > nivel, quartas, 0.0), chunk)
        for nivel in tail_levels
    }
    return {
        'mean': mc_aggregate(F, chunk),
        'second_moment': mc_aggregate(F * F, chunk),
        'fourth_moment': mc_aggregate(quartas, chunk),
        'findev_lhs': mc_aggregate(ensure_finite('findev', findev_statistic(F, G)), chunk),
        'tails': caudas,
    }


def clt_pipeline(
    family: KernelFamily, n_values: Sequence[int], trials: int, seed: int,
    runner: Optional[TrialRunner] = None, lambda_grid: Optional[Sequence[float]] = None,
    poc_trials: Optional[int] = None, refinement: Optional[int] = None,
    chunk: int = DEFAULT_CHUNK,
) -> CltReport:
    """
    Executa o pipeline do CLT sobre ``n_values``.

    Args:
        family: Família n -> f_n
        n_values: Valores de n (ordenados no relatório)
        trials: Ensaios MC por n
        seed: Semente
        runner: Executor dos blocos de ensaios
        lambda_grid: Grade da rota de condicionamento (padrão ``CHAOSLAB['LAMBDA_GRID']``)
        poc_trials: Ensaios da rota de condicionamento; 0 desliga
        refinement: Subcélulas por bloco na rota de condicionamento

    Returns:
        CltReport: Registros por n, tendências e verificações de limiar
    """
    conf = settings.CHAOSLAB
    trials = validate_trials(trials)
    runner = runner or TrialRunner()
    grade = lambda_points(conf['LAMBDA_GRID']) if lambda_grid is None else np.asarray(lambda_grid, dtype=np.float64)
    poc_trials = conf['POC_TRIALS'] if poc_trials is None else int(poc_trials)
    refinement = conf['POC_REFINEMENT'] if refinement is None else int(refinement)

    # Um registro por n, em ordem crescente
    report = CltReport(family=family.name, n_values=sorted(int(n) for n in n_values))
    for n in report.n_values:
        f = family.kernel(n)
        assumption = check_assumption_n(f)
        if not math.isfinite(assumption.integrability):
            logger.warning(f"{family.name} n={n}: testemunha de integrabilidade não finita")

        # F_n e G_n = I_2(f★₂⁰f) nos mesmos ensaios
        F, G = runner.map(FindevJob(f, MeasureLaw.CPOISSON, seed), trials, desc=f'clt n={n}')
        F = ensure_finite('F_n', F)
        momentos = _moments(F, ensure_finite('G_n', G), conf['TAIL_LEVELS'], chunk)

        poc = None
        if poc_trials > 0:
            poc = poc_route_distance(family, n, validate_trials(poc_trials), seed, grade, refinement, runner, chunk)

        registro = CltRecord(
            n=n, assumption=assumption, gstar=check_gstar(f), sym_star10=symmetrized_star10_norm_sq(f),
            findev_rhs=findev_rhs(f), findev_lhs=momentos['findev_lhs'],
            mean=momentos['mean'], second_moment=momentos['second_moment'],
            fourth_moment=momentos['fourth_moment'],
            fourth_moment_analytic=family.fourth_moment(n) if family.fourth_moment else None,
            ks_to_normal=ks_to_normal(F), ks_std_err=ks_std_err(len(F)),
            tails=momentos['tails'], poc_distance=poc,
        )
        report.records.append(registro)
        logger.info(
            f"CLT {family.name} n={n}: KS = {registro.ks_to_normal:.4f}, "
            f"E F^4 = {registro.fourth_moment[0]:.4f} ± {registro.fourth_moment[1]:.2g}"
        )

    # Tendência em n e limiares de aceitação no maior n
    report.trends['ks_trend'] = trend_ok([registro.ks_to_normal for registro in report.records])
    if report.records:
        ultimo = report.records[-1]
        report.checks['ks_below_threshold'] = (conf['KS_THRESHOLD'], ultimo.ks_to_normal < conf['KS_THRESHOLD'])
        tolerancia = conf['FOURTH_MOMENT_TOLERANCE']
        report.checks['fourth_moment_near_gaussian'] = (tolerancia, abs(ultimo.fourth_moment[0] - 3.0) < tolerancia)
    return report
