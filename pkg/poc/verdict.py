"""
Relatório do princípio de condicionamento ao longo de uma sequência em n.

Os três blocos do relatório:

* cabeça desprezível: E[S_head^2] dos dois arranjos e a distância da CF
  condicional da cabeça desacoplada a 1;
* CF condicional desacoplada contra o alvo phi (média de |exp(psi) - phi|);
* CF empírica dos totais originais contra E[phi].

Nada aqui é afirmado como prova: os valores e as tendências são reportados.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from harness.aggregation import DEFAULT_CHUNK, mc_aggregate
from harness.runner import TrialRunner
from rmeasure.sampling import MeasureLaw
from utils.exceptions import PreconditionError
from utils.validators import ensure_finite

from .arrays import ElementaryIntegrand, TangentArrayPair, build_tangent_pair
from .charfn import conditional_cf_decoupled, estimate_stable_cf

logger = logging.getLogger(__name__)

PhiTarget = Callable[[TangentArrayPair, float], np.ndarray]

TREND_METRICS = {
    'head_second_moment_original': 'head_trend',
    'cp2_max': 'cp2_trend',
    'conclusion_max': 'conclusion_trend',
}


@dataclass(frozen=True)
class VerdictTolerances:
    clip: float = 1e-6
    allowed_violations: int = 1
    chunk: int = DEFAULT_CHUNK


@dataclass(frozen=True)
class VerdictRow:
    n: int
    lam: Optional[float]
    metric: str
    value: float
    std_err: float

    def as_tuple(self) -> Tuple:
        return (self.n, self.lam, self.metric, self.value, self.std_err)


@dataclass
class PocReport:
    rows: List[VerdictRow] = field(default_factory=list)
    trends: Dict[str, bool] = field(default_factory=dict)
    clipped: bool = False

    def add(self, n, lam, metric, value, std_err):
        self.rows.append(VerdictRow(int(n), None if lam is None else float(lam), metric, float(value), float(std_err)))

    def series(self, metric: str) -> List[float]:
        return [linha.value for linha in self.rows if linha.metric == metric]


def trend_ok(values: Sequence[float], allowed_violations: int = 1) -> bool:
    """Não crescente, tolerando ``allowed_violations`` subidas."""
    valores = list(values)
    subidas = sum(1 for anterior, atual in zip(valores, valores[1:]) if atual > anterior)
    return subidas <= allowed_violations


def gaussian_target(pair: TangentArrayPair, lam: float) -> np.ndarray:
    """exp(-lambda^2 / 2): alvo da normal padrão."""
    return np.full(pair.n_trials, np.exp(-0.5 * lam * lam), dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class PairSummary:
    """
    Grandezas por ensaio que o relatório consome, sem as parcelas.

    Resumos de blocos de ensaios concatenam na ordem dos blocos.
    """

    lambda_grid: np.ndarray
    boundary: int
    head_original: np.ndarray
    head_decoupled: np.ndarray
    totals: np.ndarray
    head_cf: np.ndarray
    decoupled_cf: np.ndarray
    phi: np.ndarray

    @property
    def n_trials(self) -> int:
        return len(self.totals)

    def as_arrays(self) -> Tuple:
        return (self.head_original, self.head_decoupled, self.totals, self.head_cf, self.decoupled_cf, self.phi)

    @classmethod
    def from_arrays(cls, lambda_grid, boundary: int, arrays: Tuple) -> 'PairSummary':
        return cls(np.asarray(lambda_grid, dtype=np.float64), int(boundary), *arrays)


def summarize_pair(pair: TangentArrayPair, phi_target: PhiTarget, lambda_grid: Sequence[float]) -> PairSummary:
    """Resume um par tangente nos pontos de ``lambda_grid``."""
    grade = np.asarray(lambda_grid, dtype=np.float64)
    cabeca = np.stack([conditional_cf_decoupled(pair, lam, part='head') for lam in grade], axis=1)
    condicional = np.stack([conditional_cf_decoupled(pair, lam) for lam in grade], axis=1)
    phi = np.stack(
        [np.broadcast_to(np.asarray(phi_target(pair, lam), dtype=np.complex128), (pair.n_trials,)) for lam in grade],
        axis=1,
    )
    return PairSummary(
        lambda_grid=grade, boundary=pair.boundary,
        head_original=pair.original.head_sums, head_decoupled=pair.decoupled.head_sums,
        totals=pair.original.totals, head_cf=cabeca, decoupled_cf=condicional, phi=phi,
    )


class SummaryJob:
    """Job de ``TrialRunner``: resumo do par tangente de um bloco de ensaios."""

    def __init__(self, integrand: ElementaryIntegrand, law: MeasureLaw, seed: int,
                 phi_target: PhiTarget, lambda_grid: Sequence[float]):
        self.integrand = integrand
        self.law = MeasureLaw(law)
        self.seed = seed
        self.phi_target = phi_target
        self.lambda_grid = np.asarray(lambda_grid, dtype=np.float64)

    def __call__(self, start: int, count: int) -> Tuple:
        pair = build_tangent_pair(
            self.integrand, self.integrand.partition, self.integrand.resolution,
            self.law, self.seed, start, count,
        )
        return summarize_pair(pair, self.phi_target, self.lambda_grid).as_arrays()


def summarize_trials(
    integrand: ElementaryIntegrand, law: MeasureLaw, seed: int, trials: int,
    phi_target: PhiTarget, lambda_grid: Sequence[float], runner: TrialRunner,
) -> PairSummary:
    """Resumo de ``trials`` ensaios montado bloco a bloco pelo ``runner``."""
    job = SummaryJob(integrand, law, seed, phi_target, lambda_grid)
    arrays = runner.map(job, trials, desc=f'poc {integrand.label}')
    return PairSummary.from_arrays(job.lambda_grid, integrand.boundary, arrays)


def _head_metrics(report: PocReport, n: int, summary: PairSummary, tolerances: VerdictTolerances):
    for nome, somas in (('head_second_moment_original', summary.head_original),
                        ('head_second_moment_decoupled', summary.head_decoupled)):
        quadrados = ensure_finite(nome, somas ** 2)
        media, erro = mc_aggregate(quadrados, tolerances.chunk)
        report.add(n, None, nome, media, erro)


def poc_verdict(
    pair_sequence: Sequence[Tuple[int, Union[TangentArrayPair, PairSummary]]],
    phi_target: Optional[PhiTarget], lambda_grid: Sequence[float],
    tolerances: Optional[VerdictTolerances] = None,
) -> PocReport:
    """
    Monta o relatório para pares indexados por n crescente.

    Args:
        pair_sequence: Pares (n, TangentArrayPair) ou (n, PairSummary)
        phi_target: phi(pair, lambda) -> complexos por ensaio; ignorado
            para resumos, que já trazem phi
        lambda_grid: Pontos lambda
        tolerances: Corte de |phi| e violações permitidas nas tendências

    Returns:
        PocReport: Linhas (n, lambda, metric, value, std_err) e tendências
    """
    tolerances = tolerances or VerdictTolerances()
    report = PocReport()
    grade = np.asarray(lambda_grid, dtype=np.float64)
    sequencia = sorted(pair_sequence, key=lambda item: item[0])

    for n, item in sequencia:
        summary = item if isinstance(item, PairSummary) else summarize_pair(item, phi_target, grade)
        if not np.array_equal(summary.lambda_grid, grade):
            raise PreconditionError(f"n={n}: resumo calculado em outra grade de lambda")
        logger.info(f"Veredito POC: n={n}, {summary.n_trials} ensaios, cabeça de {summary.boundary} parcelas")
        _head_metrics(report, n, summary, tolerances)
        totais = ensure_finite('totais originais', summary.totals)
        empirica = estimate_stable_cf(totais, None, grade, tolerances.chunk)

        maximos = {'cp2_distance': (0.0, 0.0), 'conclusion_distance': (0.0, 0.0)}
        for indice, lam in enumerate(grade):
            # Cabeça: CF condicional perto de 1
            media, erro = mc_aggregate(np.abs(summary.head_cf[:, indice] - 1.0), tolerances.chunk)
            report.add(n, lam, 'head_cf_distance', media, erro)

            # Alvo phi; ensaios com |phi| abaixo do corte saem da distância
            phi = ensure_finite('phi alvo', summary.phi[:, indice])
            validos = np.abs(phi) >= tolerances.clip
            cortados = 1.0 - np.count_nonzero(validos) / len(phi)
            if cortados > 0:
                report.clipped = True
                report.add(n, lam, 'clipped_fraction', cortados, 0.0)
                logger.warning(f"n={n}, lambda={lam}: {cortados:.2%} dos ensaios com |phi| < {tolerances.clip}")

            if validos.any():
                diferencas = np.abs(summary.decoupled_cf[:, indice] - phi)[validos]
                distancia, erro = mc_aggregate(diferencas, tolerances.chunk)
                report.add(n, lam, 'cp2_distance', distancia, erro)
                if distancia > maximos['cp2_distance'][0]:
                    maximos['cp2_distance'] = (distancia, erro)

            # Conclusão: CF empírica do total contra E[phi]
            media_phi, erro_phi = mc_aggregate(phi, tolerances.chunk)
            conclusao = abs(empirica.values[indice] - media_phi)
            erro = float(np.hypot(empirica.std_errors[indice], erro_phi))
            report.add(n, lam, 'conclusion_distance', conclusao, erro)
            if conclusao > maximos['conclusion_distance'][0]:
                maximos['conclusion_distance'] = (conclusao, erro)

        for metrica, (valor, erro) in maximos.items():
            report.add(n, None, metrica.replace('_distance', '_max'), valor, erro)

    # Tendências ao longo de n, gravadas no último n
    ultimo = sequencia[-1][0] if sequencia else 0
    for metrica, rotulo in TREND_METRICS.items():
        ok = trend_ok(report.series(metrica), tolerances.allowed_violations)
        report.trends[rotulo] = ok
        report.add(ultimo, None, rotulo, 1.0 if ok else 0.0, 0.0)
    return report
