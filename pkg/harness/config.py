"""
Configuração validada de uma execução e leitura dos arquivos JSON de entrada.

Falhas de validação, arquivos ausentes e JSON malformado viram
``ConfigurationError`` (código de saída 1), sempre com o caminho na mensagem.
"""
import logging
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from kernels.tables import SymmetricKernel
from partition.cells import CellPartition, Direction, build_partition
from rmeasure.exponent import LevyCharacteristics
from rmeasure.sampling import MeasureLaw
from utils.exceptions import ConfigurationError
from utils.validators import SEED_LIMIT, parse_lambda_grid

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('lk', 'simulate', 'chaos_check', 'poc_verify', 'clt', 'scenario')

# Subcomandos e os arquivos que cada um exige
REQUIRED_FILES = {
    'lk': ('kernel_path',),
    'simulate': ('partition_path',),
    'chaos_check': ('kernel_path',),
}


def _describe(exc: ValidationError) -> str:
    return '; '.join(
        f"{'.'.join(str(parte) for parte in erro['loc']) or 'raiz'}: {erro['msg']}" for erro in exc.errors()
    )


class LambdaGrid(BaseModel):
    """Grade ``min:max:count`` de pontos lambda."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    minimum: float = -3.0
    maximum: float = 3.0
    count: int = Field(default=21, ge=1)

    @model_validator(mode='after')
    def _finite_and_ordered(self) -> 'LambdaGrid':
        if not (math.isfinite(self.minimum) and math.isfinite(self.maximum)):
            raise ValueError("limites da grade de lambda devem ser finitos")
        if self.count > 1 and self.maximum < self.minimum:
            raise ValueError("grade de lambda com máximo menor que o mínimo")
        return self

    @classmethod
    def from_text(cls, texto: Optional[str] = None) -> 'LambdaGrid':
        """Interpreta ``min:max:count``; sem texto usa ``CHAOSLAB['LAMBDA_GRID']``."""
        texto = texto if texto is not None else settings.CHAOSLAB['LAMBDA_GRID']
        try:
            minimo, maximo, quantidade = parse_lambda_grid(texto)
        except ValueError as exc:
            raise ConfigurationError(f"--lambda: {exc}") from exc
        return cls(minimum=minimo, maximum=maximo, count=quantidade)

    def points(self) -> np.ndarray:
        return np.linspace(self.minimum, self.maximum, self.count)

    def __str__(self) -> str:
        return f"{self.minimum!r}:{self.maximum!r}:{self.count}"


# Arquivos de entrada


class CellSpec(BaseModel):
    """Uma célula: ``{"mass": 1.0, "tau": 0.5}`` ou o par ``[mass, tau]``."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    mass: float
    tau: float

    @model_validator(mode='before')
    @classmethod
    def _from_pair(cls, dados):
        # forma compacta [mass, tau]
        if isinstance(dados, (list, tuple)):
            if len(dados) != 2:
                raise ValueError(f"célula deve ser [mass, tau], recebido {list(dados)}")
            return {'mass': dados[0], 'tau': dados[1]}
        return dados


class PartitionFile(BaseModel):
    """``{"cells": [{"mass": 1.0, "tau": 0.5}, ...]}``; a ordem no arquivo define os ids."""

    model_config = ConfigDict(extra='forbid')

    cells: List[CellSpec] = Field(min_length=1)

    def to_partition(self) -> CellPartition:
        return build_partition([(cell.mass, cell.tau) for cell in self.cells])


class KernelFile(BaseModel):
    """
    Núcleo em entradas não ordenadas ``[i, ..., valor]``.

    A partição pode vir embutida (``partition``) ou de um arquivo separado.
    """

    model_config = ConfigDict(extra='forbid')

    order: int = Field(ge=0, le=4)
    entries: List[List[float]] = Field(default_factory=list)
    offdiag_only: bool = False
    partition: Optional[PartitionFile] = None

    @field_validator('entries')
    @classmethod
    def _integer_ids(cls, entries):
        for entrada in entries:
            if any(not float(i).is_integer() for i in entrada[:-1]):
                raise ValueError(f"ids de célula devem ser inteiros: {entrada}")
        return entries

    def to_kernel(self, partition: Optional[CellPartition] = None) -> SymmetricKernel:
        # Partição embutida e --partition juntas precisam coincidir
        if self.partition is not None:
            propria = self.partition.to_partition()
            if partition is not None:
                propria.require_same(partition, 'arquivo de núcleo')
            partition = propria
        if partition is None:
            raise ConfigurationError("núcleo sem partição: use o campo 'partition' ou --partition")
        return SymmetricKernel.from_entries(partition, self.order, self.entries, offdiag_only=self.offdiag_only)


class LawFile(BaseModel):
    """
    Lei de amostragem (``{"law": "gaussian"}``) ou descritor estendido com
    variância gaussiana e átomos de salto ``[x, w]``.
    """

    model_config = ConfigDict(extra='forbid')

    law: Optional[MeasureLaw] = None
    gaussian_variance: Union[float, List[float]] = 0.0
    atoms: List[Tuple[float, float]] = Field(default_factory=list)

    def to_law(self) -> Union[MeasureLaw, LevyCharacteristics]:
        if self.law is not None:
            return self.law
        # Descritor estendido: só o expoente de Lévy–Khinchine usa
        variancia = self.gaussian_variance
        if isinstance(variancia, list):
            variancia = tuple(variancia)
        return LevyCharacteristics(gaussian_variance=variancia, atoms=tuple(self.atoms))


def _load(model, path: Path, rotulo: str):
    path = Path(path)
    try:
        texto = path.read_text(encoding='utf-8')
    except FileNotFoundError:
        raise ConfigurationError(f"arquivo de {rotulo} não encontrado: {path}") from None
    except OSError as exc:
        raise ConfigurationError(f"arquivo de {rotulo} ilegível: {path} ({exc})") from exc
    # JSON malformado também chega como ValidationError
    try:
        return model.model_validate_json(texto)
    except ValidationError as exc:
        raise ConfigurationError(f"arquivo de {rotulo} inválido: {path}: {_describe(exc)}") from exc


def load_partition(path: Path) -> CellPartition:
    """Lê e valida um arquivo de partição."""
    return _load(PartitionFile, path, 'partição').to_partition()


def load_kernel(path: Path, partition: Optional[CellPartition] = None) -> SymmetricKernel:
    """Lê um arquivo de núcleo, com a partição embutida ou a informada."""
    return _load(KernelFile, path, 'núcleo').to_kernel(partition)


def load_law(path: Path) -> Union[MeasureLaw, LevyCharacteristics]:
    return _load(LawFile, path, 'lei').to_law()


# Configuração da execução


class RunConfig(BaseModel):
    """
    Tudo o que determina os bytes de saída de um subcomando.

    Mesma configuração e mesma semente produzem o mesmo CSV, com qualquer
    número de workers.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    subcommand: Literal['lk', 'simulate', 'chaos_check', 'poc_verify', 'clt', 'scenario']
    partition_path: Optional[Path] = None
    kernel_path: Optional[Path] = None
    law_path: Optional[Path] = None
    law: MeasureLaw = MeasureLaw.CPOISSON
    n_values: List[int] = Field(default_factory=list)
    trials: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0, lt=SEED_LIMIT)
    lambda_grid: LambdaGrid = Field(default_factory=LambdaGrid)
    out: Optional[Path] = None
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=1024, ge=1)
    progress: bool = False

    # Opções por subcomando
    scenario: Optional[Literal['block', 'switching']] = None
    family: str = 'block'
    switching: bool = True
    steps: Optional[int] = Field(default=None, ge=1)
    gammas: Optional[List[float]] = None
    epsilon: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    refinement: Optional[int] = Field(default=None, ge=1)
    poc_trials: Optional[int] = Field(default=None, ge=0)
    head_time: float = Field(default=0.5, gt=0.0, le=1.0)
    direction: Direction = Direction.FORWARD

    @field_validator('n_values')
    @classmethod
    def _positive_n(cls, valores):
        for n in valores:
            if n < 1:
                raise ValueError(f"n deve ser >= 1, recebido {n}")
        return valores

    @model_validator(mode='after')
    def _required_inputs(self) -> 'RunConfig':
        for campo in REQUIRED_FILES.get(self.subcommand, ()):
            if getattr(self, campo) is None:
                raise ValueError(f"'{self.subcommand}' exige {campo}")
        # lk sem trials calcula só o expoente analítico
        if self.subcommand != 'lk' and self.trials is None:
            raise ValueError(f"'{self.subcommand}' exige trials")
        if self.subcommand == 'scenario' and self.scenario is None:
            raise ValueError("'scenario' exige block ou switching")
        if self.subcommand in ('clt', 'scenario') and not self.n_values:
            raise ValueError(f"'{self.subcommand}' exige ao menos um n")
        return self

    @property
    def name(self) -> str:
        """Nome do subcomando no registro (``scenario switching``, ``scenario no-switch``)."""
        if self.subcommand != 'scenario':
            return self.subcommand
        if self.scenario == 'switching' and not self.switching:
            return 'scenario no-switch'
        return f"scenario {self.scenario}"

    def to_json(self) -> dict:
        return self.model_dump(mode='json')


def build_run_config(**valores) -> RunConfig:
    """
    Valida as opções de um subcomando.

    Raises:
        ConfigurationError: Opções inválidas, com a lista de campos rejeitados
    """
    try:
        config = RunConfig(**valores)
    except ValidationError as exc:
        raise ConfigurationError(f"configuração inválida: {_describe(exc)}") from exc
    logger.debug(f"Configuração validada: {config.name}, seed={config.seed}")
    return config


def run_config_from_json(dados: dict) -> RunConfig:
    """Reconstrói a configuração gravada no registro (``RunConfig.to_json``)."""
    try:
        return RunConfig.model_validate(dados)
    except ValidationError as exc:
        raise ConfigurationError(f"configuração gravada inválida: {_describe(exc)}") from exc
