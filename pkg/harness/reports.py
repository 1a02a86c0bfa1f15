"""
Emissão dos relatórios CSV.

Cada arquivo começa com ``# chaoslab v<versão> schema=<k>``; floats saem com
``repr`` e ``None`` vira campo vazio, de modo que os bytes só dependem dos
valores.
"""
import csv
import hashlib
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from django.conf import settings

from chaoslab import __version__

logger = logging.getLogger(__name__)


def schema_header() -> str:
    return f"# chaoslab v{__version__} schema={settings.CHAOSLAB['SCHEMA_VERSION']}"


def format_value(valor) -> str:
    """Texto de um campo do CSV."""
    if valor is None:
        return ''
    if isinstance(valor, (bool, np.bool_)):
        return '1' if valor else '0'
    if isinstance(valor, (int, np.integer)):
        return str(int(valor))
    if isinstance(valor, (float, np.floating)):
        return repr(float(valor))
    return str(valor)


@dataclass(frozen=True)
class CsvReport:
    columns: Sequence[str]
    text: str

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode('utf-8')).hexdigest()

    @property
    def n_rows(self) -> int:
        # cabeçalho de schema e linha de colunas
        return self.text.count('\n') - 2


def render_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> CsvReport:
    """
    Monta o CSV completo em memória.

    Args:
        columns: Nomes das colunas
        rows: Linhas com o mesmo número de campos das colunas

    Returns:
        CsvReport: Texto e colunas
    """
    buffer = io.StringIO()
    buffer.write(schema_header() + '\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for indice, linha in enumerate(rows):
        if len(linha) != len(columns):
            raise ValueError(f"linha {indice} com {len(linha)} campos para {len(columns)} colunas")
        writer.writerow([format_value(valor) for valor in linha])
    return CsvReport(columns=tuple(columns), text=buffer.getvalue())


def resolve_output(out: Path) -> Path:
    """Caminhos relativos ficam sob ``CHAOSLAB['OUTPUT_DIR']``; absolutos não mudam."""
    destino = Path(out).expanduser()
    if not destino.is_absolute():
        destino = Path(settings.CHAOSLAB['OUTPUT_DIR']) / destino
    return destino


def write_report(report: CsvReport, out: Optional[Path]) -> Optional[Path]:
    """Grava em ``out`` (criando diretórios); sem caminho não grava nada."""
    if out is None:
        return None
    destino = resolve_output(out)
    destino.parent.mkdir(parents=True, exist_ok=True)
    with open(destino, 'w', encoding='utf-8', newline='') as arquivo:
        arquivo.write(report.text)
    logger.info(f"Relatório gravado em {destino} ({report.n_rows} linhas, sha256 {report.sha256[:12]})")
    return destino
