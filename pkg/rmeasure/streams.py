"""
Fluxos de números aleatórios baseados em contador (Philox 4x64).

A chave do gerador vem de (seed, fluxo, lei) via ``SeedSequence``; o
contador de 256 bits codifica (célula, bloco, ensaio). Assim cada incremento
é reproduzível isoladamente, sem depender de quantos ensaios ou células
foram gerados antes nem de qual worker os gerou.

Layout do contador: ``cell + (block << 64) + (trial << 128)``. Um gerador novo
posicionado em (0, block, trial) produz, para a célula c, exatamente as
mesmas 4 palavras que um gerador novo posicionado em (c, block, trial).
"""
from functools import lru_cache

import numpy as np

from utils.validators import validate_seed

STREAM_MAIN = 0
STREAM_COPY = 1
STREAM_REPLAY = 2
# Incrementos fornecidos de fora (não gerados aqui)
STREAM_EXTERNAL = 255

WORDS_PER_CELL = 4
# 52 bits: (2^52 - 1 + 0.5) * 2^-52 ainda é representável e menor que 1
_UNIT = 2.0 ** -52


@lru_cache(maxsize=256)
def stream_key(seed: int, stream: int, law_tag: int) -> int:
    """Chave Philox de 128 bits para (seed, fluxo, lei)."""
    seed = validate_seed(seed)
    sequencia = np.random.SeedSequence(entropy=seed, spawn_key=(int(stream), int(law_tag)))
    palavras = sequencia.generate_state(2, dtype=np.uint64)
    return int(palavras[0]) | (int(palavras[1]) << 64)


def counter_for(trial: int, cell: int, block: int = 0) -> int:
    return int(cell) + (int(block) << 64) + (int(trial) << 128)


def cell_words(key: int, trial: int, cell: int, block: int = 0) -> np.ndarray:
    """As 4 palavras de 64 bits de uma única célula."""
    gerador = np.random.Philox(key=key, counter=counter_for(trial, cell, block))
    return gerador.random_raw(WORDS_PER_CELL)


def trial_words(key: int, trial: int, n_cells: int, block: int = 0) -> np.ndarray:
    """Palavras de todas as células de um ensaio, formato (n_cells, 4)."""
    gerador = np.random.Philox(key=key, counter=counter_for(trial, 0, block))
    return gerador.random_raw(WORDS_PER_CELL * n_cells).reshape(n_cells, WORDS_PER_CELL)


def words_to_uniform(words: np.ndarray) -> np.ndarray:
    """Uniformes em (0, 1) com 52 bits, nunca 0 nem 1."""
    mantissa = (np.asarray(words, dtype=np.uint64) >> np.uint64(12)).astype(np.float64)
    return (mantissa + 0.5) * _UNIT
