"""
Localizador de suporte por Count-Sketch e pipeline Zipfiano

O Count-Sketch estima cada coordenada pela mediana das r linhas; os 9k maiores
estimados formam o suporte candidato, o set query estima x nele e o resultado é
truncado nos k maiores.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import settings
from config.logger import setup_logger
from .errors import DimensionMismatchError, InvalidArgumentError
from .set_query import RngLike, SupportSet, recover_robust
from .sketch_core import Signal, SignalLike, Sketch, SketchMatrix

logger = setup_logger(__name__)


class CountSketchParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    rows: int = Field(ge=1)
    width: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2 ** 64)
    candidate_multiplier: int = Field(default=9, ge=1)

    @model_validator(mode="after")
    def _check_width(self) -> "CountSketchParams":
        if self.width < 2 * self.k:
            raise ValueError(f"largura {self.width} abaixo de 2k={2 * self.k}")
        return self

    @classmethod
    def derive(cls, n: int, k: int, eps: float, seed: Optional[int] = None) -> "CountSketchParams":
        """r = ceil(c1 log2 n) linhas, largura max(ceil(c2 k / eps²), 2k)."""
        if k < 1 or n < k:
            raise InvalidArgumentError(f"Esperado n >= k >= 1, recebido n={n}, k={k}")
        if not 0.0 < eps <= 1.0:
            raise InvalidArgumentError(f"eps deve estar em (0, 1], recebido {eps}")
        seed = settings.default_seed if seed is None else seed
        rows = max(1, math.ceil(settings.cs_rows_per_log * math.log2(n)))
        width = max(math.ceil(settings.cs_width_factor * k / (eps * eps)), 2 * k)
        return cls(
            n=n, k=k, rows=rows, width=width, seed=seed,
            candidate_multiplier=settings.candidate_multiplier,
        )

    @property
    def candidates(self) -> int:
        return min(self.candidate_multiplier * self.k, self.n)


@dataclass(eq=False)
class CountSketchTable:
    """
    Tabela r x largura com hash h_j e sinal g_j por linha.

    `hashes` e `signs` (r x n) são compartilhados entre tabelas do mesmo build.
    """
    params: CountSketchParams
    hashes: np.ndarray
    signs: np.ndarray
    buckets: np.ndarray

    @property
    def rows(self) -> int:
        return self.params.rows

    def empty_like(self) -> "CountSketchTable":
        return CountSketchTable(self.params, self.hashes, self.signs, np.zeros_like(self.buckets))


def cs_build(params: CountSketchParams) -> CountSketchTable:
    """Sorteia h_j e g_j de cada linha a partir de um fluxo Philox próprio (totalmente independentes)."""
    streams = np.random.SeedSequence(params.seed).spawn(params.rows)
    hashes = np.empty((params.rows, params.n), dtype=np.int64)
    signs = np.empty((params.rows, params.n), dtype=np.int8)
    for r, stream in enumerate(streams):
        rng = np.random.Generator(np.random.Philox(stream))
        hashes[r] = rng.integers(0, params.width, size=params.n)
        signs[r] = rng.integers(0, 2, size=params.n, dtype=np.int8) * 2 - 1
    hashes.setflags(write=False)
    signs.setflags(write=False)
    logger.debug(f"Count-Sketch construído: n={params.n}, r={params.rows}, largura={params.width}")
    return CountSketchTable(params, hashes, signs, np.zeros((params.rows, params.width)))


def _dense(signal: SignalLike, n: int) -> np.ndarray:
    x = signal.to_dense() if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if x.shape != (n,):
        raise DimensionMismatchError(f"Sinal de dimensão {x.shape}, Count-Sketch com n={n}")
    return x


def cs_apply(table: CountSketchTable, signal: SignalLike) -> CountSketchTable:
    """Nova tabela com o sketch de x (mesmas funções de hash)."""
    x = _dense(signal, table.params.n)
    out = table.empty_like()
    for r in range(table.rows):
        out.buckets[r] = np.bincount(table.hashes[r], weights=table.signs[r] * x, minlength=table.params.width)
    return out


def cs_update(table: CountSketchTable, index: int, delta: float) -> CountSketchTable:
    """x[index] += delta; toca exatamente r células."""
    if not 0 <= index < table.params.n:
        raise InvalidArgumentError(f"Índice {index} fora de [0, {table.params.n})")
    table.buckets[np.arange(table.rows), table.hashes[:, index]] += delta * table.signs[:, index]
    return table


def cs_estimate(table: CountSketchTable, index: int) -> float:
    if not 0 <= index < table.params.n:
        raise InvalidArgumentError(f"Índice {index} fora de [0, {table.params.n})")
    values = table.signs[:, index] * table.buckets[np.arange(table.rows), table.hashes[:, index]]
    return float(np.median(values))


def cs_estimate_all(table: CountSketchTable) -> np.ndarray:
    values = table.signs * np.take_along_axis(table.buckets, table.hashes, axis=1)
    return np.median(values, axis=0)


def _largest(magnitudes: np.ndarray, count: int) -> np.ndarray:
    """Posições dos `count` maiores valores; empate vai para o menor índice."""
    order = np.argsort(-magnitudes, kind="stable")
    return np.sort(order[:count])


def locate_candidates(table: CountSketchTable, k: Optional[int] = None) -> SupportSet:
    """As min(m_c·k, n) coordenadas de maior |estimativa|."""
    k = table.params.k if k is None else k
    count = min(table.params.candidate_multiplier * k, table.params.n)
    chosen = _largest(np.abs(cs_estimate_all(table)), count)
    return SupportSet(tuple(chosen.tolist()))


def top_k_threshold(signal: SignalLike, k: int) -> Signal:
    """Mantém as k coordenadas de maior magnitude e zera o resto."""
    if k < 0:
        raise InvalidArgumentError(f"k deve ser >= 0, recebido {k}")
    x = signal.to_dense() if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    kept = _largest(np.abs(x), min(k, len(x)))
    kept = kept[x[kept] != 0]
    return Signal(n=len(x), indices=kept.astype(np.int64), values=x[kept].copy())


def err_k(signal: SignalLike, k: int) -> float:
    """Err_2^k(x): norma l2 de x fora dos seus k maiores elementos."""
    x = signal.to_dense() if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if k >= len(x):
        return 0.0
    tail = np.sort(np.abs(x))[: len(x) - k]
    return float(np.sqrt(np.sum(tail * tail)))


def zipfian_set_query_eps(n: int, eps: float) -> float:
    """eps / (3 sqrt(log2 n)), o eps do set query exigido pelo pipeline Zipfiano."""
    return eps / (3.0 * math.sqrt(max(math.log2(n), 1.0)))


def recover_zipfian(
    cs_table: CountSketchTable,
    sq_matrices: Sequence[SketchMatrix],
    sq_sketches: Sequence[Sketch],
    k: int,
    eps: float,
    rng: RngLike = None,
) -> Signal:
    """
    Recuperação k-esparsa de sinais sub-Zipfianos.

    Os sketches de set query devem ter sido construídos com eps de no máximo
    `zipfian_set_query_eps(n, eps)` e k igual ao tamanho do conjunto candidato.

    Raises:
        RecoveryAbortedError: se todas as repetições do set query abortarem
    """
    if not sq_matrices:
        raise InvalidArgumentError("Nenhuma matriz de set query")
    n = cs_table.params.n
    target = zipfian_set_query_eps(n, eps)
    if sq_matrices[0].params.eps > target * (1 + 1e-9):
        logger.warning(f"eps do set query ({sq_matrices[0].params.eps:.4g}) acima do exigido ({target:.4g})")

    candidates = locate_candidates(cs_table, k)
    estimate = recover_robust(sq_matrices, sq_sketches, candidates, rng)
    result = top_k_threshold(estimate, k)
    logger.info(f"Recuperação Zipfiana: {len(candidates)} candidatos, {len(result.indices)} coordenadas mantidas")
    return result
